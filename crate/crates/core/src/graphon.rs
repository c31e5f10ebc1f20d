//! Graphon models: piecewise-constant block models and closed-form kernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form graphons used for the continuous-kernel experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    /// `1 / (1 + exp(-50 (u^2 + v^2)))`
    W1Logistic,
    /// `u * v`
    W2Product,
}

impl Formula {
    pub fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            Formula::W1Logistic => 1.0 / (1.0 + (-50.0 * (x * x + y * y)).exp()),
            Formula::W2Product => x * y,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Formula::W1Logistic => "w1_logistic",
            Formula::W2Product => "w2_product",
        }
    }
}

/// A piecewise-constant graphon on a grid of intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockModel {
    boundaries: Vec<f64>,
    probabilities: Vec<Vec<f64>>,
}

impl BlockModel {
    pub fn new(boundaries: Vec<f64>, probabilities: Vec<Vec<f64>>) -> Result<Self> {
        let k = probabilities.len();
        if k == 0 {
            return Err(Error::domain("block model needs at least one block"));
        }
        if boundaries.len() != k + 1 {
            return Err(Error::domain(format!(
                "expected {} boundaries for {k} blocks, got {}",
                k + 1,
                boundaries.len()
            )));
        }
        if boundaries[0] != 0.0 || boundaries[k] != 1.0 {
            return Err(Error::domain("boundaries must start at 0 and end at 1"));
        }
        if boundaries.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("boundaries must be strictly increasing"));
        }
        for row in &probabilities {
            if row.len() != k {
                return Err(Error::domain("probability matrix must be square"));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::domain("block probabilities must lie in [0,1]"));
            }
        }
        Ok(BlockModel {
            boundaries,
            probabilities,
        })
    }

    /// Block model with `K` equal-width intervals.
    pub fn equispaced(probabilities: Vec<Vec<f64>>) -> Result<Self> {
        let k = probabilities.len();
        let boundaries = equispaced_boundaries(k);
        Self::new(boundaries, probabilities)
    }

    pub fn num_blocks(&self) -> usize {
        self.probabilities.len()
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn probabilities(&self) -> &[Vec<f64>] {
        &self.probabilities
    }

    /// Index of the interval containing `x`: half-open `[a_{k-1}, a_k)`,
    /// with the last interval closed on the right.
    pub fn interval_of(&self, x: f64) -> usize {
        let k = self.num_blocks();
        // boundaries[0] = 0 <= x, so the partition point is >= 1.
        let idx = self.boundaries[1..k].partition_point(|&b| b <= x);
        idx.min(k - 1)
    }

    pub fn interval_len(&self, block: usize) -> f64 {
        self.boundaries[block + 1] - self.boundaries[block]
    }
}

pub(crate) fn equispaced_boundaries(k: usize) -> Vec<f64> {
    (0..=k).map(|i| i as f64 / k as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphonKind {
    BlockModel(BlockModel),
    Formula(Formula),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graphon {
    pub kind: GraphonKind,
    /// True when `w(x, y) = w(y, x)` everywhere.
    pub symmetric_hint: bool,
}

impl Graphon {
    pub fn block_model(model: BlockModel) -> Self {
        let p = model.probabilities();
        let symmetric = (0..p.len()).all(|a| (0..p.len()).all(|b| p[a][b] == p[b][a]));
        Graphon {
            kind: GraphonKind::BlockModel(model),
            symmetric_hint: symmetric,
        }
    }

    pub fn formula(formula: Formula) -> Self {
        Graphon {
            kind: GraphonKind::Formula(formula),
            symmetric_hint: true,
        }
    }

    /// Constant graphon `w = p`, as a single-block model.
    pub fn constant(p: f64) -> Result<Self> {
        Ok(Self::block_model(BlockModel::new(vec![0.0, 1.0], vec![vec![p]])?))
    }

    /// The 4x4 equi-spaced block model used throughout the block-model experiments.
    pub fn four_block_example() -> Self {
        let p = vec![
            vec![0.8, 0.9, 0.4, 0.5],
            vec![0.1, 0.6, 0.3, 0.2],
            vec![0.3, 0.2, 0.8, 0.3],
            vec![0.4, 0.1, 0.2, 0.9],
        ];
        Self::block_model(BlockModel::equispaced(p).expect("valid example graphon"))
    }

    /// Evaluates `w(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::domain(format!("graphon evaluated outside [0,1]^2 at ({x}, {y})")));
        }
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: f64, y: f64) -> f64 {
        match &self.kind {
            GraphonKind::BlockModel(m) => m.probabilities[m.interval_of(x)][m.interval_of(y)],
            GraphonKind::Formula(f) => f.eval(x, y),
        }
    }

    /// Number of blocks for block models, `None` for closed-form kernels.
    pub fn num_blocks(&self) -> Option<usize> {
        match &self.kind {
            GraphonKind::BlockModel(m) => Some(m.num_blocks()),
            GraphonKind::Formula(_) => None,
        }
    }

    pub fn to_spec(&self) -> GraphonSpec {
        match &self.kind {
            GraphonKind::BlockModel(m) => GraphonSpec::Blockmodel {
                boundaries: Some(m.boundaries.clone()),
                probabilities: m.probabilities.clone(),
            },
            GraphonKind::Formula(f) => GraphonSpec::Formula { formula: *f },
        }
    }
}

/// JSON description of a graphon.
///
/// ```json
/// {"type": "blockmodel", "boundaries": [0, 0.5, 1], "probabilities": [[0.9, 0.1], [0.1, 0.9]]}
/// {"type": "formula", "formula": "w1_logistic"}
/// ```
///
/// `boundaries` may be omitted for equal-width blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GraphonSpec {
    Blockmodel {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        boundaries: Option<Vec<f64>>,
        probabilities: Vec<Vec<f64>>,
    },
    Formula {
        formula: Formula,
    },
}

impl GraphonSpec {
    pub fn build(&self) -> Result<Graphon> {
        match self {
            GraphonSpec::Blockmodel {
                boundaries,
                probabilities,
            } => {
                let model = match boundaries {
                    Some(b) => BlockModel::new(b.clone(), probabilities.clone())?,
                    None => BlockModel::equispaced(probabilities.clone())?,
                };
                Ok(Graphon::block_model(model))
            }
            GraphonSpec::Formula { formula } => Ok(Graphon::formula(*formula)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_block_lookups() {
        let g = Graphon::four_block_example();
        assert_eq!(g.eval(0.1, 0.1).unwrap(), 0.8);
        assert_eq!(g.eval(0.1, 0.3).unwrap(), 0.9);
        assert_eq!(g.eval(0.3, 0.1).unwrap(), 0.1);
        assert_eq!(g.eval(1.0, 1.0).unwrap(), 0.9);
        // Half-open intervals: 0.25 belongs to the second block.
        assert_eq!(g.eval(0.25, 0.0).unwrap(), 0.1);
        assert!(!g.symmetric_hint);
    }

    #[test]
    fn formulas() {
        let w2 = Graphon::formula(Formula::W2Product);
        assert_eq!(w2.eval(0.5, 0.5).unwrap(), 0.25);
        let w1 = Graphon::formula(Formula::W1Logistic);
        assert_eq!(w1.eval(0.0, 0.0).unwrap(), 0.5);
        assert!(w1.eval(1.0, 1.0).unwrap() <= 1.0);
    }

    #[test]
    fn out_of_domain() {
        let g = Graphon::four_block_example();
        assert!(matches!(g.eval(-0.1, 0.5), Err(Error::Domain(_))));
        assert!(matches!(g.eval(0.5, 1.5), Err(Error::Domain(_))));
        assert!(g.eval(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn rejects_bad_models() {
        assert!(BlockModel::new(vec![0.0, 0.6, 0.5, 1.0], vec![vec![0.1; 3]; 3]).is_err());
        assert!(BlockModel::new(vec![0.0, 1.0], vec![vec![1.2]]).is_err());
        assert!(BlockModel::new(vec![0.1, 1.0], vec![vec![0.2]]).is_err());
        assert!(BlockModel::new(vec![0.0, 0.5, 1.0], vec![vec![0.2]]).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{"type":"blockmodel","probabilities":[[1.0,0.0],[0.0,1.0]]}"#;
        let spec: GraphonSpec = serde_json::from_str(text).unwrap();
        let g = spec.build().unwrap();
        assert_eq!(g.num_blocks(), Some(2));
        assert!(g.symmetric_hint);
        let again: GraphonSpec = serde_json::from_str(&serde_json::to_string(&g.to_spec()).unwrap()).unwrap();
        assert_eq!(again.build().unwrap(), g);

        let f: GraphonSpec = serde_json::from_str(r#"{"type":"formula","formula":"w2_product"}"#).unwrap();
        assert_eq!(f.build().unwrap().num_blocks(), None);
    }
}
