//! Pointwise error between the true graphon at the latent labels and an estimate.

use crate::error::{Error, Result};
use crate::graphon::Graphon;

/// An estimate that can be read at any ordered vertex pair.
pub trait PairEstimate {
    fn num_vertices(&self) -> usize;
    fn value(&self, i: usize, j: usize) -> f64;
}

/// Dense row-major estimate, mostly useful for tests and synthetic inputs.
impl PairEstimate for Vec<Vec<f64>> {
    fn num_vertices(&self) -> usize {
        self.len()
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        self[i][j]
    }
}

fn mean_error<E: PairEstimate + ?Sized>(
    graphon: &Graphon,
    labels: &[f64],
    est: &E,
    f: impl Fn(f64) -> f64,
) -> Result<f64> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::domain("no vertices to compare"));
    }
    if est.num_vertices() != n {
        return Err(Error::contract(format!(
            "estimate covers {} vertices, labels cover {n}",
            est.num_vertices()
        )));
    }
    let mut total = 0.0;
    for (i, &ui) in labels.iter().enumerate() {
        for (j, &uj) in labels.iter().enumerate() {
            total += f(graphon.eval(ui, uj)? - est.value(i, j));
        }
    }
    Ok(total / (n * n) as f64)
}

/// Mean absolute error over all ordered pairs, diagonal included.
pub fn mae<E: PairEstimate + ?Sized>(graphon: &Graphon, labels: &[f64], est: &E) -> Result<f64> {
    mean_error(graphon, labels, est, f64::abs)
}

/// Mean squared error over all ordered pairs, diagonal included.
pub fn mse<E: PairEstimate + ?Sized>(graphon: &Graphon, labels: &[f64], est: &E) -> Result<f64> {
    mean_error(graphon, labels, est, |e| e * e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::BlockModel;
    use proptest::prelude::*;

    fn truth_matrix(g: &Graphon, labels: &[f64]) -> Vec<Vec<f64>> {
        labels
            .iter()
            .map(|&x| labels.iter().map(|&y| g.eval(x, y).unwrap()).collect())
            .collect()
    }

    #[test]
    fn perfect_estimate() {
        let g = Graphon::four_block_example();
        let labels = [0.1, 0.4, 0.6, 0.9, 0.3];
        let est = truth_matrix(&g, &labels);
        assert_eq!(mae(&g, &labels, &est).unwrap(), 0.0);
        assert_eq!(mse(&g, &labels, &est).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset() {
        let g = Graphon::constant(0.5).unwrap();
        let labels = [0.2, 0.7, 0.9];
        let est = vec![vec![0.6; 3]; 3];
        assert!((mae(&g, &labels, &est).unwrap() - 0.1).abs() < 1e-12);
        assert!((mse(&g, &labels, &est).unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn two_vertex_substitution() {
        let g = Graphon::constant(0.5).unwrap();
        let labels = [0.3, 0.8];
        let est = vec![vec![0.5, 0.7], vec![0.3, 0.5]];
        assert!((mae(&g, &labels, &est).unwrap() - 0.1).abs() < 1e-12);
        assert!((mse(&g, &labels, &est).unwrap() - 0.02).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let g = Graphon::constant(0.5).unwrap();
        let empty: Vec<Vec<f64>> = vec![];
        assert!(matches!(mae(&g, &[], &empty), Err(Error::Domain(_))));
        assert!(mse(&g, &[0.1], &vec![vec![0.1; 2]; 2]).is_err());
    }

    proptest! {
        #[test]
        fn ordering_and_symmetry(
            probs in proptest::collection::vec(0.0f64..=1.0, 4),
            labels in proptest::collection::vec(0.0f64..=1.0, 1..8),
            est_vals in proptest::collection::vec(0.0f64..=1.0, 64),
        ) {
            let g = Graphon::block_model(
                BlockModel::equispaced(vec![probs[0..2].to_vec(), probs[2..4].to_vec()]).unwrap(),
            );
            let n = labels.len();
            let est: Vec<Vec<f64>> = (0..n).map(|i| est_vals[i * 8..i * 8 + n].to_vec()).collect();
            let a = mae(&g, &labels, &est).unwrap();
            let s = mse(&g, &labels, &est).unwrap();
            prop_assert!(0.0 <= s && s <= a + 1e-15 && a <= 1.0);

            // Exchanging truth and estimate leaves the error unchanged.
            let truth = truth_matrix(&g, &labels);
            let mut a2 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    a2 += (est[i][j] - truth[i][j]).abs();
                }
            }
            prop_assert!((a2 / (n * n) as f64 - a).abs() < 1e-12);
        }
    }
}
