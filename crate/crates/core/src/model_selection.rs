//! Choosing the clustering threshold by histogram cross-validation risk.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{DistanceEstimator, NeighborhoodPolicy};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::sample::GraphSampleSet;
use crate::sba::{cluster_with, Blocking};

/// Strictly increasing, nonempty list of positive thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DeltaGrid(Vec<f64>);

impl DeltaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("delta grid is empty"));
        }
        if values.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::domain("delta grid values must be positive and finite"));
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("delta grid must be strictly increasing"));
        }
        Ok(DeltaGrid(values))
    }

    /// `count` geometrically spaced values from `lo` to `hi` inclusive.
    pub fn geometric(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count == 0 || !(lo > 0.0) || !(hi >= lo) {
            return Err(Error::domain("geometric grid needs 0 < lo <= hi and count >= 1"));
        }
        if count == 1 {
            return Self::new(vec![lo]);
        }
        let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
        let mut values: Vec<f64> = (0..count).map(|k| lo * ratio.powi(k as i32)).collect();
        values[count - 1] = hi;
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for DeltaGrid {
    /// Ten geometrically spaced values spanning `[0.05, 1.0]`.
    fn default() -> Self {
        DeltaGrid::geometric(0.05, 1.0, 10).expect("valid default grid")
    }
}

impl TryFrom<Vec<f64>> for DeltaGrid {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        DeltaGrid::new(values)
    }
}

impl From<DeltaGrid> for Vec<f64> {
    fn from(grid: DeltaGrid) -> Self {
        grid.0
    }
}

/// Cross-validation risk of a blocking of `n` vertices:
///
/// ```text
/// J = 2 / (h (n-1)) - (n+1) / (h (n-1)) * sum_j p_j^2,   p_j = |B_j| / n,  h = 1 / K
/// ```
///
/// evaluated as `K (2 n^2 - (n+1) sum_j |B_j|^2) / ((n-1) n^2)` in integers,
/// so that the single-block and all-singleton values are exactly -1 and +1.
pub fn cv_risk(blocking: &Blocking, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain("cross-validation risk needs n >= 2"));
    }
    blocking.assignment(n)?;
    let k = blocking.num_blocks() as i128;
    let n = n as i128;
    let sum_sq: i128 = blocking.blocks.iter().map(|b| (b.len() as i128).pow(2)).sum();
    let numerator = k * (2 * n * n - (n + 1) * sum_sq);
    let denominator = (n - 1) * n * n;
    Ok(numerator as f64 / denominator as f64)
}

/// One grid point of a cross-validation sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskPoint {
    pub delta: f64,
    pub num_blocks: usize,
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub delta: f64,
    pub blocking: Blocking,
    /// Same length and order as the grid.
    pub curve: Vec<RiskPoint>,
}

impl Selection {
    pub fn risks(&self) -> Vec<f64> {
        self.curve.iter().map(|p| p.risk).collect()
    }

    /// `delta,K,risk` with a header row.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("delta,K,risk\n");
        for p in &self.curve {
            let _ = writeln!(out, "{},{},{}", p.delta, p.num_blocks, p.risk);
        }
        out
    }
}

/// Clusters once per grid value and keeps the blocking with the smallest
/// risk; ties go to the smaller delta. Grid value `g` uses the substream
/// `g` of one seed drawn from `rng`.
pub fn select_delta<R: Rng + ?Sized>(
    samples: &GraphSampleSet,
    grid: &DeltaGrid,
    policy: NeighborhoodPolicy,
    rng: &mut R,
) -> Result<Selection> {
    let n = samples.n();
    let base: u64 = rng.gen();
    let estimator = DistanceEstimator::new(samples);
    let blockings: Vec<Blocking> = grid
        .values()
        .par_iter()
        .enumerate()
        .map(|(g, &delta)| {
            let mut r = substream(base, g as u64);
            cluster_with(&estimator, delta, policy, &mut r).map(|(b, _)| b)
        })
        .collect::<Result<_>>()?;

    let mut curve = Vec::with_capacity(blockings.len());
    let mut best = 0usize;
    let mut best_risk = f64::INFINITY;
    for (g, blocking) in blockings.iter().enumerate() {
        // A single vertex has no defined risk; every delta ties.
        let risk = if n >= 2 { cv_risk(blocking, n)? } else { 0.0 };
        if risk < best_risk {
            best_risk = risk;
            best = g;
        }
        curve.push(RiskPoint {
            delta: blocking.delta,
            num_blocks: blocking.num_blocks(),
            risk,
        });
    }
    Ok(Selection {
        delta: grid.values()[best],
        blocking: blockings.into_iter().nth(best).expect("grid is nonempty"),
        curve,
    })
}
