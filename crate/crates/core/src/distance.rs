//! Slice distances between vertices.
//!
//! The estimator compares vertices `i` and `j` through third vertices `k`.
//! With `A1` and `A2` the per-entry edge counts over the first and second
//! half of the observations, the row products satisfy
//!
//! ```text
//! T^2 (r_ii - r_ij - r_ji + r_jj) = (A1[i,k] - A1[j,k]) (A2[i,k] - A2[j,k])
//! ```
//!
//! and the column products are the same expression on `A[k,i]`, `A[k,j]`.
//! The kernel accumulates these integer products exactly and divides once.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graphon::{Graphon, GraphonKind};
use crate::sample::GraphSampleSet;

/// Which third vertices `k` enter the distance average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborhoodPolicy {
    /// Every vertex other than `i` and `j`.
    #[default]
    Full,
    /// A uniform subset of `size` vertices, drawn without replacement per query.
    RandomSubset { size: usize },
}

impl NeighborhoodPolicy {
    pub fn validate(self, n: usize) -> Result<()> {
        match self {
            NeighborhoodPolicy::Full => Ok(()),
            NeighborhoodPolicy::RandomSubset { size } => {
                if size == 0 || size + 2 > n {
                    Err(Error::domain(format!(
                        "neighborhood size must be in [1, n-2] = [1, {}], got {size}",
                        n.saturating_sub(2)
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// `r^k_ij` and `c^k_ij` for one triple.
pub fn slice_products(samples: &GraphSampleSet, i: usize, j: usize, k: usize) -> Result<(f64, f64)> {
    let n = samples.n();
    if i >= n || j >= n || k >= n {
        return Err(Error::contract(format!("vertex index out of range for n = {n}")));
    }
    if i == j || i == k || j == k {
        return Err(Error::contract("slice products need three distinct vertices"));
    }
    let t = samples.half();
    let obs = samples.observations();
    let (first, second) = obs.split_at(t);
    let sum = |half: &[crate::sample::BinaryMatrix], a: usize, b: usize| -> u32 {
        half.iter().map(|g| g.get(a, b) as u32).sum()
    };
    let t2 = (t * t) as f64;
    let r = (sum(first, i, k) * sum(second, j, k)) as f64 / t2;
    let c = (sum(first, k, i) * sum(second, k, j)) as f64 / t2;
    Ok((r, c))
}

/// Precomputed half-sums of a sample set, for repeated distance queries.
#[derive(Debug, Clone)]
pub struct DistanceEstimator {
    n: usize,
    half: usize,
    // Row-major sums over the first / second half, and their transposes.
    first: Vec<u32>,
    second: Vec<u32>,
    first_t: Vec<u32>,
    second_t: Vec<u32>,
}

impl DistanceEstimator {
    pub fn new(samples: &GraphSampleSet) -> Self {
        let n = samples.n();
        let t = samples.half();
        let (a, b) = samples.observations().split_at(t);
        let accumulate = |half: &[crate::sample::BinaryMatrix]| {
            let mut acc = vec![0u32; n * n];
            for g in half {
                for (dst, &v) in acc.iter_mut().zip(g.as_slice()) {
                    *dst += v as u32;
                }
            }
            acc
        };
        let first = accumulate(a);
        let second = accumulate(b);
        let transpose = |m: &[u32]| {
            let mut out = vec![0u32; n * n];
            for i in 0..n {
                for j in 0..n {
                    out[j * n + i] = m[i * n + j];
                }
            }
            out
        };
        let first_t = transpose(&first);
        let second_t = transpose(&second);
        DistanceEstimator {
            n,
            half: t,
            first,
            second,
            first_t,
            second_t,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Integer contribution of third vertex `k`, scaled by `T^2`.
    #[inline]
    fn term(&self, i: usize, j: usize, k: usize) -> i64 {
        let n = self.n;
        let row = (self.first[i * n + k] as i64 - self.first[j * n + k] as i64)
            * (self.second[i * n + k] as i64 - self.second[j * n + k] as i64);
        let col = (self.first_t[i * n + k] as i64 - self.first_t[j * n + k] as i64)
            * (self.second_t[i * n + k] as i64 - self.second_t[j * n + k] as i64);
        row + col
    }

    /// Distance average over an explicit neighborhood, without the
    /// `i != j` precondition. Evaluates to exactly 0 when `i == j`.
    pub(crate) fn over_neighborhood(&self, i: usize, j: usize, ks: impl Iterator<Item = usize>) -> f64 {
        let mut sum = 0i64;
        let mut count = 0u64;
        for k in ks {
            sum += self.term(i, j, k);
            count += 1;
        }
        let t2 = (self.half * self.half) as u64;
        sum as f64 / (2 * count * t2) as f64
    }

    /// The estimator's formula over an explicit, nonempty set of third
    /// vertices. Unlike [`Self::distance`] this accepts `i == j`, where the
    /// value is exactly 0.
    pub fn over_vertices(&self, i: usize, j: usize, neighborhood: &[usize]) -> Result<f64> {
        let n = self.n;
        if i >= n || j >= n || neighborhood.iter().any(|&k| k >= n) {
            return Err(Error::contract(format!("vertex index out of range for n = {n}")));
        }
        if neighborhood.is_empty() {
            return Err(Error::domain("empty neighborhood"));
        }
        if neighborhood.iter().any(|&k| k == i || k == j) {
            return Err(Error::contract("neighborhood must exclude i and j"));
        }
        Ok(self.over_neighborhood(i, j, neighborhood.iter().copied()))
    }

    /// Estimated distance averaged over every third vertex.
    pub fn full_distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check_pair(i, j)?;
        Ok(self.over_neighborhood(i, j, (0..self.n).filter(|&k| k != i && k != j)))
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        let n = self.n;
        if i >= n || j >= n {
            return Err(Error::contract(format!("vertex index out of range for n = {n}")));
        }
        if i == j {
            return Err(Error::contract("distance needs two distinct vertices"));
        }
        if n < 3 {
            return Err(Error::domain("distance needs at least one third vertex (n >= 3)"));
        }
        Ok(())
    }

    /// Estimated slice distance between `i` and `j`. The value is unbiased
    /// for the true distance and may be negative.
    pub fn distance<R: Rng + ?Sized>(
        &self,
        i: usize,
        j: usize,
        policy: NeighborhoodPolicy,
        rng: &mut R,
    ) -> Result<f64> {
        match policy {
            NeighborhoodPolicy::Full => self.full_distance(i, j),
            NeighborhoodPolicy::RandomSubset { size } => {
                self.check_pair(i, j)?;
                let n = self.n;
                policy.validate(n)?;
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                let picks = index::sample(rng, n - 2, size);
                Ok(self.over_neighborhood(
                    i,
                    j,
                    picks.into_iter().map(|m| {
                        let mut k = m;
                        if k >= lo {
                            k += 1;
                        }
                        if k >= hi {
                            k += 1;
                        }
                        k
                    }),
                ))
            }
        }
    }
}

/// One-shot estimated distance. Use [`DistanceEstimator`] for repeated queries.
pub fn estimate_distance<R: Rng + ?Sized>(
    samples: &GraphSampleSet,
    i: usize,
    j: usize,
    policy: NeighborhoodPolicy,
    rng: &mut R,
) -> Result<f64> {
    DistanceEstimator::new(samples).distance(i, j, policy, rng)
}

/// Number of midpoint panels used for closed-form graphons.
pub const QUADRATURE_PANELS: usize = 4096;

/// True slice distance at labels `u_i`, `u_j`: half the sum of the squared
/// L2 distances between the two column slices and between the two row slices.
pub fn exact_distance(graphon: &Graphon, u_i: f64, u_j: f64) -> Result<f64> {
    for u in [u_i, u_j] {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(format!("label {u} outside [0,1]")));
        }
    }
    Ok(match &graphon.kind {
        GraphonKind::BlockModel(m) => {
            let p = m.probabilities();
            let (a, b) = (m.interval_of(u_i), m.interval_of(u_j));
            let mut cols = 0.0;
            let mut rows = 0.0;
            for k in 0..m.num_blocks() {
                let len = m.interval_len(k);
                cols += len * (p[k][a] - p[k][b]).powi(2);
                rows += len * (p[a][k] - p[b][k]).powi(2);
            }
            0.5 * (cols + rows)
        }
        GraphonKind::Formula(f) => {
            let h = 1.0 / QUADRATURE_PANELS as f64;
            let mut cols = 0.0;
            let mut rows = 0.0;
            for s in 0..QUADRATURE_PANELS {
                let x = (s as f64 + 0.5) * h;
                cols += (f.eval(x, u_i) - f.eval(x, u_j)).powi(2);
                rows += (f.eval(u_i, x) - f.eval(u_j, x)).powi(2);
            }
            0.5 * h * (cols + rows)
        }
    })
}
