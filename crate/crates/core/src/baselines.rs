//! Competitor estimators working from a single observed graph:
//! universal singular value thresholding and largest-gap degree sorting.

use std::fmt::Write as _;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::matmul::matmul;
use faer::linalg::svd::{self, ComputeSvdVectors};
use faer::diag::Diag;
use faer::{Accum, Mat, Par};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::PairEstimate;
use crate::sample::BinaryMatrix;
use crate::sba::block_averages;

/// Default USVT slack in the `(2 + eta) sqrt(n)` threshold.
pub const DEFAULT_USVT_ETA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum BaselineParams {
    Usvt { eta: f64, rank: usize },
    LargestGap { k_blocks: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineEstimate {
    n: usize,
    /// Row-major, entries in [0,1].
    matrix: Vec<f64>,
    pub params: BaselineParams,
    /// Vertex groups for largest-gap estimates, empty otherwise.
    pub blocks: Vec<Vec<usize>>,
}

impl BaselineEstimate {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    pub fn method_name(&self) -> &'static str {
        match self.params {
            BaselineParams::Usvt { .. } => "usvt",
            BaselineParams::LargestGap { .. } => "lg",
        }
    }

    /// One CSV row per matrix row, comma-separated.
    pub fn to_csv(&self) -> String {
        matrix_csv(self.n, |i, j| self.get(i, j))
    }
}

impl PairEstimate for BaselineEstimate {
    fn num_vertices(&self) -> usize {
        self.n
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }
}

/// Writes an `n x n` matrix as CSV, one row per line.
pub fn matrix_csv(n: usize, value: impl Fn(usize, usize) -> f64) -> String {
    let mut out = String::new();
    for i in 0..n {
        for j in 0..n {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", value(i, j));
        }
        out.push('\n');
    }
    out
}

/// USVT on a mean adjacency matrix with entries in [0,1].
pub fn usvt(adjacency_mean: &[Vec<f64>], eta: f64) -> Result<BaselineEstimate> {
    let n = adjacency_mean.len();
    if adjacency_mean.iter().any(|row| row.len() != n) {
        return Err(Error::contract("USVT input must be square"));
    }
    let flat: Vec<f64> = adjacency_mean.iter().flatten().copied().collect();
    usvt_masked(n, &flat, None, eta)
}

/// USVT with missing entries. `values` is row-major `n x n`; where `observed`
/// is 0 the entry is ignored. Observed entries are shifted to [-1,1], missing
/// ones set to 0, singular values below `(2 + eta) sqrt(n p)` are dropped
/// (`p` the observed fraction), and the reconstruction is rescaled by `1/p`
/// before mapping back to [0,1].
pub fn usvt_masked(n: usize, values: &[f64], observed: Option<&BinaryMatrix>, eta: f64) -> Result<BaselineEstimate> {
    if values.len() != n * n {
        return Err(Error::contract("USVT input must be square"));
    }
    if n < 2 {
        return Err(Error::domain("USVT needs n >= 2"));
    }
    if !(eta > 0.0) {
        return Err(Error::domain(format!("USVT eta must be positive, got {eta}")));
    }
    if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::domain("USVT input entries must lie in [0,1]"));
    }
    if let Some(m) = observed {
        if m.n() != n {
            return Err(Error::contract("mask size differs from matrix size"));
        }
    }
    let seen = |idx: usize| observed.map_or(true, |m| m.as_slice()[idx] == 1);
    let observed_count = (0..n * n).filter(|&idx| seen(idx)).count();
    if observed_count == 0 {
        return Ok(BaselineEstimate {
            n,
            matrix: vec![0.5; n * n],
            params: BaselineParams::Usvt { eta, rank: 0 },
            blocks: Vec::new(),
        });
    }
    let p_hat = observed_count as f64 / (n * n) as f64;
    let shifted = Mat::<f64>::from_fn(n, n, |i, j| {
        let idx = i * n + j;
        if seen(idx) {
            2.0 * values[idx] - 1.0
        } else {
            0.0
        }
    });
    let threshold = (2.0 + eta) * (n as f64 * p_hat).sqrt();
    let (sigma, u, v) = sequential_svd(&shifted)?;
    let kept: Vec<usize> = (0..n).filter(|&k| !(sigma[k] < threshold)).collect();
    let rank = kept.len();
    let mut recon = Mat::<f64>::zeros(n, n);
    if rank > 0 {
        let us = Mat::<f64>::from_fn(n, rank, |i, r| u[(i, kept[r])] * sigma[kept[r]]);
        let vk = Mat::<f64>::from_fn(n, rank, |i, r| v[(i, kept[r])]);
        matmul(recon.as_mut(), Accum::Replace, us.as_ref(), vk.transpose(), 1.0, Par::Seq);
    }
    let mut matrix = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let w = recon[(i, j)] / p_hat;
            matrix.push(((w + 1.0) / 2.0).clamp(0.0, 1.0));
        }
    }
    Ok(BaselineEstimate {
        n,
        matrix,
        params: BaselineParams::Usvt { eta, rank },
        blocks: Vec::new(),
    })
}

/// Full SVD on the calling thread. faer's default parallel kernels split
/// reductions by thread count, which would make results depend on the
/// pool size.
fn sequential_svd(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>, Mat<f64>)> {
    let n = a.nrows();
    let mut s = Diag::<f64>::zeros(n);
    let mut u = Mat::<f64>::zeros(n, n);
    let mut v = Mat::<f64>::zeros(n, n);
    let scratch = svd::svd_scratch::<f64>(n, n, ComputeSvdVectors::Full, ComputeSvdVectors::Full, Par::Seq, Default::default());
    let mut buf = MemBuffer::new(scratch);
    svd::svd(
        a.as_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        Some(v.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| Error::Domain(format!("USVT decomposition failed: {e:?}")))?;
    let sigma = (0..n).map(|k| s.column_vector()[k]).collect();
    Ok((sigma, u, v))
}

/// Largest-gap estimate from one binary observation.
pub fn largest_gap(adjacency: &BinaryMatrix, k_blocks: usize) -> Result<BaselineEstimate> {
    largest_gap_masked(adjacency, None, k_blocks)
}

/// Normalized degrees `D_i / (n-1)`, with `D_i` the mean of in- and
/// out-degree over observed off-diagonal entries.
pub fn normalized_degrees(adjacency: &BinaryMatrix, observed: Option<&BinaryMatrix>) -> Vec<f64> {
    let n = adjacency.n();
    if n < 2 {
        return vec![0.0; n];
    }
    let seen = |i: usize, j: usize| observed.map_or(1, |m| m.get(i, j)) as u64;
    (0..n)
        .map(|i| {
            let mut edges = 0u64;
            let mut slots = 0u64;
            for j in (0..n).filter(|&j| j != i) {
                edges += (adjacency.get(i, j) as u64 & seen(i, j)) + (adjacency.get(j, i) as u64 & seen(j, i));
                slots += seen(i, j) + seen(j, i);
            }
            if slots == 0 {
                0.0
            } else {
                edges as f64 / slots as f64
            }
        })
        .collect()
}

/// Sorts vertices by normalized degree, cuts the order at the `k - 1`
/// largest consecutive gaps (earlier gap wins a tie), and averages the
/// observation over each pair of resulting groups.
pub fn largest_gap_masked(
    adjacency: &BinaryMatrix,
    observed: Option<&BinaryMatrix>,
    k_blocks: usize,
) -> Result<BaselineEstimate> {
    let n = adjacency.n();
    if k_blocks == 0 {
        return Err(Error::domain("largest-gap needs at least one block"));
    }
    if k_blocks > n {
        return Err(Error::contract(format!("cannot split {n} vertices into {k_blocks} blocks")));
    }
    if let Some(m) = observed {
        if m.n() != n {
            return Err(Error::contract("mask size differs from matrix size"));
        }
    }
    let degrees = normalized_degrees(adjacency, observed);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| degrees[a].total_cmp(&degrees[b]).then(a.cmp(&b)));

    let mut gaps: Vec<(f64, usize)> = order
        .windows(2)
        .enumerate()
        .map(|(pos, w)| (degrees[w[1]] - degrees[w[0]], pos))
        .collect();
    gaps.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut cuts: Vec<usize> = gaps.iter().take(k_blocks - 1).map(|&(_, pos)| pos + 1).collect();
    cuts.sort_unstable();

    let mut blocks = Vec::with_capacity(k_blocks);
    let mut start = 0;
    for end in cuts.into_iter().chain(std::iter::once(n)) {
        blocks.push(order[start..end].to_vec());
        start = end;
    }
    let mut assignment = vec![0usize; n];
    for (b, block) in blocks.iter().enumerate() {
        for &v in block {
            assignment[v] = b;
        }
    }
    let masks = observed.map(std::slice::from_ref);
    let (probs, _) = block_averages(std::slice::from_ref(adjacency), masks, &assignment, blocks.len());
    let mut matrix = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            matrix.push(probs[assignment[i]][assignment[j]]);
        }
    }
    Ok(BaselineEstimate {
        n,
        matrix,
        params: BaselineParams::LargestGap { k_blocks },
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn mean_abs_dev(est: &BaselineEstimate, target: f64) -> f64 {
        let n = est.n();
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (est.get(i, j) - target).abs()).sum::<f64>()
            / (n * n) as f64
    }

    #[test]
    fn usvt_all_ones_passes_through() {
        let est = usvt(&vec![vec![1.0; 100]; 100], 0.02).unwrap();
        assert!(mean_abs_dev(&est, 1.0) < 1e-12);
        assert_eq!(est.params, BaselineParams::Usvt { eta: 0.02, rank: 1 });
    }

    #[test]
    fn usvt_constant_half() {
        for n in [2, 17, 64] {
            let est = usvt(&vec![vec![0.5; n]; n], DEFAULT_USVT_ETA).unwrap();
            assert!((0..n).all(|i| (0..n).all(|j| est.get(i, j) == 0.5)));
        }
    }

    #[test]
    fn usvt_noise_is_suppressed() {
        let n = 200;
        let mut rng = seeded(17);
        let m: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { 0.0 }).collect())
            .collect();
        let est = usvt(&m, DEFAULT_USVT_ETA).unwrap();
        assert!(mean_abs_dev(&est, 0.5) < 0.1);
    }

    #[test]
    fn usvt_errors() {
        assert!(matches!(usvt(&[vec![0.5, 0.5], vec![0.5]], 0.1), Err(Error::Contract(_))));
        assert!(usvt(&[vec![0.5]], 0.1).is_err());
        assert!(usvt(&vec![vec![0.5; 3]; 3], 0.0).is_err());
        assert!(usvt(&vec![vec![1.5; 3]; 3], 0.1).is_err());
    }

    #[test]
    fn usvt_transpose_invariant_on_symmetric_input() {
        let n = 30;
        let mut rng = seeded(3);
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = rng.gen::<f64>();
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        let est = usvt(&m, 0.01).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!((est.get(i, j) - est.get(j, i)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn largest_gap_single_block_is_density() {
        let mut rng = seeded(5);
        let a = BinaryMatrix::from_fn(12, |_, _| rng.gen::<bool>());
        let est = largest_gap(&a, 1).unwrap();
        let density = a.count_ones() as f64 / 144.0;
        assert!((0..12).all(|i| (0..12).all(|j| est.get(i, j) == density)));
    }

    #[test]
    fn largest_gap_two_groups() {
        let n = 20;
        let group = |v: usize| (v % 3 == 0) as usize;
        let a = BinaryMatrix::from_fn(n, |i, j| group(i) == group(j) && group(i) == 1);
        let est = largest_gap(&a, 2).unwrap();
        assert_eq!(est.blocks.len(), 2);
        for block in &est.blocks {
            assert!(block.iter().all(|&v| group(v) == group(block[0])));
        }
        assert_eq!(est.blocks.iter().map(Vec::len).sum::<usize>(), n);
    }

    #[test]
    fn largest_gap_singletons_reproduce_adjacency() {
        let mut rng = seeded(6);
        let a = BinaryMatrix::from_fn(9, |_, _| rng.gen::<bool>());
        let est = largest_gap(&a, 9).unwrap();
        assert!((0..9).all(|i| (0..9).all(|j| est.get(i, j) == a.get(i, j) as f64)));
    }

    #[test]
    fn largest_gap_blocks_are_contiguous_in_degree_order() {
        let mut rng = seeded(8);
        let a = BinaryMatrix::from_fn(40, |i, _| rng.gen::<f64>() < (i as f64 / 40.0));
        let est = largest_gap(&a, 4).unwrap();
        let d = normalized_degrees(&a, None);
        for w in est.blocks.windows(2) {
            let max_prev = w[0].iter().map(|&v| d[v]).fold(f64::MIN, f64::max);
            let min_next = w[1].iter().map(|&v| d[v]).fold(f64::MAX, f64::min);
            assert!(max_prev <= min_next);
        }
        assert_eq!(est.blocks.iter().map(Vec::len).sum::<usize>(), 40);
    }

    #[test]
    fn largest_gap_errors() {
        let a = BinaryMatrix::zeros(3);
        assert!(matches!(largest_gap(&a, 4), Err(Error::Contract(_))));
        assert!(largest_gap(&a, 0).is_err());
    }

    #[test]
    fn csv_layout() {
        let est = largest_gap(&BinaryMatrix::ones(2), 1).unwrap();
        assert_eq!(est.to_csv(), "1,1\n1,1\n");
    }
}
