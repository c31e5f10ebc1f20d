//! Greedy pivot clustering and the block-probability histogram.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{DistanceEstimator, NeighborhoodPolicy};
use crate::error::{Error, Result};
use crate::metrics::PairEstimate;
use crate::sample::{BinaryMatrix, GraphSampleSet};

/// A partition of the vertices into blocks, each with its pivot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blocking {
    pub delta: f64,
    pub blocks: Vec<Vec<usize>>,
    pub pivots: Vec<usize>,
}

impl Blocking {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Vertex -> block index over `0..n`. Fails unless the blocks partition
    /// `0..n` and each pivot lies in its own block.
    pub fn assignment(&self, n: usize) -> Result<Vec<usize>> {
        if self.pivots.len() != self.blocks.len() {
            return Err(Error::contract("one pivot per block required"));
        }
        let mut assignment = vec![usize::MAX; n];
        for (b, block) in self.blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::contract(format!("block {b} is empty")));
            }
            for &v in block {
                if v >= n {
                    return Err(Error::contract(format!("vertex {v} out of range for n = {n}")));
                }
                if assignment[v] != usize::MAX {
                    return Err(Error::contract(format!("vertex {v} appears in two blocks")));
                }
                assignment[v] = b;
            }
            if assignment.get(self.pivots[b]) != Some(&b) {
                return Err(Error::contract(format!("pivot of block {b} is not a member")));
            }
        }
        if let Some(v) = assignment.iter().position(|&a| a == usize::MAX) {
            return Err(Error::contract(format!("vertex {v} is not assigned")));
        }
        Ok(assignment)
    }
}

/// Greedy pivot clustering with threshold `delta^2` on estimated distances.
/// Two-vertex sets are rejected: a distance needs a third vertex.
pub fn cluster<R: Rng + ?Sized>(
    samples: &GraphSampleSet,
    delta: f64,
    policy: NeighborhoodPolicy,
    rng: &mut R,
) -> Result<Blocking> {
    cluster_counted(samples, delta, policy, rng).map(|(b, _)| b)
}

/// [`cluster`], also returning the number of distance evaluations performed.
pub fn cluster_counted<R: Rng + ?Sized>(
    samples: &GraphSampleSet,
    delta: f64,
    policy: NeighborhoodPolicy,
    rng: &mut R,
) -> Result<(Blocking, usize)> {
    let estimator = DistanceEstimator::new(samples);
    cluster_with(&estimator, delta, policy, rng)
}

pub(crate) fn cluster_with<R: Rng + ?Sized>(
    estimator: &DistanceEstimator,
    delta: f64,
    policy: NeighborhoodPolicy,
    rng: &mut R,
) -> Result<(Blocking, usize)> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::domain(format!("delta must be positive, got {delta}")));
    }
    let n = estimator.n();
    if n == 0 {
        return Err(Error::domain("cannot cluster an empty vertex set"));
    }
    if n >= 3 {
        policy.validate(n)?;
    }
    let threshold = delta * delta;
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut blocks = Vec::new();
    let mut pivots = Vec::new();
    let mut evaluations = 0usize;

    while !remaining.is_empty() {
        let pivot = remaining[rng.gen_range(0..remaining.len())];
        let candidates: Vec<usize> = remaining.iter().copied().filter(|&v| v != pivot).collect();
        evaluations += candidates.len();
        let joins: Vec<bool> = match policy {
            NeighborhoodPolicy::Full => candidates
                .par_iter()
                .map(|&v| estimator.full_distance(pivot, v).map(|d| d <= threshold))
                .collect::<Result<_>>()?,
            NeighborhoodPolicy::RandomSubset { .. } => candidates
                .iter()
                .map(|&v| estimator.distance(pivot, v, policy, rng).map(|d| d <= threshold))
                .collect::<Result<_>>()?,
        };
        let mut block = vec![pivot];
        block.extend(candidates.iter().zip(&joins).filter(|(_, &j)| j).map(|(&v, _)| v));
        block.sort_unstable();
        remaining.retain(|v| block.binary_search(v).is_err());
        blocks.push(block);
        pivots.push(pivot);
    }
    Ok((Blocking { delta, blocks, pivots }, evaluations))
}

/// Piecewise-constant estimate: one probability per ordered block pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatedGraphon {
    pub block_probs: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    /// Block pairs with no observed slot; their probability is set to 0.5.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub empty_cells: Vec<(usize, usize)>,
    #[serde(skip)]
    pub source_blocking: Blocking,
}

/// Value reported for block pairs whose every slot is masked.
pub const EMPTY_CELL_FALLBACK: f64 = 0.5;

/// Per-block-pair edge frequency over the given observations, skipping
/// masked slots. Cells without any observed slot get [`EMPTY_CELL_FALLBACK`]
/// and are listed in the second return value.
pub(crate) fn block_averages(
    observations: &[BinaryMatrix],
    masks: Option<&[BinaryMatrix]>,
    assignment: &[usize],
    k: usize,
) -> (Vec<Vec<f64>>, Vec<(usize, usize)>) {
    let n = assignment.len();
    let mut ones = vec![0u64; k * k];
    let mut slots = vec![0u64; k * k];
    for (t, g) in observations.iter().enumerate() {
        let mask = masks.map(|m| &m[t]);
        for i in 0..n {
            let row = g.row(i);
            let base = assignment[i] * k;
            match mask {
                None => {
                    for (j, &v) in row.iter().enumerate() {
                        let cell = base + assignment[j];
                        ones[cell] += v as u64;
                        slots[cell] += 1;
                    }
                }
                Some(m) => {
                    for (j, (&v, &seen)) in row.iter().zip(m.row(i)).enumerate() {
                        let cell = base + assignment[j];
                        ones[cell] += (v & seen) as u64;
                        slots[cell] += seen as u64;
                    }
                }
            }
        }
    }
    let mut empty_cells = Vec::new();
    let probs = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| {
                    let cell = a * k + b;
                    if slots[cell] == 0 {
                        empty_cells.push((a, b));
                        EMPTY_CELL_FALLBACK
                    } else {
                        ones[cell] as f64 / slots[cell] as f64
                    }
                })
                .collect()
        })
        .collect();
    (probs, empty_cells)
}

/// Averages every observation over each ordered block pair, diagonal
/// pairs included. With masks, only observed slots enter the average.
pub fn estimate_block_probabilities(samples: &GraphSampleSet, blocking: &Blocking) -> Result<EstimatedGraphon> {
    let n = samples.n();
    let assignment = blocking.assignment(n)?;
    let (block_probs, empty_cells) =
        block_averages(samples.observations(), samples.masks(), &assignment, blocking.num_blocks());
    Ok(EstimatedGraphon {
        block_probs,
        assignment,
        empty_cells,
        source_blocking: blocking.clone(),
    })
}

impl EstimatedGraphon {
    pub fn num_blocks(&self) -> usize {
        self.block_probs.len()
    }

    /// Estimated edge probability between vertices `i` and `j`.
    pub fn predict(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.assignment.len();
        if i >= n || j >= n {
            return Err(Error::contract(format!("vertex out of range for n = {n}")));
        }
        Ok(self.block_probs[self.assignment[i]][self.assignment[j]])
    }

    /// Dense `n x n` matrix of predictions.
    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.assignment.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.block_probs[self.assignment[i]][self.assignment[j]]).collect())
            .collect()
    }
}

pub fn predict(est: &EstimatedGraphon, i: usize, j: usize) -> Result<f64> {
    est.predict(i, j)
}

impl PairEstimate for EstimatedGraphon {
    fn num_vertices(&self) -> usize {
        self.assignment.len()
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        self.block_probs[self.assignment[i]][self.assignment[j]]
    }
}
