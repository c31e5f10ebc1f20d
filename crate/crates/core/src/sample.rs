//! Dense binary adjacency matrices and exchangeable graph sampling.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphon::Graphon;
use crate::rng::substream;

/// Row-major `n x n` matrix of 0/1 entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    n: usize,
    data: Vec<u8>,
}

impl BinaryMatrix {
    pub fn zeros(n: usize) -> Self {
        BinaryMatrix {
            n,
            data: vec![0; n * n],
        }
    }

    pub fn ones(n: usize) -> Self {
        BinaryMatrix {
            n,
            data: vec![1; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::contract("adjacency matrix must be square"));
            }
            if row.iter().any(|&v| v > 1) {
                return Err(Error::contract("adjacency entries must be 0 or 1"));
            }
            data.extend_from_slice(row);
        }
        Ok(BinaryMatrix { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j) as u8);
            }
        }
        BinaryMatrix { n, data }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.data[i * self.n + j] = v as u8;
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|&v| v as usize).sum()
    }

    /// Elementwise product.
    pub fn masked_by(&self, mask: &BinaryMatrix) -> BinaryMatrix {
        let data = self.data.iter().zip(&mask.data).map(|(a, m)| a & m).collect();
        BinaryMatrix { n: self.n, data }
    }
}

/// `2T` observed graphs on the same latent labels, optionally with
/// observation masks (1 = observed).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSampleSet {
    n: usize,
    labels: Option<Vec<f64>>,
    observations: Vec<BinaryMatrix>,
    masks: Option<Vec<BinaryMatrix>>,
    directed: bool,
}

impl GraphSampleSet {
    pub fn new(
        observations: Vec<BinaryMatrix>,
        masks: Option<Vec<BinaryMatrix>>,
        directed: bool,
        labels: Option<Vec<f64>>,
    ) -> Result<Self> {
        let count = observations.len();
        if count < 2 || count % 2 != 0 {
            return Err(Error::contract(format!(
                "need an even number (>= 2) of observations, got {count}"
            )));
        }
        let n = observations[0].n();
        if observations.iter().any(|g| g.n() != n) {
            return Err(Error::contract("observations differ in size"));
        }
        if !directed && observations.iter().any(|g| !g.is_symmetric()) {
            return Err(Error::contract("undirected sample set has an asymmetric observation"));
        }
        if let Some(m) = &masks {
            if m.len() != count {
                return Err(Error::contract("mask count must equal observation count"));
            }
            if m.iter().any(|g| g.n() != n) {
                return Err(Error::contract("mask size differs from observation size"));
            }
            if !directed && m.iter().any(|g| !g.is_symmetric()) {
                return Err(Error::contract("undirected sample set has an asymmetric mask"));
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::contract("label count differs from vertex count"));
            }
        }
        Ok(GraphSampleSet {
            n,
            labels,
            observations,
            masks,
            directed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of observations, `2T`.
    pub fn num_observations(&self) -> usize {
        self.observations.len()
    }

    /// Half the number of observations, `T`.
    pub fn half(&self) -> usize {
        self.observations.len() / 2
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    pub fn observations(&self) -> &[BinaryMatrix] {
        &self.observations
    }

    pub fn masks(&self) -> Option<&[BinaryMatrix]> {
        self.masks.as_deref()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Elementwise mean of the observations; masked slots are skipped and a
    /// fully masked cell averages to 0.
    pub fn mean_matrix(&self) -> Vec<f64> {
        let nn = self.n * self.n;
        let mut sums = vec![0u32; nn];
        let mut counts = vec![0u32; nn];
        for (t, g) in self.observations.iter().enumerate() {
            let mask = self.masks.as_ref().map(|m| m[t].as_slice());
            for (idx, &v) in g.as_slice().iter().enumerate() {
                if mask.map_or(true, |m| m[idx] == 1) {
                    sums[idx] += v as u32;
                    counts[idx] += 1;
                }
            }
        }
        sums.iter()
            .zip(&counts)
            .map(|(&s, &c)| if c == 0 { 0.0 } else { s as f64 / c as f64 })
            .collect()
    }

    /// Serializes to the plain-text sample-set format: a header line
    /// `n=<n> obs=<2T> directed=<0|1>`, then each observation as `n` rows of
    /// space-separated digits, then the masks in the same layout if present.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.observations.len() * self.n * self.n * 2 * 2 + 32);
        let _ = writeln!(
            out,
            "n={} obs={} directed={}",
            self.n,
            self.observations.len(),
            self.directed as u8
        );
        let masks = self.masks.iter().flatten();
        for m in self.observations.iter().chain(masks) {
            for i in 0..self.n {
                for (j, &v) in m.row(i).iter().enumerate() {
                    if j > 0 {
                        out.push(' ');
                    }
                    out.push(if v == 1 { '1' } else { '0' });
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty sample-set file".into()))?;
        let (n, obs, directed) = parse_header(header)?;
        if n == 0 {
            return Err(Error::Parse("n must be positive".into()));
        }
        let mut rows: Vec<Vec<u8>> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let row = line
                .split_whitespace()
                .map(|tok| match tok {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(Error::Parse(format!("row {}: bad entry {other:?}", lineno + 1))),
                })
                .collect::<Result<Vec<u8>>>()?;
            if row.len() != n {
                return Err(Error::Parse(format!(
                    "row {}: expected {n} entries, got {}",
                    lineno + 1,
                    row.len()
                )));
            }
            rows.push(row);
        }
        let block = obs * n;
        let has_masks = if rows.len() == block {
            false
        } else if rows.len() == 2 * block {
            true
        } else {
            return Err(Error::Parse(format!(
                "expected {block} or {} matrix rows, found {}",
                2 * block,
                rows.len()
            )));
        };
        let mut mats = rows
            .chunks(n)
            .map(BinaryMatrix::from_rows)
            .collect::<Result<Vec<_>>>()?;
        let masks = if has_masks { Some(mats.split_off(obs)) } else { None };
        GraphSampleSet::new(mats, masks, directed, None)
    }
}

fn parse_header(header: &str) -> Result<(usize, usize, bool)> {
    let mut n = None;
    let mut obs = None;
    let mut directed = None;
    for field in header.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header field {field:?}")))?;
        let parsed: usize = value
            .parse()
            .map_err(|_| Error::Parse(format!("bad header value {field:?}")))?;
        match key {
            "n" => n = Some(parsed),
            "obs" => obs = Some(parsed),
            "directed" if parsed <= 1 => directed = Some(parsed == 1),
            _ => return Err(Error::Parse(format!("unexpected header field {field:?}"))),
        }
    }
    match (n, obs, directed) {
        (Some(n), Some(o), Some(d)) => Ok((n, o, d)),
        _ => Err(Error::Parse(format!("incomplete header {header:?}"))),
    }
}

/// Draws `n` independent Uniform[0,1) labels.
pub fn sample_labels<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::domain("label count must be positive"));
    }
    Ok((0..n).map(|_| rng.gen::<f64>()).collect())
}

/// Samples `num_observations` graphs from `graphon` on the given labels.
///
/// One `u64` is drawn from `rng`; observation `t` then uses the substream
/// derived from that value and `t`, so observations are generated in
/// parallel without changing the output.
pub fn sample_graphs<R: Rng + ?Sized>(
    graphon: &Graphon,
    labels: &[f64],
    num_observations: usize,
    directed: bool,
    rng: &mut R,
) -> Result<GraphSampleSet> {
    if num_observations < 2 || num_observations % 2 != 0 {
        return Err(Error::contract(format!(
            "number of observations must be even and >= 2, got {num_observations}"
        )));
    }
    if labels.is_empty() {
        return Err(Error::domain("need at least one vertex"));
    }
    if labels.iter().any(|u| !(0.0..=1.0).contains(u)) {
        return Err(Error::domain("labels must lie in [0,1]"));
    }
    let probs = edge_probabilities(graphon, labels);
    let base: u64 = rng.gen();
    let observations: Vec<BinaryMatrix> = (0..num_observations)
        .into_par_iter()
        .map(|t| bernoulli_matrix(&probs, labels.len(), directed, &mut substream(base, t as u64)))
        .collect();
    GraphSampleSet::new(observations, None, directed, Some(labels.to_vec()))
}

/// Samples one observation on the given labels directly from `rng`.
pub fn sample_observation<R: Rng + ?Sized>(
    graphon: &Graphon,
    labels: &[f64],
    directed: bool,
    rng: &mut R,
) -> Result<BinaryMatrix> {
    if labels.iter().any(|u| !(0.0..=1.0).contains(u)) {
        return Err(Error::domain("labels must lie in [0,1]"));
    }
    let probs = edge_probabilities(graphon, labels);
    Ok(bernoulli_matrix(&probs, labels.len(), directed, rng))
}

fn edge_probabilities(graphon: &Graphon, labels: &[f64]) -> Vec<f64> {
    labels
        .iter()
        .flat_map(|&x| labels.iter().map(move |&y| graphon.eval_unchecked(x, y)))
        .collect()
}

/// Independent `Bernoulli(p_ij)` entries, drawn row by row; undirected
/// draws only `i <= j` and mirrors.
fn bernoulli_matrix<R: Rng + ?Sized>(probs: &[f64], n: usize, directed: bool, rng: &mut R) -> BinaryMatrix {
    let mut g = BinaryMatrix::zeros(n);
    for i in 0..n {
        let start = if directed { 0 } else { i };
        for j in start..n {
            let edge = rng.gen::<f64>() < probs[i * n + j];
            g.set(i, j, edge);
            if !directed {
                g.set(j, i, edge);
            }
        }
    }
    g
}

/// Random observation mask: each entry is 0 (hidden) with probability `xi`.
pub fn sample_mask<R: Rng + ?Sized>(n: usize, xi: f64, directed: bool, rng: &mut R) -> Result<BinaryMatrix> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::domain(format!("missing-edge rate must be in [0,1], got {xi}")));
    }
    Ok(bernoulli_matrix(&vec![1.0 - xi; n * n], n, directed, rng))
}

/// Hides each entry independently with probability `xi`. Hidden entries are
/// zeroed in the observations and recorded as 0 in the returned masks.
pub fn apply_mask<R: Rng + ?Sized>(samples: &GraphSampleSet, xi: f64, rng: &mut R) -> Result<GraphSampleSet> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::domain(format!("missing-edge rate must be in [0,1], got {xi}")));
    }
    if samples.masks.is_some() {
        return Err(Error::contract("sample set is already masked"));
    }
    let n = samples.n;
    let directed = samples.directed;
    let base: u64 = rng.gen();
    let masks: Vec<BinaryMatrix> = (0..samples.num_observations())
        .into_par_iter()
        .map(|t| sample_mask(n, xi, directed, &mut substream(base, t as u64)))
        .collect::<Result<_>>()?;
    let observations = samples
        .observations
        .iter()
        .zip(&masks)
        .map(|(g, m)| g.masked_by(m))
        .collect();
    GraphSampleSet::new(observations, Some(masks), directed, samples.labels.clone())
}
