//! Seeded experiment sweeps.
//!
//! A configuration expands to a grid of parameter points (`n`, `T`, `K`,
//! missing rate). Each (point, trial) pair is an independent job whose seed
//! is [`trial_seed`] of the base seed and the point's parameters, so rows
//! can be computed in parallel and always come out in (point, trial) order.
//!
//! Data budget: SBA sees `2T` observations of an `(n/2) x (n/2)` graph;
//! USVT and largest-gap see one `n x n` observation from the same graphon.
//! Every row records the budget it was given.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{largest_gap_masked, usvt_masked, DEFAULT_USVT_ETA};
use crate::distance::NeighborhoodPolicy;
use crate::error::{Error, Result};
use crate::graphon::{BlockModel, Graphon, GraphonSpec};
use crate::metrics::{mae, mse};
use crate::model_selection::{select_delta, DeltaGrid};
use crate::rng::{derive_seed_path, substream};
use crate::sample::{apply_mask, sample_graphs, sample_labels, sample_mask, sample_observation};
use crate::sba::{cluster, estimate_block_probabilities};

pub const DEFAULT_TRIALS: usize = 50;
pub const PAPER_SCALE_TRIALS: usize = 100;
/// Largest `n` accepted without `--paper-scale`.
pub const DESK_SCALE_MAX_N: usize = 400;
pub const PAPER_SCALE_MAX_N: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    GrowN,
    GrowT,
    GrowK,
    MissingLinks,
    Continuous,
}

impl ExperimentKind {
    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::GrowN => "grow_n",
            ExperimentKind::GrowT => "grow_t",
            ExperimentKind::GrowK => "grow_k",
            ExperimentKind::MissingLinks => "missing_links",
            ExperimentKind::Continuous => "continuous",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sba,
    Usvt,
    Lg,
}

impl Method {
    pub fn id(self) -> &'static str {
        match self {
            Method::Sba => "sba",
            Method::Usvt => "usvt",
            Method::Lg => "lg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaChoice {
    Fixed(f64),
    CrossValidated {
        #[serde(default)]
        grid: DeltaGrid,
    },
}

impl Default for DeltaChoice {
    fn default() -> Self {
        DeltaChoice::CrossValidated {
            grid: DeltaGrid::default(),
        }
    }
}

fn default_n_values() -> Vec<usize> {
    vec![200]
}

/// T grid used when `t_values` is omitted.
pub fn default_t_values(kind: ExperimentKind) -> Vec<usize> {
    match kind {
        ExperimentKind::GrowT => vec![1, 2, 4, 8, 16],
        _ => vec![1],
    }
}

fn default_xi_values() -> Vec<f64> {
    vec![0.0]
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_methods() -> Vec<Method> {
    vec![Method::Sba]
}

fn default_directed() -> bool {
    true
}

fn default_eta() -> f64 {
    DEFAULT_USVT_ETA
}

/// Experiment description, read from JSON. Omitted fields take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Required except for `grow_k`, which draws a fresh block model per trial.
    #[serde(default)]
    pub graphon: Option<GraphonSpec>,
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
    /// Defaults to `{1,2,4,8,16}` for `grow_t` and `{1}` otherwise.
    #[serde(default)]
    pub t_values: Option<Vec<usize>>,
    #[serde(default)]
    pub k_values: Vec<usize>,
    #[serde(default = "default_xi_values")]
    pub xi_values: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub delta: DeltaChoice,
    #[serde(default)]
    pub neighborhood: NeighborhoodPolicy,
    #[serde(default = "default_directed")]
    pub directed: bool,
    #[serde(default = "default_eta")]
    pub usvt_eta: f64,
    /// Fill `wall_time_ms`. Off by default so output bytes depend only on
    /// the configuration.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default)]
    pub paper_scale: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::config("methods", "at least one method is required"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        let max_n = if self.paper_scale { PAPER_SCALE_MAX_N } else { DESK_SCALE_MAX_N };
        if self.n_values.is_empty() {
            return Err(Error::config("n_values", "must not be empty"));
        }
        for &n in &self.n_values {
            if n < 6 {
                return Err(Error::config("n_values", format!("{n} is too small (SBA uses n/2 >= 3 vertices)")));
            }
            if n > max_n {
                return Err(Error::config(
                    "n_values",
                    format!("{n} exceeds the cap of {max_n}; pass --paper-scale for larger graphs"),
                ));
            }
        }
        let ts = self.t_grid();
        if ts.is_empty() || ts.contains(&0) {
            return Err(Error::config("t_values", "must be nonempty and positive"));
        }
        if self.xi_values.is_empty() || self.xi_values.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::config("xi_values", "must be nonempty and within [0,1]"));
        }
        if !(self.usvt_eta > 0.0) {
            return Err(Error::config("usvt_eta", "must be positive"));
        }
        if let DeltaChoice::Fixed(d) = self.delta {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::config("delta", "fixed delta must be positive"));
            }
        }
        if let NeighborhoodPolicy::RandomSubset { size } = self.neighborhood {
            let smallest = self.n_values.iter().min().copied().unwrap_or(0) / 2;
            if size == 0 || size + 2 > smallest {
                return Err(Error::config("neighborhood", format!("subset size must be in [1, {}]", smallest.saturating_sub(2))));
            }
        }
        match self.experiment {
            ExperimentKind::GrowK => {
                if self.k_values.is_empty() || self.k_values.contains(&0) {
                    return Err(Error::config("k_values", "grow_k needs positive block counts"));
                }
                if self.graphon.is_some() {
                    return Err(Error::config("graphon", "grow_k draws its own graphons; omit this field"));
                }
                if let Some(&k) = self.k_values.iter().max() {
                    if k > self.n_values.iter().min().copied().unwrap_or(0) / 2 {
                        return Err(Error::config("k_values", "more blocks than SBA vertices"));
                    }
                }
            }
            _ => {
                let spec = self
                    .graphon
                    .as_ref()
                    .ok_or_else(|| Error::config("graphon", "required for this experiment"))?;
                let g = spec.build().map_err(|e| Error::config("graphon", e.to_string()))?;
                if !self.k_values.is_empty() {
                    return Err(Error::config("k_values", "only used by grow_k"));
                }
                if self.methods.contains(&Method::Lg) && g.num_blocks().is_none() {
                    return Err(Error::config("methods", "lg needs a block-model graphon to know K"));
                }
                if !self.directed && !g.symmetric_hint {
                    return Err(Error::config("directed", "undirected sampling needs a symmetric graphon"));
                }
            }
        }
        Ok(())
    }

    pub fn t_grid(&self) -> Vec<usize> {
        self.t_values.clone().unwrap_or_else(|| default_t_values(self.experiment))
    }

    /// Parameter points in output order: `n`, then `T`, then `K`, then `xi`.
    pub fn points(&self) -> Vec<Point> {
        let ks: Vec<Option<usize>> = if self.k_values.is_empty() {
            vec![None]
        } else {
            self.k_values.iter().map(|&k| Some(k)).collect()
        };
        let mut out = Vec::new();
        for &n in &self.n_values {
            for &t in &self.t_grid() {
                for &k in &ks {
                    for &xi in &self.xi_values {
                        out.push(Point { n, t, k, xi });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub n: usize,
    /// Half the number of SBA observations.
    pub t: usize,
    /// Block count for `grow_k`.
    pub k: Option<usize>,
    pub xi: f64,
}

/// Seed of one trial: the base seed folded with the point's parameters and
/// the trial index.
pub fn trial_seed(base_seed: u64, point: &Point, trial: usize) -> u64 {
    derive_seed_path(
        base_seed,
        &[
            point.n as u64,
            point.t as u64,
            point.k.map_or(0, |k| k as u64),
            point.xi.to_bits(),
            trial as u64,
        ],
    )
}

// Substream indices within a trial.
const STREAM_GRAPHON: u64 = 0;
const STREAM_SBA_LABELS: u64 = 1;
const STREAM_SBA_GRAPHS: u64 = 2;
const STREAM_SBA_MASK: u64 = 3;
const STREAM_SBA_CLUSTER: u64 = 4;
const STREAM_ONE_SHOT_LABELS: u64 = 5;
const STREAM_ONE_SHOT_GRAPH: u64 = 6;
const STREAM_ONE_SHOT_MASK: u64 = 7;

/// One result row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub experiment: String,
    pub method: String,
    pub n: usize,
    pub t: usize,
    pub k_true: Option<usize>,
    pub xi: f64,
    pub seed: u64,
    pub mae: f64,
    pub mse: f64,
    pub k_estimated: usize,
    pub delta_used: Option<f64>,
    pub wall_time_ms: Option<f64>,
    /// Vertices x vertices x observations handed to the method.
    pub budget: String,
}

pub const CSV_HEADER: &str =
    "experiment,method,n,T,K_true,xi,seed,mae,mse,K_estimated,delta_used,wall_time_ms,budget";

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl TrialResult {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.method,
            self.n,
            self.t,
            opt(&self.k_true),
            self.xi,
            self.seed,
            self.mae,
            self.mse,
            self.k_estimated,
            opt(&self.delta_used),
            opt(&self.wall_time_ms),
            self.budget
        )
    }
}

pub fn results_csv(rows: &[TrialResult]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

fn random_block_model<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Graphon {
    let probs = (0..k).map(|_| (0..k).map(|_| rng.gen::<f64>()).collect()).collect();
    Graphon::block_model(BlockModel::equispaced(probs).expect("uniform entries lie in [0,1]"))
}

/// Runs every (point, trial) job and returns rows ordered by point, then
/// trial, then method in configuration order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    config.validate()?;
    let fixed_graphon = match &config.graphon {
        Some(spec) => Some(spec.build()?),
        None => None,
    };
    let jobs: Vec<(Point, usize)> = config
        .points()
        .into_iter()
        .flat_map(|p| (0..config.trials).map(move |t| (p, t)))
        .collect();
    let per_job: Vec<Vec<TrialResult>> = jobs
        .par_iter()
        .map(|(point, trial)| run_trial(config, fixed_graphon.as_ref(), point, *trial))
        .collect::<Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

/// [`run_experiment`] on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(config: &ExperimentConfig, threads: usize) -> Result<Vec<TrialResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    pool.install(|| run_experiment(config))
}

fn run_trial(config: &ExperimentConfig, fixed: Option<&Graphon>, point: &Point, trial: usize) -> Result<Vec<TrialResult>> {
    let seed = trial_seed(config.base_seed, point, trial);
    let drawn;
    let graphon = match (fixed, point.k) {
        (Some(g), _) => g,
        (None, Some(k)) => {
            drawn = random_block_model(k, &mut substream(seed, STREAM_GRAPHON));
            &drawn
        }
        (None, None) => return Err(Error::config("graphon", "no graphon for this point")),
    };
    let k_true = graphon.num_blocks();
    let row = |method: Method, mae: f64, mse: f64, k_est: usize, delta: Option<f64>, ms: f64, budget: String| TrialResult {
        experiment: config.experiment.id().to_string(),
        method: method.id().to_string(),
        n: point.n,
        t: point.t,
        k_true,
        xi: point.xi,
        seed,
        mae,
        mse,
        k_estimated: k_est,
        delta_used: delta,
        wall_time_ms: config.record_timing.then_some(ms),
        budget,
    };

    let mut rows = Vec::with_capacity(config.methods.len());
    let one_shot = if config.methods.iter().any(|m| *m != Method::Sba) {
        let labels = sample_labels(point.n, &mut substream(seed, STREAM_ONE_SHOT_LABELS))?;
        let graph = sample_observation(graphon, &labels, config.directed, &mut substream(seed, STREAM_ONE_SHOT_GRAPH))?;
        let mask = if point.xi > 0.0 {
            Some(sample_mask(point.n, point.xi, config.directed, &mut substream(seed, STREAM_ONE_SHOT_MASK))?)
        } else {
            None
        };
        let graph = match &mask {
            Some(m) => graph.masked_by(m),
            None => graph,
        };
        Some((labels, graph, mask))
    } else {
        None
    };

    for &method in &config.methods {
        let start = Instant::now();
        match method {
            Method::Sba => {
                let n_sba = point.n / 2;
                let labels = sample_labels(n_sba, &mut substream(seed, STREAM_SBA_LABELS))?;
                let mut samples = sample_graphs(
                    graphon,
                    &labels,
                    2 * point.t,
                    config.directed,
                    &mut substream(seed, STREAM_SBA_GRAPHS),
                )?;
                if point.xi > 0.0 {
                    samples = apply_mask(&samples, point.xi, &mut substream(seed, STREAM_SBA_MASK))?;
                }
                let mut rng = substream(seed, STREAM_SBA_CLUSTER);
                let blocking = match &config.delta {
                    DeltaChoice::Fixed(d) => cluster(&samples, *d, config.neighborhood, &mut rng)?,
                    DeltaChoice::CrossValidated { grid } => {
                        select_delta(&samples, grid, config.neighborhood, &mut rng)?.blocking
                    }
                };
                let est = estimate_block_probabilities(&samples, &blocking)?;
                let ms = start.elapsed().as_secs_f64() * 1e3;
                rows.push(row(
                    method,
                    mae(graphon, &labels, &est)?,
                    mse(graphon, &labels, &est)?,
                    blocking.num_blocks(),
                    Some(blocking.delta),
                    ms,
                    format!("{n_sba}x{n_sba}x{}", 2 * point.t),
                ));
            }
            Method::Usvt | Method::Lg => {
                let (labels, graph, mask) = one_shot.as_ref().expect("one-shot data drawn for baselines");
                let est = if method == Method::Usvt {
                    let values: Vec<f64> = graph.as_slice().iter().map(|&v| v as f64).collect();
                    usvt_masked(point.n, &values, mask.as_ref(), config.usvt_eta)?
                } else {
                    let k = k_true.ok_or_else(|| Error::config("methods", "lg needs the true K"))?;
                    largest_gap_masked(graph, mask.as_ref(), k)?
                };
                let k_est = match est.params {
                    crate::baselines::BaselineParams::Usvt { rank, .. } => rank,
                    crate::baselines::BaselineParams::LargestGap { k_blocks } => k_blocks,
                };
                let ms = start.elapsed().as_secs_f64() * 1e3;
                rows.push(row(
                    method,
                    mae(graphon, labels, &est)?,
                    mse(graphon, labels, &est)?,
                    k_est,
                    None,
                    ms,
                    format!("{0}x{0}x1", point.n),
                ));
            }
        }
    }
    Ok(rows)
}

/// Per (method, point) aggregate over trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub method: String,
    pub n: usize,
    pub t: usize,
    pub k_true: Option<usize>,
    pub xi: f64,
    pub trials: usize,
    pub mean_mae: f64,
    pub mean_mse: f64,
    pub median_k: f64,
}

/// Groups rows by method and point, in first-appearance order.
pub fn summarize(rows: &[TrialResult]) -> Vec<Summary> {
    let mut groups: Vec<((String, usize, usize, Option<usize>, u64), Vec<&TrialResult>)> = Vec::new();
    for r in rows {
        // grow_k rows share K_true with the point's K; other rows carry the graphon's K.
        let key = (r.method.clone(), r.n, r.t, r.k_true, r.xi.to_bits());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|((method, n, t, k_true, xi), v)| {
            let count = v.len() as f64;
            let mut ks: Vec<usize> = v.iter().map(|r| r.k_estimated).collect();
            ks.sort_unstable();
            let mid = ks.len() / 2;
            let median_k = if ks.len() % 2 == 1 {
                ks[mid] as f64
            } else {
                (ks[mid - 1] + ks[mid]) as f64 / 2.0
            };
            Summary {
                method,
                n,
                t,
                k_true,
                xi: f64::from_bits(xi),
                trials: v.len(),
                mean_mae: v.iter().map(|r| r.mae).sum::<f64>() / count,
                mean_mse: v.iter().map(|r| r.mse).sum::<f64>() / count,
                median_k,
            }
        })
        .collect()
}
