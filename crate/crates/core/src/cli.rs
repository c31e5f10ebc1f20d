//! Command-line front end. [`run`] takes the argument vector and output
//! streams so it can be driven from tests.
//!
//! Exit codes: 0 success, 1 bad arguments or configuration, 2 runtime failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::baselines::{largest_gap_masked, usvt_masked, BaselineEstimate, DEFAULT_USVT_ETA};
use crate::distance::NeighborhoodPolicy;
use crate::error::{Error, Result};
use crate::graphon::{Formula, Graphon, GraphonSpec};
use crate::harness::{results_csv, run_experiment_with_threads, ExperimentConfig, PAPER_SCALE_TRIALS};
use crate::metrics::{mae, mse};
use crate::model_selection::{select_delta, DeltaGrid};
use crate::rng::seeded;
use crate::sample::{apply_mask, sample_graphs, sample_labels, GraphSampleSet};
use crate::sba::{cluster, estimate_block_probabilities, Blocking, EstimatedGraphon};

#[derive(Debug, Parser)]
#[command(name = "sba", version, about = "Graphon estimation by stochastic blockmodel approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample 2T graphs from a graphon and write them as a sample-set file.
    Generate(GenerateArgs),
    /// Cluster a sample set and estimate block probabilities (JSON output).
    Estimate(EstimateArgs),
    /// Print the cross-validation risk curve over a delta grid (CSV output).
    Crossval(CrossvalArgs),
    /// Run a baseline estimator on one observation (matrix CSV output).
    Baseline(BaselineArgs),
    /// Run a seeded experiment sweep from a JSON config (results CSV output).
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Graphon: `four_block`, `w1`, `w2`, `const:<p>`, inline JSON, or a JSON file path.
    #[arg(long)]
    graphon: String,
    #[arg(long)]
    n: usize,
    /// Number of observations (2T, even).
    #[arg(long)]
    obs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample symmetric graphs (only i <= j is drawn).
    #[arg(long)]
    undirected: bool,
    /// Fraction of entries hidden at random.
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the latent labels, one per line.
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelectionArgs {
    /// Comma-separated, strictly increasing delta values.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Neighborhood size for the distance estimate; every vertex when omitted.
    #[arg(long)]
    neighborhood: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, conflicts_with = "crossval", required_unless_present = "crossval")]
    delta: Option<f64>,
    /// Pick delta by cross-validation over the grid.
    #[arg(long)]
    crossval: bool,
    #[command(flatten)]
    selection: SelectionArgs,
    /// True graphon, for error metrics (requires --labels).
    #[arg(long, requires = "labels")]
    graphon: Option<String>,
    /// Latent labels file, one per line.
    #[arg(long, requires = "graphon")]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CrossvalArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    selection: SelectionArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BaselineMethod {
    Usvt,
    Lg,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(value_enum)]
    method: BaselineMethod,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_USVT_ETA)]
    eta: f64,
    /// Block count for largest-gap.
    #[arg(long)]
    k: Option<usize>,
    /// Which observation of the sample set to use.
    #[arg(long, default_value_t = 0)]
    observation: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `base_seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `trials` from the config.
    #[arg(long)]
    trials: Option<usize>,
    /// 100 trials and graphs up to n = 2000 unless --trials is given.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    threads: Option<usize>,
}

/// Parses `argv` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Config { .. } => 1,
                _ => 2,
            }
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a, stdout),
        Command::Estimate(a) => estimate(a, stdout),
        Command::Crossval(a) => crossval(a, stdout),
        Command::Baseline(a) => baseline(a, stdout),
        Command::Experiment(a) => experiment(a, stdout),
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Resolves a graphon argument. Preset names come first, then inline JSON,
/// then a path to a JSON file.
pub fn parse_graphon(arg: &str) -> Result<Graphon> {
    let bad = |m: String| Error::config("graphon", m);
    match arg {
        "four_block" => return Ok(Graphon::four_block_example()),
        "w1" => return Ok(Graphon::formula(Formula::W1Logistic)),
        "w2" => return Ok(Graphon::formula(Formula::W2Product)),
        _ => {}
    }
    if let Some(p) = arg.strip_prefix("const:") {
        let p: f64 = p.parse().map_err(|_| bad(format!("bad constant `{p}`")))?;
        return Graphon::constant(p).map_err(|e| bad(e.to_string()));
    }
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| bad(format!("cannot read `{arg}`: {e}")))?
    };
    let spec: GraphonSpec = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    spec.build().map_err(|e| bad(e.to_string()))
}

fn read_samples(path: &Path) -> Result<GraphSampleSet> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config("input", format!("cannot read `{}`: {e}", path.display())))?;
    GraphSampleSet::from_text(&text)
}

fn read_labels(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config("labels", format!("cannot read `{}`: {e}", path.display())))?;
    text.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad label `{t}`"))))
        .collect()
}

fn generate(a: GenerateArgs, stdout: &mut dyn Write) -> Result<()> {
    let graphon = parse_graphon(&a.graphon)?;
    if a.undirected && !graphon.symmetric_hint {
        return Err(Error::config("undirected", "graphon is not symmetric"));
    }
    let mut rng = seeded(a.seed);
    let labels = sample_labels(a.n, &mut rng)?;
    let mut samples = sample_graphs(&graphon, &labels, a.obs, !a.undirected, &mut rng)?;
    if let Some(xi) = a.xi {
        samples = apply_mask(&samples, xi, &mut rng)?;
    }
    if let Some(path) = &a.labels_out {
        let text: String = labels.iter().map(|u| format!("{u}\n")).collect();
        fs::write(path, text)?;
    }
    emit(a.out.as_deref(), &samples.to_text(), stdout)
}

fn policy(size: Option<usize>) -> NeighborhoodPolicy {
    size.map_or(NeighborhoodPolicy::Full, |size| NeighborhoodPolicy::RandomSubset { size })
}

fn grid(values: Option<Vec<f64>>) -> Result<DeltaGrid> {
    match values {
        Some(v) => DeltaGrid::new(v).map_err(|e| Error::config("grid", e.to_string())),
        None => Ok(DeltaGrid::default()),
    }
}

#[derive(Serialize)]
struct Metrics {
    mae: f64,
    mse: f64,
}

#[derive(Serialize)]
struct EstimateOutput {
    blocking: Blocking,
    estimate: EstimatedGraphon,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<Metrics>,
}

fn estimate(a: EstimateArgs, stdout: &mut dyn Write) -> Result<()> {
    let samples = read_samples(&a.input)?;
    let truth = match (&a.graphon, &a.labels) {
        (Some(g), Some(l)) => {
            let labels = read_labels(l)?;
            if labels.len() != samples.n() {
                return Err(Error::config("labels", "label count differs from vertex count"));
            }
            Some((parse_graphon(g)?, labels))
        }
        _ => None,
    };
    let pol = policy(a.selection.neighborhood);
    let mut rng = seeded(a.selection.seed);
    let blocking = match a.delta {
        Some(d) => cluster(&samples, d, pol, &mut rng)?,
        None => select_delta(&samples, &grid(a.selection.grid)?, pol, &mut rng)?.blocking,
    };
    let est = estimate_block_probabilities(&samples, &blocking)?;
    let metrics = match &truth {
        Some((g, labels)) => Some(Metrics {
            mae: mae(g, labels, &est)?,
            mse: mse(g, labels, &est)?,
        }),
        None => None,
    };
    let out = EstimateOutput {
        blocking,
        estimate: est,
        metrics,
    };
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    emit(a.out.as_deref(), &text, stdout)
}

fn crossval(a: CrossvalArgs, stdout: &mut dyn Write) -> Result<()> {
    let samples = read_samples(&a.input)?;
    let sel = select_delta(
        &samples,
        &grid(a.selection.grid)?,
        policy(a.selection.neighborhood),
        &mut seeded(a.selection.seed),
    )?;
    emit(a.out.as_deref(), &sel.curve_csv(), stdout)
}

fn baseline(a: BaselineArgs, stdout: &mut dyn Write) -> Result<()> {
    let samples = read_samples(&a.input)?;
    let t = a.observation;
    if t >= samples.num_observations() {
        return Err(Error::config(
            "observation",
            format!("index {t} out of range for {} observations", samples.num_observations()),
        ));
    }
    let graph = &samples.observations()[t];
    let mask = samples.masks().map(|m| &m[t]);
    let est: BaselineEstimate = match a.method {
        BaselineMethod::Usvt => {
            if !(a.eta > 0.0) {
                return Err(Error::config("eta", "must be positive"));
            }
            let values: Vec<f64> = graph.as_slice().iter().map(|&v| v as f64).collect();
            usvt_masked(samples.n(), &values, mask, a.eta)?
        }
        BaselineMethod::Lg => {
            let k = a.k.ok_or_else(|| Error::config("k", "largest-gap needs --k"))?;
            if k == 0 || k > samples.n() {
                return Err(Error::config("k", format!("must be in [1, {}]", samples.n())));
            }
            largest_gap_masked(graph, mask, k)?
        }
    };
    emit(a.out.as_deref(), &est.to_csv(), stdout)
}

fn experiment(a: ExperimentArgs, stdout: &mut dyn Write) -> Result<()> {
    let text = fs::read_to_string(&a.config)
        .map_err(|e| Error::config("config", format!("cannot read `{}`: {e}", a.config.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if a.paper_scale {
        config.paper_scale = true;
        config.trials = PAPER_SCALE_TRIALS;
    }
    if let Some(t) = a.trials {
        config.trials = t;
    }
    if let Some(s) = a.seed {
        config.base_seed = s;
    }
    let threads = match a.threads {
        Some(0) => return Err(Error::config("threads", "must be >= 1")),
        Some(t) => t,
        None => rayon::current_num_threads(),
    };
    let rows = run_experiment_with_threads(&config, threads)?;
    emit(a.out.as_deref(), &results_csv(&rows), stdout)
}
