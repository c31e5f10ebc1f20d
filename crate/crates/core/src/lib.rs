//! Graphon estimation from repeated graph observations by stochastic
//! blockmodel approximation.
//!
//! The pipeline: sample labelled graphs from a [`Graphon`], estimate
//! pairwise slice distances ([`distance`]), group vertices with greedy
//! pivot clustering ([`sba::cluster`]), optionally pick the threshold by
//! cross-validation ([`model_selection`]), then average edges per block
//! pair ([`sba::estimate_block_probabilities`]). [`baselines`] holds the
//! USVT and largest-gap competitors, and [`harness`] runs seeded sweeps.

pub mod baselines;
pub mod cli;
pub mod distance;
pub mod error;
pub mod graphon;
pub mod harness;
pub mod metrics;
pub mod model_selection;
pub mod rng;
pub mod sample;
pub mod sba;

pub use distance::{estimate_distance, exact_distance, slice_products, DistanceEstimator, NeighborhoodPolicy};
pub use error::{Error, Result};
pub use graphon::{BlockModel, Formula, Graphon, GraphonSpec};
pub use harness::{results_csv, run_experiment, summarize, ExperimentConfig, TrialResult};
pub use metrics::{mae, mse, PairEstimate};
pub use model_selection::{cv_risk, select_delta, DeltaGrid, Selection};
pub use sample::{apply_mask, sample_graphs, sample_labels, BinaryMatrix, GraphSampleSet};
pub use sba::{cluster, estimate_block_probabilities, predict, Blocking, EstimatedGraphon};
