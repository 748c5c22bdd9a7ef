//! Structure learning for Gaussian graphical models under total positivity
//! (MTP₂) by sign tests on batched empirical partial correlations.
//!
//! The pieces:
//! - [`stat`]: observations, covariance, partial correlations, the seeded
//!   Gaussian sampler.
//! - [`graph`]: undirected graphs, confusion counts, edge-list files.
//! - [`learner`]: the level-wise sign-testing learner.
//! - [`synth`]: grid, random and chain precision matrices plus condition
//!   diagnostics.
//! - [`metrics`]: MCC, TPR/FPR, γ sweeps, modularity.
//! - [`oracle`]: independent brute-force validators.

pub mod error;
pub mod graph;
pub mod io;
pub mod learner;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod stat;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{confusion, ConfusionCounts, Graph};
pub use learner::{learn_structure, LearnRecord, LearnerConfig, SingularPolicy, DEFAULT_GAMMA};
pub use metrics::{mcc, modularity, tpr_fpr, MetricsReport, SectorLabels};
pub use stat::{
    empirical_covariance, partial_correlation, sample_gaussian, CovarianceMatrix, ObservationMatrix, PrecisionModel,
};
pub use synth::{Family, GeneratorSpec};
