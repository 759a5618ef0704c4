//! # eden
//!
//! Quality scores for comparing two-dimensional point distributions, e.g.
//! real training data against samples from a generative model.
//!
//! Five scores are provided, each mapped to `[0, 1]` with 1 meaning "the same
//! distribution":
//!
//! | Score | Kind | Module |
//! |-------|------|--------|
//! | correlation `1 - abs(R_p - R_q)/2` | equipoint | [`scores`] |
//! | earth-mover's `exp(-k * EMD)` | equipoint | [`emd`] |
//! | Jaccard (KDE likelihood-ratio membership) | equipoint | [`scores`] |
//! | KL `exp(-D_KL(p, q))`, Monte-Carlo | equipoint | [`scores`] |
//! | Eden (mean per-annulus IoU of equidensity regions) | equidensity | [`eden`] |
//!
//! Equipoint scores weight every datapoint equally and are therefore
//! dominated by the high-density regions; a poor fit that lines up the
//! peaks can still score well. The Eden score weights every density level
//! equally instead.
//!
//! Supporting machinery: full-covariance Gaussian KDE with Scott's bandwidth
//! ([`kde`]), baseline generators and repeat-sampling summaries
//! ([`evalkit`]), and contour extraction plus SVG rendering ([`render`]).

pub mod dataio;
pub mod eden;
pub mod emd;
mod error;
pub mod evalkit;
pub mod fixtures;
pub mod kde;
pub mod render;
pub mod report;
pub mod rng;
pub mod scores;

pub use dataio::{BoundingRect, PointSet, ToyKind};
pub use eden::{AnnulusReport, AnnulusSet, EdenConfig};
pub use emd::{EmdConfig, Histogram2D, TransportPlan};
pub use error::{Error, ErrorKind, Result};
pub use evalkit::{GenerativeModel, ModelKind, ResampleSummary};
pub use kde::{DensityGrid, DensityModel, LevelThresholds};
pub use report::{ScoreConfig, ScoreReport};
pub use scores::{JaccardConfig, KlConfig, ScoreName, ScoreValue};

/// Library version, echoed in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
