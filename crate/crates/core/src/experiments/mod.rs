//! Monte Carlo campaigns: estimation, sweeps, threshold fits, the threshold
//! frontier and the two-seam study.
//!
//! Every shot is a pure function of `(graph, noise, seed, shot index)`, so
//! results are identical for any worker count.

use thiserror::Error;

pub mod campaigns;
pub mod estimate;
pub mod fit;
pub mod sweep;

pub use campaigns::{
    threshold_frontier, two_seam_experiment, Campaign, CampaignResult, Frontier, FrontierConfig,
    TwoSeamConfig, TwoSeamResult,
};
pub use estimate::{estimate, estimate_weighted, wilson_interval, with_workers, FailureEstimate};
pub use fit::{fit_points, fit_threshold, FitError, FitOptions, FitPoint, ThresholdFit};
pub use sweep::{grid_points, sweep, GridAxis, SweepMode, SweepPoint, SweepRow};

use crate::lattice::LatticeError;
use crate::logical::JudgeError;
use crate::noise::NoiseError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("decoder invariant violated: {0}")]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("shots must be at least 1")]
    NoShots,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(String),
}
