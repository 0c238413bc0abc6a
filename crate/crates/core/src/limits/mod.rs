//! Closed forms, block-moment estimators, diagnostics and experiment
//! drivers for the limit laws of pattern counts.

pub mod blocks;
pub mod closed_form;
pub mod diagnostics;
pub mod experiment;
pub mod moments;
pub mod stats;

use thiserror::Error;

pub use blocks::{
    estimate_e, gamma_id_variance, gamma_matrix, gamma_rank_report, h_cov, h_matrix, Estimate,
    GammaMatrixEstimate, HEstimate, RankReport,
};
pub use closed_form::{inv_asymptotics, inv_mean_exact, inv_var_exact};
pub use diagnostics::{clt_diagnostics, CltDiagnostics, NormalityThresholds};
pub use experiment::{run_regime_experiment, ExperimentConfig, ExperimentReport, StatRow};
pub use moments::{CovAccumulator, MomentAccumulator};

use crate::pattern::PatternError;
use crate::process::ProcessError;
use crate::samplers::SamplerError;

#[derive(Debug, Error)]
pub enum LimitError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error("output error: {0}")]
    Io(String),
}
