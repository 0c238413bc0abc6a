//! Simulation and verification toolkit for Mallows random permutations.
//!
//! The crate is organised bottom-up:
//!
//! * [`perm`]: permutations, inversion-count bijections, patterns, direct
//!   sums and block decompositions.
//! * [`samplers`]: exact samplers for finite and infinite Mallows
//!   permutations and for their indecomposable blocks.
//! * [`coupling`]: the step-by-step coupling of Mallows and uniform
//!   permutations that agree off a small error set.
//! * [`pattern`]: classical pattern counting.
//! * [`process`]: the continuous-time infinite Mallows process built from
//!   geometric birth paths.
//! * [`limits`]: closed forms, block-moment estimators and experiment
//!   drivers for the limit laws of pattern counts.
//!
//! Positions and values are 1-based throughout the public API.

pub mod coupling;
pub mod fenwick;
pub mod limits;
pub mod pattern;
pub mod perm;
pub mod process;
pub mod rng;
pub mod samplers;

pub use coupling::{sample_coupled, CoupledPair, CouplingError};
pub use limits::{ExperimentConfig, ExperimentReport, LimitError, MomentAccumulator};
pub use pattern::{PatternCount, PatternError};
pub use perm::{BlockDecomposition, InversionCounts, PermError, Permutation, Side};
pub use process::{BirthPath, ProcessError, ProcessPrefix, QBlockBundle};
pub use rng::RngStream;
pub use samplers::{BlockSumSample, MallowsParams, SamplerError};

/// Any error raised by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error(transparent)]
    Limit(#[from] LimitError),
}
