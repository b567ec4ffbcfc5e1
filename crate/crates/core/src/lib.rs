//! Archimedean and Archimax copulas, their exact conditional distributions, and the
//! block-maxima machinery used to show that conditioning one component of an
//! Archimedean vector on a fixed level leaves the remaining components with
//! asymptotically independent tails.
//!
//! The crate is organized bottom-up:
//!
//! - [`generators`]: the Gumbel–Hougaard, Clayton, Frank and logistic generators,
//!   their derivatives and inverses, plus tail-regularity probes.
//! - [`dnorms`]: logistic, sup and sum D-norms.
//! - [`copulas`]: Archimedean/Archimax distribution functions, the conditional df
//!   given one component, norming constants and convergence probes.
//! - [`sampling`]: frailty samplers and conditional slices.
//! - [`maxima`]: normalized componentwise maxima.
//! - [`pickands`]: the rank-based Pickands estimator and the sup-distance tail test.
//! - [`experiment`]: the two-step simulation pipeline and rejection-rate tables.
//! - [`cli`]: the `tailcond` command line.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod copulas;
pub mod dnorms;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod maxima;
pub mod output;
pub mod pickands;
pub mod rng;
pub mod sampling;
pub mod stats;
pub mod svg;

pub use copulas::{CopulaModel, NormingConstants, ProbeRow};
pub use dnorms::{DNorm, NormKind};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, ExperimentReport};
pub use generators::{Family, Generator};
pub use maxima::{MaximaSample, Norming, ScaleConvention};
pub use pickands::{CriticalSource, SimplexGrid, TailTestResult};
pub use sampling::{SampleMatrix, SliceSample};

/// Seed used by every entry point when none is supplied.
pub const DEFAULT_SEED: u64 = 20_190_527;
