//! Fit of the covariance models implied by factor score estimates and
//! unit-weighted scales.
//!
//! Computing individual scores from a common factor model turns its
//! indicators into composite indicators of the score. This crate measures how
//! well the resulting composite models reproduce the observed covariances:
//!
//! - [`model`]: covariance types, the common factor structure and Cholesky
//!   based inversion.
//! - [`scoring`]: regression and Bartlett weights, unit-weighted scale
//!   patterns, and the covariance matrices they imply.
//! - [`fit`]: SRMR, its closed form for parallel measurements and the
//!   inversions for required inter-correlation and scale length.
//! - [`simulation`]: seeded Monte Carlo replication over one-factor
//!   populations, parallel with the `parallel` feature.
//! - [`io`], [`report`], [`commands`]: file formats and the CLI surface.

// `!(x > y)` is used on purpose so NaN falls into the rejection branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod fit;
pub mod io;
pub mod model;
pub mod report;
pub mod scoring;
pub mod simulation;
pub mod stai;

pub use error::{Error, Result};
pub use fit::{
    min_p_for_srmr, required_r_curve, solve_r_for_srmr, srmr, srmr_parallel_closed_form, CurveRow, FitReport, ModelKind,
};
pub use model::{build_parallel_sigma, factor_implied_sigma, invert_spd, CorrelationMatrix, FactorModel, ParallelSpec};
pub use scoring::{
    bartlett_weights, fs_implied_sigma, regression_component_loadings, regression_weights, score_model_implied_sigma,
    ScaleModel, ScoreWeights, WeightKind,
};
pub use simulation::{
    population_loadings, run_simulation, run_simulation_with, sample_correlation, Execution, LoadingPattern,
    SimulationCell, SimulationConfig,
};
