//! Simulation and inference for a directed network-formation game with
//! incomplete information and misclassified links.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: primitive types (covariates, parameters, networks) and the
//!   link decision rule.
//! - [`equilibrium`]: symmetric equilibrium beliefs by damped fixed-point
//!   iteration, and simulation of true networks.
//! - [`misclassification`]: link flips and the affine correction between
//!   observed and true belief statistics.
//! - [`estimation`]: cell estimators, the moment vector, influence functions,
//!   the variance estimate and the quadratic-form statistic.
//! - [`inference`]: chi-squared calibration and confidence sets by test
//!   inversion over a parameter grid.
//! - [`semiparametric`]: membership in the distribution-free identified set.
//! - [`population`]: exact cell-level quantities implied by a known design.
//! - [`harness`]: configuration, file formats and the Monte Carlo driver
//!   behind the `netform` binary.

pub mod equilibrium;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod inference;
pub mod misclassification;
pub mod model;
pub mod normal;
pub mod population;
pub mod rng;
pub mod semiparametric;

pub use error::{Error, Result};
