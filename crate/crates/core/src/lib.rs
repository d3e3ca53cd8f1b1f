//! Online demand-response pricing.
//!
//! A utility broadcasts one price per slot to `N` users with private
//! quadratic costs, observes their noisy aggregate response and must hit a
//! time-varying reduction target. The crate provides the user/cost model
//! ([`model`]), the full-information optimum ([`offline`]), the ridge
//! regression estimator of the aggregate response ([`estimator`]), the
//! closed pricing loop ([`online`]), regret statistics ([`analysis`]) and
//! a seeded Monte Carlo experiment runner ([`experiment`]).

pub mod analysis;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod model;
pub mod offline;
pub mod online;
pub mod rng;

pub use error::{Error, Result};
