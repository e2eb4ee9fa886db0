//! Cure rate survival modeling with a power variance function frailty on the
//! latent competing causes (PVFCR), and the nested plain cure rate model (CR).
//!
//! The crate provides:
//!
//! - closed-form population survival/density and cure rates ([`model`]),
//! - the right-censored log likelihood and posterior kernel ([`inference`]),
//! - an adaptive random-walk Metropolis sampler ([`sampler`]),
//! - posterior summaries: means, cure rates, survival curves, HPD intervals,
//!   and CPO model comparison ([`estimators`]),
//! - a synthetic-data generator and simulation-study harness ([`simgen`]),
//! - CSV/JSON input and output ([`io`]).
//!
//! The numeric kernels in [`model`] and [`inference`] are generic over the
//! scalar type via [`real::Real`]; the aliases below pin `f64`, which is what
//! the sampling pipeline uses.

pub mod error;
pub mod estimators;
pub mod inference;
pub mod io;
pub mod model;
pub mod real;
pub mod sampler;
pub mod simgen;

pub use error::{Error, Result};

/// `f64` baseline parameters.
pub type Baseline = model::BaselineParams<f64>;
/// `f64` frailty parameters.
pub type Frailty = model::FrailtyParams<f64>;
/// `f64` counting-layer parameters.
pub type Counting = model::CountingParams<f64>;
/// `f64` full parameter vector.
pub type Params = model::ParamVector<f64>;
/// `f64` right-censored dataset.
pub type Dataset = inference::ObservedData<f64>;
/// `f64` prior hyperparameters.
pub type Priors = inference::PriorSpec<f64>;
