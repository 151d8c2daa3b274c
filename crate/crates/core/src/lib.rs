//! Directionally-discounted Bayesian belief updating.
//!
//! An agent updates a normal belief about a location parameter but
//! discounts observations on one side of its current opinion. This crate
//! provides the large-sample behaviour of six such models (bias, perceived
//! and true variance of the posterior mean, influence of one observation),
//! a sequential update engine, a Monte Carlo harness that checks the closed
//! forms, and a classification of the models by severity.
//!
//! The analytic layer is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the simulation layer uses.

pub mod domain;
pub mod error;
pub mod models;
pub mod montecarlo;
pub mod rng;
pub mod scalar;
pub mod sequential;
pub mod special;
pub mod taxonomy;

pub use domain::{
    AsymptoticSummary, BeliefState, BiasModel, Scenario, ScenarioConfig, TrajectoryRecord,
};
pub use error::{ConstraintViolation, McError, ModelError, SpecialError};
pub use montecarlo::{McPlan, McResult};
pub use sequential::{PolarizationQuery, PrimacyParams};
pub use taxonomy::ClassificationReport;
pub use scalar::Real;

/// Double-precision model.
pub type Model = BiasModel<f64>;
/// Double-precision belief.
pub type Belief = BeliefState<f64>;
/// Double-precision asymptotic summary.
pub type Summary = AsymptoticSummary<f64>;
