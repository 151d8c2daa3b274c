//! Domain types shared across the crate.

use serde::{Deserialize, Serialize};

use crate::error::ConstraintViolation;
use crate::scalar::Real;

/// A directional-discounting model together with its bias parameters.
///
/// The beta-odds shape parameters are called `a`, `b` and the odds exponent
/// `g`, so that `beta` always means a bias coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum BiasModel<T = f64> {
    /// Observation variance perceived as `sigma^2 exp(beta x / sigma)`.
    Exponential { beta: T },
    /// Proportions in (0,1) weighted by the odds `((1-p)/p)^g`, with the
    /// true proportions distributed Beta(a, b).
    BetaOdds { a: T, b: T, g: T },
    /// Like `Exponential` but relative to the current belief:
    /// `sigma^2 exp(beta (x - theta) / sigma)`.
    RelativeExponential { beta: T },
    /// Symmetric t-distribution likelihood with `1/beta` degrees of freedom.
    SweetSpot { beta: T },
    /// Variance scaled by `gamma` above the belief and by `beta` below it.
    ConstantVariance { beta: T, gamma: T },
    /// Log-gamma subjective observation distribution.
    LogGamma { beta: T },
}

impl<T: Real> BiasModel<T> {
    /// Kebab-case variant name, as used in scenario files and on the CLI.
    pub fn variant_name(&self) -> &'static str {
        match self {
            BiasModel::Exponential { .. } => "exponential",
            BiasModel::BetaOdds { .. } => "beta-odds",
            BiasModel::RelativeExponential { .. } => "relative-exponential",
            BiasModel::SweetSpot { .. } => "sweet-spot",
            BiasModel::ConstantVariance { .. } => "constant-variance",
            BiasModel::LogGamma { .. } => "log-gamma",
        }
    }

    /// True when the model reduces to ordinary, correctly specified updating.
    pub fn is_unbiased(&self) -> bool {
        match *self {
            BiasModel::Exponential { beta }
            | BiasModel::RelativeExponential { beta }
            | BiasModel::LogGamma { beta } => beta == T::zero(),
            BiasModel::BetaOdds { g, .. } => g == T::zero(),
            BiasModel::ConstantVariance { beta, gamma } => beta == gamma,
            BiasModel::SweetSpot { .. } => false,
        }
    }

    /// Checks every parameter invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), ConstraintViolation> {
        self.violations().into_iter().next().map_or(Ok(()), Err)
    }

    /// All violated parameter invariants.
    pub fn violations(&self) -> Vec<ConstraintViolation> {
        let mut out = Vec::new();
        match *self {
            BiasModel::Exponential { beta }
            | BiasModel::RelativeExponential { beta }
            | BiasModel::LogGamma { beta } => {
                finite(&mut out, "beta", beta);
            }
            BiasModel::BetaOdds { a, b, g } => {
                let ok = finite(&mut out, "a", a) & finite(&mut out, "b", b) & finite(&mut out, "g", g);
                if ok {
                    if a <= T::zero() {
                        out.push(violation("a", "a > 0 required"));
                    }
                    if b <= T::zero() {
                        out.push(violation("b", "b > 0 required"));
                    }
                    if g >= a {
                        out.push(violation("g", "g < a required"));
                    }
                    if g <= -b {
                        out.push(violation("g", "g > -b required"));
                    }
                }
            }
            BiasModel::SweetSpot { beta } => {
                if finite(&mut out, "beta", beta) && beta <= T::zero() {
                    out.push(violation("beta", "beta > 0 required"));
                }
            }
            BiasModel::ConstantVariance { beta, gamma } => {
                let ok = finite(&mut out, "beta", beta) & finite(&mut out, "gamma", gamma);
                if ok {
                    if beta <= T::zero() {
                        out.push(violation("beta", "beta > 0 required"));
                    }
                    if gamma <= T::zero() {
                        out.push(violation("gamma", "gamma > 0 required"));
                    }
                }
            }
        }
        out
    }
}

fn finite<T: Real>(out: &mut Vec<ConstraintViolation>, field: &'static str, v: T) -> bool {
    if v.is_finite() {
        true
    } else {
        out.push(violation(field, "must be finite"));
        false
    }
}

fn violation(field: &'static str, reason: &str) -> ConstraintViolation {
    ConstraintViolation {
        field,
        reason: reason.to_string(),
    }
}

/// True observation distribution, prior belief and run length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub mu: f64,
    pub sigma: f64,
    pub prior_mean: f64,
    pub prior_var: f64,
    pub n_obs: u64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConstraintViolation> {
        if !self.mu.is_finite() {
            return Err(violation("mu", "must be finite"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(violation("sigma", "sigma > 0 required"));
        }
        if !self.prior_mean.is_finite() {
            return Err(violation("prior_mean", "must be finite"));
        }
        if !(self.prior_var > 0.0) || self.prior_var.is_nan() {
            return Err(violation("prior_var", "prior_var > 0 required"));
        }
        if self.n_obs < 1 {
            return Err(violation("n_obs", "n_obs >= 1 required"));
        }
        Ok(())
    }

    pub fn prior(&self) -> BeliefState<f64> {
        BeliefState::new(self.prior_mean, self.prior_var)
    }
}

/// A scenario file: a model plus its [`ScenarioConfig`], with flat fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub model: BiasModel<f64>,
    #[serde(flatten)]
    pub config: ScenarioConfig,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        // Serialising plain numbers and strings cannot fail.
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), ConstraintViolation> {
        self.model.validate()?;
        self.config.validate()
    }
}

/// Posterior mean and variance of an agent's belief.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefState<T = f64> {
    pub mean: T,
    pub var: T,
}

impl<T: Real> BeliefState<T> {
    pub fn new(mean: T, var: T) -> Self {
        BeliefState { mean, var }
    }

    /// Precision `1/var`; zero for a flat prior.
    pub fn precision(&self) -> T {
        self.var.recip()
    }

    pub fn sd(&self) -> T {
        self.var.sqrt()
    }
}

/// Large-sample summary of a model.
///
/// `subj_var_coeff` is `v n / sigma^2` and `true_var_coeff` is
/// `var(lambda_hat) n / sigma^2`; both are NaN when `diverges` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSummary<T = f64> {
    pub lambda: T,
    pub subj_var_coeff: T,
    pub true_var_coeff: T,
    pub diverges: bool,
}

impl<T: Real> AsymptoticSummary<T> {
    pub fn divergent() -> Self {
        AsymptoticSummary {
            lambda: T::nan(),
            subj_var_coeff: T::nan(),
            true_var_coeff: T::nan(),
            diverges: true,
        }
    }
}

/// One step of a sequential-update trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: u64,
    pub observation: f64,
    pub perceived_var: f64,
    pub post_mean: f64,
    pub post_sd: f64,
}
