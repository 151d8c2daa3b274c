//! Observation-by-observation belief updating.
//!
//! Each observation is treated as normal with a *perceived* variance that
//! the bias model inflates or deflates, and is folded into a normal belief
//! by the conjugate precision-weighted rule. The primacy rule makes the
//! perceived variance grow as the belief sharpens.

use serde::{Deserialize, Serialize};

use crate::domain::{BeliefState, BiasModel, ScenarioConfig, TrajectoryRecord};
use crate::error::{ConstraintViolation, ModelError};
use crate::models;
use crate::rng::Stream;
use crate::scalar::Real;
use crate::special::norm_cdf;

/// Perceived variance `sigma^2 (sigma^2 / v)^xi` of the primacy rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimacyParams<T = f64> {
    pub xi: T,
    pub sigma: T,
}

impl<T: Real> PrimacyParams<T> {
    pub fn validate(&self) -> Result<(), ConstraintViolation> {
        if !(self.xi >= T::zero() && self.xi.is_finite()) {
            return Err(ConstraintViolation {
                field: "xi",
                reason: "xi >= 0 required".into(),
            });
        }
        if !(self.sigma > T::zero() && self.sigma.is_finite()) {
            return Err(ConstraintViolation {
                field: "sigma",
                reason: "sigma > 0 required".into(),
            });
        }
        Ok(())
    }

    /// Variance inflation `(sigma^2 / v)^xi` at belief variance `v`.
    pub fn inflation(&self, belief_var: T) -> T {
        (self.sigma * self.sigma / belief_var).powf(self.xi)
    }
}

/// Probability attached to a threshold `L` given a belief `lambda_hat`
/// with spread `sigma_lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationQuery<T = f64> {
    pub threshold: T,
    pub lambda_hat: T,
    pub sigma_lambda: T,
}

/// Perceived variance of an observation at `x` given the current belief.
///
/// Only models defined through a per-observation variance are supported:
/// exponential (absolute in `x`), relative exponential and constant
/// variance (both relative to `belief_mean`).
pub fn perceived_variance<T: Real>(
    model: &BiasModel<T>,
    x: T,
    belief_mean: T,
    sigma: T,
) -> Result<T, ModelError> {
    model.validate()?;
    let s2 = sigma * sigma;
    match *model {
        BiasModel::Exponential { beta } => Ok(s2 * (beta * x / sigma).exp()),
        BiasModel::RelativeExponential { beta } => {
            Ok(s2 * (beta * (x - belief_mean) / sigma).exp())
        }
        BiasModel::ConstantVariance { beta, gamma } => {
            Ok(s2 * if x > belief_mean { gamma } else { beta })
        }
        BiasModel::SweetSpot { .. } | BiasModel::LogGamma { .. } | BiasModel::BetaOdds { .. } => {
            Err(ModelError::Unsupported {
                operation: "perceived_variance",
                variant: model.variant_name(),
            })
        }
    }
}

/// Conjugate update with one observation of known variance.
///
/// An infinite `perceived_var` leaves the belief unchanged; an infinite
/// prior variance makes the posterior equal to the observation.
pub fn update<T: Real>(belief: BeliefState<T>, x: T, perceived_var: T) -> BeliefState<T> {
    let prior_precision = belief.precision();
    let obs_precision = perceived_var.recip();
    let precision = prior_precision + obs_precision;
    if obs_precision == T::zero() || !(precision > T::zero()) {
        return belief;
    }
    let gain = obs_precision / precision;
    let mean = if prior_precision == T::zero() {
        x
    } else {
        belief.mean + gain * (x - belief.mean)
    };
    BeliefState {
        mean,
        var: precision.recip(),
    }
}

/// Primacy update: precision grows by `(v / sigma^2)^xi / sigma^2`.
pub fn primacy_update<T: Real>(
    belief: BeliefState<T>,
    x: T,
    params: &PrimacyParams<T>,
) -> BeliefState<T> {
    let s2 = params.sigma * params.sigma;
    update(belief, x, s2 * params.inflation(belief.var))
}

/// Large-`n` posterior variance under the primacy rule,
/// `(sigma^{2 xi + 2} / ((xi + 1) n))^{1 / (xi + 1)}`.
pub fn primacy_variance_asymptote<T: Real>(params: &PrimacyParams<T>, n: T) -> T {
    let one = T::one();
    let k = params.xi + one;
    let s2 = params.sigma * params.sigma;
    (s2.powf(k) / (k * n)).powf(k.recip())
}

/// `Phi((lambda_hat - L) / sigma_lambda)`, with the argument order as
/// printed. `p` is 1/2 at `lambda_hat == L` and increases with
/// `lambda_hat`.
pub fn polarization_probability<T: Real>(q: &PolarizationQuery<T>) -> T {
    norm_cdf((q.lambda_hat - q.threshold) / q.sigma_lambda)
}

/// Sequential updating over `config.n_obs` draws from `N(mu, sigma^2)`.
///
/// Observations come from stream 0 of `config.seed` (see [`crate::rng`]).
pub fn run_trajectory(
    config: &ScenarioConfig,
    model: &BiasModel<f64>,
) -> Result<Vec<TrajectoryRecord>, ModelError> {
    config.validate()?;
    model.validate()?;
    // Fail before drawing anything if the model is not sequential.
    perceived_variance(model, config.mu, config.prior_mean, config.sigma)?;
    let mut stream = Stream::new(config.seed, 0);
    let mut belief = config.prior();
    let mut out = Vec::with_capacity(config.n_obs as usize);
    for step in 1..=config.n_obs {
        let x = stream.normal(config.mu, config.sigma);
        let pv = perceived_variance(model, x, belief.mean, config.sigma)?;
        belief = update(belief, x, pv);
        out.push(TrajectoryRecord {
            step,
            observation: x,
            perceived_var: pv,
            post_mean: belief.mean,
            post_sd: belief.sd(),
        });
    }
    Ok(out)
}

/// One point of a primacy run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimacyPoint {
    pub n: u64,
    pub post_mean: f64,
    pub post_var: f64,
}

/// Runs the primacy rule for `n` observations from `N(mu, sigma^2)` and
/// returns the belief after every step.
pub fn run_primacy(
    params: &PrimacyParams<f64>,
    mu: f64,
    prior: BeliefState<f64>,
    n: u64,
    seed: u64,
) -> Result<Vec<PrimacyPoint>, ConstraintViolation> {
    params.validate()?;
    if !(prior.var > 0.0 && prior.var.is_finite()) {
        return Err(ConstraintViolation {
            field: "prior_var",
            reason: "a finite prior variance > 0 is required by the primacy rule".into(),
        });
    }
    let mut stream = Stream::new(seed, 0);
    let mut belief = prior;
    let mut out = Vec::with_capacity(n as usize);
    for step in 1..=n {
        let x = stream.normal(mu, params.sigma);
        belief = primacy_update(belief, x, params);
        out.push(PrimacyPoint {
            n: step,
            post_mean: belief.mean,
            post_var: belief.var,
        });
    }
    Ok(out)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        let dx = x.ln() - mx;
        (a + dx * (y.ln() - my), b + dx * dx)
    });
    sxy / sxx
}

/// Fitted exponent of `v_n` over the last two decades `[n/100, n]` of a run.
pub fn primacy_slope(run: &[PrimacyPoint]) -> f64 {
    let last = run.last().map_or(0, |p| p.n);
    let from = (last / 100).max(1);
    let points: Vec<(f64, f64)> = run
        .iter()
        .filter(|p| p.n >= from)
        .map(|p| (p.n as f64, p.post_var))
        .collect();
    loglog_slope(&points)
}

/// How an agent's `sigma_lambda` is obtained in a polarization run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SpreadSource {
    /// `sqrt(true_var_coeff * sigma^2 / n)`, the actual sampling spread.
    #[default]
    True,
    /// The agent's own posterior standard deviation.
    Subjective,
}

/// One checkpoint of a two-agent polarization run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationPoint {
    pub n: u64,
    pub lambda_hat: [f64; 2],
    pub p: [f64; 2],
}

/// Settings shared by both agents of a polarization run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationSetup {
    pub threshold: f64,
    pub mu: f64,
    pub sigma: f64,
    pub prior: BeliefState<f64>,
    pub n: u64,
    pub seed: u64,
    pub spread: SpreadSource,
}

/// Two agents with different models see the same observation stream; at
/// each checkpoint reports both beliefs and their threshold probabilities.
///
/// Checkpoints beyond `setup.n` are ignored.
pub fn run_polarization(
    models: [BiasModel<f64>; 2],
    setup: &PolarizationSetup,
    checkpoints: &[u64],
) -> Result<Vec<PolarizationPoint>, ModelError> {
    let cfg = ScenarioConfig {
        mu: setup.mu,
        sigma: setup.sigma,
        prior_mean: setup.prior.mean,
        prior_var: setup.prior.var,
        n_obs: setup.n,
        seed: setup.seed,
    };
    cfg.validate()?;
    let mut coeffs = [1.0; 2];
    for (c, m) in coeffs.iter_mut().zip(models.iter()) {
        perceived_variance(m, setup.mu, setup.prior.mean, setup.sigma)?;
        if setup.spread == SpreadSource::True {
            *c = models::true_variance_coeff(m, setup.sigma)?;
        }
    }
    let mut stream = Stream::new(setup.seed, 0);
    let mut beliefs = [setup.prior; 2];
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().copied().filter(|&c| c >= 1).peekable();
    for step in 1..=setup.n {
        let x = stream.normal(setup.mu, setup.sigma);
        for (b, m) in beliefs.iter_mut().zip(models.iter()) {
            let pv = perceived_variance(m, x, b.mean, setup.sigma)?;
            *b = update(*b, x, pv);
        }
        while next.peek() == Some(&step) {
            next.next();
            let mut p = [0.0; 2];
            for k in 0..2 {
                let sigma_lambda = match setup.spread {
                    SpreadSource::True => (coeffs[k] * setup.sigma * setup.sigma / step as f64).sqrt(),
                    SpreadSource::Subjective => beliefs[k].sd(),
                };
                p[k] = polarization_probability(&PolarizationQuery {
                    threshold: setup.threshold,
                    lambda_hat: beliefs[k].mean,
                    sigma_lambda,
                });
            }
            out.push(PolarizationPoint {
                n: step,
                lambda_hat: [beliefs[0].mean, beliefs[1].mean],
                p,
            });
        }
        if next.peek().is_none() {
            break;
        }
    }
    Ok(out)
}

/// Roughly `per_decade` log-spaced integers in `[1, n]`, always ending at `n`.
pub fn log_checkpoints(n: u64, per_decade: u32) -> Vec<u64> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let ratio = 10f64.powf(1.0 / f64::from(per_decade.max(1)));
    let mut x = 1.0_f64;
    while (x.round() as u64) < n {
        let k = x.round() as u64;
        if out.last() != Some(&k) {
            out.push(k);
        }
        x *= ratio;
    }
    out.push(n);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = BiasModel<f64>;

    #[test]
    fn perceived_variance_examples() {
        let m = M::Exponential { beta: 0.2 };
        let pv = perceived_variance(&m, 140.0, 0.0, 10.0).unwrap();
        assert!((pv - 100.0 * 2.8f64.exp()).abs() < 1e-10);
        assert!((pv - 1644.5).abs() < 0.1);
        let flat = M::Exponential { beta: 0.0 };
        assert_eq!(perceived_variance(&flat, 55.0, 0.0, 3.0).unwrap(), 9.0);
        let cv = M::ConstantVariance {
            beta: 1.0,
            gamma: 2.0,
        };
        assert_eq!(perceived_variance(&cv, 1.0, 0.5, 1.0).unwrap(), 2.0);
        assert_eq!(perceived_variance(&cv, 0.0, 0.5, 1.0).unwrap(), 1.0);
        let rel = M::RelativeExponential { beta: 1.0 };
        assert_eq!(perceived_variance(&rel, 3.0, 3.0, 2.0).unwrap(), 4.0);
        assert!(matches!(
            perceived_variance(&M::LogGamma { beta: 1.0 }, 0.0, 0.0, 1.0),
            Err(ModelError::Unsupported { .. })
        ));
    }

    #[test]
    fn update_examples() {
        let b = update(BeliefState::new(120.0_f64, 25.0), 140.0, 100.0);
        assert!((b.mean - 124.0).abs() < 1e-12);
        assert!((b.var - 20.0).abs() < 1e-12);

        let prior = BeliefState::new(3.0, 2.0);
        assert_eq!(update(prior, 50.0, f64::INFINITY), prior);

        let flat = BeliefState::new(0.0, f64::INFINITY);
        let b = update(flat, 7.5, 4.0);
        assert_eq!(b.mean, 7.5);
        assert_eq!(b.var, 4.0);
    }

    #[test]
    fn primacy_examples() {
        let p0 = PrimacyParams { xi: 0.0, sigma: 2.0 };
        let prior = BeliefState::new(1.0, 3.0);
        assert_eq!(primacy_update(prior, 4.0, &p0), update(prior, 4.0, 4.0));

        let p1 = PrimacyParams { xi: 1.0, sigma: 1.0 };
        let b = BeliefState::new(0.0_f64, 0.01);
        let after = primacy_update(b, 0.3, &p1);
        let gain = after.precision() - b.precision();
        assert!((gain - 0.01).abs() < 1e-9);
    }

    #[test]
    fn polarization_examples() {
        let q = PolarizationQuery {
            threshold: 2.0,
            lambda_hat: 2.0,
            sigma_lambda: 0.3,
        };
        assert_eq!(polarization_probability(&q), 0.5);
        let q = PolarizationQuery {
            threshold: 0.0_f64,
            lambda_hat: 0.3,
            sigma_lambda: 0.3,
        };
        assert!((polarization_probability(&q) - 0.841_344_746).abs() < 1e-9);
        let mut last = 1.0;
        for n in [1e2, 1e4, 1e6, 1e8] {
            let q = PolarizationQuery {
                threshold: 0.0,
                lambda_hat: -0.1,
                sigma_lambda: 1.0 / f64::sqrt(n),
            };
            let p = polarization_probability(&q);
            assert!(p <= last);
            last = p;
        }
        assert!(last < 1e-12);
    }

    #[test]
    fn trajectory_is_deterministic() {
        let cfg = ScenarioConfig {
            mu: 140.0,
            sigma: 10.0,
            prior_mean: 120.0,
            prior_var: 25.0,
            n_obs: 200,
            seed: 7,
        };
        let m = M::Exponential { beta: 0.2 };
        let a = run_trajectory(&cfg, &m).unwrap();
        let b = run_trajectory(&cfg, &m).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 200);
        assert!(a.iter().enumerate().all(|(i, r)| r.step == i as u64 + 1));
        assert!(a.windows(2).all(|w| w[1].post_sd < w[0].post_sd));
    }

    #[test]
    fn trajectory_rejects_likelihood_only_models() {
        let cfg = ScenarioConfig {
            mu: 0.0,
            sigma: 1.0,
            prior_mean: 0.0,
            prior_var: 1.0,
            n_obs: 5,
            seed: 1,
        };
        assert!(run_trajectory(&cfg, &M::SweetSpot { beta: 1.0 }).is_err());
    }

    #[test]
    fn lower_observations_move_the_belief_more() {
        // Same distance from the belief, but the low side is perceived as
        // more precise under beta > 0.
        let m = M::Exponential { beta: 0.2 };
        let prior = BeliefState::new(140.0, 1.0);
        let up = update(prior, 150.0, perceived_variance(&m, 150.0, 140.0, 10.0).unwrap());
        let down = update(prior, 130.0, perceived_variance(&m, 130.0, 140.0, 10.0).unwrap());
        assert!((down.mean - 140.0).abs() > (up.mean - 140.0).abs());
    }

    #[test]
    fn checkpoints_are_log_spaced() {
        let c = log_checkpoints(1000, 10);
        assert_eq!(c.first(), Some(&1));
        assert_eq!(c.last(), Some(&1000));
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(log_checkpoints(1, 5), vec![1]);
    }
}
