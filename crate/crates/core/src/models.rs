//! Large-sample behaviour of the bias models.
//!
//! Observations are `X ~ N(0, sigma^2)`, so the limit of the posterior mean
//! is the bias itself. Every model is treated as a (possibly misspecified)
//! location likelihood `l(lambda)`. The limit `lambda` solves
//! `E[dl/dlambda] = 0`, the perceived variance is `-1 / E[d2l/dlambda2]`
//! and the true variance is the sandwich `E[(dl/dlambda)^2] / E[d2l]^2`.
//! For the exponential and beta-odds models, which are defined as weighted
//! means, the likelihood is the implied weighted least-squares criterion.
//!
//! Variance coefficients are reported as `v n / sigma^2`, except for the
//! beta-odds model, whose observations are proportions and whose
//! coefficients are `v n`.

use crate::domain::{AsymptoticSummary, BiasModel};
use crate::error::ModelError;
use crate::scalar::{lit, to_f64, Real};
use crate::special::{self, norm_cdf, norm_pdf, QuadratureSpec};

/// Expected score and curvature per observation, `n^-1 E(dl/dlambda)` and
/// `n^-1 E(d2l/dlambda2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreCurvature<T> {
    pub score: T,
    pub curvature: T,
}

/// Root of the expected score and the number of iterations used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSolution<T> {
    pub lambda: T,
    pub iterations: usize,
}

const NEWTON_MAX_ITER: usize = 50;
/// Newton iterates must stay within `+-NEWTON_BOX * scale`.
const NEWTON_BOX: f64 = 20.0;
const SCAN_POINTS: usize = 401;

fn unsupported(operation: &'static str, model: &BiasModel<impl Real>) -> ModelError {
    ModelError::Unsupported {
        operation,
        variant: model.variant_name(),
    }
}

/// True when the expected log-likelihood has no finite maximiser.
///
/// Only the relative-exponential model with `beta != 0` is in this class:
/// its expected log-likelihood is negative everywhere and tends to zero as
/// `lambda -> -sign(beta) * inf`.
pub fn is_divergent<T: Real>(model: &BiasModel<T>) -> bool {
    matches!(*model, BiasModel::RelativeExponential { beta } if beta != T::zero())
}

/// Natural length scale of the location parameter.
fn location_scale<T: Real>(model: &BiasModel<T>, sigma: T) -> T {
    match model {
        BiasModel::BetaOdds { .. } => T::one(),
        _ => sigma,
    }
}

fn check<T: Real>(model: &BiasModel<T>, sigma: T) -> Result<(), ModelError> {
    model.validate()?;
    if !(sigma > T::zero() && sigma.is_finite()) {
        return Err(crate::error::ConstraintViolation {
            field: "sigma",
            reason: "sigma > 0 required".into(),
        }
        .into());
    }
    Ok(())
}

/// `E[w] = B(a - g, b + g) / B(a, b)` for the odds weight `((1-p)/p)^g`.
fn beta_weight_moment<T: Real>(a: T, b: T, g: T) -> T {
    (special::ln_beta(a - g, b + g) - special::ln_beta(a, b)).exp()
}

/// Limit of the posterior mean for the beta-odds model, `(a - g) / (a + b)`.
pub fn beta_odds_mean<T: Real>(a: T, b: T, g: T) -> T {
    (a - g) / (a + b)
}

/// Asymptotic bias of the posterior mean.
///
/// For the beta-odds model this is the shift relative to the beta mean,
/// `-g / (a + b)`, and `sigma` is ignored.
pub fn asymptotic_bias<T: Real>(model: &BiasModel<T>, sigma: T) -> Result<T, ModelError> {
    check(model, sigma)?;
    let two: T = lit(2.0);
    Ok(match *model {
        // Adding zero turns -0 into +0 for the unbiased case.
        BiasModel::Exponential { beta } => -beta * sigma + T::zero(),
        BiasModel::BetaOdds { a, b, g } => -g / (a + b) + T::zero(),
        BiasModel::RelativeExponential { beta } => {
            if beta == T::zero() {
                T::zero()
            } else {
                return Err(ModelError::Divergent);
            }
        }
        BiasModel::SweetSpot { .. } => T::zero(),
        BiasModel::ConstantVariance { .. } => newton_solve(model, sigma)?.lambda,
        BiasModel::LogGamma { beta } => -beta * sigma / two + T::zero(),
    })
}

/// Limit of the posterior mean itself: the root of the expected score.
///
/// Equal to [`asymptotic_bias`] except for the beta-odds model, where the
/// true mean `a / (a + b)` is added back.
pub fn asymptotic_location<T: Real>(model: &BiasModel<T>, sigma: T) -> Result<T, ModelError> {
    match *model {
        BiasModel::BetaOdds { a, b, g } => {
            check(model, sigma)?;
            Ok(beta_odds_mean(a, b, g))
        }
        _ => asymptotic_bias(model, sigma),
    }
}

/// Perceived variance coefficient `v n / sigma^2`.
pub fn subjective_variance_coeff<T: Real>(
    model: &BiasModel<T>,
    sigma: T,
) -> Result<T, ModelError> {
    check(model, sigma)?;
    let one = T::one();
    let two: T = lit(2.0);
    Ok(match *model {
        BiasModel::Exponential { beta } => (-beta * beta / two).exp(),
        BiasModel::BetaOdds { a, b, g } => {
            // Printed form; see the crate README for the open question on
            // the direction of the beta-function ratio.
            let s = a + b;
            a * b / (s * s * (s + one)) * beta_weight_moment(a, b, g)
        }
        BiasModel::RelativeExponential { beta } => {
            if beta == T::zero() {
                one
            } else {
                return Err(ModelError::Divergent);
            }
        }
        BiasModel::SweetSpot { beta } => {
            let (i1, i2) = (special::i1(beta)?, special::i2(beta)?);
            one / ((one + beta) * (two * i2 - i1))
        }
        BiasModel::ConstantVariance { beta, gamma } => {
            let t = asymptotic_bias(model, sigma)? / sigma;
            one / (norm_cdf(t) / beta + norm_cdf(-t) / gamma)
        }
        BiasModel::LogGamma { .. } => one,
    })
}

/// True variance coefficient `var(lambda_hat) n / sigma^2`.
///
/// For the beta-odds model this is the sandwich variance of the weighted
/// mean, `E[w^2 (p - lambda)^2] / E[w]^2`, which is infinite unless
/// `a - 2g > 0` and `b + 2g > 0`.
pub fn true_variance_coeff<T: Real>(model: &BiasModel<T>, sigma: T) -> Result<T, ModelError> {
    check(model, sigma)?;
    let one = T::one();
    let two: T = lit(2.0);
    Ok(match *model {
        BiasModel::Exponential { beta } => {
            let b2 = beta * beta;
            (one + b2) * b2.exp()
        }
        BiasModel::BetaOdds { a, b, g } => {
            let (a2, b2) = (a - two * g, b + two * g);
            if a2 <= T::zero() || b2 <= T::zero() {
                return Ok(T::infinity());
            }
            let s = a + b;
            let lambda = beta_odds_mean(a, b, g);
            // Under the w^2-tilted law p ~ Beta(a - 2g, b + 2g).
            let m = a2 / s;
            let tilted_var = m * (one - m) / (s + one);
            let second = (special::ln_beta(a2, b2) - special::ln_beta(a, b)).exp()
                * (tilted_var + (m - lambda) * (m - lambda));
            let first = beta_weight_moment(a, b, g);
            second / (first * first)
        }
        BiasModel::RelativeExponential { beta } => {
            if beta == T::zero() {
                one
            } else {
                return Err(ModelError::Divergent);
            }
        }
        BiasModel::SweetSpot { beta } => {
            let (i1, i2) = (special::i1(beta)?, special::i2(beta)?);
            let d = two * i2 - i1;
            (i1 - i2) / (beta * d * d)
        }
        BiasModel::ConstantVariance { beta, gamma } => {
            let t = asymptotic_bias(model, sigma)? / sigma;
            let (lo, hi) = (norm_cdf(t), norm_cdf(-t));
            let den = lo / beta + hi / gamma;
            (lo / (beta * beta) + hi / (gamma * gamma) - t * t / (beta * gamma)) / (den * den)
        }
        BiasModel::LogGamma { beta } => {
            if beta == T::zero() {
                one
            } else {
                let b2 = beta * beta;
                b2.exp_m1() / b2
            }
        }
    })
}

/// Asymptotic influence `n * delta(lambda_hat)` of one extra observation at `x`.
///
/// The constant-variance influence is piecewise linear: the slope above
/// `lambda` is `1 / ((gamma/beta) Phi(lambda/sigma) + Phi(-lambda/sigma))`
/// and the slope below is `gamma / beta` times that.
pub fn influence<T: Real>(model: &BiasModel<T>, x: T, sigma: T) -> Result<T, ModelError> {
    check(model, sigma)?;
    let two: T = lit(2.0);
    match *model {
        BiasModel::Exponential { beta } => {
            let lambda = -beta * sigma;
            Ok((-beta * (x / sigma + beta / two)).exp() * (x - lambda))
        }
        BiasModel::LogGamma { beta } => {
            let lambda = -beta * sigma / two;
            if beta == T::zero() {
                Ok(x - lambda)
            } else {
                Ok(-(sigma / beta) * (-beta * (x - lambda) / sigma).exp_m1())
            }
        }
        BiasModel::ConstantVariance { beta, gamma } => {
            let lambda = asymptotic_bias(model, sigma)?;
            let t = lambda / sigma;
            let (lo, hi) = (norm_cdf(t), norm_cdf(-t));
            let den = if x > lambda {
                gamma / beta * lo + hi
            } else {
                lo + beta / gamma * hi
            };
            Ok((x - lambda) / den)
        }
        BiasModel::RelativeExponential { beta } => {
            if beta == T::zero() {
                Ok(x)
            } else {
                Err(ModelError::Divergent)
            }
        }
        BiasModel::BetaOdds { .. } | BiasModel::SweetSpot { .. } => {
            Err(unsupported("influence", model))
        }
    }
}

/// Per-observation score `dl/dlambda` and curvature `d2l/dlambda2` at `x`.
///
/// Proportional to the influence of `x` for every model; the taxonomy uses
/// it where no closed-form influence exists.
pub fn observation_score<T: Real>(
    model: &BiasModel<T>,
    x: T,
    lambda: T,
    sigma: T,
) -> ScoreCurvature<T> {
    let one = T::one();
    let two: T = lit(2.0);
    let s2 = sigma * sigma;
    let u = x - lambda;
    match *model {
        BiasModel::Exponential { beta } => {
            let w = (-beta * x / sigma).exp();
            ScoreCurvature {
                score: w * u / s2,
                curvature: -w / s2,
            }
        }
        BiasModel::BetaOdds { g, .. } => {
            let w = (g * ((one - x) / x).ln()).exp();
            ScoreCurvature {
                score: w * u,
                curvature: -w,
            }
        }
        BiasModel::RelativeExponential { beta } => {
            let b = beta / sigma;
            let e = (-b * u).exp();
            ScoreCurvature {
                score: (two * u - b * u * u) * e / (two * s2),
                curvature: -(two - lit::<T>(4.0) * b * u + b * b * u * u) * e / (two * s2),
            }
        }
        BiasModel::SweetSpot { beta } => {
            let z2 = u * u / s2;
            let d = one + beta * z2;
            ScoreCurvature {
                score: (one + beta) * u / (s2 * d),
                curvature: -(one + beta) * (one - beta * z2) / (s2 * d * d),
            }
        }
        BiasModel::ConstantVariance { beta, gamma } => {
            let w = if x <= lambda { beta } else { gamma };
            ScoreCurvature {
                score: u / (s2 * w),
                curvature: -one / (s2 * w),
            }
        }
        BiasModel::LogGamma { beta } => {
            if beta == T::zero() {
                ScoreCurvature {
                    score: u / s2,
                    curvature: -one / s2,
                }
            } else {
                let em1 = (-beta * u / sigma).exp_m1();
                ScoreCurvature {
                    score: -em1 / (beta * sigma),
                    curvature: -(one + em1) / s2,
                }
            }
        }
    }
}

/// Sums of [`observation_score`] over a sample.
pub fn sample_score<T: Real>(
    model: &BiasModel<T>,
    lambda: T,
    sample: &[T],
    sigma: T,
) -> ScoreCurvature<T> {
    sample.iter().fold(
        ScoreCurvature {
            score: T::zero(),
            curvature: T::zero(),
        },
        |acc, &x| {
            let sc = observation_score(model, x, lambda, sigma);
            ScoreCurvature {
                score: acc.score + sc.score,
                curvature: acc.curvature + sc.curvature,
            }
        },
    )
}

/// `e^{-y} - 1 + y`, accurate for small `y`.
fn exp_remainder<T: Real>(y: T) -> T {
    if y.abs() < lit(1e-3) {
        let y2 = y * y;
        y2 / lit(2.0) - y2 * y / lit(6.0) + y2 * y2 / lit(24.0) - y2 * y2 * y / lit(120.0)
    } else {
        (-y).exp_m1() + y
    }
}

/// Sample log-likelihood `l(lambda)`, up to an additive constant.
///
/// The log-gamma form carries the `1 / beta^2` normalisation so that it
/// tends to the Gaussian log-likelihood as `beta -> 0`.
pub fn log_likelihood<T: Real>(model: &BiasModel<T>, lambda: T, sample: &[T], sigma: T) -> T {
    let one = T::one();
    let two: T = lit(2.0);
    let s2 = sigma * sigma;
    let term = |x: T| -> T {
        let u = x - lambda;
        match *model {
            BiasModel::Exponential { beta } => -(-beta * x / sigma).exp() * u * u / (two * s2),
            BiasModel::BetaOdds { g, .. } => {
                -(g * ((one - x) / x).ln()).exp() * u * u / two
            }
            BiasModel::RelativeExponential { beta } => {
                -u * u * (-beta * u / sigma).exp() / (two * s2)
            }
            BiasModel::SweetSpot { beta } => -(one + beta) * (beta * u * u / s2).ln_1p() / (two * beta),
            BiasModel::ConstantVariance { beta, gamma } => {
                let w = if x <= lambda { beta } else { gamma };
                -u * u / (two * s2 * w)
            }
            BiasModel::LogGamma { beta } => {
                if beta == T::zero() {
                    -u * u / (two * s2)
                } else {
                    -exp_remainder(beta * u / sigma) / (beta * beta)
                }
            }
        }
    };
    sample.iter().fold(T::zero(), |acc, &x| acc + term(x))
}

fn sweet_spot_quadrature<T: Real>() -> QuadratureSpec {
    let floor = 64.0 * to_f64(T::epsilon());
    QuadratureSpec {
        abs_tol: floor.max(1e-13),
        rel_tol: floor.max(1e-12),
        ..QuadratureSpec::default()
    }
}

/// Expected score and curvature per observation under `X ~ N(0, sigma^2)`.
///
/// For the beta-odds model the expectation is over `p ~ Beta(a, b)` and
/// `sigma` is ignored. The sweet-spot model has no closed form away from
/// `lambda = 0` and is integrated numerically there.
pub fn expected_score<T: Real>(
    model: &BiasModel<T>,
    lambda: T,
    sigma: T,
) -> Result<ScoreCurvature<T>, ModelError> {
    check(model, sigma)?;
    let one = T::one();
    let two: T = lit(2.0);
    let s2 = sigma * sigma;
    let t = lambda / sigma;
    Ok(match *model {
        BiasModel::Exponential { beta } => {
            let m = (beta * beta / two).exp();
            ScoreCurvature {
                score: m * (-beta * sigma - lambda) / s2,
                curvature: -m / s2,
            }
        }
        BiasModel::BetaOdds { a, b, g } => {
            let norm = special::ln_beta(a, b);
            let w = (special::ln_beta(a - g, b + g) - norm).exp();
            let wp = (special::ln_beta(a + one - g, b + g) - norm).exp();
            ScoreCurvature {
                score: wp - lambda * w,
                curvature: -w,
            }
        }
        BiasModel::RelativeExponential { beta } => {
            // u = X - lambda ~ N(-lambda, sigma^2); tilting by e^{-bu}
            // shifts its mean to a = -lambda - b sigma^2.
            let b = beta / sigma;
            let m = -lambda;
            let tilt = (-b * m + b * b * s2 / two).exp();
            let a = m - b * s2;
            let second = a * a + s2;
            ScoreCurvature {
                score: tilt * (two * a - b * second) / (two * s2),
                curvature: -tilt * (two - lit::<T>(4.0) * b * a + b * b * second) / (two * s2),
            }
        }
        BiasModel::SweetSpot { beta } => {
            if lambda == T::zero() {
                let (i1, i2) = (special::i1(beta)?, special::i2(beta)?);
                ScoreCurvature {
                    score: T::zero(),
                    curvature: -(one + beta) * (two * i2 - i1) / s2,
                }
            } else {
                let spec = sweet_spot_quadrature::<T>();
                let h: T = lit(spec.half_width);
                let split = t.max(-h).min(h);
                let integral = |f: &dyn Fn(T) -> T| -> Result<T, ModelError> {
                    let g = |z: T| norm_pdf(z) * f(z - t);
                    Ok(special::integrate(g, -h, split, &spec)?
                        + special::integrate(g, split, h, &spec)?)
                };
                let s = integral(&|u: T| u / (one + beta * u * u))?;
                let c = integral(&|u: T| {
                    let d = one + beta * u * u;
                    (one - beta * u * u) / (d * d)
                })?;
                ScoreCurvature {
                    score: (one + beta) * s / sigma,
                    curvature: -(one + beta) * c / s2,
                }
            }
        }
        BiasModel::ConstantVariance { beta, gamma } => {
            let (lo, hi) = (norm_cdf(t), norm_cdf(-t));
            ScoreCurvature {
                score: (one / gamma - one / beta) * norm_pdf(t) / sigma
                    - (lambda / s2) * (hi / gamma + lo / beta),
                curvature: -(lo / beta + hi / gamma) / s2,
            }
        }
        BiasModel::LogGamma { beta } => {
            if beta == T::zero() {
                ScoreCurvature {
                    score: -lambda / s2,
                    curvature: -one / s2,
                }
            } else {
                let y = beta * t + beta * beta / two;
                ScoreCurvature {
                    score: -y.exp_m1() / (beta * sigma),
                    curvature: -y.exp() / s2,
                }
            }
        }
    })
}

/// Expected log-likelihood per observation of the relative-exponential
/// model, `-E[(X - lambda)^2 exp(-beta (X - lambda) / sigma)] / (2 sigma^2)`.
///
/// Negative everywhere, with supremum 0 approached as
/// `lambda -> -sign(beta) * inf`.
pub fn relative_exponential_expected_loglik<T: Real>(beta: T, lambda: T, sigma: T) -> T {
    let two: T = lit(2.0);
    let s2 = sigma * sigma;
    let b = beta / sigma;
    let m = -lambda;
    let a = m - b * s2;
    -(-b * m + b * b * s2 / two).exp() * (a * a + s2) / (two * s2)
}

/// Newton iteration on the expected score, starting from `lambda = 0`
/// (the beta mean for the beta-odds model).
///
/// If an iterate leaves `[-20, 20]` scale units or the curvature is not
/// negative, falls back to bisection on a bracket found by scanning that
/// range. Reports [`ModelError::Diverging`] when the expected
/// log-likelihood has no finite maximiser.
pub fn newton_solve<T: Real>(
    model: &BiasModel<T>,
    sigma: T,
) -> Result<NewtonSolution<T>, ModelError> {
    check(model, sigma)?;
    if is_divergent(model) {
        return Err(ModelError::Diverging);
    }
    let scale = location_scale(model, sigma);
    let (centre, bound) = match *model {
        BiasModel::BetaOdds { a, b, .. } => (a / (a + b), T::one()),
        _ => (T::zero(), lit::<T>(NEWTON_BOX) * scale),
    };
    let tol = lit::<T>(4.0) * T::epsilon() * scale;
    let mut lambda = centre;
    for iteration in 1..=NEWTON_MAX_ITER {
        let sc = expected_score(model, lambda, sigma)?;
        if sc.score == T::zero() {
            return Ok(NewtonSolution {
                lambda,
                iterations: iteration - 1,
            });
        }
        if !(sc.curvature < T::zero()) {
            return bisection_fallback(model, sigma, centre, bound);
        }
        let step = sc.score / sc.curvature;
        let next = lambda - step;
        if !next.is_finite() || (next - centre).abs() > bound {
            return bisection_fallback(model, sigma, centre, bound);
        }
        lambda = next;
        if step.abs() <= tol.max(T::epsilon() * lambda.abs()) {
            return Ok(NewtonSolution {
                lambda,
                iterations: iteration,
            });
        }
    }
    Err(ModelError::NoConvergence {
        iterations: NEWTON_MAX_ITER,
        last: to_f64(lambda),
    })
}

/// Locations in `[lo, hi]` where the expected score changes sign from
/// positive to negative, i.e. local maxima of the expected log-likelihood.
/// Found on a uniform grid of `points` and refined by bisection.
pub fn expected_score_maxima<T: Real>(
    model: &BiasModel<T>,
    sigma: T,
    lo: T,
    hi: T,
    points: usize,
) -> Result<Vec<T>, ModelError> {
    let points = points.max(2);
    let step = (hi - lo) / lit((points - 1) as f64);
    let mut out = Vec::new();
    let mut prev_x = lo;
    let mut prev = expected_score(model, lo, sigma)?.score;
    for i in 1..points {
        let x = lo + step * lit(i as f64);
        let s = expected_score(model, x, sigma)?.score;
        if prev > T::zero() && s <= T::zero() {
            out.push(bisect_score(model, sigma, prev_x, x)?.0);
        }
        prev_x = x;
        prev = s;
    }
    Ok(out)
}

/// Bisection for a `+ -> -` sign change of the expected score.
fn bisect_score<T: Real>(
    model: &BiasModel<T>,
    sigma: T,
    mut lo: T,
    mut hi: T,
) -> Result<(T, usize), ModelError> {
    let two: T = lit(2.0);
    let mut iterations = 0;
    while iterations < 200 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let s = expected_score(model, mid, sigma)?.score;
        if s == T::zero() {
            return Ok((mid, iterations));
        }
        if s > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(((lo + hi) / two, iterations))
}

fn bisection_fallback<T: Real>(
    model: &BiasModel<T>,
    sigma: T,
    centre: T,
    bound: T,
) -> Result<NewtonSolution<T>, ModelError> {
    let lo = centre - bound;
    let hi = centre + bound;
    let step = (hi - lo) / lit((SCAN_POINTS - 1) as f64);
    let mut prev_x = lo;
    let mut prev = expected_score(model, lo, sigma)?.score;
    for i in 1..SCAN_POINTS {
        let x = lo + step * lit(i as f64);
        let s = expected_score(model, x, sigma)?.score;
        if prev > T::zero() && s <= T::zero() {
            let (lambda, iterations) = bisect_score(model, sigma, prev_x, x)?;
            return Ok(NewtonSolution {
                lambda,
                iterations: NEWTON_MAX_ITER.min(iterations),
            });
        }
        prev_x = x;
        prev = s;
    }
    Err(ModelError::Diverging)
}

/// All three asymptotic quantities, with divergence flagged instead of
/// returned as an error.
pub fn summary<T: Real>(model: &BiasModel<T>, sigma: T) -> Result<AsymptoticSummary<T>, ModelError> {
    check(model, sigma)?;
    if is_divergent(model) {
        return Ok(AsymptoticSummary::divergent());
    }
    Ok(AsymptoticSummary {
        lambda: asymptotic_bias(model, sigma)?,
        subj_var_coeff: subjective_variance_coeff(model, sigma)?,
        true_var_coeff: true_variance_coeff(model, sigma)?,
        diverges: false,
    })
}

/// Evidence for or against a finite asymptotic bias.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport<T> {
    /// Local maxima of the expected log-likelihood found in the scan range.
    pub local_maxima: Vec<T>,
    /// Expected log-likelihood at the best local maximum, when it is known
    /// in closed form.
    pub best_interior_value: Option<T>,
    /// Supremum of the expected log-likelihood approached at infinity, when
    /// it exceeds every interior value.
    pub supremum_at_infinity: Option<T>,
    pub diverges: bool,
}

/// Scans the expected score over `lambda in [-20 sigma, 20 sigma]` and
/// compares any interior maxima against the limit at infinity.
pub fn divergence_report<T: Real>(
    model: &BiasModel<T>,
    sigma: T,
) -> Result<DivergenceReport<T>, ModelError> {
    check(model, sigma)?;
    let bound = lit::<T>(NEWTON_BOX) * sigma;
    let (lo, hi) = match *model {
        BiasModel::BetaOdds { .. } => (T::zero(), T::one()),
        _ => (-bound, bound),
    };
    let local_maxima = expected_score_maxima(model, sigma, lo, hi, SCAN_POINTS)?;
    let (best_interior_value, supremum_at_infinity) = match *model {
        BiasModel::RelativeExponential { beta } if beta != T::zero() => {
            let best = local_maxima
                .iter()
                .map(|&l| relative_exponential_expected_loglik(beta, l, sigma))
                .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.max(v))));
            (best, Some(T::zero()))
        }
        _ => (None, None),
    };
    let diverges = local_maxima.is_empty()
        || match (best_interior_value, supremum_at_infinity) {
            (Some(best), Some(sup)) => sup > best,
            _ => false,
        };
    Ok(DivergenceReport {
        local_maxima,
        best_interior_value,
        supremum_at_infinity,
        diverges,
    })
}
