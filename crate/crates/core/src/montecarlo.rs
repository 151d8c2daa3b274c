//! Monte Carlo checks of the asymptotic formulas.
//!
//! Replication `i` of a plan with master seed `s` draws its sample from
//! [`Stream::new(s, i)`](crate::rng::Stream). Samples are `N(0, sigma^2)`,
//! or `Beta(a, b)` for the beta-odds model. Per-replication estimates are
//! computed in parallel, collected in replication order and reduced
//! sequentially, so results do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{BeliefState, BiasModel};
use crate::error::{McError, ModelError};
use crate::models::{self, ScoreCurvature};
use crate::rng::Stream;
use crate::special::norm_cdf;

/// Which point estimator a plan applies to each sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Weighted mean where the model has one, otherwise the MLE.
    #[default]
    Auto,
    WeightedMean,
    Mle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPlan {
    pub replications: u64,
    pub n: u64,
    pub seed: u64,
    pub model: BiasModel<f64>,
    pub sigma: f64,
    #[serde(default)]
    pub estimator: Estimator,
    /// Keep the per-replication estimates in the result.
    #[serde(default)]
    pub keep_values: bool,
}

impl McPlan {
    pub fn new(model: BiasModel<f64>, sigma: f64, n: u64, replications: u64, seed: u64) -> Self {
        McPlan {
            replications,
            n,
            seed,
            model,
            sigma,
            estimator: Estimator::Auto,
            keep_values: false,
        }
    }

    pub fn validate(&self) -> Result<(), McError> {
        self.model.validate().map_err(ModelError::from)?;
        if self.replications < 2 {
            return Err(McError::InvalidPlan("at least 2 replications required".into()));
        }
        if self.n < 1 {
            return Err(McError::InvalidPlan("sample size n >= 1 required".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(McError::InvalidPlan("sigma > 0 required".into()));
        }
        Ok(())
    }
}

/// Summary of the replicated estimates.
///
/// `se` is the standard error of `mean`; `var_se` is the standard error of
/// `var`, from the fourth central moment of the replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub mean: f64,
    pub var: f64,
    pub se: f64,
    pub var_se: f64,
    pub skewness: f64,
    #[serde(rename = "R")]
    pub replications: u64,
    pub n: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub values: Option<Vec<f64>>,
}

impl McResult {
    /// Moments of `values` (at least two of them), summed in order.
    pub fn from_values(values: Vec<f64>, n: u64, seed: u64, keep: bool) -> Self {
        let r = values.len() as f64;
        let mean = values.iter().sum::<f64>() / r;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &v in &values {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        let var = m2 / (r - 1.0);
        let (c2, c3, c4) = (m2 / r, m3 / r, m4 / r);
        let skewness = if c2 > 0.0 { c3 / c2.powf(1.5) } else { 0.0 };
        let var_of_var = ((c4 - (r - 3.0) / (r - 1.0) * var * var) / r).max(0.0);
        McResult {
            mean,
            var,
            se: (var / r).sqrt(),
            var_se: var_of_var.sqrt(),
            skewness,
            replications: values.len() as u64,
            n,
            seed,
            values: keep.then_some(values),
        }
    }

    /// `n * var`, the Monte Carlo counterpart of `true_var_coeff * sigma^2`.
    pub fn scaled_var(&self) -> f64 {
        self.n as f64 * self.var
    }

    /// Standard error of [`McResult::scaled_var`].
    pub fn scaled_var_se(&self) -> f64 {
        self.n as f64 * self.var_se
    }
}

/// Draws one sample of size `n` from the model's true distribution.
pub fn draw_sample(model: &BiasModel<f64>, sigma: f64, n: usize, stream: &mut Stream) -> Vec<f64> {
    match *model {
        BiasModel::BetaOdds { a, b, .. } => (0..n).map(|_| stream.beta(a, b)).collect(),
        _ => (0..n).map(|_| stream.normal(0.0, sigma)).collect(),
    }
}

fn check_sample(sample: &[f64], sigma: f64) -> Result<(), McError> {
    if sample.is_empty() {
        return Err(McError::Domain("empty sample".into()));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(McError::Domain("sigma > 0 required".into()));
    }
    if let Some(x) = sample.iter().find(|x| !x.is_finite()) {
        return Err(McError::Domain(format!("non-finite sample value {x}")));
    }
    Ok(())
}

/// Weighted mean with the model's observation weights: `exp(-beta x / sigma)`
/// for the exponential model, `((1 - p) / p)^g` for the beta-odds model.
pub fn weighted_mean_estimate(
    sample: &[f64],
    model: &BiasModel<f64>,
    sigma: f64,
) -> Result<f64, McError> {
    check_sample(sample, sigma)?;
    model.validate().map_err(ModelError::from)?;
    let log_w: Vec<f64> = match *model {
        BiasModel::Exponential { beta } => sample.iter().map(|x| -beta * x / sigma).collect(),
        BiasModel::BetaOdds { g, .. } => {
            if let Some(p) = sample.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
                return Err(McError::Domain(format!(
                    "beta-odds sample value {p} outside (0, 1)"
                )));
            }
            sample.iter().map(|p| g * ((1.0 - p) / p).ln()).collect()
        }
        _ => {
            return Err(ModelError::Unsupported {
                operation: "weighted_mean_estimate",
                variant: model.variant_name(),
            }
            .into())
        }
    };
    // Shift the exponents so the largest weight is 1.
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for (&x, &lw) in sample.iter().zip(&log_w) {
        let w = (lw - top).exp();
        num += w * x;
        den += w;
    }
    Ok(num / den)
}

fn search_range(sample: &[f64], sigma: f64) -> (f64, f64) {
    let (lo, hi) = sample
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    (lo - 10.0 * sigma, hi + 10.0 * sigma)
}

/// Safeguarded Newton for a root of a score that is positive at `lo` and
/// non-positive at `hi`. Converges to the last representable bracket.
fn bracketed_root(
    score: impl Fn(f64) -> ScoreCurvature<f64>,
    mut lo: f64,
    mut hi: f64,
    start: f64,
) -> f64 {
    let mut x = start.clamp(lo, hi);
    for _ in 0..300 {
        let sc = score(x);
        if sc.score == 0.0 {
            return x;
        }
        if sc.score > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let newton = x - sc.score / sc.curvature;
        let next = if sc.curvature < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            mid
        };
        if next == x {
            return x;
        }
        x = next;
    }
    x
}

/// Maximum-likelihood estimate of `lambda` over
/// `[min(sample) - 10 sigma, max(sample) + 10 sigma]`.
///
/// Models with a monotone sample score use safeguarded Newton from the
/// sample mean. The sweet-spot model starts at the median and widens a
/// bracket until the score changes sign. The relative-exponential model is
/// grid-scanned and reports [`McError::NoInteriorMaximum`] when the best
/// grid point is an end of the range.
pub fn mle_estimate(sample: &[f64], model: &BiasModel<f64>, sigma: f64) -> Result<f64, McError> {
    check_sample(sample, sigma)?;
    model.validate().map_err(ModelError::from)?;
    if let BiasModel::BetaOdds { .. } = model {
        if sample.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(McError::Domain("beta-odds sample values must lie in (0, 1)".into()));
        }
    }
    let (lo, hi) = search_range(sample, sigma);
    let score = |l: f64| models::sample_score(model, l, sample, sigma);
    match *model {
        BiasModel::RelativeExponential { .. } => grid_mle(sample, model, sigma, lo, hi),
        BiasModel::SweetSpot { .. } => {
            let mut sorted = sample.to_vec();
            let mid = sorted.len() / 2;
            let (_, &mut median, _) = sorted.select_nth_unstable_by(mid, f64::total_cmp);
            let mut step = sigma / (sample.len() as f64).sqrt();
            let s0 = score(median).score;
            if s0 == 0.0 {
                return Ok(median);
            }
            let dir = s0.signum();
            let mut a = median;
            loop {
                let b = (a + dir * step).clamp(lo, hi);
                let sb = score(b).score;
                if sb.signum() != dir || sb == 0.0 {
                    let (l, h) = if dir > 0.0 { (a, b) } else { (b, a) };
                    return Ok(bracketed_root(score, l, h, 0.5 * (l + h)));
                }
                if b == lo || b == hi {
                    return Err(McError::NoInteriorMaximum { lo, hi });
                }
                a = b;
                step *= 2.0;
            }
        }
        _ => {
            if !(score(lo).score > 0.0 && score(hi).score <= 0.0) {
                return Err(McError::NoInteriorMaximum { lo, hi });
            }
            let start = sample.iter().sum::<f64>() / sample.len() as f64;
            Ok(bracketed_root(score, lo, hi, start))
        }
    }
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 4.0 * f64::EPSILON * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Best of `points` grid values of `f` on `[lo, hi]`, refined by
/// golden-section search between its neighbours. `None` when the best grid
/// point is an end of the range.
fn grid_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> Option<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    let at = |i: usize| if i + 1 == points { hi } else { lo + step * i as f64 };
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..points {
        let v = f(at(i));
        if v > best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    if i == 0 || i + 1 == points {
        return None;
    }
    Some(golden_max(f, at(i - 1), at(i + 1)))
}

const MLE_GRID: usize = 401;
const MAP_GRID: usize = 2001;

fn grid_mle(
    sample: &[f64],
    model: &BiasModel<f64>,
    sigma: f64,
    lo: f64,
    hi: f64,
) -> Result<f64, McError> {
    grid_max(|l| models::log_likelihood(model, l, sample, sigma), lo, hi, MLE_GRID)
        .ok_or(McError::NoInteriorMaximum { lo, hi })
}

/// Posterior mode of `lambda` under a normal prior:
/// the maximiser of `l(lambda) - (lambda - m0)^2 / (2 v0)`.
///
/// Every model's log-likelihood is non-positive, so the mode lies within
/// `m0 +- sqrt(2 v0 |l(m0)|)`; that range is grid-scanned and the best
/// point refined. Unlike the MLE this is finite for the
/// relative-exponential model, and tracks how far its estimate drifts at a
/// given sample size.
pub fn map_estimate(
    sample: &[f64],
    model: &BiasModel<f64>,
    sigma: f64,
    prior: BeliefState<f64>,
) -> Result<f64, McError> {
    check_sample(sample, sigma)?;
    model.validate().map_err(ModelError::from)?;
    if !(prior.var > 0.0 && prior.var.is_finite() && prior.mean.is_finite()) {
        return Err(McError::Domain("prior needs a finite mean and variance > 0".into()));
    }
    let objective = |l: f64| {
        let d = l - prior.mean;
        models::log_likelihood(model, l, sample, sigma) - d * d / (2.0 * prior.var)
    };
    let l0 = models::log_likelihood(model, prior.mean, sample, sigma);
    let half = (2.0 * prior.var * l0.abs()).sqrt().max(prior.var.sqrt() * 1e-6);
    let (lo, hi) = (prior.mean - half, prior.mean + half);
    // The bound is attained only when l vanishes, so an end point cannot win.
    Ok(grid_max(objective, lo, hi, MAP_GRID).unwrap_or(prior.mean))
}

/// The plan's estimator applied to one sample.
pub fn estimate(
    sample: &[f64],
    model: &BiasModel<f64>,
    sigma: f64,
    estimator: Estimator,
) -> Result<f64, McError> {
    let weighted = matches!(
        model,
        BiasModel::Exponential { .. } | BiasModel::BetaOdds { .. }
    );
    match estimator {
        Estimator::WeightedMean => weighted_mean_estimate(sample, model, sigma),
        Estimator::Auto if weighted => weighted_mean_estimate(sample, model, sigma),
        _ => mle_estimate(sample, model, sigma),
    }
}

/// Runs the replications of `plan` on the current rayon pool.
pub fn run_mc(plan: &McPlan) -> Result<McResult, McError> {
    plan.validate()?;
    let n = usize::try_from(plan.n).map_err(|_| McError::InvalidPlan("n too large".into()))?;
    let values = (0..plan.replications)
        .into_par_iter()
        .map(|i| {
            let mut stream = Stream::new(plan.seed, i);
            let sample = draw_sample(&plan.model, plan.sigma, n, &mut stream);
            estimate(&sample, &plan.model, plan.sigma, plan.estimator)
        })
        .collect::<Result<Vec<f64>, McError>>()?;
    Ok(McResult::from_values(values, plan.n, plan.seed, plan.keep_values))
}

/// Mean and standard error of replicated influence values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfluenceEstimate {
    pub x: f64,
    pub mean: f64,
    pub se: f64,
    pub replications: u64,
}

/// `n (lambda_hat(sample + x) - lambda_hat(sample))` averaged over
/// `replications` samples of size `n`, one per stream of `seed`. Each entry
/// of `xs` is added to the same samples.
pub fn influence_empirical(
    model: &BiasModel<f64>,
    xs: &[f64],
    sigma: f64,
    n: u64,
    replications: u64,
    seed: u64,
) -> Result<Vec<InfluenceEstimate>, McError> {
    McPlan::new(*model, sigma, n, replications, seed).validate()?;
    let size = usize::try_from(n).map_err(|_| McError::InvalidPlan("n too large".into()))?;
    let per_rep = (0..replications)
        .into_par_iter()
        .map(|i| {
            let mut stream = Stream::new(seed, i);
            let mut sample = draw_sample(model, sigma, size, &mut stream);
            let base = estimate(&sample, model, sigma, Estimator::Auto)?;
            sample.push(0.0);
            xs.iter()
                .map(|&x| {
                    *sample.last_mut().expect("sample is non-empty") = x;
                    let with = estimate(&sample, model, sigma, Estimator::Auto)?;
                    Ok(n as f64 * (with - base))
                })
                .collect::<Result<Vec<f64>, McError>>()
        })
        .collect::<Result<Vec<Vec<f64>>, McError>>()?;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let r = McResult::from_values(per_rep.iter().map(|v| v[k]).collect(), n, seed, false);
            InfluenceEstimate {
                x,
                mean: r.mean,
                se: r.se,
                replications,
            }
        })
        .collect())
}

/// Outcome of [`normality_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityCheck {
    /// `sqrt(n) * D`, with `D` the largest gap between the empirical CDF and
    /// the normal CDF with the sample's mean and sd.
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// Lilliefors critical value of `sqrt(n) D` at the 1% level (large n).
pub const LILLIEFORS_CRITICAL_1PCT: f64 = 1.031;

/// Kolmogorov-Smirnov distance to a fitted normal, judged against the
/// Lilliefors 1% critical value. Needs at least 100 finite values.
pub fn normality_check(values: &[f64]) -> Result<NormalityCheck, McError> {
    if values.len() < 100 {
        return Err(McError::Domain(format!(
            "normality check needs at least 100 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(McError::Domain("non-finite value".into()));
    }
    let r = McResult::from_values(values.to_vec(), 0, 0, false);
    let sd = r.var.sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = if sd > 0.0 {
        sorted
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = norm_cdf((v - r.mean) / sd);
                let i = i as f64;
                (f - i / n).max((i + 1.0) / n - f)
            })
            .fold(0.0, f64::max)
    } else {
        1.0
    };
    let statistic = n.sqrt() * d;
    Ok(NormalityCheck {
        statistic,
        critical: LILLIEFORS_CRITICAL_1PCT,
        pass: statistic <= LILLIEFORS_CRITICAL_1PCT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = BiasModel<f64>;

    #[test]
    fn weighted_mean_examples() {
        let s = [-1.0, 1.0];
        let m = M::Exponential { beta: 1.0 };
        let w = weighted_mean_estimate(&s, &m, 1.0).unwrap();
        assert!((w + 1f64.tanh()).abs() < 1e-15);

        let s = [0.3, 1.7, 2.5, -4.0];
        let flat = weighted_mean_estimate(&s, &M::Exponential { beta: 0.0 }, 2.0).unwrap();
        assert!((flat - 0.125).abs() < 1e-15);

        let p = [0.2, 0.5, 0.9];
        let m = M::BetaOdds { a: 2.0, b: 2.0, g: 0.0 };
        let w = weighted_mean_estimate(&p, &m, 1.0).unwrap();
        assert!((w - 1.6 / 3.0).abs() < 1e-15);
        assert!(matches!(
            weighted_mean_estimate(&[0.5, 1.0], &m, 1.0),
            Err(McError::Domain(_))
        ));
    }

    #[test]
    fn weighted_mean_survives_extreme_weights() {
        let m = M::Exponential { beta: 1.0 };
        let w = weighted_mean_estimate(&[-800.0, 0.0, 800.0], &m, 1.0).unwrap();
        assert_eq!(w, -800.0);
    }

    #[test]
    fn mle_matches_weighted_mean_for_exponential() {
        let mut st = Stream::new(11, 0);
        let s: Vec<f64> = (0..500).map(|_| st.normal(0.0, 2.0)).collect();
        let m = M::Exponential { beta: 0.7 };
        let a = weighted_mean_estimate(&s, &m, 2.0).unwrap();
        let b = mle_estimate(&s, &m, 2.0).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} {b}");
    }

    #[test]
    fn sweet_spot_symmetric_pair() {
        let m = M::SweetSpot { beta: 1.0 };
        let v = mle_estimate(&[-0.6, 0.6], &m, 1.0).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn log_gamma_mle_has_closed_form() {
        let mut st = Stream::new(5, 0);
        let s: Vec<f64> = (0..1000).map(|_| st.normal(0.0, 1.5)).collect();
        let beta = 0.8;
        let m = M::LogGamma { beta };
        let sum: f64 = s.iter().map(|x| (-beta * x / 1.5).exp()).sum();
        let exact = -(1.5 / beta) * (sum / 1000.0).ln();
        let v = mle_estimate(&s, &m, 1.5).unwrap();
        assert!((v - exact).abs() < 1e-12, "{v} {exact}");
    }

    #[test]
    fn constant_variance_mle_zeroes_the_score() {
        let mut st = Stream::new(9, 0);
        let s: Vec<f64> = (0..999).map(|_| st.normal(0.0, 1.0)).collect();
        let m = M::ConstantVariance {
            beta: 1.0,
            gamma: 3.0,
        };
        let v = mle_estimate(&s, &m, 1.0).unwrap();
        let up = models::sample_score(&m, v + 1e-9, &s, 1.0).score;
        let down = models::sample_score(&m, v - 1e-9, &s, 1.0).score;
        assert!(down > 0.0 && up < 0.0);
    }

    #[test]
    fn relative_exponential_mle_runs_to_the_boundary() {
        let mut st = Stream::new(3, 0);
        let s: Vec<f64> = (0..2000).map(|_| st.normal(0.0, 1.0)).collect();
        let m = M::RelativeExponential { beta: 2.0 };
        assert!(matches!(
            mle_estimate(&s, &m, 1.0),
            Err(McError::NoInteriorMaximum { .. })
        ));
    }

    #[test]
    fn map_shrinks_to_the_prior_with_one_observation_scale() {
        let m = M::Exponential { beta: 0.0 };
        let v = map_estimate(&[2.0], &m, 1.0, BeliefState::new(0.0, 1.0)).unwrap();
        // A maximum is only located to about sqrt(eps).
        assert!((v - 1.0).abs() < 1e-7);
    }

    #[test]
    fn result_moments() {
        let r = McResult::from_values(vec![1.0, 2.0, 3.0, 4.0], 10, 1, true);
        assert_eq!(r.mean, 2.5);
        assert!((r.var - 5.0 / 3.0).abs() < 1e-15);
        assert!((r.se - (r.var / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(r.skewness, 0.0);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["mean", "var", "se", "skewness", "R", "n", "seed"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn plan_validation() {
        let m = M::Exponential { beta: 0.5 };
        assert!(McPlan::new(m, 1.0, 10, 1, 0).validate().is_err());
        assert!(McPlan::new(m, 1.0, 0, 5, 0).validate().is_err());
        assert!(McPlan::new(m, -1.0, 10, 5, 0).validate().is_err());
        assert!(McPlan::new(m, 1.0, 10, 5, 0).validate().is_ok());
    }

    #[test]
    fn small_run_is_reproducible() {
        let plan = McPlan::new(M::Exponential { beta: 0.5 }, 1.0, 200, 16, 42);
        let a = run_mc(&plan).unwrap();
        let b = run_mc(&plan).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn normality_needs_enough_values() {
        assert!(normality_check(&[0.0; 99]).is_err());
        let mut st = Stream::new(1, 0);
        let z: Vec<f64> = (0..2000).map(|_| st.standard_normal()).collect();
        assert!(normality_check(&z).unwrap().pass);
        let e: Vec<f64> = (0..2000).map(|_| st.exponential()).collect();
        assert!(!normality_check(&e).unwrap().pass);
    }
}
