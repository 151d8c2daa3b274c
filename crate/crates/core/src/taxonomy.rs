//! Four-property classification of the bias models and their ordering by
//! severity.

use serde::{Deserialize, Serialize};

use crate::domain::BiasModel;
use crate::error::ModelError;
use crate::models;

/// Grid used by the numerical influence scan.
pub const SCAN_POINTS: usize = 4001;
/// Half-width of the scan, in units of sigma.
pub const SCAN_HALF_WIDTH: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub model: BiasModel<f64>,
    pub has_asymptotic_limit: bool,
    pub prizes_confirming_side: bool,
    pub has_subjective_distribution: bool,
    pub influence_monotone: bool,
    pub severity_rank: u32,
}

/// Rank in increasing severity: constant variance and sweet spot (0),
/// log-gamma (1), exponential and beta-odds (2), relative exponential (3).
pub fn severity_rank(model: &BiasModel<f64>) -> u32 {
    match model {
        BiasModel::ConstantVariance { .. } | BiasModel::SweetSpot { .. } => 0,
        BiasModel::LogGamma { .. } => 1,
        BiasModel::Exponential { .. } | BiasModel::BetaOdds { .. } => 2,
        BiasModel::RelativeExponential { .. } => 3,
    }
}

/// Whether the model is a proper subjective distribution for the observations.
pub fn has_subjective_distribution(model: &BiasModel<f64>) -> bool {
    matches!(
        model,
        BiasModel::SweetSpot { .. } | BiasModel::LogGamma { .. } | BiasModel::ConstantVariance { .. }
    )
}

/// Centre used for the per-observation score: the asymptotic location, or
/// 0 for a model without one.
fn centre(model: &BiasModel<f64>, sigma: f64) -> f64 {
    if models::is_divergent(model) {
        0.0
    } else {
        models::asymptotic_location(model, sigma).unwrap_or(0.0)
    }
}

/// Grid of observation values over which the properties are scanned:
/// `(0, 1)` for the beta-odds model, `centre +- 10 sigma` otherwise.
fn scan_grid(model: &BiasModel<f64>, sigma: f64, lambda: f64) -> Vec<f64> {
    let (lo, hi) = match model {
        BiasModel::BetaOdds { .. } => (0.0, 1.0),
        _ => (lambda - SCAN_HALF_WIDTH * sigma, lambda + SCAN_HALF_WIDTH * sigma),
    };
    let step = (hi - lo) / (SCAN_POINTS + 1) as f64;
    (1..=SCAN_POINTS).map(|i| lo + step * i as f64).collect()
}

/// Central-difference check that the score, and hence the influence, is
/// non-decreasing in the observation over the scan grid.
pub fn influence_monotone_scan(model: &BiasModel<f64>, sigma: f64) -> Result<bool, ModelError> {
    model.validate()?;
    let lambda = centre(model, sigma);
    let grid = scan_grid(model, sigma, lambda);
    let psi: Vec<f64> = grid
        .iter()
        .map(|&x| models::observation_score(model, x, lambda, sigma).score)
        .collect();
    let scale = psi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;
    Ok(psi.windows(3).all(|w| w[2] - w[0] >= -tol))
}

/// Analytic monotonicity where the influence function is known in closed
/// form, otherwise [`influence_monotone_scan`].
pub fn influence_monotone(model: &BiasModel<f64>, sigma: f64) -> Result<bool, ModelError> {
    match *model {
        // Turns at lambda + sigma / beta.
        BiasModel::Exponential { beta } => Ok(beta == 0.0),
        BiasModel::LogGamma { .. } | BiasModel::ConstantVariance { .. } => Ok(true),
        _ => influence_monotone_scan(model, sigma),
    }
}

/// Whether observations on the side the bias points to are perceived as
/// more precise than they are.
///
/// The effective perceived variance of `x` is `(x - lambda) / score(x)`,
/// measured against `sigma^2` (against 1 for the beta-odds model, whose
/// unweighted score is `p - lambda`). Models with no preferred side, such
/// as the symmetric sweet-spot model, do not qualify.
pub fn prizes_confirming_side(model: &BiasModel<f64>, sigma: f64) -> Result<bool, ModelError> {
    model.validate()?;
    let side = match *model {
        BiasModel::SweetSpot { .. } => return Ok(false),
        BiasModel::BetaOdds { g, .. } => -g.signum(),
        BiasModel::Exponential { beta }
        | BiasModel::RelativeExponential { beta }
        | BiasModel::LogGamma { beta } => -beta.signum(),
        // The lower side is divided by beta, the upper by gamma.
        BiasModel::ConstantVariance { beta, gamma } => (beta - gamma).signum(),
    };
    if side == 0.0 {
        return Ok(false);
    }
    let lambda = centre(model, sigma);
    let reference = match model {
        BiasModel::BetaOdds { .. } => 1.0,
        _ => sigma * sigma,
    };
    Ok(scan_grid(model, sigma, lambda)
        .into_iter()
        .filter(|&x| (x - lambda) * side > 0.0)
        .any(|x| {
            let score = models::observation_score(model, x, lambda, sigma).score;
            let perceived = (x - lambda) / score;
            perceived > 0.0 && perceived < reference * (1.0 - 1e-12)
        }))
}

/// All four properties and the severity rank.
pub fn classify(model: &BiasModel<f64>, sigma: f64) -> Result<ClassificationReport, ModelError> {
    model.validate()?;
    let has_asymptotic_limit =
        !models::is_divergent(model) && models::asymptotic_bias(model, sigma).is_ok();
    Ok(ClassificationReport {
        model: *model,
        has_asymptotic_limit,
        prizes_confirming_side: prizes_confirming_side(model, sigma)?,
        has_subjective_distribution: has_subjective_distribution(model),
        influence_monotone: influence_monotone(model, sigma)?,
        severity_rank: severity_rank(model),
    })
}

/// Stable sort by severity rank, ties broken by variant name.
pub fn severity_order(models: &[BiasModel<f64>]) -> Vec<BiasModel<f64>> {
    let mut out = models.to_vec();
    out.sort_by_key(|m| (severity_rank(m), m.variant_name()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = BiasModel<f64>;

    #[test]
    fn classify_examples() {
        let r = classify(&M::RelativeExponential { beta: 0.5 }, 1.0).unwrap();
        assert!(!r.has_asymptotic_limit);
        let cv = M::ConstantVariance {
            beta: 1.0,
            gamma: 2.0,
        };
        let r = classify(&cv, 1.0).unwrap();
        assert!(r.influence_monotone);
        assert!(!r.prizes_confirming_side);
        assert!(r.has_subjective_distribution);
        let r = classify(&M::Exponential { beta: 1.0 }, 1.0).unwrap();
        assert!(!r.influence_monotone);
        assert!(r.prizes_confirming_side);
        assert!(!r.has_subjective_distribution);
        assert!(r.has_asymptotic_limit);
        let r = classify(&M::LogGamma { beta: 1.0 }, 1.0).unwrap();
        assert!(r.prizes_confirming_side);
        assert!(r.influence_monotone);
    }

    #[test]
    fn scan_agrees_with_closed_forms() {
        for m in [
            M::Exponential { beta: 1.0 },
            M::Exponential { beta: -0.5 },
            M::Exponential { beta: 0.0 },
            M::LogGamma { beta: 1.0 },
            M::LogGamma { beta: -2.0 },
            M::ConstantVariance {
                beta: 0.5,
                gamma: 4.0,
            },
        ] {
            assert_eq!(
                influence_monotone_scan(&m, 2.0).unwrap(),
                influence_monotone(&m, 2.0).unwrap(),
                "{m:?}"
            );
        }
    }

    #[test]
    fn severity_examples() {
        let lg = M::LogGamma { beta: 1.0 };
        let ex = M::Exponential { beta: 1.0 };
        let cv = M::ConstantVariance {
            beta: 1.0,
            gamma: 2.0,
        };
        let rel = M::RelativeExponential { beta: 0.5 };
        assert_eq!(severity_order(&[ex, cv, lg]), vec![cv, lg, ex]);
        assert_eq!(severity_order(&[]), Vec::<M>::new());
        assert_eq!(severity_order(&[rel, ex]), vec![ex, rel]);
        let ss = M::SweetSpot { beta: 1.0 };
        assert_eq!(severity_order(&[ss, lg, cv]), vec![cv, ss, lg]);
    }

    #[test]
    fn classify_is_pure() {
        let m = M::BetaOdds {
            a: 3.0,
            b: 3.0,
            g: 1.0,
        };
        assert_eq!(classify(&m, 1.0).unwrap(), classify(&m, 1.0).unwrap());
        assert!(classify(&m, 1.0).unwrap().prizes_confirming_side);
        assert!(!classify(&M::SweetSpot { beta: 1.0 }, 1.0).unwrap().influence_monotone);
    }
}
