use serde::Serialize;

use confbias::models;
use confbias::montecarlo::{self, McPlan, McResult};
use confbias::sequential::{self, PolarizationSetup, PrimacyParams};
use confbias::taxonomy;
use confbias::{BeliefState, BiasModel, ModelError, ScenarioConfig};

use crate::args::*;
use crate::output::{g17, json, Csv};
use crate::CliError;

/// Text to emit, and whether every verification in it passed.
pub struct Report {
    pub text: String,
    pub passed: bool,
}

impl From<String> for Report {
    fn from(text: String) -> Self {
        Report { text, passed: true }
    }
}

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::Invalid(v) => CliError::Usage(format!("invalid {}: {}", v.field, v.reason)),
        other => CliError::Usage(other.to_string()),
    }
}

fn positive(field: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("invalid {field}: must be a finite number > 0")))
    }
}

/// Unit of `true_var_coeff`: `sigma^2`, or 1 for the beta-odds model.
fn variance_scale(model: &BiasModel<f64>, sigma: f64) -> f64 {
    match model {
        BiasModel::BetaOdds { .. } => 1.0,
        _ => sigma * sigma,
    }
}

fn bias_parameter(model: &BiasModel<f64>) -> f64 {
    match *model {
        BiasModel::Exponential { beta }
        | BiasModel::RelativeExponential { beta }
        | BiasModel::SweetSpot { beta }
        | BiasModel::ConstantVariance { beta, .. }
        | BiasModel::LogGamma { beta } => beta,
        BiasModel::BetaOdds { g, .. } => g,
    }
}

#[derive(Serialize)]
struct AsymptoticsRow {
    model: BiasModel<f64>,
    sigma: f64,
    lambda: f64,
    subj_var_coeff: f64,
    true_var_coeff: f64,
    diverges: bool,
}

pub fn asymptotics(args: &AsymptoticsArgs) -> Result<Report, CliError> {
    let scenario_sigma = match (&args.model.scenario, args.model.model) {
        (Some(path), None) => Some(read_scenario(path)?.config.sigma),
        _ => None,
    };
    let sigma = positive("sigma", args.sigma.or(scenario_sigma).unwrap_or(1.0))?;
    let rows = args
        .model
        .models()?
        .into_iter()
        .map(|model| {
            let s = models::summary(&model, sigma).map_err(model_error)?;
            Ok(AsymptoticsRow {
                model,
                sigma,
                lambda: s.lambda,
                subj_var_coeff: s.subj_var_coeff,
                true_var_coeff: s.true_var_coeff,
                diverges: s.diverges,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    if args.format == Format::Json {
        return Ok(json(&rows).into());
    }
    let mut csv = Csv::new(&[
        "model",
        "parameter",
        "sigma",
        "lambda",
        "subj_var_coeff",
        "true_var_coeff",
        "diverges",
    ]);
    for r in &rows {
        csv.row(&[
            r.model.variant_name().into(),
            g17(bias_parameter(&r.model)),
            g17(r.sigma),
            g17(r.lambda),
            g17(r.subj_var_coeff),
            g17(r.true_var_coeff),
            r.diverges.to_string(),
        ]);
    }
    Ok(csv.into_string().into())
}

fn trajectory_csv(records: &[confbias::TrajectoryRecord]) -> String {
    let mut csv = Csv::new(&["step", "observation", "perceived_var", "post_mean", "post_sd"]);
    for r in records {
        csv.row(&[
            r.step.to_string(),
            g17(r.observation),
            g17(r.perceived_var),
            g17(r.post_mean),
            g17(r.post_sd),
        ]);
    }
    csv.into_string()
}

pub fn simulate(args: &SimulateArgs) -> Result<Report, CliError> {
    let file = args.model.scenario.as_deref().map(read_scenario).transpose()?;
    let model = match (args.model.model, &file) {
        (None, Some(s)) => s.model,
        _ => args.model.single()?,
    };
    let base = file.map(|s| s.config);
    let pick = |flag: Option<f64>, from: Option<f64>, name: &str| {
        flag.or(from)
            .ok_or_else(|| CliError::Usage(format!("--{name} is required without --scenario")))
    };
    let config = ScenarioConfig {
        mu: pick(args.mu, base.map(|c| c.mu), "mu")?,
        sigma: pick(args.sigma, base.map(|c| c.sigma), "sigma")?,
        prior_mean: pick(args.prior_mean, base.map(|c| c.prior_mean), "prior-mean")?,
        prior_var: pick(args.prior_var, base.map(|c| c.prior_var), "prior-var")?,
        n_obs: args
            .n
            .or(base.map(|c| c.n_obs))
            .ok_or_else(|| CliError::Usage("--n is required without --scenario".into()))?,
        seed: args
            .seed
            .or(base.map(|c| c.seed))
            .ok_or_else(|| CliError::Usage("--seed is required without --scenario".into()))?,
    };
    let records = sequential::run_trajectory(&config, &model).map_err(model_error)?;
    Ok(trajectory_csv(&records).into())
}

#[derive(Serialize)]
struct McVerifyRow {
    model: BiasModel<f64>,
    sigma: f64,
    lambda_pred: f64,
    z_mean: f64,
    var_pred: f64,
    subj_var_pred: f64,
    z_var: f64,
    pass: bool,
    result: McResult,
}

fn z(estimate: f64, target: f64, se: f64) -> f64 {
    if estimate == target {
        0.0
    } else {
        (estimate - target) / se
    }
}

pub fn mc_verify(args: &McVerifyArgs) -> Result<Report, CliError> {
    let sigma = positive("sigma", args.sigma)?;
    let mut rows = Vec::new();
    for model in args.model.models()? {
        if models::is_divergent(&model) {
            return Err(CliError::Usage(format!(
                "{} with parameter {} has no asymptotic bias to verify",
                model.variant_name(),
                bias_parameter(&model)
            )));
        }
        let mut plan = McPlan::new(model, sigma, args.n, args.reps, args.seed);
        plan.estimator = args.estimator.into();
        let result = montecarlo::run_mc(&plan).map_err(|e| CliError::Usage(e.to_string()))?;
        let scale = variance_scale(&model, sigma);
        let lambda_pred = models::asymptotic_location(&model, sigma).map_err(model_error)?;
        let var_pred = models::true_variance_coeff(&model, sigma).map_err(model_error)? * scale;
        let subj_var_pred =
            models::subjective_variance_coeff(&model, sigma).map_err(model_error)? * scale;
        let z_mean = z(result.mean, lambda_pred, result.se);
        let z_var = z(result.scaled_var(), var_pred, result.scaled_var_se());
        rows.push(McVerifyRow {
            model,
            sigma,
            lambda_pred,
            z_mean,
            var_pred,
            subj_var_pred,
            z_var,
            pass: z_mean.abs() <= 3.0 && z_var.abs() <= 3.0,
            result,
        });
    }
    let passed = rows.iter().all(|r| r.pass);
    if args.format == Format::Json {
        return Ok(Report {
            text: json(&rows),
            passed,
        });
    }
    let mut csv = Csv::new(&[
        "model",
        "parameter",
        "sigma",
        "n",
        "R",
        "seed",
        "lambda_pred",
        "mc_mean",
        "mc_se",
        "z_mean",
        "var_pred",
        "subj_var_pred",
        "mc_n_var",
        "mc_n_var_se",
        "z_var",
        "skewness",
        "pass",
    ]);
    for r in &rows {
        csv.row(&[
            r.model.variant_name().into(),
            g17(bias_parameter(&r.model)),
            g17(r.sigma),
            r.result.n.to_string(),
            r.result.replications.to_string(),
            r.result.seed.to_string(),
            g17(r.lambda_pred),
            g17(r.result.mean),
            g17(r.result.se),
            g17(r.z_mean),
            g17(r.var_pred),
            g17(r.subj_var_pred),
            g17(r.result.scaled_var()),
            g17(r.result.scaled_var_se()),
            g17(r.z_var),
            g17(r.result.skewness),
            r.pass.to_string(),
        ]);
    }
    Ok(Report {
        text: csv.into_string(),
        passed,
    })
}

pub fn influence(args: &InfluenceArgs) -> Result<Report, CliError> {
    let sigma = positive("sigma", args.sigma)?;
    let model = args.model.single()?;
    model.validate().map_err(|v| model_error(v.into()))?;
    let closed: Vec<f64> = args
        .x
        .iter()
        .map(|&x| models::influence(&model, x, sigma).unwrap_or(f64::NAN))
        .collect();
    let Some(seed) = args.seed else {
        let mut csv = Csv::new(&["x", "influence"]);
        for (x, c) in args.x.iter().zip(&closed) {
            csv.row(&[g17(*x), g17(*c)]);
        }
        return Ok(csv.into_string().into());
    };
    let mc = montecarlo::influence_empirical(&model, &args.x, sigma, args.n, args.reps, seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut csv = Csv::new(&["x", "influence", "mc_mean", "mc_se", "z"]);
    for (e, c) in mc.iter().zip(&closed) {
        csv.row(&[g17(e.x), g17(*c), g17(e.mean), g17(e.se), g17(z(e.mean, *c, e.se))]);
    }
    Ok(csv.into_string().into())
}

pub fn figure(args: &FigureArgs) -> Result<Report, CliError> {
    match args.which {
        1 => {
            let seed = args
                .seed
                .ok_or_else(|| CliError::Usage("figure 1 needs --seed".into()))?;
            let config = ScenarioConfig {
                mu: args.mu.unwrap_or(140.0),
                sigma: args.sigma.unwrap_or(10.0),
                prior_mean: args.prior_mean.unwrap_or(120.0),
                prior_var: args.prior_var.unwrap_or(25.0),
                n_obs: args.n.unwrap_or(2000),
                seed,
            };
            let model = BiasModel::Exponential {
                beta: args.beta.unwrap_or(0.2),
            };
            let records = sequential::run_trajectory(&config, &model).map_err(model_error)?;
            Ok(trajectory_csv(&records).into())
        }
        2 => {
            let beta = args.beta.unwrap_or(1.0);
            let sigma = positive("sigma", args.sigma.unwrap_or(1.0))?;
            let points = args.points.unwrap_or(601).max(2);
            let exp = BiasModel::Exponential { beta };
            let lg = BiasModel::LogGamma { beta };
            let lambda = -beta * sigma;
            let (lo, hi) = (lambda - 3.0 * sigma, lambda + 6.0 * sigma);
            let mut csv = Csv::new(&["x", "influence_exponential", "influence_loggamma"]);
            for i in 0..points {
                let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
                csv.row(&[
                    g17(x),
                    g17(models::influence(&exp, x, sigma).map_err(model_error)?),
                    g17(models::influence(&lg, x, sigma).map_err(model_error)?),
                ]);
            }
            Ok(csv.into_string().into())
        }
        _ => {
            let points = args.points.unwrap_or(100).max(2);
            let (lo, hi) = (0.05_f64.ln(), 5.0_f64.ln());
            let mut csv = Csv::new(&["beta", "subjective_var_coeff", "true_var_coeff"]);
            for i in 0..points {
                let beta = (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp();
                let m = BiasModel::SweetSpot { beta };
                csv.row(&[
                    g17(beta),
                    g17(models::subjective_variance_coeff(&m, 1.0).map_err(model_error)?),
                    g17(models::true_variance_coeff(&m, 1.0).map_err(model_error)?),
                ]);
            }
            Ok(csv.into_string().into())
        }
    }
}

/// One representative of each variant.
pub fn default_models() -> Vec<BiasModel<f64>> {
    vec![
        BiasModel::Exponential { beta: 1.0 },
        BiasModel::BetaOdds {
            a: 3.0,
            b: 3.0,
            g: 1.0,
        },
        BiasModel::RelativeExponential { beta: 0.5 },
        BiasModel::SweetSpot { beta: 1.0 },
        BiasModel::ConstantVariance {
            beta: 1.0,
            gamma: 2.0,
        },
        BiasModel::LogGamma { beta: 1.0 },
    ]
}

pub fn classify(args: &ClassifyArgs) -> Result<Report, CliError> {
    let sigma = positive("sigma", args.sigma)?;
    let list = if args.models.is_empty() {
        default_models()
    } else {
        args.models
            .iter()
            .map(|s| parse_model_spec(s))
            .collect::<Result<_, _>>()?
    };
    let reports = taxonomy::severity_order(&list)
        .iter()
        .map(|m| taxonomy::classify(m, sigma).map_err(model_error))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(json(&reports).into())
}

#[derive(Serialize)]
struct PrimacyReport {
    xi: f64,
    sigma: f64,
    n: u64,
    seed: u64,
    slope: f64,
    expected_slope: f64,
    points: Vec<sequential::PrimacyPoint>,
}

pub fn primacy(args: &PrimacyArgs) -> Result<Report, CliError> {
    let sigma = positive("sigma", args.sigma)?;
    let params = PrimacyParams { xi: args.xi, sigma };
    let prior = BeliefState::new(args.prior_mean, args.prior_var.unwrap_or(sigma * sigma));
    let run = sequential::run_primacy(&params, args.mu, prior, args.n, args.seed)
        .map_err(|v| CliError::Usage(format!("invalid {}: {}", v.field, v.reason)))?;
    let slope = sequential::primacy_slope(&run);
    let keep = sequential::log_checkpoints(args.n, args.per_decade);
    let points: Vec<_> = keep.iter().map(|&k| run[k as usize - 1]).collect();
    let expected_slope = -1.0 / (args.xi + 1.0);
    if args.format == Format::Json {
        return Ok(json(&PrimacyReport {
            xi: args.xi,
            sigma,
            n: args.n,
            seed: args.seed,
            slope,
            expected_slope,
            points,
        })
        .into());
    }
    eprintln!("fitted exponent {} (power law {})", g17(slope), g17(expected_slope));
    let mut csv = Csv::new(&["n", "post_mean", "post_var", "power_law_var"]);
    for p in &points {
        csv.row(&[
            p.n.to_string(),
            g17(p.post_mean),
            g17(p.post_var),
            g17(sequential::primacy_variance_asymptote(&params, p.n as f64)),
        ]);
    }
    Ok(csv.into_string().into())
}

pub fn polarize(args: &PolarizeArgs) -> Result<Report, CliError> {
    if args.agents.len() != 2 {
        return Err(CliError::Usage(format!(
            "exactly two --agent values expected, got {}",
            args.agents.len()
        )));
    }
    let a = parse_model_spec(&args.agents[0])?;
    let b = parse_model_spec(&args.agents[1])?;
    for m in [&a, &b] {
        if models::is_divergent(m) {
            return Err(CliError::Usage(format!(
                "agent model {} has no asymptotic bias",
                m.variant_name()
            )));
        }
    }
    let sigma = positive("sigma", args.sigma)?;
    let setup = PolarizationSetup {
        threshold: args.threshold,
        mu: args.mu,
        sigma,
        prior: BeliefState::new(args.prior_mean, args.prior_var.unwrap_or(sigma * sigma)),
        n: args.n,
        seed: args.seed,
        spread: args.spread.into(),
    };
    let checkpoints = sequential::log_checkpoints(args.n, args.per_decade);
    let run = sequential::run_polarization([a, b], &setup, &checkpoints).map_err(model_error)?;
    let mut csv = Csv::new(&["n", "lambda_hat_1", "lambda_hat_2", "p_1", "p_2"]);
    for p in &run {
        csv.row(&[
            p.n.to_string(),
            g17(p.lambda_hat[0]),
            g17(p.lambda_hat[1]),
            g17(p.p[0]),
            g17(p.p[1]),
        ]);
    }
    Ok(csv.into_string().into())
}
