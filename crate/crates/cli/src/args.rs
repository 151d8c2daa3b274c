use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use confbias::montecarlo::Estimator;
use confbias::sequential::SpreadSource;
use confbias::{BiasModel, Scenario};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "confbias",
    version,
    about = "Asymptotics, simulation and Monte Carlo checks for directionally discounted belief updating"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for Monte Carlo replications (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Bias, subjective and true variance coefficients of a model.
    Asymptotics(AsymptoticsArgs),
    /// Sequential belief trajectory for a scenario.
    Simulate(SimulateArgs),
    /// Monte Carlo check of the asymptotic bias and variance.
    McVerify(McVerifyArgs),
    /// Closed-form and (optionally) simulated influence of one observation.
    Influence(InfluenceArgs),
    /// Data behind figure 1, 2 or 3.
    Figure(FigureArgs),
    /// Four-property classification, in severity order.
    Classify(ClassifyArgs),
    /// Posterior variance under the primacy rule, with its fitted exponent.
    Primacy(PrimacyArgs),
    /// Threshold probabilities of two agents watching the same observations.
    Polarize(PolarizeArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Exponential,
    BetaOdds,
    RelativeExponential,
    SweetSpot,
    ConstantVariance,
    LogGamma,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A model given by flags. `--beta` may be a comma-separated list, giving
/// one model per value.
#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<f64>,
    /// Scenario file; its model is used when --model is absent.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AsymptoticsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub prior_mean: Option<f64>,
    #[arg(long)]
    pub prior_var: Option<f64>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct McVerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 100_000)]
    pub n: u64,
    /// Replications R.
    #[arg(long, default_value_t = 200)]
    pub reps: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Auto)]
    pub estimator: EstimatorArg,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorArg {
    Auto,
    WeightedMean,
    Mle,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Auto => Estimator::Auto,
            EstimatorArg::WeightedMean => Estimator::WeightedMean,
            EstimatorArg::Mle => Estimator::Mle,
        }
    }
}

#[derive(Args, Debug)]
pub struct InfluenceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Observation values (comma-separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x: Vec<f64>,
    /// Sample size of the simulated estimate.
    #[arg(long, default_value_t = 10_000)]
    pub n: u64,
    #[arg(long, default_value_t = 100)]
    pub reps: u64,
    /// Simulate the influence as well; without a seed only the closed form
    /// is printed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct FigureArgs {
    /// Figure number.
    #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
    pub which: u8,
    /// Required for figure 1.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub prior_mean: Option<f64>,
    #[arg(long)]
    pub prior_var: Option<f64>,
    #[arg(long)]
    pub n: Option<u64>,
    /// Grid size for figures 2 and 3.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// Models as `name:key=value,...`, e.g. `constant-variance:beta=1,gamma=2`.
    /// Defaults to one representative of each variant.
    #[arg(long = "model")]
    pub models: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

#[derive(Args, Debug)]
pub struct PrimacyArgs {
    #[arg(long)]
    pub xi: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 100_000)]
    pub n: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub prior_mean: f64,
    /// Defaults to sigma^2.
    #[arg(long)]
    pub prior_var: Option<f64>,
    /// Rows per decade of n in the output.
    #[arg(long, default_value_t = 20)]
    pub per_decade: u32,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpreadArg {
    True,
    Subjective,
}

impl From<SpreadArg> for SpreadSource {
    fn from(s: SpreadArg) -> Self {
        match s {
            SpreadArg::True => SpreadSource::True,
            SpreadArg::Subjective => SpreadSource::Subjective,
        }
    }
}

#[derive(Args, Debug)]
pub struct PolarizeArgs {
    /// Two agents as `name:key=value,...`, e.g. `exponential:beta=0.5`.
    #[arg(long = "agent", num_args = 1, required = true, allow_hyphen_values = true)]
    pub agents: Vec<String>,
    /// Threshold L.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 100_000)]
    pub n: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub prior_mean: f64,
    /// Defaults to sigma^2.
    #[arg(long)]
    pub prior_var: Option<f64>,
    /// Source of each agent's sigma_lambda.
    #[arg(long, value_enum, default_value_t = SpreadArg::True)]
    pub spread: SpreadArg,
    #[arg(long, default_value_t = 10)]
    pub per_decade: u32,
}

fn model_from_value(value: Value) -> Result<BiasModel<f64>, CliError> {
    let model: BiasModel<f64> =
        serde_json::from_value(value).map_err(|e| CliError::Usage(format!("model: {e}")))?;
    model
        .validate()
        .map_err(|v| CliError::Usage(format!("invalid {}: {}", v.field, v.reason)))?;
    Ok(model)
}

fn kind_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Exponential => "exponential",
        ModelKind::BetaOdds => "beta-odds",
        ModelKind::RelativeExponential => "relative-exponential",
        ModelKind::SweetSpot => "sweet-spot",
        ModelKind::ConstantVariance => "constant-variance",
        ModelKind::LogGamma => "log-gamma",
    }
}

pub fn read_scenario(path: &std::path::Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let scenario = Scenario::from_json(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    scenario
        .validate()
        .map_err(|v| CliError::Usage(format!("invalid {}: {}", v.field, v.reason)))?;
    Ok(scenario)
}

impl ModelArgs {
    /// One model per `--beta` value (a single model when the variant has
    /// no `beta` or none was given).
    pub fn models(&self) -> Result<Vec<BiasModel<f64>>, CliError> {
        let Some(kind) = self.model else {
            return match &self.scenario {
                Some(path) => Ok(vec![read_scenario(path)?.model]),
                None => Err(CliError::Usage("--model or --scenario is required".into())),
            };
        };
        let mut base = Map::new();
        base.insert("variant".into(), kind_name(kind).into());
        for (key, v) in [("gamma", self.gamma), ("a", self.a), ("b", self.b), ("g", self.g)] {
            if let Some(v) = v {
                base.insert(key.into(), v.into());
            }
        }
        let uses_beta = kind != ModelKind::BetaOdds;
        if !uses_beta || self.beta.is_empty() {
            return Ok(vec![model_from_value(Value::Object(base))?]);
        }
        self.beta
            .iter()
            .map(|&beta| {
                let mut m = base.clone();
                m.insert("beta".into(), beta.into());
                model_from_value(Value::Object(m))
            })
            .collect()
    }

    pub fn single(&self) -> Result<BiasModel<f64>, CliError> {
        let mut models = self.models()?;
        if models.len() != 1 {
            return Err(CliError::Usage("exactly one --beta value expected".into()));
        }
        Ok(models.remove(0))
    }
}

/// Parses `name:key=value,key=value`.
pub fn parse_model_spec(spec: &str) -> Result<BiasModel<f64>, CliError> {
    let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
    let kind = ModelKind::from_str(name.trim(), true)
        .map_err(|_| CliError::Usage(format!("unknown model `{name}` in `{spec}`")))?;
    let mut map = Map::new();
    map.insert("variant".into(), kind_name(kind).into());
    for pair in params.split(',').filter(|p| !p.trim().is_empty()) {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected key=value, got `{pair}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("`{}` is not a number in `{spec}`", value.trim())))?;
        map.insert(key.trim().to_string(), value.into());
    }
    model_from_value(Value::Object(map))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_strings() {
        assert_eq!(
            parse_model_spec("exponential:beta=-0.5").unwrap(),
            BiasModel::Exponential { beta: -0.5 }
        );
        assert_eq!(
            parse_model_spec("constant-variance:beta=1,gamma=2").unwrap(),
            BiasModel::ConstantVariance {
                beta: 1.0,
                gamma: 2.0
            }
        );
        assert!(parse_model_spec("exponential").is_err());
        assert!(parse_model_spec("sweet-spot:beta=-1").is_err());
        assert!(parse_model_spec("wobbly:beta=1").is_err());
    }
}
