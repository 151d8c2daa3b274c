use confbias::montecarlo::{self, Estimator};
use confbias::rng::Stream;
use confbias::sequential::{self, PolarizationSetup, SpreadSource};
use confbias::taxonomy;
use confbias::{models, BeliefState, BiasModel, McPlan, ScenarioConfig};

type M = BiasModel<f64>;

fn config(seed: u64, n_obs: u64) -> ScenarioConfig {
    ScenarioConfig {
        mu: 140.0,
        sigma: 10.0,
        prior_mean: 120.0,
        prior_var: 25.0,
        n_obs,
        seed,
    }
}

#[test]
fn trajectory_settles_near_the_biased_value() {
    let model = M::Exponential { beta: 0.2 };
    let target = 140.0 + models::asymptotic_bias(&model, 10.0).unwrap();
    assert!((target - 138.0).abs() < 1e-12);
    for seed in 1..=5 {
        let run = sequential::run_trajectory(&config(seed, 2000), &model).unwrap();
        let last = run.last().unwrap();
        assert!(
            (last.post_mean - target).abs() <= 3.0 * last.post_sd,
            "seed {seed}: {} +/- {}",
            last.post_mean,
            last.post_sd
        );
    }
}

#[test]
fn trajectory_variance_strictly_decreases() {
    for model in [
        M::Exponential { beta: 0.2 },
        M::ConstantVariance {
            beta: 1.0,
            gamma: 2.0,
        },
    ] {
        let run = sequential::run_trajectory(&config(3, 500), &model).unwrap();
        assert!(run.windows(2).all(|w| w[1].post_sd < w[0].post_sd), "{model:?}");
        assert!(run[0].post_sd < 5.0);
    }
}

#[test]
fn unbiased_trajectory_is_consistent() {
    let n = 20_000;
    for seed in [11, 12, 13] {
        let run = sequential::run_trajectory(&config(seed, n), &M::Exponential { beta: 0.0 }).unwrap();
        let last = run.last().unwrap();
        assert!(
            (last.post_mean - 140.0).abs() <= 3.0 * 10.0 / (n as f64).sqrt(),
            "seed {seed}: {}",
            last.post_mean
        );
    }
}

#[test]
fn trajectory_is_reproducible() {
    let model = M::Exponential { beta: 0.2 };
    let a = sequential::run_trajectory(&config(42, 300), &model).unwrap();
    let b = sequential::run_trajectory(&config(42, 300), &model).unwrap();
    assert_eq!(a, b);
    let c = sequential::run_trajectory(&config(43, 300), &model).unwrap();
    assert_ne!(a, c);
}

#[test]
fn opposite_agents_polarize() {
    let setup = PolarizationSetup {
        threshold: 0.0,
        mu: 0.0,
        sigma: 1.0,
        prior: BeliefState::new(0.0, 1.0),
        n: 100_000,
        seed: 5,
        spread: SpreadSource::True,
    };
    let checkpoints = sequential::log_checkpoints(setup.n, 5);
    let run = sequential::run_polarization(
        [M::Exponential { beta: 0.5 }, M::Exponential { beta: -0.5 }],
        &setup,
        &checkpoints,
    )
    .unwrap();
    let last = run.last().unwrap();
    assert_eq!(last.n, setup.n);
    assert!((last.lambda_hat[0] + 0.5).abs() < 0.05, "{:?}", last.lambda_hat);
    assert!((last.lambda_hat[1] - 0.5).abs() < 0.05, "{:?}", last.lambda_hat);
    assert!(last.p[0] < 1e-6 && last.p[1] > 1.0 - 1e-6, "{:?}", last.p);
    let gap: Vec<f64> = run.iter().map(|pt| pt.p[1] - pt.p[0]).collect();
    assert!(gap.last().unwrap() > gap.first().unwrap());
}

#[test]
fn weighted_mean_is_the_mle() {
    for (model, sigma) in [
        (M::Exponential { beta: 0.7 }, 2.0),
        (M::Exponential { beta: -0.3 }, 1.0),
        (M::BetaOdds { a: 2.0, b: 3.0, g: 0.5 }, 1.0),
    ] {
        for seed in 0..5 {
            let sample = montecarlo::draw_sample(&model, sigma, 500, &mut Stream::new(seed, 0));
            let wm = montecarlo::weighted_mean_estimate(&sample, &model, sigma).unwrap();
            let mle = montecarlo::mle_estimate(&sample, &model, sigma).unwrap();
            assert!((wm - mle).abs() <= 1e-8 * (1.0 + wm.abs()), "{model:?}: {wm} vs {mle}");
        }
    }
}

#[test]
fn error_shrinks_at_root_n() {
    let model = M::LogGamma { beta: 0.5 };
    let lambda = models::asymptotic_bias(&model, 1.0).unwrap();
    let points: Vec<(f64, f64)> = [100u64, 1000, 10_000]
        .iter()
        .map(|&n| {
            let mut plan = McPlan::new(model, 1.0, n, 200, 21);
            plan.keep_values = true;
            let r = montecarlo::run_mc(&plan).unwrap();
            let values = r.values.unwrap();
            let mse = values.iter().map(|v| (v - lambda).powi(2)).sum::<f64>() / values.len() as f64;
            (n as f64, mse.sqrt())
        })
        .collect();
    let slope = sequential::loglog_slope(&points);
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
}

#[test]
fn monte_carlo_ignores_thread_count() {
    let mut plan = McPlan::new(M::SweetSpot { beta: 1.0 }, 1.0, 400, 64, 99);
    plan.keep_values = true;
    plan.estimator = Estimator::Mle;
    let run_with = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| montecarlo::run_mc(&plan).unwrap())
    };
    let one = run_with(1);
    let four = run_with(4);
    assert_eq!(one, four);
    assert_eq!(one, montecarlo::run_mc(&plan).unwrap());
    assert_eq!(one.replications, 64);
}

#[test]
fn replication_streams_are_independent_of_count() {
    let mut small = McPlan::new(M::Exponential { beta: 0.4 }, 1.0, 50, 10, 3);
    small.keep_values = true;
    let mut big = small;
    big.replications = 40;
    let a = montecarlo::run_mc(&small).unwrap().values.unwrap();
    let b = montecarlo::run_mc(&big).unwrap().values.unwrap();
    assert_eq!(a[..], b[..10]);
}

#[test]
fn scan_agrees_with_closed_form_monotonicity() {
    let mut checked = 0;
    for beta in [-1.0, -0.2, 0.0, 0.3, 1.5] {
        for model in [M::Exponential { beta }, M::LogGamma { beta }] {
            for sigma in [0.5, 1.0, 4.0] {
                let scan = taxonomy::influence_monotone_scan(&model, sigma).unwrap();
                let closed = taxonomy::influence_monotone(&model, sigma).unwrap();
                assert_eq!(scan, closed, "{model:?} sigma {sigma}");
                checked += 1;
            }
        }
    }
    for (beta, gamma) in [(1.0, 2.0), (2.0, 0.5), (1.0, 1.0)] {
        let model = M::ConstantVariance { beta, gamma };
        assert!(taxonomy::influence_monotone_scan(&model, 1.0).unwrap());
        checked += 1;
    }
    assert_eq!(checked, 33);
}

#[test]
fn redescending_models_are_not_monotone() {
    assert!(!taxonomy::influence_monotone(&M::SweetSpot { beta: 1.0 }, 1.0).unwrap());
    assert!(!taxonomy::influence_monotone(&M::Exponential { beta: 0.2 }, 10.0).unwrap());
}
