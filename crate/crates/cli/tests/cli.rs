use std::process::{Command, Output};

fn confbias(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confbias"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn exponential_asymptotics_row() {
    let out = confbias(&["asymptotics", "--model", "exponential", "--beta", "0.2", "--sigma", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&stdout(&out));
    assert_eq!(
        r[0].join(","),
        "model,parameter,sigma,lambda,subj_var_coeff,true_var_coeff,diverges"
    );
    assert_eq!(r[1][3], "-2");
    let subj: f64 = r[1][4].parse().unwrap();
    let tru: f64 = r[1][5].parse().unwrap();
    assert!((subj - (-0.02_f64).exp()).abs() < 1e-15);
    assert!((tru - 1.04 * 0.04_f64.exp()).abs() < 1e-14);
    assert_eq!(r[1][6], "false");
}

#[test]
fn unbiased_parameter_gives_unit_coefficients() {
    let out = confbias(&["asymptotics", "--model", "log-gamma", "--beta", "0", "--sigma", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&stdout(&out));
    assert_eq!(&r[1][3..], ["0", "1", "1", "false"]);
}

#[test]
fn divergent_model_is_reported_not_rejected() {
    let out = confbias(&["asymptotics", "--model", "relative-exponential", "--beta", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&stdout(&out));
    assert_eq!(r[1][6], "true");
    assert_eq!(r[1][3], "nan");
}

#[test]
fn asymptotics_json_lists_each_parameter() {
    let out = confbias(&[
        "asymptotics", "--model", "sweet-spot", "--beta", "0.5,1,2", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 3);
    for e in arr {
        assert_eq!(e["lambda"], 0.0);
        assert!(e["subj_var_coeff"].as_f64().unwrap() > 1.0);
    }
}

#[test]
fn invalid_parameter_names_the_field() {
    let out = confbias(&["asymptotics", "--model", "sweet-spot", "--beta", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("beta"), "{}", stderr(&out));

    let out = confbias(&["asymptotics", "--model", "constant-variance", "--beta", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("gamma"), "{}", stderr(&out));

    let out = confbias(&["asymptotics", "--model", "beta-odds", "--a", "1", "--b", "2", "--g", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains('g'), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(confbias(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(confbias(&["asymptotics", "--model", "nope"]).status.code(), Some(2));
    assert_eq!(confbias(&["figure", "4"]).status.code(), Some(2));
    assert_eq!(confbias(&["figure", "1"]).status.code(), Some(2));
    assert_eq!(
        confbias(&["--threads", "0", "classify"]).status.code(),
        Some(2)
    );
    let out = confbias(&[
        "mc-verify", "--model", "relative-exponential", "--beta", "0.5", "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_zero() {
    let out = confbias(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for sub in ["asymptotics", "simulate", "mc-verify", "influence", "figure", "classify"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn failed_verification_exits_one() {
    // At n = 10 the estimator is far from its asymptotic distribution.
    let out = confbias(&[
        "mc-verify", "--model", "exponential", "--beta", "2", "--n", "10", "--reps", "2000", "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let r = rows(&stdout(&out));
    assert_eq!(r[1].last().unwrap(), "false");
}

#[test]
fn passing_verification_exits_zero() {
    let out = confbias(&[
        "mc-verify", "--model", "exponential", "--beta", "0.5", "--n", "2000", "--reps", "200", "--seed", "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let r = rows(&stdout(&out));
    assert_eq!(r[0].len(), 17);
    assert_eq!(r[1].last().unwrap(), "true");
}

#[test]
fn figure_one_is_reproducible_through_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = confbias(&["--out", path.to_str().unwrap(), "figure", "1", "--seed", "7"]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    let text = String::from_utf8(first).unwrap();
    let r = rows(&text);
    assert_eq!(r[0].join(","), "step,observation,perceived_var,post_mean,post_sd");
    assert_eq!(r.len(), 2001);
    let last_mean: f64 = r[2000][3].parse().unwrap();
    assert!((last_mean - 138.0).abs() < 3.0);
}

#[test]
fn figure_two_and_three_shapes() {
    let two = stdout(&confbias(&["figure", "2"]));
    let r = rows(&two);
    assert_eq!(r[0].join(","), "x,influence_exponential,influence_loggamma");
    assert_eq!(r.len(), 602);

    let three = stdout(&confbias(&["figure", "3"]));
    let r = rows(&three);
    assert_eq!(r[0].join(","), "beta,subjective_var_coeff,true_var_coeff");
    assert_eq!(r.len(), 101);
    let first: f64 = r[1][0].parse().unwrap();
    let last: f64 = r[100][0].parse().unwrap();
    assert!((first - 0.05).abs() < 1e-12 && (last - 5.0).abs() < 1e-12);
}

#[test]
fn classify_orders_by_severity() {
    let out = confbias(&["classify"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 6);
    let ranks: Vec<u64> = arr.iter().map(|e| e["severity_rank"].as_u64().unwrap()).collect();
    assert!(ranks.windows(2).all(|w| w[0] <= w[1]));
    let rel = arr
        .iter()
        .find(|e| e["model"]["variant"] == "relative-exponential")
        .unwrap();
    assert_eq!(rel["has_asymptotic_limit"], false);

    let out = confbias(&["classify", "--model", "exponential:beta=0.3", "--model", "log-gamma:beta=1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v[0]["model"]["variant"], "log-gamma");
    assert_eq!(v[1]["influence_monotone"], false);
}

#[test]
fn simulate_reads_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    std::fs::write(
        &path,
        r#"{"model": {"variant": "exponential", "beta": 0.2},
            "mu": 140, "sigma": 10, "prior_mean": 120, "prior_var": 25, "n_obs": 50, "seed": 3}"#,
    )
    .unwrap();
    let from_file = confbias(&["simulate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(from_file.status.code(), Some(0), "{}", stderr(&from_file));
    let r = rows(&stdout(&from_file));
    assert_eq!(r.len(), 51);

    let from_flags = confbias(&[
        "simulate", "--model", "exponential", "--beta", "0.2", "--mu", "140", "--sigma", "10",
        "--prior-mean", "120", "--prior-var", "25", "--n", "50", "--seed", "3",
    ]);
    assert_eq!(stdout(&from_file), stdout(&from_flags));
}

#[test]
fn influence_closed_form_column() {
    let out = confbias(&[
        "influence", "--model", "exponential", "--beta", "0.5", "--x", "-1,0,1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&stdout(&out));
    assert_eq!(r[0].join(","), "x,influence");
    // lambda = -0.5, so x = 0 lies above it.
    let at_zero: f64 = r[2][1].parse().unwrap();
    assert!(at_zero > 0.0);
    assert_eq!(r.len(), 4);
}

#[test]
fn thread_count_does_not_change_output() {
    let base = ["mc-verify", "--model", "log-gamma", "--beta", "1", "--n", "500", "--reps", "50", "--seed", "8"];
    let mut one = vec!["--threads", "1"];
    one.extend_from_slice(&base);
    let mut three = vec!["--threads", "3"];
    three.extend_from_slice(&base);
    assert_eq!(stdout(&confbias(&one)), stdout(&confbias(&three)));
}
