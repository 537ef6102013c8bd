use std::process::{Command, Output};

fn mcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcs"))
        .args(args)
        .output()
        .expect("run mcs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn deterministic_bound_value() {
    let o = mcs(&["bounds", "det", "--n", "4", "--m", "1", "--eps", "0.5"]);
    assert!(o.status.success());
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 8.2913).abs() < 1e-4);
    // seventeen significant digits by default, six with --human
    assert_eq!(stdout(&o).trim(), "8.2913187547226066e0");
    let o = mcs(&[
        "bounds", "det", "--n", "4", "--m", "1", "--eps", "0.5", "--human",
    ]);
    assert_eq!(stdout(&o).trim(), "8.29132");
}

#[test]
fn adversarial_instance() {
    let o = mcs(&["adversarial", "--n", "4", "--cos-gamma", "0.25"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!((value(&text, "achieved") - 4.0).abs() < 1e-9);
    assert!((value(&text, "bound") - 8.2913).abs() < 1e-4);
    assert_eq!(value(&text, "theta_hat"), 0.0);
}

#[test]
fn embed_writes_point_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig.csv");
    let o = mcs(&[
        "embed",
        "--manifold",
        "pulse",
        "--n",
        "1024",
        "--m",
        "3",
        "--seed",
        "7",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty(), "data went to the file only");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,y1,y2,y3"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 256);
    assert!(rows.iter().all(|r| r.len() == 4));
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[255][0], 1.0);
    // same seed, same cloud
    let again = mcs(&[
        "embed",
        "--manifold",
        "pulse",
        "--n",
        "1024",
        "--m",
        "3",
        "--seed",
        "7",
    ]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn exit_codes() {
    let unknown = mcs(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));
    assert_eq!(
        mcs(&["bounds", "det", "--n", "4", "--m", "1", "--eps", "0.5", "--bogus"])
            .status
            .code(),
        Some(1)
    );
    // M > N is a validation error
    assert_eq!(
        mcs(&["bounds", "det", "--n", "4", "--m", "5", "--eps", "0.5"])
            .status
            .code(),
        Some(1)
    );
    // seed is required for stochastic subcommands
    assert_eq!(
        mcs(&["embed", "--manifold", "circle", "--n", "4", "--m", "2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(mcs(&["--help"]).status.code(), Some(0));
    // writing into a missing directory is an internal I/O failure
    let o = mcs(&[
        "bounds",
        "det",
        "--n",
        "4",
        "--m",
        "1",
        "--eps",
        "0.5",
        "--out",
        "/nonexistent/dir/x",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 4, "m": 1, "eps": 0.9, "human": true}"#).unwrap();
    let o = mcs(&[
        "bounds",
        "det",
        "--config",
        cfg.to_str().unwrap(),
        "--eps",
        "0.5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "8.29132");
    let o = mcs(&["bounds", "det", "--config", cfg.to_str().unwrap()]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!(v > 30.0);

    std::fs::write(&cfg, r#"{"nonsense_key": 1}"#).unwrap();
    let o = mcs(&[
        "bounds",
        "det",
        "--n",
        "4",
        "--m",
        "1",
        "--eps",
        "0.5",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn montecarlo_records_do_not_depend_on_jobs() {
    let run = |jobs: &str| {
        let o = mcs(&[
            "montecarlo",
            "recovery",
            "--manifold",
            "circle",
            "--n",
            "16",
            "--m",
            "4",
            "--seed",
            "3",
            "--trials",
            "12",
            "--noise",
            "0.05",
            "--offset",
            "0.05",
            "--fix-signal",
            "false",
            "--grid",
            "256",
            "--embedding-points",
            "64",
            "--jobs",
            jobs,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    let one = run("1");
    assert_eq!(one, run("3"));
    assert_eq!(one.lines().count(), 13);
    assert!(one.starts_with("seed,theta_true,"));
}

#[test]
fn montecarlo_embedding_json_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.json");
    let o = mcs(&[
        "montecarlo",
        "embedding",
        "--manifold",
        "circle",
        "--n",
        "8",
        "--m",
        "8",
        "--seed",
        "1",
        "--trials",
        "5",
        "--embedding-points",
        "50",
        "--format",
        "json",
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let records: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(records.as_array().unwrap().len(), 5);
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    assert_eq!(s["success_rate"], 1.0);
}

#[test]
fn recover_estimate_cover_and_bounds() {
    let o = mcs(&[
        "recover",
        "--manifold",
        "circle",
        "--n",
        "16",
        "--m",
        "6",
        "--seed",
        "2",
        "--theta",
        "1.0",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!((value(&text, "theta_hat") - 1.0).abs() < 1e-6);
    assert!(text.contains("satisfied3=true"));

    let o = mcs(&[
        "estimate",
        "--manifold",
        "circle",
        "--n",
        "4",
        "--radius",
        "2",
    ]);
    let text = stdout(&o);
    assert!((value(&text, "tau") - 2.0).abs() < 0.1);
    assert!((value(&text, "volume") - 4.0 * std::f64::consts::PI).abs() < 1e-6);

    let o = mcs(&["cover", "--manifold", "circle", "--n", "4", "--t", "0.1"]);
    let anchors = stdout(&o).lines().count() - 1;
    assert!((32..=38).contains(&anchors), "{anchors}");

    let o = mcs(&[
        "bounds",
        "covering",
        "--volume",
        "6.283185307179586",
        "--regularity",
        "1",
        "--t",
        "3.141592653589793",
    ]);
    assert!((stdout(&o).trim().parse::<f64>().unwrap() - 2.0).abs() < 1e-12);
    let o = mcs(&["bounds", "geodesic", "--e", "0.5", "--tau", "1"]);
    assert!((stdout(&o).trim().parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    let o = mcs(&["bounds", "geodesic", "--e", "0.6", "--tau", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = mcs(&[
        "bounds",
        "recovery",
        "--n",
        "1024",
        "--m",
        "100",
        "--eps",
        "0.1",
        "--rho",
        "0.1",
        "--tau",
        "1",
        "--volume",
        "1",
        "--regularity",
        "1",
        "--model-error",
        "0.01",
        "--noise",
        "0.001",
    ]);
    assert!((value(&stdout(&o), "value") - 0.0122821).abs() < 1e-6);
    let o = mcs(&[
        "bounds",
        "measurements",
        "--n",
        "64",
        "--volume",
        "1",
        "--regularity",
        "1",
        "--tau",
        "1",
        "--eps",
        "0.5",
        "--rho",
        "0.1",
        "--constant",
        "1000",
    ]);
    assert_eq!(stdout(&o).trim(), "64");
}

#[test]
fn calibrate_reports_constant() {
    let o = mcs(&[
        "calibrate",
        "--manifold",
        "circle",
        "--n",
        "16",
        "--eps",
        "0.5",
        "--seed",
        "4",
        "--trials",
        "50",
        "--embedding-points",
        "64",
        "--target",
        "0.8",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(value(&text, "wilson_lower") >= 0.8);
    assert!(value(&text, "meas_dim") <= 16.0);
}
