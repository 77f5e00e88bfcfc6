use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_signed-gossip"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    cli(args).status.code().expect("exited normally")
}

fn json(args: &[&str]) -> serde_json::Value {
    let out = cli(args);
    assert!(
        out.status.code().is_some_and(|c| c != 1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn analyze_exit_codes_follow_classification() {
    let base = ["analyze", "--graph", "complete:4:1-2", "--alpha", "0.5"];
    let with_beta = |b: &'static str| [&base[..], &["--beta", b]].concat();
    assert_eq!(code(&with_beta("0.25")), 0);
    assert_eq!(code(&with_beta("1.0")), 2);
    assert_eq!(code(&with_beta("0.5")), 3);
}

#[test]
fn threshold_reports_both_routes() {
    let v = json(&["threshold", "--graph", "complete:6:1-2", "--alpha", "0.5"]);
    let bisection = v["beta_star_bisection"].as_f64().unwrap();
    let closed = v["beta_star_closed_form"].as_f64().unwrap();
    assert!((closed - 1.0).abs() < 1e-12);
    assert!((bisection - closed).abs() < 1e-6);
    assert_eq!(v["agreement"], true);

    let v = json(&["threshold", "--graph", "ring:6:1-2", "--alpha", "0.5"]);
    assert!(v["beta_star_closed_form"].is_null());
    assert!(v["agreement"].is_null());
}

#[test]
fn errors_exit_with_one() {
    assert_eq!(
        code(&["simulate", "--graph", "complete:4", "--alpha", "0.5"]),
        1
    );
    assert_eq!(
        code(&["er-sweep", "--n", "10", "--alpha", "0.5", "--beta", "0.5"]),
        1
    );
    assert_eq!(
        code(&["analyze", "--graph", "complete:4", "--alpha", "1.5"]),
        1
    );
    assert_eq!(
        code(&["analyze", "--graph", "missing.json", "--alpha", "0.5"]),
        1
    );
    assert_eq!(code(&["analyze", "--nope"]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn simulate_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, format: &str| {
        let path = dir.path().join(name);
        let status = code(&[
            "simulate",
            "--graph",
            "complete:5:1-2",
            "--alpha",
            "0.6",
            "--beta",
            "0.3",
            "--horizon",
            "300",
            "--trials",
            "200",
            "--seed",
            "17",
            "--format",
            format,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_ne!(status, 1);
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.json", "json"), run("b.json", "json"));
    assert_eq!(run("a.csv", "csv"), run("b.csv", "csv"));
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 4, "no temp files left behind");
}

#[test]
fn seeds_change_the_sample() {
    let args = |seed: &'static str| {
        vec![
            "simulate",
            "--graph",
            "complete:4:1-2",
            "--alpha",
            "0.5",
            "--beta",
            "0.4",
            "--horizon",
            "100",
            "--seed",
            seed,
        ]
    };
    assert_ne!(cli(&args("1")).stdout, cli(&args("2")).stdout);
}

#[test]
fn full_gain_reaches_exact_consensus() {
    let v = json(&[
        "simulate",
        "--graph",
        "complete:3",
        "--alpha",
        "1",
        "--horizon",
        "2000",
        "--seed",
        "5",
        "--x0",
        "0,-1,7",
    ]);
    let t = &v["trajectory"];
    assert_eq!(t["hitting_time"]["exact"], true);
    assert_eq!(t["empirical"], "converging");
    let last = t["snapshots"]
        .as_array()
        .unwrap()
        .last()
        .unwrap()
        .as_array()
        .unwrap();
    assert!(last.iter().all(|x| x == &last[0]));
}

#[test]
fn er_sweep_separates_sparse_and_dense() {
    let v = json(&[
        "er-sweep", "--n", "40", "--alpha", "0.5", "--beta", "0.5", "--p-grid", "0.1,0.9",
        "--trials", "10", "--seed", "3",
    ]);
    assert_eq!(v["p_star"], 0.5);
    let points = v["points"].as_array().unwrap();
    assert_eq!(points[0]["fraction_converging"], 1.0);
    assert_eq!(points[1]["fraction_converging"], 0.0);
}

#[test]
fn conditions_exit_codes() {
    assert_eq!(
        code(&[
            "conditions",
            "--graph",
            "complete:3",
            "--alpha",
            "1",
            "--count",
            "10"
        ]),
        0
    );
    assert_eq!(
        code(&[
            "conditions",
            "--graph",
            "complete:3:1-2",
            "--alpha",
            "0.5",
            "--beta",
            "1",
            "--count",
            "10"
        ]),
        3
    );
    let v = json(&[
        "conditions",
        "--graph",
        "complete:3:1-2",
        "--alpha",
        "0.5",
        "--beta",
        "3",
        "--z",
        "1",
        "--count",
        "2",
    ]);
    let q = v["q"]["values"][0].as_f64().unwrap();
    assert!((q + 0.2433).abs() < 1e-4);
    let v = json(&[
        "conditions",
        "--graph",
        "complete:3",
        "--alpha",
        "1",
        "--count",
        "2",
    ]);
    assert!(v["q"]["unavailable"].is_string());
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("k4.json");
    assert_eq!(
        code(&[
            "generate",
            "--graph",
            "complete:4:1-2",
            "--out",
            graph.to_str().unwrap()
        ]),
        0
    );

    let config = dir.path().join("run.toml");
    std::fs::write(&config, "graph = \"k4.json\"\nalpha = 0.5\nbeta = 1.0\n").unwrap();
    let cfg = config.to_str().unwrap();
    assert_eq!(code(&["analyze", "--config", cfg]), 2);
    assert_eq!(code(&["analyze", "--config", cfg, "--beta", "0.1"]), 0);

    let json_config = dir.path().join("run.json");
    std::fs::write(
        &json_config,
        r#"{"graph": "complete:4:1-2", "alpha": 0.5, "beta": 0.25, "seed": 9, "horizon": 50}"#,
    )
    .unwrap();
    let out = cli(&["simulate", "--config", json_config.to_str().unwrap()]);
    assert_ne!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn generated_graph_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ring.json");
    let p = path.to_str().unwrap();
    assert_eq!(code(&["generate", "--graph", "ring:7:2-3", "--out", p]), 0);
    let from_file = json(&["threshold", "--graph", p, "--alpha", "0.7"]);
    let from_spec = json(&["threshold", "--graph", "ring:7:2-3", "--alpha", "0.7"]);
    assert_eq!(
        from_file["beta_star_bisection"],
        from_spec["beta_star_bisection"]
    );
    assert!(Path::new(p).exists());
}
