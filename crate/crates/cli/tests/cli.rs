use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dcproc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcproc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = dcproc(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    dcproc(args).status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let args = [
        "simulate",
        "--mode",
        "negligible",
        "--s-dist",
        "exp:0.001",
        "--dc",
        "det:20:100",
        "--samples",
        "20000",
        "--seed",
        "7",
        "--out",
        s(&out),
    ];
    ok(&args);
    let first = (
        fs::read(out.join("samples.csv")).unwrap(),
        fs::read(out.join("simulate.json")).unwrap(),
    );
    ok(&args);
    assert_eq!(first.0, fs::read(out.join("samples.csv")).unwrap());
    assert_eq!(first.1, fs::read(out.join("simulate.json")).unwrap());

    // The thread cap never changes results, and an output file reproduces its run.
    let mut capped = args.to_vec();
    capped.extend(["--threads", "1"]);
    ok(&capped);
    assert_eq!(first.0, fs::read(out.join("samples.csv")).unwrap());
    let copy = dir.path().join("simulate.json");
    fs::copy(out.join("simulate.json"), &copy).unwrap();
    ok(&["simulate", "--config", s(&copy)]);
    assert_eq!(first.0, fs::read(out.join("samples.csv")).unwrap());

    let csv = String::from_utf8(first.0).unwrap();
    let mut lines = csv.lines();
    let run: Value =
        serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
    assert_eq!(run["seed"], 7);
    assert_eq!(lines.next(), Some("quantity,value"));
    assert_eq!(
        csv.lines().filter(|l| l.starts_with("s_tilde,")).count(),
        20_000
    );
    assert_eq!(csv.lines().filter(|l| l.starts_with("n,")).count(), 20_000);
    let mean = json(&out.join("simulate.json"))["summary"]["s_tilde"]["mean"]
        .as_f64()
        .unwrap();
    assert!((mean / 5000.0 - 1.0).abs() < 0.03, "mean {mean}");
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(
        code(&[
            "simulate",
            "--s-dist",
            "exp:0.001",
            "--dc",
            "det:0:100",
            "--out",
            s(&out)
        ]),
        1
    );
    assert_eq!(
        code(&[
            "simulate",
            "--s-dist",
            "exp:0.001",
            "--dc",
            "det:20:100",
            "--c-dist",
            "exp:1",
            "--out",
            s(&out)
        ]),
        1
    );
    assert_eq!(
        code(&[
            "predict",
            "--s-dist",
            "exp:0.001",
            "--dc",
            "det:20:100",
            "--full",
            "--out",
            s(&out)
        ]),
        1
    );
    assert_eq!(code(&["simulate", "--bogus"]), 1);
    assert_eq!(code(&["--help"]), 0);
    assert!(!out.exists());

    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"samples": 1000, "dc": {"kind": "deterministic", "tau": 20, "period": 100}}"#,
    )
    .unwrap();
    let base = [
        "simulate",
        "--config",
        s(&cfg),
        "--s-dist",
        "exp:0.001",
        "--out",
        s(&out),
    ];
    assert_eq!(code(&[&base[..], &["--samples", "2000"]].concat()), 1);
    assert_eq!(code(&[&base[..], &["--dc", "det:80:100"]].concat()), 1);
    ok(&[&base[..], &["--dc", "det:20:100", "--samples", "1000"]].concat());
    fs::write(&cfg, r#"{"sample": 1000}"#).unwrap();
    assert_eq!(code(&base), 1);
}

#[test]
fn starvation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--s-dist",
        "exp:0.001",
        "--dc",
        "det:20:100",
        "--samples",
        "1000",
        "--contact-cap",
        "100",
        "--out",
        s(dir.path()),
    ];
    assert_eq!(code(&args), 2);
}

#[test]
fn predict_pareto_report() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "predict",
        "--s-dist",
        "pareto:1.01:1000",
        "--dc",
        "det:20:100",
        "--out",
        s(dir.path()),
    ]);
    let doc = json(&dir.path().join("prediction.json"));
    let p = &doc["prediction"];
    let (g, pp) = (
        p["gp"]["g"].as_f64().unwrap(),
        p["gp"]["p"].as_f64().unwrap(),
    );
    assert!(g > 0.0 && g < 1.0 && pp > 0.0 && pp < 1.0);
    assert_eq!(p["n_table"].as_array().unwrap().len(), 50);
    assert_eq!(p["tail"]["slope"].as_f64().unwrap(), -1.01);
    assert!(p["s_tilde"]["classification"].is_string());
    assert_eq!(doc["run"]["params"]["s_dist"]["kind"], "pareto");
    let plots = json(&dir.path().join("plots.json"));
    for plot in plots["plots"].as_array().unwrap() {
        assert!(dir.path().join(plot["file"].as_str().unwrap()).exists());
    }
    assert!(!dir.path().join("c_tilde_cdf.csv").exists());
}

#[test]
fn predict_full_contacts() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "predict",
        "--s-dist",
        "exp:0.001",
        "--c-dist",
        "exp:0.02",
        "--dc",
        "det:20:100",
        "--full",
        "--out",
        s(dir.path()),
    ]);
    let doc = json(&dir.path().join("prediction.json"));
    let w = doc["prediction"]["contacts"]["pseudo_weight"]
        .as_f64()
        .unwrap();
    assert!((w - 0.1616).abs() < 1e-3, "pseudo weight {w}");
    assert_eq!(doc["run"]["params"]["mode"], "full");
    let grid = fs::read_to_string(dir.path().join("c_tilde_cdf.csv")).unwrap();
    let last: f64 = grid
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(last > 0.99);
}

#[test]
fn predict_stochastic_duty_cycle() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "predict",
        "--dc",
        "stoch:0.025:0.02",
        "--out",
        s(dir.path()),
    ]);
    let dc = &json(&dir.path().join("prediction.json"))["prediction"]["duty_cycle"];
    assert!((dc["off_mean"].as_f64().unwrap() - 81.25).abs() < 1e-9);
    assert!((dc["off_cv2"].as_f64().unwrap() - 1.952).abs() < 1e-3);
    assert_eq!(dc["deterministic_equivalent"]["tau"], 20.0);
    assert_eq!(dc["deterministic_equivalent"]["period"], 101.25);
}

fn sim_and_predict(dir: &Path, s_dist: &str, samples: &str) {
    let sim = dir.join("sim");
    let pred = dir.join("pred");
    ok(&[
        "simulate",
        "--s-dist",
        s_dist,
        "--dc",
        "det:20:100",
        "--samples",
        samples,
        "--out",
        s(&sim),
    ]);
    ok(&[
        "predict",
        "--s-dist",
        s_dist,
        "--dc",
        "det:20:100",
        "--out",
        s(&pred),
    ]);
}

fn compare(dir: &Path, n_model: &str) -> Value {
    let out = dir.join(format!("cmp-{n_model}"));
    ok(&[
        "compare",
        "--simulate",
        s(&dir.join("sim")),
        "--predict",
        s(&dir.join("pred")),
        "--n-model",
        n_model,
        "--out",
        s(&out),
    ]);
    json(&out.join("compare.json"))
}

fn tv(doc: &Value) -> f64 {
    doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["metric"] == "tv_n")
        .unwrap()["value"]
        .as_f64()
        .unwrap()
}

#[test]
fn compare_passes_on_matching_runs() {
    let dir = tempfile::tempdir().unwrap();
    sim_and_predict(dir.path(), "exp:0.001", "100000");
    let doc = compare(dir.path(), "renewal");
    assert_eq!(doc["pass"], true, "{doc}");
    assert!(tv(&doc) < 0.02);
    assert_eq!(doc["simulate_run"]["command"], "simulate");
}

#[test]
fn compare_geometric_is_worse_for_fast_contacts() {
    let dir = tempfile::tempdir().unwrap();
    sim_and_predict(dir.path(), "exp:0.1", "100000");
    let renewal = compare(dir.path(), "renewal");
    let geometric = compare(dir.path(), "geometric");
    assert!(tv(&renewal) < tv(&geometric));
    assert!(tv(&geometric) > 0.02);
    assert_eq!(geometric["pass"], false);
}

#[test]
fn compare_refuses_mismatched_configs() {
    let dir = tempfile::tempdir().unwrap();
    sim_and_predict(dir.path(), "exp:0.001", "2000");
    let other = dir.path().join("other");
    ok(&[
        "predict",
        "--s-dist",
        "exp:0.001",
        "--dc",
        "det:80:100",
        "--out",
        s(&other),
    ]);
    let out = dir.path().join("cmp");
    assert_eq!(
        code(&[
            "compare",
            "--simulate",
            s(&dir.path().join("sim")),
            "--predict",
            s(&other),
            "--out",
            s(&out)
        ]),
        1
    );
    assert_eq!(
        code(&[
            "compare",
            "--simulate",
            s(&other),
            "--predict",
            s(&other),
            "--out",
            s(&out)
        ]),
        1
    );
    assert!(!out.join("compare.json").exists());
}

#[test]
fn fit_synthetic_trace() {
    let dir = tempfile::tempdir().unwrap();
    let tr = dir.path().join("tr");
    ok(&[
        "synth",
        "--s-dist",
        "exp:0.002",
        "--c-dist",
        "exp:0.05",
        "--pairs",
        "12",
        "--horizon",
        "300000",
        "--seed",
        "3",
        "--out",
        s(&tr),
    ]);
    let meta = json(&tr.join("trace.csv.meta.json"));
    assert_eq!(meta["run"]["command"], "synth");
    let fit = dir.path().join("fit");
    ok(&[
        "fit",
        "--trace",
        s(&tr.join("trace.csv")),
        "--model",
        "exp",
        "--bootstrap",
        "200",
        "--out",
        s(&fit),
    ]);
    let summary = json(&fit.join("fit_summary.json"));
    let rate = &summary["summary"][0];
    assert_eq!(rate["param"], "rate");
    assert!(rate["count"].as_u64().unwrap() >= 10);
    assert!(
        (rate["mean"].as_f64().unwrap() / 0.002 - 1.0).abs() < 0.1,
        "{rate}"
    );
    let csv = fs::read_to_string(fit.join("fit.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 12);

    let c = dir.path().join("fitc");
    ok(&[
        "fit",
        "--trace",
        s(&tr.join("trace.csv")),
        "--quantity",
        "contact",
        "--model",
        "pareto",
        "--bootstrap",
        "50",
        "--out",
        s(&c),
    ]);
    let csv = fs::read_to_string(c.join("fit.csv")).unwrap();
    assert!(csv.lines().skip(2).all(|l| l.contains(",contact,pareto,")));
}

#[test]
fn fit_with_no_eligible_pairs_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("small.csv");
    fs::write(
        &trace,
        "node_a,node_b,t_start,t_end\n0,1,0,5\n0,1,100,110\n1,2,3,4\n",
    )
    .unwrap();
    let out = dir.path().join("fit");
    let res = ok(&["fit", "--trace", s(&trace), "--out", s(&out)]);
    assert!(String::from_utf8_lossy(&res.stderr).contains("WARN"));
    let csv = fs::read_to_string(out.join("fit.csv")).unwrap();
    assert_eq!(
        csv.lines().nth(1),
        Some("node_a,node_b,quantity,model,param1,param2,n,cvm,rejected")
    );
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(json(&out.join("fit_summary.json"))["pairs_fitted"], 0);
    assert_eq!(
        code(&[
            "fit",
            "--trace",
            s(&dir.path().join("missing.csv")),
            "--out",
            s(&out)
        ]),
        1
    );
}

#[test]
fn dc_joint_statistics() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "dc-joint",
        "--dc",
        "stoch:0.025:0.02",
        "--horizon",
        "4e6",
        "--lambda",
        "0.001",
        "--samples",
        "20000",
        "--segments",
        "--out",
        s(dir.path()),
    ]);
    let doc = json(&dir.path().join("dc_joint.json"));
    let m = &doc["measured"];
    assert!((m["on_mean"].as_f64().unwrap() / 20.0 - 1.0).abs() < 0.03);
    assert!((m["off_mean"].as_f64().unwrap() / 81.25 - 1.0).abs() < 0.03);
    assert_eq!(doc["expected_on_mean"], 20.0);
    let d = doc["s_tilde_vs_deterministic_equivalent"][0]["sup_distance"]
        .as_f64()
        .unwrap();
    assert!(d < 0.05, "sup {d}");
    assert!(dir.path().join("segments.csv").exists());
    assert_eq!(
        code(&["dc-joint", "--dc", "det:20:100", "--out", s(dir.path())]),
        1
    );
}
