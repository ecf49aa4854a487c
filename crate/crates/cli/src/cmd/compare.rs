//! Simulation against prediction for one configuration.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use dcproc_core::model::{pmf_n, prediction_dists, GPpair, PredictionReport};
use dcproc_core::stats::{
    sample_moments, sorted, sup_distance_sorted, tail_slope, tv_distance_counts,
};
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::Command;
use crate::common::{csv_reader, read_json, serde_name, Outputs};
use crate::config::RunConfig;

/// Keys that must agree between the two runs.
const SCENARIO_KEYS: [&str; 5] = ["s_dist", "c_dist", "dc", "mode", "policy"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum NModel {
    /// Renewal prediction from `(g, p)`.
    #[default]
    Renewal,
    /// Geometric approximation with `g = p = τ/T`.
    Geometric,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    /// Output directory of a `simulate` run.
    #[arg(long)]
    simulate: Option<PathBuf>,
    /// Output directory of a `predict` run.
    #[arg(long)]
    predict: Option<PathBuf>,
    #[arg(long, value_parser = serde_name::<NModel>)]
    n_model: Option<NModel>,
    /// Total-variation tolerance on the N pmf.
    #[arg(long)]
    tv_n: Option<f64>,
    /// Sup-distance tolerance on the measured intercontact CDF.
    #[arg(long)]
    sup_s: Option<f64>,
    /// Sup-distance tolerance on the measured contact CDF.
    #[arg(long)]
    sup_c: Option<f64>,
    /// Relative tolerance on the measured intercontact mean.
    #[arg(long)]
    mean_rel: Option<f64>,
    /// Relative tolerance on the measured intercontact cv².
    #[arg(long)]
    cv2_rel: Option<f64>,
    /// Absolute tolerance on the log-log tail slope.
    #[arg(long)]
    tail_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareParams {
    pub simulate: PathBuf,
    pub predict: PathBuf,
    #[serde(default)]
    pub n_model: NModel,
    #[serde(default = "default_tv")]
    pub tv_n: f64,
    #[serde(default = "default_sup")]
    pub sup_s: f64,
    #[serde(default = "default_sup")]
    pub sup_c: f64,
    #[serde(default = "default_mean_rel")]
    pub mean_rel: f64,
    #[serde(default = "default_cv2_rel")]
    pub cv2_rel: f64,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
}

fn default_tv() -> f64 {
    0.02
}

fn default_sup() -> f64 {
    0.03
}

fn default_mean_rel() -> f64 {
    0.02
}

fn default_cv2_rel() -> f64 {
    0.05
}

fn default_tail_tol() -> f64 {
    0.15
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    metric: &'static str,
    value: f64,
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn new(metric: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            metric,
            value,
            tolerance,
            pass: value.abs() <= tolerance,
        }
    }
}

#[derive(Default)]
struct Samples {
    s_tilde: Vec<f64>,
    c_tilde: Vec<f64>,
    n: Vec<u64>,
}

fn read_samples(path: &Path) -> Result<Samples> {
    let mut s = Samples::default();
    for row in csv_reader(path)?.deserialize::<(String, f64)>() {
        let (q, v) = row.with_context(|| format!("reading {}", path.display()))?;
        match q.as_str() {
            "s_tilde" => s.s_tilde.push(v),
            "c_tilde" => s.c_tilde.push(v),
            "n" => s.n.push(v as u64),
            _ => {}
        }
    }
    Ok(s)
}

fn run_params<'a>(doc: &'a Value, file: &Path, command: &str) -> Result<&'a Value> {
    let run = doc
        .get("run")
        .with_context(|| format!("{} carries no run config", file.display()))?;
    if run["command"] != command {
        bail!("{} is not a {command} output", file.display());
    }
    Ok(&run["params"])
}

fn rel(est: f64, truth: f64) -> f64 {
    est / truth - 1.0
}

impl Command for CompareArgs {
    const NAME: &'static str = "compare";
    type Params = CompareParams;

    fn run(cfg: &RunConfig<CompareParams>) -> Result<()> {
        let p = &cfg.params;
        let sim_file = p.simulate.join("simulate.json");
        let pred_file = p.predict.join("prediction.json");
        let sim_doc = read_json(&sim_file)?;
        let pred_doc = read_json(&pred_file)?;
        let sim_params = run_params(&sim_doc, &sim_file, "simulate")?;
        let pred_params = run_params(&pred_doc, &pred_file, "predict")?;
        for key in SCENARIO_KEYS {
            let (a, b) = (&sim_params[key], &pred_params[key]);
            if a != b {
                bail!("simulate and predict runs disagree on `{key}`: {a} vs {b}");
            }
        }
        let report: PredictionReport = serde_json::from_value(pred_doc["prediction"].clone())
            .with_context(|| format!("parsing {}", pred_file.display()))?;
        if report.config.s_dist.is_none() {
            bail!("prediction has no intercontact distribution to compare against");
        }
        let samples = read_samples(&p.simulate.join("samples.csv"))?;
        let dists = prediction_dists(&report.config)?;
        let (tau, period) = dists.window;

        let mut checks = Vec::new();
        let gp = match (p.n_model, &report.contacts, report.gp) {
            (NModel::Geometric, _, _) => Some(GPpair::geometric(tau, period)?),
            (NModel::Renewal, Some(c), _) => Some(c.gp_hat),
            (NModel::Renewal, None, gp) => gp,
        };
        if let (Some(gp), false) = (gp, samples.n.is_empty()) {
            let tv = tv_distance_counts(&samples.n, |k| pmf_n(gp, k).unwrap_or(0.0));
            checks.push(Check::new("tv_n", tv, p.tv_n));
        }
        let s = sorted(&samples.s_tilde);
        if s.is_empty() {
            bail!("simulation recorded no measured intercontacts");
        }
        let d = sup_distance_sorted(&s, |x| dists.s_tilde.cdf(x), |x| dists.s_tilde.cdf_left(x));
        checks.push(Check::new("sup_s_tilde", d, p.sup_s));
        if let (Some(c_tilde), false) = (&dists.c_tilde, samples.c_tilde.is_empty()) {
            let c = sorted(&samples.c_tilde);
            let d = sup_distance_sorted(&c, |x| c_tilde.cdf(x), |x| c_tilde.cdf_left(x));
            checks.push(Check::new("sup_c_tilde", d, p.sup_c));
        }
        // Closed-form moments describe the negligible-contact model only.
        if let (Some(m), None) = (&report.s_tilde, &report.contacts) {
            let sim = sample_moments(&s);
            if m.mean.is_finite() {
                checks.push(Check::new("mean_rel", rel(sim.mean, m.mean), p.mean_rel));
            }
            if let Some(cv2) = m.cv2.filter(|v| v.is_finite()) {
                checks.push(Check::new("cv2_rel", rel(sim.cv2, cv2), p.cv2_rel));
            }
        }
        if let Some(tail) = &report.tail {
            // Two decades of CCDF, from the 0.99 to the 0.9999 quantile.
            let q = |u: f64| s[((u * s.len() as f64) as usize).min(s.len() - 1)];
            match tail_slope(&s, 0.99, q(0.9999) / q(0.99)) {
                Ok(slope) => checks.push(Check::new("tail_slope", slope - tail.slope, p.tail_tol)),
                Err(e) => info!("tail slope skipped: {e}"),
            }
        }
        let pass = checks.iter().all(|c| c.pass);
        // A closed stdout must not abort the run before compare.json is written.
        let mut stdout = std::io::stdout().lock();
        for c in &checks {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            let _ = writeln!(
                stdout,
                "{:<12} {:>10.5} (tolerance {}) {verdict}",
                c.metric, c.value, c.tolerance
            );
        }
        let _ = writeln!(stdout, "overall {}", if pass { "PASS" } else { "FAIL" });

        let mut out = Outputs::create(&cfg.out, cfg.to_value())?;
        out.json(
            "compare.json",
            &json!({
                "simulate_run": sim_doc["run"],
                "predict_run": pred_doc["run"],
                "checks": checks,
                "pass": pass,
            }),
        )?;
        Ok(())
    }
}
