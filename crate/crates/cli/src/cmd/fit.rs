//! Per-pair distribution fitting on a contact trace.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use dcproc_core::fit::{
    fit_all_pairs, summarize, write_fit_csv, FitConfig, Model, DEFAULT_BOOTSTRAP, MIN_SAMPLES,
};
use dcproc_core::proc::Quantity;
use dcproc_core::trace::{parse_trace, TraceFormat};
use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Command;
use crate::common::{serde_name, Outputs};
use crate::config::RunConfig;

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Trace file; a `<file>.meta.json` sidecar is read when present.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// `intervals` (node_a,node_b,t_start,t_end) or `events` (node_a,node_b,time,event).
    #[arg(long, value_parser = parse_format)]
    format: Option<TraceFormat>,
    /// `intercontact` or `contact`.
    #[arg(long, value_parser = serde_name::<Quantity>)]
    quantity: Option<Quantity>,
    /// Candidate model; repeat for several. Defaults to both.
    #[arg(long = "model", value_parser = parse_model)]
    models: Vec<Model>,
    /// Significance level of the goodness-of-fit test.
    #[arg(long)]
    phi: Option<f64>,
    /// Bootstrap replicates per test.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Tie-breaking jitter width; defaults to the trace granularity.
    #[arg(long)]
    granularity: Option<f64>,
}

fn parse_format(s: &str) -> std::result::Result<TraceFormat, String> {
    s.parse().map_err(|e: dcproc_core::Error| e.to_string())
}

fn parse_model(s: &str) -> std::result::Result<Model, String> {
    s.parse().map_err(|e: dcproc_core::Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitParams {
    pub trace: PathBuf,
    #[serde(default = "default_format")]
    pub format: TraceFormat,
    #[serde(default = "default_quantity")]
    pub quantity: Quantity,
    #[serde(default = "default_models")]
    pub models: Vec<Model>,
    #[serde(default = "default_phi")]
    pub phi: f64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default)]
    pub granularity: Option<f64>,
}

fn default_format() -> TraceFormat {
    TraceFormat::ContactIntervals
}

fn default_quantity() -> Quantity {
    Quantity::Intercontact
}

fn default_models() -> Vec<Model> {
    vec![Model::Exponential, Model::Pareto]
}

fn default_phi() -> f64 {
    0.01
}

fn default_bootstrap() -> usize {
    DEFAULT_BOOTSTRAP
}

impl Command for FitArgs {
    const NAME: &'static str = "fit";
    type Params = FitParams;

    fn run(cfg: &RunConfig<FitParams>) -> Result<()> {
        let p = &cfg.params;
        anyhow::ensure!(
            p.phi > 0.0 && p.phi < 1.0,
            "phi must lie in (0, 1), got {}",
            p.phi
        );
        anyhow::ensure!(p.bootstrap > 0, "bootstrap must be positive");
        anyhow::ensure!(!p.models.is_empty(), "at least one model is needed");
        let (meta, series) = parse_trace(&p.trace, p.format)
            .with_context(|| format!("reading trace {}", p.trace.display()))?;
        let fit_cfg = FitConfig {
            phi: p.phi,
            bootstrap: p.bootstrap,
            seed: cfg.seed,
            granularity: Some(p.granularity.unwrap_or(meta.granularity)),
        };
        let rows = fit_all_pairs(&series, p.quantity, &p.models, &fit_cfg);
        let fitted_pairs = series
            .iter()
            .filter(|cs| cs.samples(p.quantity).len() >= MIN_SAMPLES)
            .count();
        if rows.is_empty() {
            warn!("no pair has {MIN_SAMPLES} or more samples; writing an empty fit table");
        }

        let mut out = Outputs::create(&cfg.out, cfg.to_value())?;
        out.csv_with("fit.csv", |w| write_fit_csv(&rows, w))?;
        let per_model: Vec<_> = p
            .models
            .iter()
            .map(|m| {
                let of_model = rows.iter().filter(|r| r.model == *m);
                json!({
                    "model": m,
                    "fitted": of_model.clone().count(),
                    "rejected": of_model.filter(|r| r.rejected).count(),
                })
            })
            .collect();
        out.json(
            "fit_summary.json",
            &json!({
                "trace": meta,
                "pairs": series.len(),
                "pairs_fitted": fitted_pairs,
                "models": per_model,
                "summary": summarize(&rows),
            }),
        )?;
        Ok(())
    }
}
