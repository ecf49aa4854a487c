//! Analytic prediction of the measured process.

use anyhow::{bail, Result};
use clap::Args;
use dcproc_core::model::{predict, PredictConfig, SamplerConfig};
use dcproc_core::proc::DistSpec;
use dcproc_core::sched::DutyCycleSpec;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::Command;
use crate::common::{axis, Mode, Outputs, Plot, Policy};
use crate::config::{self, RunConfig};

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    /// Intercontact law; without it only the duty cycle is analysed.
    #[arg(long, value_parser = crate::parse_dist)]
    s_dist: Option<DistSpec>,
    /// Contact-duration law; requires `--full`.
    #[arg(long, value_parser = crate::parse_dist)]
    c_dist: Option<DistSpec>,
    #[arg(long, value_parser = crate::parse_dc)]
    dc: Option<DutyCycleSpec>,
    /// Model non-negligible contacts.
    #[arg(long)]
    #[serde(skip)]
    full: bool,
    #[arg(long, value_enum)]
    policy: Option<Policy>,
    /// Largest N (and H) tabulated.
    #[arg(long)]
    k_max: Option<u64>,
    /// Points in each CDF grid.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Draws backing sampled mixture components.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictParams {
    #[serde(default)]
    pub s_dist: Option<DistSpec>,
    #[serde(default)]
    pub c_dist: Option<DistSpec>,
    pub dc: DutyCycleSpec,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub policy: Policy,
    #[serde(default = "default_k_max")]
    pub k_max: u64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_k_max() -> u64 {
    50
}

fn default_grid_points() -> usize {
    401
}

fn default_budget() -> usize {
    SamplerConfig::default().budget
}

impl PredictParams {
    pub fn to_predict_config(&self, seed: u64) -> Result<PredictConfig> {
        match (self.mode, &self.s_dist, &self.c_dist) {
            (Mode::Full, _, None) => bail!("full mode needs a contact distribution (c_dist)"),
            (Mode::Full, None, _) => bail!("full mode needs an intercontact distribution (s_dist)"),
            (Mode::Negligible, _, Some(_)) => bail!("c_dist is only used in full mode; add --full"),
            _ => {}
        }
        if self.k_max == 0 || self.grid_points < 2 || self.budget == 0 {
            bail!("k_max and budget must be positive and grid_points at least 2");
        }
        Ok(PredictConfig {
            s_dist: self.s_dist.clone(),
            c_dist: self.c_dist.clone(),
            dc: self.dc,
            policy: self.policy.into(),
            k_max: self.k_max,
            grid_points: self.grid_points,
            sampler: SamplerConfig {
                budget: self.budget,
                seed,
            },
        })
    }
}

impl Command for PredictArgs {
    const NAME: &'static str = "predict";
    type Params = PredictParams;

    fn cli_map(&self) -> Result<Map<String, Value>> {
        let mut m = config::cli_map(self)?;
        if self.full {
            m.insert("mode".into(), json!(Mode::Full));
        }
        Ok(m)
    }

    fn run(cfg: &RunConfig<PredictParams>) -> Result<()> {
        let report = predict(&cfg.params.to_predict_config(cfg.seed)?)?;
        let mut out = Outputs::create(&cfg.out, cfg.to_value())?;
        out.json("prediction.json", &json!({ "prediction": report }))?;

        let mut plots = Vec::new();
        let label = cfg
            .params
            .s_dist
            .as_ref()
            .map(|s| format!("{} under {}", s.label(), cfg.params.dc.label()));
        if !report.n_table.is_empty() {
            out.csv_rows("n_pmf.csv", &["k", "pmf"], &report.n_table)?;
            plots.push(Plot {
                id: "n_pmf",
                title: "Contacts per measured intercontact".into(),
                file: "n_pmf.csv",
                kind: "bar",
                x: axis("k", "N", "linear"),
                y: axis("pmf", "P(N = k)", "log"),
                series: label.clone().unwrap_or_default(),
            });
        }
        if !report.s_tilde_grid.is_empty() {
            out.csv_rows("s_tilde_cdf.csv", &["x", "cdf"], &report.s_tilde_grid)?;
            plots.push(Plot {
                id: "s_tilde_ccdf",
                title: "Measured intercontact time".into(),
                file: "s_tilde_cdf.csv",
                kind: "ccdf",
                x: axis("x", "time (s)", "log"),
                y: axis("cdf", "P(S > x)", "log"),
                series: label.clone().unwrap_or_default(),
            });
        }
        if let Some(c) = &report.contacts {
            out.csv_rows("h_pmf.csv", &["k", "pmf"], &c.h_table)?;
            out.csv_rows("c_tilde_cdf.csv", &["x", "cdf"], &c.c_tilde_grid)?;
            plots.push(Plot {
                id: "c_tilde_cdf",
                title: "Measured contact duration".into(),
                file: "c_tilde_cdf.csv",
                kind: "line",
                x: axis("x", "duration (s)", "linear"),
                y: axis("cdf", "P(C ≤ x)", "linear"),
                series: label.unwrap_or_default(),
            });
        }
        out.json("plots.json", &json!({ "plots": plots }))?;
        Ok(())
    }
}
