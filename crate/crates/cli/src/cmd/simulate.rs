//! Monte-Carlo filtering of a contact process through a duty cycle.

use anyhow::{bail, Result};
use clap::Args;
use dcproc_core::proc::{DistSpec, RandomStream};
use dcproc_core::sched::DutyCycleSpec;
use dcproc_core::sim::{
    filter_full, filter_negligible, filter_with_stochastic_dc, SimConfig, DEFAULT_CONTACT_CAP,
    DEFAULT_WARMUP,
};
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Command;
use crate::common::{Mode, Outputs, Policy};
use crate::config::RunConfig;

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Intercontact law, e.g. `exp:0.001` or `pareto:1.5:1000`.
    #[arg(long, value_parser = crate::parse_dist)]
    s_dist: Option<DistSpec>,
    /// Contact-duration law; required with `--mode full`.
    #[arg(long, value_parser = crate::parse_dist)]
    c_dist: Option<DistSpec>,
    /// Duty cycle, `det:TAU:T` or `stoch:BETA:ALPHA`.
    #[arg(long, value_parser = crate::parse_dc)]
    dc: Option<DutyCycleSpec>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Measured intercontacts (negligible) or detected contacts (full) to record.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum)]
    policy: Option<Policy>,
    /// Detections discarded before recording starts.
    #[arg(long)]
    warmup: Option<usize>,
    /// Independent replications sharing the sample target.
    #[arg(long)]
    workers: Option<usize>,
    /// Generated contacts after which the run gives up (exit code 2).
    #[arg(long)]
    contact_cap: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub s_dist: DistSpec,
    #[serde(default)]
    pub c_dist: Option<DistSpec>,
    pub dc: DutyCycleSpec,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub policy: Policy,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_contact_cap")]
    pub contact_cap: u64,
}

fn default_samples() -> usize {
    100_000
}

fn default_warmup() -> usize {
    DEFAULT_WARMUP
}

fn default_workers() -> usize {
    1
}

fn default_contact_cap() -> u64 {
    DEFAULT_CONTACT_CAP
}

impl Command for SimulateArgs {
    const NAME: &'static str = "simulate";
    type Params = SimulateParams;

    fn run(cfg: &RunConfig<SimulateParams>) -> Result<()> {
        let p = &cfg.params;
        p.s_dist.validate()?;
        p.dc.validate()?;
        if p.samples == 0 {
            bail!("samples must be positive");
        }
        let c_dist = match (p.mode, &p.c_dist) {
            (Mode::Full, None) => bail!("full mode needs a contact distribution (c_dist)"),
            (Mode::Negligible, Some(_)) => {
                bail!("c_dist is only used in full mode; add --mode full")
            }
            (_, c) => c.as_ref(),
        };
        let mut sim = match p.mode {
            Mode::Negligible => SimConfig::negligible(p.samples),
            Mode::Full => SimConfig::full(p.samples),
        }
        .with_policy(p.policy.into())
        .with_workers(p.workers);
        sim.warmup_detections = p.warmup;
        sim.contact_cap = p.contact_cap;

        let stream = RandomStream::new(cfg.seed);
        let mp = if p.dc.rates().is_some() {
            filter_with_stochastic_dc(&p.s_dist, c_dist, &p.dc, &sim, stream)?
        } else if let Some(c) = c_dist {
            filter_full(&p.s_dist, c, &p.dc, &sim, stream)?
        } else {
            filter_negligible(&p.s_dist, &p.dc, &sim, stream)?
        };
        info!(
            "{} measured intercontacts from {} generated contacts",
            mp.s_tilde.len(),
            mp.generated_contacts
        );

        let mut out = Outputs::create(&cfg.out, cfg.to_value())?;
        out.json("simulate.json", &json!({ "summary": mp.summary() }))?;
        out.csv_with("samples.csv", |w| mp.write_csv(w))?;
        Ok(())
    }
}
