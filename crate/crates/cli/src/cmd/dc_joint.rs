//! Statistics of a sampled stochastic joint schedule.

use anyhow::{bail, Result};
use clap::Args;
use dcproc_core::model::{dist_s_tilde_negligible, g_p_auto, SamplerConfig};
use dcproc_core::proc::{DistSpec, RandomStream};
use dcproc_core::sched::{
    chain_off_moments, deterministic_equivalent, joint_off_moments, sample_joint_schedule,
    DutyCycleSpec,
};
use dcproc_core::sim::{filter_with_stochastic_dc, SimConfig};
use dcproc_core::stats::{sorted, sup_distance_sorted};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Command;
use crate::common::Outputs;
use crate::config::RunConfig;

#[derive(Debug, Args, Serialize)]
pub struct DcJointArgs {
    /// Stochastic duty cycle, `stoch:BETA:ALPHA`.
    #[arg(long, value_parser = crate::parse_dc)]
    dc: Option<DutyCycleSpec>,
    /// Length of the sampled schedule in seconds.
    #[arg(long)]
    horizon: Option<f64>,
    /// Exponential intercontact rate to filter through the schedule; repeat
    /// for several. Each is compared with the deterministic equivalent.
    #[arg(long = "lambda")]
    lambdas: Vec<f64>,
    /// Measured intercontacts per rate.
    #[arg(long)]
    samples: Option<usize>,
    /// Also write every joint segment.
    #[arg(long, num_args = 0, default_missing_value = "true")]
    segments: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcJointParams {
    pub dc: DutyCycleSpec,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub segments: bool,
}

fn default_horizon() -> f64 {
    1e7
}

fn default_samples() -> usize {
    100_000
}

fn moments_json((mean, second_moment, cv2): (f64, f64, f64)) -> serde_json::Value {
    json!({ "off_mean": mean, "off_second_moment": second_moment, "off_cv2": cv2 })
}

impl Command for DcJointArgs {
    const NAME: &'static str = "dc-joint";
    type Params = DcJointParams;

    fn run(cfg: &RunConfig<DcJointParams>) -> Result<()> {
        let p = &cfg.params;
        let Some((beta, _)) = p.dc.rates() else {
            bail!("dc-joint needs a stochastic duty cycle (stoch:BETA:ALPHA)");
        };
        let root = RandomStream::new(cfg.seed);
        let schedule = sample_joint_schedule(&p.dc, p.horizon, root.split(0))?;
        let det = deterministic_equivalent(&p.dc)?;
        let (tau, period) = det.tau_period().expect("deterministic equivalent");

        let mut comparisons = Vec::new();
        for (i, &lambda) in p.lambdas.iter().enumerate() {
            let s = DistSpec::exponential(lambda);
            s.validate()?;
            let mp = filter_with_stochastic_dc(
                &s,
                None,
                &p.dc,
                &SimConfig::negligible(p.samples),
                root.split(1 + i as u64),
            )?;
            let sampler = SamplerConfig {
                seed: cfg.seed,
                ..SamplerConfig::default()
            };
            let model = dist_s_tilde_negligible(&s, g_p_auto(&s, tau, period)?, sampler)?;
            let d = sup_distance_sorted(
                &sorted(&mp.s_tilde),
                |x| model.cdf(x),
                |x| model.cdf_left(x),
            );
            comparisons
                .push(json!({ "lambda": lambda, "samples": mp.s_tilde.len(), "sup_distance": d }));
        }

        let mut out = Outputs::create(&cfg.out, cfg.to_value())?;
        out.json(
            "dc_joint.json",
            &json!({
                "measured": schedule.stats(),
                "expected_on_mean": 1.0 / (2.0 * beta),
                "formula": moments_json(joint_off_moments(&p.dc)?),
                "chain": moments_json(chain_off_moments(&p.dc)?),
                "deterministic_equivalent": det,
                "s_tilde_vs_deterministic_equivalent": comparisons,
            }),
        )?;
        if p.segments {
            out.csv_with("segments.csv", |w| schedule.write_csv(w))?;
        }
        Ok(())
    }
}
