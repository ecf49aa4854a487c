//! One-shot aggregate of every prediction for a configuration.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::contact::{
    c_tilde_from, c_tilde_weights, dist_c_tilde_stay_awake, CTildeWeights, HModel,
};
use super::intercontact::{
    dist_s_tilde_negligible, g_p_nonneg, s_tilde_nonneg_from, SamplerConfig,
};
use super::mixture::{write_grid_csv, MixtureDist};
use super::negligible::{
    g_p_auto, moments_n, moments_s_tilde, pareto_tail_check, pmf_n_table, GPpair, MomentsReport,
    TailSpec,
};
use super::phase::{phase_type_fit, PhaseTypeSpec};
use crate::error::{domain, Result};
use crate::proc::DistSpec;
use crate::sched::{deterministic_equivalent, joint_off_moments, DutyCycleSpec};
use crate::sim::SleepPolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictConfig {
    /// Without an intercontact distribution only the duty-cycle part is reported.
    pub s_dist: Option<DistSpec>,
    /// Present for non-negligible contacts.
    pub c_dist: Option<DistSpec>,
    pub dc: DutyCycleSpec,
    pub policy: SleepPolicy,
    pub k_max: u64,
    pub grid_points: usize,
    pub sampler: SamplerConfig,
}

impl PredictConfig {
    pub fn new(s_dist: Option<DistSpec>, c_dist: Option<DistSpec>, dc: DutyCycleSpec) -> Self {
        Self {
            s_dist,
            c_dist,
            dc,
            policy: SleepPolicy::SleepAlways,
            k_max: 50,
            grid_points: 401,
            sampler: SamplerConfig::default(),
        }
    }

    fn effective_policy(&self) -> SleepPolicy {
        if self.dc.stay_awake_on_contact {
            SleepPolicy::StayAwakeOnContact
        } else {
            self.policy
        }
    }
}

/// Joint OFF-time moments of a stochastic schedule and the deterministic
/// schedule with the same mean ON and OFF lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutyCycleReport {
    pub off_mean: f64,
    pub off_second_moment: f64,
    pub off_cv2: f64,
    pub deterministic_equivalent: DutyCycleSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactReport {
    pub h_table: Vec<(u64, f64)>,
    pub h_mean: f64,
    /// Total mass of the contact-hit density as printed, before renormalization.
    pub printed_hit_mass: f64,
    pub c_tilde_weights: CTildeWeights,
    pub gp_hat: GPpair,
    pub pseudo_weight: f64,
    pub c_tilde_grid: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub config: PredictConfig,
    /// `(τ, T)` used by the model, after replacing a stochastic schedule.
    pub window: Option<(f64, f64)>,
    pub duty_cycle: Option<DutyCycleReport>,
    pub gp: Option<GPpair>,
    pub n_table: Vec<(u64, f64)>,
    /// `(E[N], E[N²], cv²_N)`.
    pub n_moments: Option<(f64, f64, f64)>,
    pub s_tilde: Option<MomentsReport>,
    pub tail: Option<TailSpec>,
    pub phase_type: Option<PhaseTypeSpec>,
    pub s_tilde_grid: Vec<(f64, f64)>,
    pub contacts: Option<ContactReport>,
}

/// Smallest power-of-two multiple of `start` where the CDF reaches `level`.
fn grid_extent(m: &MixtureDist, start: f64, level: f64) -> f64 {
    let mut x = start.max(1e-9);
    while m.cdf(x) < level && x < 1e12 {
        x *= 2.0;
    }
    x
}

fn window_of(dc: &DutyCycleSpec) -> Result<((f64, f64), Option<DutyCycleReport>)> {
    dc.validate()?;
    if let Some(tp) = dc.tau_period() {
        return Ok((tp, None));
    }
    let (off_mean, off_second_moment, off_cv2) = joint_off_moments(dc)?;
    let det = deterministic_equivalent(dc)?;
    let tp = det.tau_period().expect("deterministic equivalent");
    let r = DutyCycleReport {
        off_mean,
        off_second_moment,
        off_cv2,
        deterministic_equivalent: det,
    };
    Ok((tp, Some(r)))
}

/// The analytic laws of `S̃` and, with contacts, `C̃` for a configuration.
#[derive(Debug, Clone)]
pub struct PredictedDists {
    pub window: (f64, f64),
    pub s_tilde: MixtureDist,
    pub c_tilde: Option<MixtureDist>,
}

pub fn prediction_dists(cfg: &PredictConfig) -> Result<PredictedDists> {
    let ((tau, period), _) = window_of(&cfg.dc)?;
    let Some(s_dist) = &cfg.s_dist else {
        return domain("prediction needs an intercontact distribution");
    };
    let (s_tilde, c_tilde) = match &cfg.c_dist {
        None => (
            dist_s_tilde_negligible(s_dist, g_p_auto(s_dist, tau, period)?, cfg.sampler)?,
            None,
        ),
        Some(c_dist) => {
            let h = HModel::new(c_dist, tau, period)?;
            let gp_hat = g_p_nonneg(s_dist, c_dist, tau, period)?;
            let policy = cfg.effective_policy();
            let c_tilde = match policy {
                SleepPolicy::SleepAlways => c_tilde_from(&h)?,
                SleepPolicy::StayAwakeOnContact => dist_c_tilde_stay_awake(c_dist, tau, period)?,
            };
            let s_tilde =
                s_tilde_nonneg_from(s_dist, c_dist, &h, gp_hat, tau, period, policy, cfg.sampler)?;
            (s_tilde, Some(c_tilde))
        }
    };
    Ok(PredictedDists {
        window: (tau, period),
        s_tilde,
        c_tilde,
    })
}

pub fn predict(cfg: &PredictConfig) -> Result<PredictionReport> {
    let (window, duty_cycle) = window_of(&cfg.dc)?;
    let mut report = PredictionReport {
        config: cfg.clone(),
        window: Some(window),
        duty_cycle,
        gp: None,
        n_table: Vec::new(),
        n_moments: None,
        s_tilde: None,
        tail: None,
        phase_type: None,
        s_tilde_grid: Vec::new(),
        contacts: None,
    };
    let Some(s_dist) = &cfg.s_dist else {
        return Ok(report);
    };
    let (tau, period) = window;
    let s = s_dist.build()?;
    let gp = g_p_auto(s_dist, tau, period)?;
    let moments = moments_s_tilde(s.moments(), gp)?;
    report.gp = Some(gp);
    report.n_table = pmf_n_table(gp, cfg.k_max);
    report.n_moments = Some(moments_n(gp)?);
    if let DistSpec::Pareto { alpha, b } = s_dist {
        report.tail = Some(pareto_tail_check(*alpha, *b, gp)?);
    }
    report.phase_type = match moments.cv2 {
        Some(cv2) if cv2 > 0.0 => phase_type_fit(moments.mean, cv2).ok(),
        _ => None,
    };
    report.s_tilde = Some(moments);

    let s_tilde = match &cfg.c_dist {
        None => dist_s_tilde_negligible(s_dist, gp, cfg.sampler)?,
        Some(c_dist) => {
            let h = HModel::new(c_dist, tau, period)?;
            let gp_hat = g_p_nonneg(s_dist, c_dist, tau, period)?;
            let policy = cfg.effective_policy();
            let c_tilde = match policy {
                SleepPolicy::SleepAlways => c_tilde_from(&h)?,
                SleepPolicy::StayAwakeOnContact => dist_c_tilde_stay_awake(c_dist, tau, period)?,
            };
            let c_max =
                grid_extent(&c_tilde, tau, 0.999).min(if policy == SleepPolicy::SleepAlways {
                    tau
                } else {
                    f64::INFINITY
                });
            report.contacts = Some(ContactReport {
                h_table: (1..=cfg.k_max).map(|k| (k, h.pmf(k))).collect(),
                h_mean: h.mean,
                printed_hit_mass: h.printed_hit_mass,
                c_tilde_weights: c_tilde_weights(&h),
                gp_hat,
                pseudo_weight: if policy == SleepPolicy::SleepAlways {
                    h.pseudo_weight()
                } else {
                    0.0
                },
                c_tilde_grid: c_tilde.grid(cfg.grid_points, c_max),
            });
            s_tilde_nonneg_from(s_dist, c_dist, &h, gp_hat, tau, period, policy, cfg.sampler)?
        }
    };
    let x_max = grid_extent(&s_tilde, s.moments().mean.min(1e9).max(period), 0.999);
    report.s_tilde_grid = s_tilde.grid(cfg.grid_points, x_max);
    Ok(report)
}

impl PredictionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `prediction.json`, `n_pmf.csv` and the CDF grids into `dir`;
    /// returns the paths written.
    pub fn write_files(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join("prediction.json");
        std::fs::write(&json, self.to_json()? + "\n")?;
        written.push(json);
        if !self.n_table.is_empty() {
            let path = dir.join("n_pmf.csv");
            let mut out = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
            out.write_record(["k", "pmf"])?;
            for (k, p) in &self.n_table {
                out.write_record([k.to_string(), p.to_string()])?;
            }
            out.flush()?;
            written.push(path);
        }
        let grids = [
            ("s_tilde_cdf.csv", Some(&self.s_tilde_grid)),
            (
                "c_tilde_cdf.csv",
                self.contacts.as_ref().map(|c| &c.c_tilde_grid),
            ),
        ];
        for (name, grid) in grids {
            if let Some(g) = grid.filter(|g| !g.is_empty()) {
                let path = dir.join(name);
                write_grid_csv(g, BufWriter::new(File::create(&path)?))?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::negligible::Behaviour;

    fn quick(mut cfg: PredictConfig) -> PredictConfig {
        cfg.sampler.budget = 20_000;
        cfg.grid_points = 51;
        cfg
    }

    #[test]
    fn pareto_report_has_tail_and_class() {
        let dc = DutyCycleSpec::deterministic(20.0, 100.0).unwrap();
        let r = predict(&quick(PredictConfig::new(
            Some(DistSpec::pareto(1.01, 1000.0)),
            None,
            dc,
        )))
        .unwrap();
        let tail = r.tail.unwrap();
        assert_eq!(tail.exponent, 1.01);
        assert_eq!(
            r.s_tilde.as_ref().unwrap().classification,
            Behaviour::Undefined
        );
        assert!(r.phase_type.is_none());
        let sum: f64 = r.n_table.iter().map(|(_, p)| p).sum();
        assert!(sum > 0.9 && sum <= 1.0 + 1e-12);
        let json = r.to_json().unwrap();
        let back: PredictionReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.gp, r.gp);
    }

    #[test]
    fn full_report_and_files() {
        let dc = DutyCycleSpec::deterministic(20.0, 100.0).unwrap();
        let cfg = quick(PredictConfig::new(
            Some(DistSpec::exponential(0.001)),
            Some(DistSpec::exponential(0.02)),
            dc,
        ));
        let r = predict(&cfg).unwrap();
        let c = r.contacts.as_ref().unwrap();
        assert!(c.pseudo_weight > 0.0);
        assert!(c.c_tilde_grid.iter().all(|(x, _)| *x <= 20.0));
        assert!((c.c_tilde_grid.last().unwrap().1 - 1.0).abs() < 1e-9);
        assert!(r.s_tilde_grid.iter().any(|(x, _)| *x == 80.0));
        let dir = tempfile::tempdir().unwrap();
        let files = r.write_files(dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        let grid = std::fs::read_to_string(dir.path().join("c_tilde_cdf.csv")).unwrap();
        assert!(grid.starts_with("x,cdf\n"));
    }

    #[test]
    fn stochastic_schedule_uses_equivalent() {
        let dc = DutyCycleSpec::stochastic(0.025, 0.02).unwrap();
        let r = predict(&PredictConfig::new(None, None, dc)).unwrap();
        let d = r.duty_cycle.unwrap();
        assert!((d.off_cv2 - 1.96).abs() < 0.01);
        let (tau, period) = r.window.unwrap();
        assert!((tau - 20.0).abs() < 1e-9);
        assert!((period - tau - d.off_mean).abs() < 1e-9);
        assert!(r.gp.is_none());
        assert!(prediction_dists(&PredictConfig::new(None, None, dc)).is_err());
    }

    #[test]
    fn dists_match_report_grid() {
        let dc = DutyCycleSpec::deterministic(20.0, 100.0).unwrap();
        let cfg = quick(PredictConfig::new(
            Some(DistSpec::exponential(0.001)),
            Some(DistSpec::exponential(0.02)),
            dc,
        ));
        let r = predict(&cfg).unwrap();
        let d = prediction_dists(&cfg).unwrap();
        for (x, f) in &r.s_tilde_grid {
            assert_eq!(d.s_tilde.cdf(*x), *f);
        }
        let c = d.c_tilde.unwrap();
        for (x, f) in &r.contacts.unwrap().c_tilde_grid {
            assert_eq!(c.cdf(*x), *f);
        }
    }
}
