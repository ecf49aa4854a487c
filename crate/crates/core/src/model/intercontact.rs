//! Distribution of the measured intercontact time `S̃`, for negligible and
//! non-negligible contacts.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::contact::{check_window, HModel, TruncatedContact};
use super::mixture::{
    Component, DistComponent, MixtureDist, PointMass, SamplerOnly, DEFAULT_SAMPLER_BUDGET,
    DEFAULT_SAMPLER_SEED,
};
use super::negligible::GPpair;
use super::phase::PhaseTypeSpec;
use crate::error::Result;
use crate::proc::series::interval_series;
use crate::proc::{Dist, DistSpec, RandomStream, StreamRng};
use crate::sim::SleepPolicy;

/// Sample budget and seed for sampler-only CDFs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub budget: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_SAMPLER_BUDGET,
            seed: DEFAULT_SAMPLER_SEED,
        }
    }
}

/// Which uniform offset starts the first intercontact after a detection
/// when computing `ĝ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GHatAnchor {
    /// The detected contact ended inside an ON interval.
    #[default]
    ZOn,
    /// The detected contact ended inside an OFF interval; `ĝ` then equals `p̂`.
    ZOff,
}

/// Draws `N`: 1 with probability `g`, otherwise `1 + K` with `K ≥ 1`
/// geometric of parameter `p`.
pub fn sample_n(gp: GPpair, rng: &mut StreamRng) -> u64 {
    if rng.uniform() < gp.g {
        return 1;
    }
    if gp.p >= 1.0 {
        return 2;
    }
    let k = (rng.uniform_pos().ln() / (-gp.p).ln_1p()).ceil().max(1.0);
    1 + k as u64
}

/// `(ĝ, p̂)`: detection probabilities when a real contact that starts in
/// an OFF interval can still be missed if it also ends there.
pub fn g_p_nonneg(s_dist: &DistSpec, c_dist: &DistSpec, tau: f64, period: f64) -> Result<GPpair> {
    g_p_nonneg_with(s_dist, c_dist, tau, period, GHatAnchor::ZOn)
}

pub fn g_p_nonneg_with(
    s_dist: &DistSpec,
    c_dist: &DistSpec,
    tau: f64,
    period: f64,
    anchor: GHatAnchor,
) -> Result<GPpair> {
    check_window(tau, period)?;
    let s = s_dist.build()?;
    let c = c_dist.build()?;
    let w = period - tau;
    // P(Z^OFF + C < T - τ): a contact starting in OFF also ends there.
    let miss = 1.0 - c.window_ccdf(w, w);
    let p = 1.0 - miss * interval_series(&s, w, period, 0, 0.0, w)?;
    let g = match anchor {
        GHatAnchor::ZOn => 1.0 - miss * interval_series(&s, tau, period, 0, tau, period)?,
        GHatAnchor::ZOff => p,
    };
    GPpair::new(g.clamp(0.0, 1.0), p.clamp(0.0, 1.0))
}

/// Random-sum sampler `S_1 + … + S_N`.
fn random_sum(s: Dist, gp: GPpair) -> impl Fn(&mut StreamRng) -> f64 + Send + Sync {
    move |rng: &mut StreamRng| (0..sample_n(gp, rng)).map(|_| s.sample(rng)).sum()
}

/// `S̃` with negligible contacts. Exponential `S` gives
/// `g·Exp(λ) + (1-g)·(Exp(λ) + Exp(λp))` in closed form; other kinds get
/// a sampler-only random sum.
pub fn dist_s_tilde_negligible(
    s_dist: &DistSpec,
    gp: GPpair,
    sampler: SamplerConfig,
) -> Result<MixtureDist> {
    let s = s_dist.build()?;
    if let Some(rate) = s.is_exponential() {
        let mut parts: Vec<(f64, Arc<dyn Component>)> = vec![(gp.g, Arc::new(DistComponent(s)))];
        if gp.g < 1.0 {
            let tail = PhaseTypeSpec::HypoExponential {
                erlang_stages: 1,
                erlang_rate: rate,
                exp_rate: rate * gp.p,
            };
            parts.push((1.0 - gp.g, Arc::new(tail)));
        }
        return MixtureDist::new(parts);
    }
    let stream = RandomStream::new(sampler.seed);
    Ok(MixtureDist::single(Arc::new(SamplerOnly::new(
        "random_sum",
        sampler.budget,
        stream,
        Arc::new(random_sum(s, gp)),
    ))))
}

/// `S̃` with non-negligible contacts: pseudo-intercontacts of length
/// `T - τ` plus `R + Σ S + Σ C^miss + R`. Staying awake removes the
/// pseudo-intercontacts.
pub fn dist_s_tilde_nonneg(
    s_dist: &DistSpec,
    c_dist: &DistSpec,
    tau: f64,
    period: f64,
    policy: SleepPolicy,
    sampler: SamplerConfig,
) -> Result<MixtureDist> {
    let h = HModel::new(c_dist, tau, period)?;
    let gp = g_p_nonneg(s_dist, c_dist, tau, period)?;
    s_tilde_nonneg_from(s_dist, c_dist, &h, gp, tau, period, policy, sampler)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn s_tilde_nonneg_from(
    s_dist: &DistSpec,
    c_dist: &DistSpec,
    h: &HModel,
    gp: GPpair,
    tau: f64,
    period: f64,
    policy: SleepPolicy,
    sampler: SamplerConfig,
) -> Result<MixtureDist> {
    let s = s_dist.build()?;
    let c = c_dist.build()?;
    let w = period - tau;
    let miss = TruncatedContact::new("c_miss", &c, w).ok();
    let p_off = w / period;
    let draw = move |rng: &mut StreamRng| {
        let residual = |rng: &mut StreamRng| {
            if rng.uniform() < p_off {
                w * rng.uniform()
            } else {
                0.0
            }
        };
        let n = sample_n(gp, rng);
        let mut total = residual(rng) + residual(rng);
        for i in 0..n {
            total += s.sample(rng);
            if i > 0 {
                if let Some(m) = &miss {
                    total += m.sample(rng);
                }
            }
        }
        total
    };
    let body: Arc<dyn Component> = Arc::new(SamplerOnly::new(
        "random_sum",
        sampler.budget,
        RandomStream::new(sampler.seed),
        Arc::new(draw),
    ));
    match policy {
        SleepPolicy::StayAwakeOnContact => Ok(MixtureDist::single(body)),
        SleepPolicy::SleepAlways => {
            let pseudo = h.pseudo_weight();
            let mut parts: Vec<(f64, Arc<dyn Component>)> = vec![(1.0 / h.mean, body)];
            if pseudo > 0.0 {
                parts.push((pseudo, Arc::new(PointMass(w))));
            }
            MixtureDist::new(parts)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::negligible::{g_p_exponential, g_p_numeric, pmf_n};
    use crate::sched::DutyCycleSpec;
    use crate::sim::{filter_full, filter_negligible, SimConfig};
    use crate::stats::{ks_distance, sorted, sup_distance_sorted, tv_distance_counts};
    use approx::assert_abs_diff_eq;

    fn small() -> SamplerConfig {
        SamplerConfig {
            budget: 200_000,
            seed: 1,
        }
    }

    #[test]
    fn n_sampler_matches_pmf() {
        let gp = GPpair::new(0.3, 0.15).unwrap();
        let mut rng = RandomStream::new(4).rng();
        let counts: Vec<u64> = (0..100_000).map(|_| sample_n(gp, &mut rng)).collect();
        let tv = tv_distance_counts(&counts, |k| pmf_n(gp, k).unwrap());
        assert!(tv < 0.01, "{tv}");
    }

    #[test]
    fn tiny_contacts_recover_negligible_model() {
        let s = DistSpec::exponential(0.01);
        let hat = g_p_nonneg(&s, &DistSpec::exponential(1e3), 20.0, 100.0).unwrap();
        let gp = g_p_exponential(0.01, 20.0, 100.0).unwrap();
        assert_abs_diff_eq!(hat.g, gp.g, epsilon = 1e-3);
        assert_abs_diff_eq!(hat.p, gp.p, epsilon = 1e-3);
        let z_off = g_p_nonneg_with(
            &s,
            &DistSpec::exponential(0.02),
            20.0,
            100.0,
            GHatAnchor::ZOff,
        )
        .unwrap();
        assert_eq!(z_off.g, z_off.p);
    }

    #[test]
    fn g_hat_n_matches_simulation() {
        let (s, c) = (DistSpec::exponential(0.001), DistSpec::exponential(0.02));
        let dc = DutyCycleSpec::deterministic(20.0, 100.0).unwrap();
        let mp = filter_full(&s, &c, &dc, &SimConfig::full(30_000), RandomStream::new(8)).unwrap();
        let gp = g_p_nonneg(&s, &c, 20.0, 100.0).unwrap();
        let tv = tv_distance_counts(&mp.n_counts, |k| pmf_n(gp, k).unwrap());
        assert!(tv < 0.03, "{tv}");
    }

    #[test]
    fn negligible_exponential_closed_form() {
        let gp = g_p_exponential(0.001, 20.0, 100.0).unwrap();
        let m = dist_s_tilde_negligible(&DistSpec::exponential(0.001), gp, small()).unwrap();
        let dc = DutyCycleSpec::deterministic(20.0, 100.0).unwrap();
        let mp = filter_negligible(
            &DistSpec::exponential(0.001),
            &dc,
            &SimConfig::negligible(50_000),
            RandomStream::new(3),
        )
        .unwrap();
        let d = ks_distance(&mp.s_tilde, |x| m.cdf(x));
        assert!(d < 0.015, "{d}");
    }

    #[test]
    fn negligible_sampler_for_other_kinds() {
        // Scale well above T so the density is slowly varying.
        let s = DistSpec::pareto(2.5, 3000.0);
        let gp = g_p_numeric(&s, 20.0, 100.0).unwrap();
        let m = dist_s_tilde_negligible(&s, gp, small()).unwrap();
        let dc = DutyCycleSpec::deterministic(20.0, 100.0).unwrap();
        let mp = filter_negligible(
            &s,
            &dc,
            &SimConfig::negligible(50_000),
            RandomStream::new(5),
        )
        .unwrap();
        let d = ks_distance(&mp.s_tilde, |x| m.cdf(x));
        assert!(d < 0.02, "{d}");
    }

    #[test]
    fn pseudo_weight_and_policies() {
        let (s, c) = (DistSpec::exponential(0.001), DistSpec::exponential(0.02));
        let m =
            dist_s_tilde_nonneg(&s, &c, 20.0, 100.0, SleepPolicy::SleepAlways, small()).unwrap();
        let jump = m.cdf(80.0) - m.cdf_left(80.0);
        let h = HModel::new(&c, 20.0, 100.0).unwrap();
        assert!(jump >= h.pseudo_weight() - 1e-12);
        let sa = dist_s_tilde_nonneg(
            &s,
            &c,
            20.0,
            100.0,
            SleepPolicy::StayAwakeOnContact,
            small(),
        )
        .unwrap();
        assert_eq!(sa.components().len(), 1);
        // Contacts far shorter than a period never span two ON intervals.
        let m = dist_s_tilde_nonneg(
            &s,
            &DistSpec::exponential(10.0),
            20.0,
            100.0,
            SleepPolicy::SleepAlways,
            small(),
        )
        .unwrap();
        assert!(m
            .components()
            .iter()
            .all(|(_, c)| c.name() != "point_mass(80)"));
    }

    #[test]
    fn nonneg_s_tilde_matches_simulation() {
        let (s, c) = (DistSpec::exponential(0.001), DistSpec::exponential(0.02));
        let dc = DutyCycleSpec::deterministic(20.0, 100.0).unwrap();
        let mp = filter_full(&s, &c, &dc, &SimConfig::full(30_000), RandomStream::new(12)).unwrap();
        let m =
            dist_s_tilde_nonneg(&s, &c, 20.0, 100.0, SleepPolicy::SleepAlways, small()).unwrap();
        let xs = sorted(&mp.s_tilde);
        let d = sup_distance_sorted(&xs, |x| m.cdf(x), |x| m.cdf_left(x));
        assert!(d < 0.05, "{d}");
        let at_80 = mp
            .s_tilde
            .iter()
            .filter(|&&x| (x - 80.0).abs() < 1e-9)
            .count() as f64;
        let jump = m.cdf(80.0) - m.cdf_left(80.0);
        assert!((at_80 / mp.s_tilde.len() as f64 - jump).abs() < 0.02);
    }

    #[test]
    fn heavy_tailed_contacts() {
        let (s, c) = (DistSpec::exponential(0.001), DistSpec::pareto(1.898, 245.4));
        let dc = DutyCycleSpec::deterministic(20.0, 100.0).unwrap();
        let mp = filter_full(&s, &c, &dc, &SimConfig::full(20_000), RandomStream::new(21)).unwrap();
        let m =
            dist_s_tilde_nonneg(&s, &c, 20.0, 100.0, SleepPolicy::SleepAlways, small()).unwrap();
        let xs = sorted(&mp.s_tilde);
        let d = sup_distance_sorted(&xs, |x| m.cdf(x), |x| m.cdf_left(x));
        assert!(d < 0.05, "{d}");
    }
}
