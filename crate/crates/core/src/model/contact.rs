//! Measured contact durations when contacts are not negligible: the number
//! `H` of ON intervals a detected contact spans and the mixture for `C̃`.

use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

use super::mixture::{invert_cdf, Component, DistComponent, MixtureDist, PointMass, Uniform};
use crate::error::{domain, Error, Result};
use crate::proc::quad::{integrate, QuadConfig};
use crate::proc::series::point_series;
use crate::proc::{Dist, DistSpec, StreamRng};

/// Printed densities whose mass is off by more than this are renormalized
/// with a warning.
pub const MASS_WARN_TOL: f64 = 1e-3;

pub(crate) fn check_window(tau: f64, period: f64) -> Result<()> {
    if !(tau > 0.0 && tau < period && period.is_finite()) {
        return domain(format!("need 0 < tau < T, got tau={tau}, T={period}"));
    }
    Ok(())
}

/// `ln(e^z - 1)` for `z > 0` without overflow.
fn ln_expm1(z: f64) -> f64 {
    if z > 30.0 {
        z + (-(-z).exp()).ln_1p()
    } else {
        z.exp_m1().ln()
    }
}

/// Distinct sorted values of an empirical distribution with `F` at each.
fn steps(d: &Dist) -> (Vec<f64>, Vec<f64>) {
    let s = d.empirical_sorted().expect("empirical");
    let n = s.len() as f64;
    let mut vals = Vec::new();
    let mut cdf = Vec::new();
    for (i, &v) in s.iter().enumerate() {
        if i + 1 == s.len() || s[i + 1] != v {
            vals.push(v);
            cdf.push((i + 1) as f64 / n);
        }
    }
    (vals, cdf)
}

/// `∫ du / F(u)` from `x` up to a fixed upper limit.
#[derive(Debug, Clone)]
enum RecipCdf {
    Exponential {
        rate: f64,
        upper: f64,
    },
    Quadrature {
        d: Dist,
        upper: f64,
    },
    /// Antiderivative `A` sampled at the jumps of `F`.
    Steps {
        vals: Vec<f64>,
        cdf: Vec<f64>,
        anti: Vec<f64>,
        upper: f64,
    },
}

impl RecipCdf {
    fn new(d: &Dist, upper: f64) -> Self {
        if let Some(rate) = d.is_exponential() {
            return RecipCdf::Exponential { rate, upper };
        }
        if d.empirical_sorted().is_none() {
            return RecipCdf::Quadrature {
                d: d.clone(),
                upper,
            };
        }
        let (vals, cdf) = steps(d);
        let mut anti = Vec::with_capacity(vals.len());
        let mut acc = 0.0;
        for j in 0..vals.len() {
            if j > 0 {
                acc += (vals[j] - vals[j - 1]) / cdf[j - 1];
            }
            anti.push(acc);
        }
        RecipCdf::Steps {
            vals,
            cdf,
            anti,
            upper,
        }
    }

    /// `F(x) · ∫_x^W du / F(u)`, zero where `F(x) = 0`.
    fn weighted(&self, d: &Dist, x: f64) -> f64 {
        let f = d.cdf(x);
        if f == 0.0 {
            return 0.0;
        }
        f * self.integral(x)
    }

    fn integral(&self, x: f64) -> f64 {
        match self {
            RecipCdf::Exponential { rate, upper } => {
                if x >= *upper {
                    return 0.0;
                }
                (ln_expm1(rate * upper) - ln_expm1(rate * x)) / rate
            }
            RecipCdf::Quadrature { d, upper } => {
                if x >= *upper {
                    return 0.0;
                }
                // u = e^t keeps the integrand bounded near u = 0.
                let f = |t: f64| {
                    let u = t.exp();
                    u / d.cdf(u)
                };
                let cfg = QuadConfig {
                    abs_tol: 1e-10 * upper,
                    rel_tol: 1e-9,
                    max_panels: 4000,
                };
                integrate(f, x.ln(), upper.ln(), &cfg).unwrap_or_else(|e| match e {
                    Error::Quadrature { estimate, .. } => estimate,
                    _ => f64::NAN,
                })
            }
            RecipCdf::Steps {
                vals,
                cdf,
                anti,
                upper,
            } => {
                let at = |u: f64| {
                    let j = vals.partition_point(|&v| v <= u);
                    if j == 0 {
                        return 0.0;
                    }
                    anti[j - 1] + (u - vals[j - 1]) / cdf[j - 1]
                };
                if x >= *upper {
                    return 0.0;
                }
                at(*upper) - at(x)
            }
        }
    }
}

/// `C` conditioned on ending before an independent `Unif(0, W)` point:
/// density `f(c) (1/W) ∫_c^W du / F(u)` on `(0, W)`. With `W = τ` this is
/// the fully contained measured contact; with `W = T - τ` the missed one.
#[derive(Debug, Clone)]
pub struct TruncatedContact {
    name: &'static str,
    d: Dist,
    width: f64,
    /// Left end of the support of `C`; the printed density has mass
    /// `(W - lower)/W`.
    lower: f64,
    recip: RecipCdf,
}

impl TruncatedContact {
    pub fn new(name: &'static str, d: &Dist, width: f64) -> Result<Self> {
        let lower = d.empirical_sorted().map_or(0.0, |s| s[0]);
        if lower >= width {
            return domain(format!("{name}: no contact shorter than {width}"));
        }
        let mass = (width - lower) / width;
        if (mass - 1.0).abs() > MASS_WARN_TOL {
            warn!("{name}: printed density has mass {mass:.6}; renormalizing");
        }
        Ok(Self {
            name,
            d: d.clone(),
            width,
            lower,
            recip: RecipCdf::new(d, width),
        })
    }
}

impl Component for TruncatedContact {
    fn name(&self) -> String {
        self.name.to_string()
    }
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.width {
            return 1.0;
        }
        let v = ((x - self.lower).max(0.0) + self.recip.weighted(&self.d, x))
            / (self.width - self.lower);
        v.clamp(0.0, 1.0)
    }
    fn cdf_left(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x > self.width {
            return 1.0;
        }
        let f = self.d.cdf_left(x);
        let w = if f == 0.0 {
            0.0
        } else {
            f * self.recip.integral(x)
        };
        (((x - self.lower).max(0.0) + w) / (self.width - self.lower)).clamp(0.0, 1.0)
    }
    fn pdf(&self, x: f64) -> f64 {
        if !(x > 0.0 && x < self.width) {
            return 0.0;
        }
        self.d.pdf(x) * self.recip.integral(x) / (self.width - self.lower)
    }
    fn sample(&self, rng: &mut StreamRng) -> f64 {
        let u = self.lower + (self.width - self.lower) * rng.uniform();
        let q = self.d.cdf(u) * rng.uniform();
        self.d.quantile(q).min(u)
    }
    fn upper_hint(&self) -> f64 {
        self.width
    }
}

/// Part of a contact after the ON start that detects it, given that the
/// contact started in the preceding OFF interval and reached that ON start:
/// `Y - (T - τ)` with `Y = Z^OFF + C`. Capped at `τ` for the sleeping
/// policy; uncapped when nodes stay awake.
#[derive(Debug, Clone)]
pub struct ResidualContact {
    d: Dist,
    off: f64,
    cap: Option<f64>,
    head: f64,
    denom: f64,
}

impl ResidualContact {
    /// `C^res`, supported on `(0, τ]`.
    pub fn capped(d: &Dist, tau: f64, period: f64) -> Result<Self> {
        let off = period - tau;
        let head = d.window_ccdf(off, off);
        let denom = head - d.window_ccdf(off, period);
        Self::build(d, off, Some(tau), head, denom)
    }

    /// `C^res*`, the full remaining contact.
    pub fn uncapped(d: &Dist, tau: f64, period: f64) -> Result<Self> {
        let off = period - tau;
        let head = d.window_ccdf(off, off);
        Self::build(d, off, None, head, head)
    }

    fn build(d: &Dist, off: f64, cap: Option<f64>, head: f64, denom: f64) -> Result<Self> {
        if !(denom > 0.0) {
            return domain("residual contact: no contact reaches the ON interval");
        }
        Ok(Self {
            d: d.clone(),
            off,
            cap,
            head,
            denom,
        })
    }
}

impl Component for ResidualContact {
    fn name(&self) -> String {
        match self.cap {
            Some(_) => "c_res".into(),
            None => "c_res_star".into(),
        }
    }
    fn cdf(&self, c: f64) -> f64 {
        if c <= 0.0 {
            return 0.0;
        }
        if let Some(cap) = self.cap {
            if c >= cap {
                return 1.0;
            }
        }
        ((self.head - self.d.window_ccdf(self.off, c + self.off)) / self.denom).clamp(0.0, 1.0)
    }
    fn pdf(&self, c: f64) -> f64 {
        if c <= 0.0 || self.cap.is_some_and(|cap| c >= cap) {
            return 0.0;
        }
        -self.d.window_ccdf_slope(self.off, c + self.off) / self.denom
    }
    fn sample(&self, rng: &mut StreamRng) -> f64 {
        let u = rng.uniform();
        let hi = match self.cap {
            Some(cap) => cap,
            None => {
                let mut hi = self.off.max(1.0);
                while self.cdf(hi) < u && hi < 1e300 {
                    hi *= 2.0;
                }
                hi
            }
        };
        invert_cdf(|x| self.cdf(x), u, 0.0, hi)
    }
    fn upper_hint(&self) -> f64 {
        match self.cap {
            Some(cap) => cap,
            None => invert_cdf(
                |x| self.cdf(x),
                0.999,
                0.0,
                self.d.quantile(0.999) + self.off,
            ),
        }
    }
}

/// Distribution of `H`, the number of ON intervals a detected contact spans.
#[derive(Debug, Clone)]
pub struct HModel {
    d: Dist,
    tau: f64,
    period: f64,
    /// `ln G`: the tail of `C^hit` beyond `T - τ` is `G · P(C > x)`.
    ln_g: f64,
    /// Mass of the hit density as printed, before renormalization.
    pub printed_hit_mass: f64,
    pub p1: f64,
    pub p_ge2: f64,
    pub mean: f64,
}

impl HModel {
    pub fn new(c_dist: &DistSpec, tau: f64, period: f64) -> Result<Self> {
        check_window(tau, period)?;
        let d = c_dist.build()?;
        if !d.moments().mean.is_finite() {
            return domain(
                "the number of ON intervals spanned needs a contact duration with finite mean",
            );
        }
        Self::from_dist(&d, tau, period)
    }

    pub(crate) fn from_dist(d: &Dist, tau: f64, period: f64) -> Result<Self> {
        let w = period - tau;
        let (ln_j, mean_j) = hit_normalization(d, w)?;
        let printed_hit_mass = w / period * mean_j;
        if (printed_hit_mass - 1.0).abs() > MASS_WARN_TOL {
            warn!("contact-hit density as printed has mass {printed_hit_mass:.6}; renormalizing");
        }
        let mut h = Self {
            d: d.clone(),
            tau,
            period,
            ln_g: ln_j - mean_j.ln(),
            printed_hit_mass,
            p1: 0.0,
            p_ge2: 0.0,
            mean: 0.0,
        };
        h.p1 = h.pmf(1);
        h.p_ge2 = 1.0 - h.p1;
        let on = point_series(d, tau, period, 1, 0.0)?;
        let off = h.scaled(point_series(d, w, period, 2, -tau)?);
        h.mean = 1.0 + tau / period * on + w / period * off;
        Ok(h)
    }

    /// `G · v`, zero when `v` underflowed.
    fn scaled(&self, v: f64) -> f64 {
        if v <= 0.0 {
            0.0
        } else {
            (self.ln_g + v.ln()).exp()
        }
    }

    fn hit_tail(&self, x: f64) -> f64 {
        self.scaled(self.d.window_ccdf(self.period - self.tau, x))
    }

    pub fn pmf(&self, h: u64) -> f64 {
        let (tau, t) = (self.tau, self.period);
        let w = t - tau;
        let q_on = |x: f64| self.d.window_ccdf(tau, x);
        match h {
            0 => 0.0,
            1 => tau / t * (1.0 - q_on(t)) + w / t * (1.0 - self.hit_tail(2.0 * t - tau)),
            _ => {
                let hf = h as f64;
                let on = q_on((hf - 1.0) * t) - q_on(hf * t);
                let off = self.hit_tail(hf * t - tau) - self.hit_tail((hf + 1.0) * t - tau);
                (tau / t * on + w / t * off).max(0.0)
            }
        }
    }

    /// Fraction of measured intercontacts that are pseudo-intercontacts.
    pub fn pseudo_weight(&self) -> f64 {
        (self.mean - 1.0) / self.mean
    }
}

/// `(ln J(W), E[J(min(C, W))])` with `J(x) = ∫_0^x dv / P(C > v)`.
fn hit_normalization(d: &Dist, w: f64) -> Result<(f64, f64)> {
    if let Some(s) = d.empirical_sorted() {
        let (vals, cdf) = steps(d);
        let mut j_at = Vec::with_capacity(vals.len());
        for k in 0..vals.len() {
            j_at.push(if k == 0 {
                vals[0]
            } else {
                j_at[k - 1] + (vals[k] - vals[k - 1]) / (1.0 - cdf[k - 1])
            });
        }
        let j = |x: f64| {
            let k = vals.partition_point(|&v| v <= x);
            if k == 0 {
                return x;
            }
            let rest = x - vals[k - 1];
            if rest == 0.0 {
                j_at[k - 1]
            } else {
                j_at[k - 1] + rest / (1.0 - cdf[k - 1])
            }
        };
        let mean = s.iter().map(|&c| j(c.min(w))).sum::<f64>() / s.len() as f64;
        return Ok((j(w).ln(), mean));
    }
    let (ln_j, fj, tail): (f64, Box<dyn Fn(f64) -> f64>, f64) = if let Some(mu) = d.is_exponential()
    {
        (
            ln_expm1(mu * w) - mu.ln(),
            Box::new(move |c: f64| -(-mu * c).exp_m1()),
            -(-mu * w).exp_m1() / mu,
        )
    } else {
        let (alpha, b) = match *d.spec() {
            DistSpec::Pareto { alpha, b } => (alpha, b),
            _ => unreachable!("parametric kinds are exponential or pareto"),
        };
        let a1 = alpha + 1.0;
        let ln_j = (b / a1).ln() + ln_expm1(a1 * (w / b).ln_1p());
        let fj = move |c: f64| alpha / a1 * -(-a1 * (c / b).ln_1p()).exp_m1();
        let tail = b / a1 * (1.0 + w / b - (-alpha * (w / b).ln_1p()).exp());
        (ln_j, Box::new(fj), tail)
    };
    let cfg = QuadConfig {
        abs_tol: 1e-12 * w,
        rel_tol: 1e-11,
        max_panels: 2000,
    };
    let body = integrate(fj, 0.0, w, &cfg)?;
    Ok((ln_j, body + tail))
}

pub fn pmf_h(c_dist: &DistSpec, tau: f64, period: f64, h: u64) -> Result<f64> {
    if h == 0 {
        return domain("H takes values h >= 1");
    }
    Ok(HModel::new(c_dist, tau, period)?.pmf(h))
}

/// Mixture weights of the measured contact and the ratios behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CTildeWeights {
    pub short: f64,
    pub residual: f64,
    pub z_on: f64,
    pub full_on: f64,
    /// `P(Y^ON ≤ τ) / P(Y^ON ≤ T)`.
    pub r_on: f64,
    /// `P(T-τ < Y^OFF ≤ T) / P(T-τ < Y^OFF ≤ 2T-τ)`.
    pub r_off: f64,
}

pub fn c_tilde_weights(h: &HModel) -> CTildeWeights {
    let (tau, t) = (h.tau, h.period);
    let w = t - tau;
    let d = &h.d;
    let f_on = |x: f64| 1.0 - d.window_ccdf(tau, x);
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    let r_on = ratio(f_on(tau), f_on(t));
    let head = d.window_ccdf(w, w);
    let r_off = ratio(
        head - d.window_ccdf(w, t),
        head - d.window_ccdf(w, 2.0 * t - tau),
    );
    let (p1, p2, eh) = (h.p1, h.p_ge2, h.mean);
    let on = tau / t;
    let off = w / t;
    CTildeWeights {
        short: p1 * on * r_on / eh,
        residual: p1 * off * r_off / eh,
        z_on: (p1 * on * (1.0 - r_on) + p2 * 2.0 * on) / eh,
        full_on: (p1 * off * (1.0 - r_off) + p2 * 2.0 * off + (eh - p1 - 2.0 * p2)) / eh,
        r_on,
        r_off,
    }
}

/// Measured contact duration when nodes sleep on schedule.
pub fn dist_c_tilde(c_dist: &DistSpec, tau: f64, period: f64) -> Result<MixtureDist> {
    let h = HModel::new(c_dist, tau, period)?;
    c_tilde_from(&h)
}

pub(crate) fn c_tilde_from(h: &HModel) -> Result<MixtureDist> {
    let wts = c_tilde_weights(h);
    let d = &h.d;
    let mut parts: Vec<(f64, Arc<dyn Component>)> = Vec::new();
    if wts.short > 0.0 {
        parts.push((
            wts.short,
            Arc::new(TruncatedContact::new("c_short", d, h.tau)?),
        ));
    }
    if wts.residual > 0.0 {
        parts.push((
            wts.residual,
            Arc::new(ResidualContact::capped(d, h.tau, h.period)?),
        ));
    }
    parts.push((wts.z_on, Arc::new(Uniform { lo: 0.0, hi: h.tau })));
    parts.push((wts.full_on, Arc::new(PointMass(h.tau))));
    MixtureDist::new(parts)
}

/// Measured contact duration when nodes stay awake for a detected contact.
pub fn dist_c_tilde_stay_awake(c_dist: &DistSpec, tau: f64, period: f64) -> Result<MixtureDist> {
    check_window(tau, period)?;
    let d = c_dist.build()?;
    MixtureDist::new(vec![
        (tau / period, Arc::new(DistComponent(d.clone()))),
        (
            (period - tau) / period,
            Arc::new(ResidualContact::uncapped(&d, tau, period)?),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proc::RandomStream;
    use crate::sched::DutyCycleSpec;
    use crate::sim::{filter_full, SimConfig, SleepPolicy};
    use crate::stats::{sorted, sup_distance_sorted, tv_distance_counts};
    use approx::assert_abs_diff_eq;

    fn hmodel(spec: DistSpec) -> HModel {
        HModel::new(&spec, 20.0, 100.0).unwrap()
    }

    #[test]
    fn h_pmf_is_normalized() {
        for spec in [
            DistSpec::exponential(0.1),
            DistSpec::exponential(0.02),
            DistSpec::exponential(0.002),
            DistSpec::pareto(1.898, 245.4),
            DistSpec::pareto(3.0, 5.0),
        ] {
            let h = hmodel(spec.clone());
            let mut total = 0.0;
            let mut mean = 0.0;
            for k in 1..200_000u64 {
                let p = h.pmf(k);
                total += p;
                mean += k as f64 * p;
            }
            assert!((total - 1.0).abs() < 1e-6, "{spec:?}: {total}");
            if let DistSpec::Exponential { .. } = spec {
                assert_abs_diff_eq!(mean, h.mean, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn short_contacts_span_one_interval() {
        assert!(hmodel(DistSpec::exponential(0.1)).pmf(1) > 0.99);
        assert!(hmodel(DistSpec::exponential(1e3)).pmf(1) > 1.0 - 1e-9);
    }

    #[test]
    fn printed_hit_mass() {
        let h = hmodel(DistSpec::exponential(0.02));
        assert_abs_diff_eq!(h.printed_hit_mass, 80.0 * 80.0 / 100.0, epsilon = 1e-8);
        let h = hmodel(DistSpec::pareto(1.898, 245.4));
        assert_abs_diff_eq!(h.printed_hit_mass, 64.0, epsilon = 1e-7);
    }

    #[test]
    fn empirical_h_matches_parametric() {
        let d = DistSpec::exponential(0.02).build().unwrap();
        let n = 20_000;
        let xs: Vec<f64> = (0..n)
            .map(|i| d.quantile((i as f64 + 0.5) / n as f64))
            .collect();
        let e = hmodel(DistSpec::empirical(xs));
        let x = hmodel(DistSpec::exponential(0.02));
        for k in 1..5 {
            assert!(
                (e.pmf(k) - x.pmf(k)).abs() < 2e-3,
                "{k}: {} vs {}",
                e.pmf(k),
                x.pmf(k)
            );
        }
        assert!((e.mean - x.mean).abs() < 5e-3);
    }

    #[test]
    fn truncated_contact_mass_and_sampling() {
        use crate::proc::quad::integrate_with_breaks;
        for spec in [DistSpec::exponential(0.05), DistSpec::pareto(1.9, 30.0)] {
            let d = spec.build().unwrap();
            let c = TruncatedContact::new("c_short", &d, 20.0).unwrap();
            let cfg = QuadConfig {
                abs_tol: 1e-8,
                rel_tol: 1e-8,
                max_panels: 4000,
            };
            let mass =
                integrate_with_breaks(|x| c.pdf(x), &[0.0, 1e-6, 1e-3, 1.0, 20.0], &cfg).unwrap();
            assert!((mass - 1.0).abs() < 1e-5, "{mass}");
            assert_abs_diff_eq!(c.cdf(20.0), 1.0);
            let mut rng = RandomStream::new(5).rng();
            let xs = sorted(&(0..40_000).map(|_| c.sample(&mut rng)).collect::<Vec<_>>());
            assert!(sup_distance_sorted(&xs, |x| c.cdf(x), |x| c.cdf(x)) < 0.01);
        }
    }

    #[test]
    fn truncated_empirical_renormalizes() {
        let d = DistSpec::empirical(vec![5.0, 10.0, 30.0]).build().unwrap();
        let c = TruncatedContact::new("c_short", &d, 20.0).unwrap();
        assert_eq!(c.cdf(4.9), 0.0);
        assert_abs_diff_eq!(c.cdf(20.0), 1.0);
        let mut rng = RandomStream::new(2).rng();
        let xs: Vec<f64> = (0..20_000).map(|_| c.sample(&mut rng)).collect();
        let at5 = xs.iter().filter(|&&x| x == 5.0).count() as f64 / xs.len() as f64;
        assert!((at5 - c.cdf(5.0)).abs() < 0.01, "{at5} vs {}", c.cdf(5.0));
    }

    #[test]
    fn residual_star_of_exponential_is_memoryless() {
        let d = DistSpec::exponential(0.02).build().unwrap();
        let r = ResidualContact::uncapped(&d, 20.0, 100.0).unwrap();
        for x in [1.0, 10.0, 50.0, 300.0] {
            assert_abs_diff_eq!(r.cdf(x), d.cdf(x), epsilon = 1e-12);
        }
        let capped = ResidualContact::capped(&d, 20.0, 100.0).unwrap();
        assert_eq!(capped.cdf(20.0), 1.0);
    }

    #[test]
    fn weights_sum_to_one() {
        for spec in [
            DistSpec::exponential(0.02),
            DistSpec::pareto(1.898, 245.4),
            DistSpec::exponential(2.0),
        ] {
            let h = hmodel(spec);
            let w = c_tilde_weights(&h);
            assert_abs_diff_eq!(
                w.short + w.residual + w.z_on + w.full_on,
                1.0,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn c_tilde_support_and_limits() {
        let m = dist_c_tilde(&DistSpec::exponential(0.02), 20.0, 100.0).unwrap();
        assert_eq!(m.cdf(20.0), 1.0);
        // Contacts much shorter than τ are measured almost exactly.
        let spec = DistSpec::exponential(2.0);
        let m = dist_c_tilde(&spec, 20.0, 100.0).unwrap();
        let d = spec.build().unwrap();
        for x in [0.1, 0.5, 1.0, 2.0] {
            assert!(
                (m.cdf(x) - d.cdf(x)).abs() < 0.01,
                "{x}: {} vs {}",
                m.cdf(x),
                d.cdf(x)
            );
        }
        let sa = dist_c_tilde_stay_awake(&DistSpec::exponential(0.02), 20.0, 100.0).unwrap();
        assert_abs_diff_eq!(sa.components()[0].0, 0.2, epsilon = 1e-15);
    }

    fn simulate(c: &DistSpec, policy: SleepPolicy) -> crate::sim::MeasuredProcess {
        let dc = DutyCycleSpec::deterministic(20.0, 100.0).unwrap();
        let cfg = SimConfig::full(30_000).with_policy(policy);
        filter_full(
            &DistSpec::exponential(0.001),
            c,
            &dc,
            &cfg,
            RandomStream::new(41),
        )
        .unwrap()
    }

    #[test]
    fn h_matches_simulation() {
        let c = DistSpec::exponential(0.02);
        let mp = simulate(&c, SleepPolicy::SleepAlways);
        let h = hmodel(c);
        let tv = tv_distance_counts(&mp.h_counts, |k| h.pmf(k));
        assert!(tv < 0.03, "H TV {tv}");
    }

    #[test]
    fn c_tilde_matches_simulation_for_long_and_short_contacts() {
        // Between these regimes (μ ≈ 0.01 to 0.1) the start-in-ON weight τ/T
        // ignores that OFF-started contacts are detected less often, and the
        // mixture drifts from simulation.
        for mu in [1e-3, 1.0] {
            let c = DistSpec::exponential(mu);
            let mp = simulate(&c, SleepPolicy::SleepAlways);
            let m = dist_c_tilde(&c, 20.0, 100.0).unwrap();
            let xs = sorted(&mp.c_tilde);
            let d = sup_distance_sorted(&xs, |x| m.cdf(x), |x| m.cdf_left(x));
            assert!(d < 0.03, "μ={mu}: C̃ sup distance {d}");
        }
    }

    #[test]
    fn stay_awake_matches_simulation() {
        let c = DistSpec::exponential(0.02);
        let mp = simulate(&c, SleepPolicy::StayAwakeOnContact);
        let m = dist_c_tilde_stay_awake(&c, 20.0, 100.0).unwrap();
        let d = sup_distance_sorted(&sorted(&mp.c_tilde), |x| m.cdf(x), |x| m.cdf_left(x));
        assert!(d < 0.03, "{d}");
    }
}
