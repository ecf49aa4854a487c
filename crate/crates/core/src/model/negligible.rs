//! Negligible-contact model: detection probabilities `g`, `p`, the number
//! `N` of real intercontacts per measured one, and the moments, class and
//! tail of the measured intercontact time.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::proc::series::interval_series;
use crate::proc::{zeta_combination, Dist, DistSpec, Moments};

/// Slack allowed on closed-form probabilities before they count as broken.
const PROB_SLACK: f64 = 1e-8;
/// Half-width of the `|cv² - 1|` band classified as exponential-like.
pub const EXP_LIKE_BAND: f64 = 1e-6;

/// Detection probabilities: `g` after an ON start, `p` after an OFF start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GPpair {
    pub g: f64,
    pub p: f64,
}

impl GPpair {
    pub fn new(g: f64, p: f64) -> Result<Self> {
        if !((0.0..=1.0).contains(&g) && (0.0..=1.0).contains(&p)) {
            return domain(format!("g and p must lie in [0, 1], got ({g}, {p})"));
        }
        if p == 0.0 {
            return domain("p = 0 leaves N without a distribution");
        }
        Ok(Self { g, p })
    }

    /// `g = p = τ/T`, valid when `S` varies slowly on the scale of `T`.
    pub fn geometric(tau: f64, period: f64) -> Result<Self> {
        check_tau_period(tau, period)?;
        Self::new(tau / period, tau / period)
    }

    /// Probability that the first real contact after a detection is missed.
    pub fn skip_probability(&self) -> f64 {
        1.0 - self.g
    }
}

fn check_tau_period(tau: f64, period: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= period && period.is_finite()) {
        return domain(format!("need 0 < tau <= T, got tau={tau}, T={period}"));
    }
    Ok(())
}

/// Checks a closed-form probability, absorbing rounding inside the slack.
fn probability(name: &str, v: f64) -> Result<f64> {
    if !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&v) {
        return Err(Error::ModelInconsistency(format!(
            "{name} = {v} lies outside [0, 1]"
        )));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// `ln(e^z - 1)` for `z > 0` without overflow.
fn ln_expm1(z: f64) -> f64 {
    if z > 30.0 {
        z + (-(-z).exp()).ln_1p()
    } else {
        z.exp_m1().ln()
    }
}

/// Closed-form `(g, p)` for exponential intercontacts of rate `λ`.
pub fn g_p_exponential(lambda: f64, tau: f64, period: f64) -> Result<GPpair> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("exponential rate must be positive, got {lambda}"));
    }
    check_tau_period(tau, period)?;
    if tau == period {
        return GPpair::new(1.0, 1.0);
    }
    let x = lambda * tau;
    let y = lambda * period;
    // (e^{-x} - 1 + x) / x, expanded when x is tiny.
    let head = if x < 1e-4 {
        x / 2.0 - x * x / 6.0 + x * x * x / 24.0
    } else {
        ((-x).exp_m1() + x) / x
    };
    // Ratios of e^z - 1 terms go through logs so λT of any size is safe.
    let cross = (ln_expm1(x) - ln_expm1(y)).exp() * (-(-x).exp_m1()) / x;
    let g = probability("g", head + cross)?;
    let p = (ln_expm1(x) + ln_expm1(y - x) - ln_expm1(y)).exp() / (lambda * (period - tau));
    let p = probability("p", p)?;
    GPpair::new(g, p)
}

/// Closed-form `(g, p)` for Lomax intercontacts via the Hurwitz zeta.
pub fn g_p_pareto(alpha: f64, b: f64, tau: f64, period: f64) -> Result<GPpair> {
    pareto_with(alpha, b, tau, period, pareto_p)
}

/// `(g, p)` with `p` evaluated from the zeta combination as it appears in
/// print. It disagrees with the defining sum of `p` unless `T ≪ b`; kept
/// for comparison.
pub fn g_p_pareto_printed(alpha: f64, b: f64, tau: f64, period: f64) -> Result<GPpair> {
    pareto_with(alpha, b, tau, period, pareto_p_printed)
}

type PFormula = fn(f64, f64, f64, f64) -> Result<f64>;

fn pareto_with(alpha: f64, b: f64, tau: f64, period: f64, p_of: PFormula) -> Result<GPpair> {
    if !(alpha > 0.0 && alpha.is_finite() && b > 0.0 && b.is_finite()) {
        return domain(format!(
            "pareto needs alpha > 0 and b > 0, got ({alpha}, {b})"
        ));
    }
    check_tau_period(tau, period)?;
    if tau == period {
        return GPpair::new(1.0, 1.0);
    }
    let (g, p) = if alpha == 1.0 {
        // Removable singularity: average the two sides.
        let e = 1e-6;
        let lo = (
            pareto_g(1.0 - e, b, tau, period)?,
            p_of(1.0 - e, b, tau, period)?,
        );
        let hi = (
            pareto_g(1.0 + e, b, tau, period)?,
            p_of(1.0 + e, b, tau, period)?,
        );
        ((lo.0 + hi.0) / 2.0, (lo.1 + hi.1) / 2.0)
    } else {
        (
            pareto_g(alpha, b, tau, period)?,
            p_of(alpha, b, tau, period)?,
        )
    };
    GPpair::new(probability("g", g)?, probability("p", p)?)
}

/// `T (b/T)^α / (s·width)`, the prefactor shared by the zeta forms.
fn zeta_prefactor(alpha: f64, b: f64, period: f64, width: f64) -> f64 {
    let s = alpha - 1.0;
    period * (alpha * (b / period).ln()).exp() / (s * width)
}

fn pareto_g(alpha: f64, b: f64, tau: f64, period: f64) -> Result<f64> {
    let s = alpha - 1.0;
    let r = tau / period;
    let first = 1.0 + b * (-s * (tau / b).ln_1p()).exp_m1() / (s * tau);
    let rest = zeta_combination(s, b / period + 1.0, &[(1.0, -r), (1.0, r), (-2.0, 0.0)])?;
    Ok(first + zeta_prefactor(alpha, b, period, tau) * rest)
}

fn pareto_p(alpha: f64, b: f64, tau: f64, period: f64) -> Result<f64> {
    let w = period - tau;
    let terms = [
        (1.0, 0.0),
        (1.0, 1.0),
        (-1.0, w / period),
        (-1.0, tau / period),
    ];
    Ok(zeta_prefactor(alpha, b, period, w) * zeta_combination(alpha - 1.0, b / period, &terms)?)
}

fn pareto_p_printed(alpha: f64, b: f64, tau: f64, period: f64) -> Result<f64> {
    let w = period - tau;
    let r = tau / period;
    let terms = [(1.0, 1.0 + r), (-1.0, 1.0), (-1.0, 2.0 * r), (1.0, r)];
    Ok(zeta_prefactor(alpha, b, period, w) * zeta_combination(alpha - 1.0, b / period, &terms)?)
}

/// `(g, p)` from their defining sums, for any intercontact distribution.
pub fn g_p_numeric(s_dist: &DistSpec, tau: f64, period: f64) -> Result<GPpair> {
    check_tau_period(tau, period)?;
    if tau == period {
        return GPpair::new(1.0, 1.0);
    }
    let d = s_dist.build()?;
    g_p_sums(&d, tau, period)
}

pub(crate) fn g_p_sums(d: &Dist, tau: f64, period: f64) -> Result<GPpair> {
    let w = period - tau;
    // After an ON start the next contact lands Unif(0, τ) + S later; after an
    // OFF start, Unif(0, T-τ) + S later, measured from that OFF interval.
    let g = interval_series(d, tau, period, 0, 0.0, tau)?;
    let p = interval_series(d, w, period, 1, -tau, 0.0)?;
    GPpair::new(probability("g", g)?, probability("p", p)?)
}

/// `(g, p)` by the fastest exact route for the distribution kind.
pub fn g_p_auto(s_dist: &DistSpec, tau: f64, period: f64) -> Result<GPpair> {
    match *s_dist {
        DistSpec::Exponential { rate } => g_p_exponential(rate, tau, period),
        DistSpec::Pareto { alpha, b } => g_p_pareto(alpha, b, tau, period),
        DistSpec::Empirical { .. } => g_p_numeric(s_dist, tau, period),
    }
}

/// `P(N = k)`: `g` for `k = 1`, then geometric with ratio `1 - p`.
pub fn pmf_n(gp: GPpair, k: u64) -> Result<f64> {
    match k {
        0 => domain("N takes values k >= 1"),
        1 => Ok(gp.g),
        _ => Ok((1.0 - gp.g) * (1.0 - gp.p).powi((k - 2).min(i32::MAX as u64) as i32) * gp.p),
    }
}

/// Table of `P(N = k)` for `k = 1..=k_max`.
pub fn pmf_n_table(gp: GPpair, k_max: u64) -> Vec<(u64, f64)> {
    (1..=k_max)
        .map(|k| (k, pmf_n(gp, k).unwrap_or(0.0)))
        .collect()
}

/// `(E[N], E[N²], cv²_N)`.
pub fn moments_n(gp: GPpair) -> Result<(f64, f64, f64)> {
    let GPpair { g, p } = gp;
    if !(p > 0.0) {
        return domain("moments of N need p > 0");
    }
    let mean = (1.0 - g + p) / p;
    let second = (-g * (p + 2.0) + p * p + p + 2.0) / (p * p);
    let cv2 = (1.0 - g) * (1.0 + g - p) / ((1.0 - g + p) * (1.0 - g + p));
    Ok((mean, second, cv2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Behaviour {
    Hypo,
    ExpLike,
    Hyper,
    /// The second moment of `S` does not exist.
    Undefined,
}

/// The quantities the classification table is read from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassInputs {
    pub cv2_s: f64,
    pub g: f64,
    pub p: f64,
    pub xi: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: Behaviour,
    pub rationale: String,
    pub inputs: ClassInputs,
}

/// `ξ(g, p) = 1 - 2g/p + 2/(1 - g + p)`.
pub fn xi(gp: GPpair) -> f64 {
    1.0 - 2.0 * gp.g / gp.p + 2.0 / (1.0 - gp.g + gp.p)
}

/// `ω(g) = 3(g - 1)/2 + √(9 - 10g + g²)/2`.
pub fn omega(g: f64) -> f64 {
    1.5 * (g - 1.0) + 0.5 * (9.0 - 10.0 * g + g * g).sqrt()
}

/// Hypo/hyper-exponential class of `S̃` from `cv²_S` and `(g, p)`.
pub fn classify_behaviour(cv2_s: f64, gp: GPpair) -> Result<Classification> {
    if !(cv2_s >= 0.0) {
        return domain(format!("cv2_S must be non-negative, got {cv2_s}"));
    }
    let (mean_n, _, cv2_n) = moments_n(gp)?;
    let inputs = ClassInputs {
        cv2_s,
        g: gp.g,
        p: gp.p,
        xi: xi(gp),
        omega: omega(gp.g),
    };
    let cv2 = cv2_s / mean_n + cv2_n;
    let done = |class, rationale: &str| {
        Ok(Classification {
            class,
            rationale: rationale.to_string(),
            inputs,
        })
    };
    if (cv2 - 1.0).abs() <= EXP_LIKE_BAND {
        return done(
            Behaviour::ExpLike,
            "cv² of the measured intercontact is 1 within the boundary band",
        );
    }
    let by_xi = |hyper: &str, hypo: &str| {
        if cv2_s < inputs.xi {
            done(Behaviour::Hypo, hypo)
        } else {
            done(Behaviour::Hyper, hyper)
        }
    };
    if cv2_s > 3.0 {
        done(Behaviour::Hyper, "cv²_S > 3 is always hyper-exponential")
    } else if cv2_s > 1.0 {
        if gp.g >= gp.p {
            done(Behaviour::Hyper, "hyper-exponential S with g >= p")
        } else {
            by_xi(
                "hyper-exponential S, g < p, cv²_S >= ξ",
                "hyper-exponential S, g < p, cv²_S < ξ",
            )
        }
    } else if gp.p >= gp.g {
        done(Behaviour::Hypo, "hypo-exponential S with p >= g")
    } else if gp.p < inputs.omega {
        done(Behaviour::Hyper, "hypo-exponential S with p < ω(g)")
    } else {
        by_xi(
            "hypo-exponential S, ω(g) <= p < g, cv²_S >= ξ",
            "hypo-exponential S, ω(g) <= p < g, cv²_S < ξ",
        )
    }
}

/// Moments and class of the measured intercontact time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsReport {
    pub mean: f64,
    /// `None` when infinite.
    pub second_moment: Option<f64>,
    pub cv2: Option<f64>,
    pub classification: Behaviour,
    pub rationale: String,
    pub class_inputs: Option<ClassInputs>,
}

/// Moments of `S̃ = S_1 + … + S_N` from those of `S` and `(g, p)`.
pub fn moments_s_tilde(s: Moments, gp: GPpair) -> Result<MomentsReport> {
    let (mean_n, second_n, cv2_n) = moments_n(gp)?;
    let mean = mean_n * s.mean;
    let cv2_s = match s.cv2 {
        Some(c) if s.mean.is_finite() => c,
        _ => {
            return Ok(MomentsReport {
                mean,
                second_moment: None,
                cv2: None,
                classification: Behaviour::Undefined,
                rationale: "second moment of S is infinite".into(),
                class_inputs: None,
            })
        }
    };
    let var_s = s.second_moment - s.mean * s.mean;
    let second = second_n * s.mean * s.mean + mean_n * var_s;
    let cv2 = cv2_s / mean_n + cv2_n;
    let c = classify_behaviour(cv2_s, gp)?;
    Ok(MomentsReport {
        mean,
        second_moment: Some(second),
        cv2: Some(cv2),
        classification: c.class,
        rationale: c.rationale,
        class_inputs: Some(c.inputs),
    })
}

/// Asymptotic tail `P(S̃ > x) ≈ prefactor · x^{-exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSpec {
    pub exponent: f64,
    pub prefactor: f64,
    /// Log-log slope of the CCDF, `-exponent`.
    pub slope: f64,
}

impl TailSpec {
    pub fn ccdf(&self, x: f64) -> f64 {
        self.prefactor * x.powf(-self.exponent)
    }
}

/// Tail of `S̃` for Lomax intercontacts: `E[N] (b/x)^α`.
pub fn pareto_tail_check(alpha: f64, b: f64, gp: GPpair) -> Result<TailSpec> {
    if !(alpha > 0.0 && b > 0.0) {
        return domain(format!(
            "pareto needs alpha > 0 and b > 0, got ({alpha}, {b})"
        ));
    }
    let (mean_n, _, _) = moments_n(gp)?;
    Ok(TailSpec {
        exponent: alpha,
        prefactor: (alpha * b.ln()).exp() * mean_n,
        slope: -alpha,
    })
}
