//! Infinite sums of periodic interval probabilities,
//! `Σ_{n ≥ first} P(Z + S ∈ [nT + lo, nT + hi))` with `Z ~ Unif(0, w)`.
//!
//! Terms are summed directly while the mass beyond the current interval
//! is at least `1e-9`. Heavy tails (Pareto with α near 1 needs ~10¹⁰
//! periods) are closed with an Euler–Maclaurin estimate once the terms
//! vary smoothly; the estimate is accepted only when two checkpoints a
//! factor of two apart agree.

use super::dist::Dist;
use super::quad::{integrate, integrate_to_infinity, QuadConfig};
use crate::error::{Error, Result};

pub const MASS_TOLERANCE: f64 = 1e-9;
pub const TERM_CAP: u64 = 1_000_000;
const FIRST_CHECKPOINT: u64 = 2048;
const TAIL_AGREEMENT: f64 = 1e-11;

/// Sum of `P(Z_w + S ∈ [nT + lo, nT + hi))` over `n ≥ first`.
pub fn interval_series(d: &Dist, w: f64, period: f64, first: u64, lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let term = |t: f64| d.window_ccdf(w, t * period + lo) - d.window_ccdf(w, t * period + hi);
    let tail = |k: f64| -> Result<f64> {
        let base = k * period;
        let integral =
            integrate(|u| d.window_ccdf(w, u), base + lo, base + hi, &tail_quad())? / period;
        let slope =
            period * (d.window_ccdf_slope(w, base + lo) - d.window_ccdf_slope(w, base + hi));
        Ok(integral + 0.5 * term(k) - slope / 12.0)
    };
    periodic_sum(
        d,
        first,
        |n| d.window_ccdf(w, n as f64 * period + lo),
        term,
        tail,
    )
}

/// Sum of `P(Z_w + S > nT + x)` over `n ≥ first`, for `first·T + x > 0`.
///
/// Finite only when `S` has a finite mean.
pub fn point_series(d: &Dist, w: f64, period: f64, first: u64, x: f64) -> Result<f64> {
    let term = |t: f64| d.window_ccdf(w, t * period + x);
    let tail = |k: f64| -> Result<f64> {
        let base = k * period + x;
        let integral = integrate_to_infinity(|u| d.window_ccdf(w, u), base, &tail_quad())? / period;
        Ok(integral + 0.5 * term(k) - period * d.window_ccdf_slope(w, base) / 12.0)
    };
    periodic_sum(d, first, |n| term(n as f64), term, tail)
}

fn tail_quad() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-16,
        rel_tol: 1e-12,
        max_panels: 400,
    }
}

/// Shared driver: `remaining(n)` bounds the mass from term `n` on, `tail(k)`
/// estimates `Σ_{n ≥ k} term(n)` by Euler–Maclaurin.
fn periodic_sum(
    d: &Dist,
    first: u64,
    remaining: impl Fn(u64) -> f64,
    term: impl Fn(f64) -> f64,
    tail: impl Fn(f64) -> Result<f64>,
) -> Result<f64> {
    let smooth_tail = d.support_max().is_infinite();
    let mut sum = 0.0;
    let mut n = first;
    let mut checkpoint = first + FIRST_CHECKPOINT;
    let mut previous: Option<f64> = None;
    loop {
        let rem = remaining(n);
        if rem < MASS_TOLERANCE {
            return Ok(sum);
        }
        if smooth_tail && n == checkpoint {
            let estimate = sum + tail(n as f64)?;
            if let Some(prev) = previous {
                if (estimate - prev).abs() < TAIL_AGREEMENT {
                    return Ok(estimate);
                }
            }
            previous = Some(estimate);
            checkpoint = first + 2 * (checkpoint - first);
        }
        if n - first >= TERM_CAP {
            return Err(Error::Truncation {
                terms: TERM_CAP as usize,
                partial: sum,
                bound: rem,
            });
        }
        sum += term(n as f64).max(0.0);
        n += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proc::dist::DistSpec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_detection_sum_matches_closed_form() {
        // Σ_{n≥0} P(Z + S ∈ [nT, nT + τ)) for Exp(λ), Z ~ U(0, τ), written out directly.
        let (lambda, tau, t) = (0.01, 20.0, 100.0);
        let d = DistSpec::exponential(lambda).build().unwrap();
        let got = interval_series(&d, tau, t, 0, 0.0, tau).unwrap();
        let x = lambda * tau;
        // n = 0 contributes P(Z + S < τ) = 1 - (1 - e^{-x})/x; later terms are
        // e^{-λnT} (e^x - 1)(1 - e^{-x}) / x.
        let head = 1.0 + (-x).exp_m1() / x;
        let body: f64 = (1..200)
            .map(|n| (-lambda * n as f64 * t).exp() * x.exp_m1() * -(-x).exp_m1() / x)
            .sum();
        assert_abs_diff_eq!(got, head + body, epsilon = MASS_TOLERANCE);
    }

    #[test]
    fn heavy_tail_uses_em_closure() {
        // Total mass over every period is P(Z + S ≥ first·T + lo) when the
        // intervals tile the line.
        let d = DistSpec::pareto(1.01, 1.0).build().unwrap();
        let w = 20.0;
        let all = interval_series(&d, w, 100.0, 3, 0.0, 100.0).unwrap();
        assert_abs_diff_eq!(all, d.window_ccdf(w, 300.0), epsilon = 1e-9);
    }

    #[test]
    fn point_series_is_mean_of_floor() {
        // Σ_{n≥1} P(Z + C > nT) = E[floor((Z + C)/T)] for Exp(μ): P(Z+C > nT) = Q(nT).
        let (mu, w, t) = (0.02, 20.0, 100.0);
        let d = DistSpec::exponential(mu).build().unwrap();
        let got = point_series(&d, w, t, 1, 0.0).unwrap();
        let q1 = d.window_ccdf(w, t);
        let want = q1 / (1.0 - (-mu * t).exp());
        assert_abs_diff_eq!(got, want, epsilon = 1e-9);
    }

    #[test]
    fn point_series_heavy_tail_matches_mean() {
        // Σ_{n≥1} P(Z+C > n) over unit steps ≈ E[Z + C] - 1/2 for a smooth tail
        // when the step is tiny relative to the scale.
        let d = DistSpec::pareto(1.9, 245.4).build().unwrap();
        let w = 1.0;
        let got = point_series(&d, w, 1.0, 0, 0.0).unwrap();
        let mean = 245.4 / 0.9 + 0.5;
        assert!((got - mean - 0.5).abs() < 0.05, "{got} vs {}", mean + 0.5);
    }

    #[test]
    fn empirical_terminates_at_support() {
        let d = DistSpec::empirical(vec![5.0, 150.0, 420.0])
            .build()
            .unwrap();
        let all = interval_series(&d, 10.0, 100.0, 0, 0.0, 100.0).unwrap();
        assert_abs_diff_eq!(all, 1.0, epsilon = 1e-12);
    }
}
