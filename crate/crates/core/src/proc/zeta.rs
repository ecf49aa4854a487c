//! Hurwitz zeta function `ζ(s, a) = Σ_{n≥0} (n + a)^{-s}`.
//!
//! Evaluation sums the head directly until the argument reaches a cutoff
//! `u`, then adds the Euler–Maclaurin tail
//!
//! ```text
//! E(u) = u^{1-s}/(s-1) + u^{-s}/2 + Σ_j B_{2j}/(2j)! · s(s+1)…(s+2j-2) · u^{-s-2j+1}
//! ```
//!
//! Differences of zeta values at nearby arguments lose all precision when
//! `a` is large, so [`zeta_combination`] evaluates `Σ w_i ζ(s, a + o_i)`
//! by Taylor-expanding the tail around a common base point. With weights
//! summing to zero the combination is finite at `s = 1` as well.

use crate::error::{domain, Result};

/// `B_{2j} / (2j)!` for `j = 1..=10`.
const BERNOULLI_OVER_FACT: [f64; 10] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40_320.0,
    5.0 / 66.0 / 3_628_800.0,
    -691.0 / 2730.0 / 479_001_600.0,
    7.0 / 6.0 / 87_178_291_200.0,
    -3617.0 / 510.0 / 20_922_789_888_000.0,
    43_867.0 / 798.0 / 6_402_373_705_728_000.0,
    -174_611.0 / 330.0 / 2_432_902_008_176_640_000.0,
];

const MIN_CUTOFF: f64 = 40.0;
const TAYLOR_TERMS: usize = 40;

/// `ζ(s, a)` for `a > 0`, `s ≠ 1`.
pub fn hurwitz_zeta(s: f64, a: f64) -> Result<f64> {
    if s == 1.0 {
        return domain("hurwitz_zeta has a pole at s = 1");
    }
    zeta_combination(s, a, &[(1.0, 0.0)])
}

/// `Σ_i w_i ζ(s, a + o_i)` for terms `(w_i, o_i)`.
///
/// Every `a + o_i` must be positive. `s = 1` is accepted only when the
/// weights sum to zero, in which case the poles cancel.
pub fn zeta_combination(s: f64, a: f64, terms: &[(f64, f64)]) -> Result<f64> {
    if !s.is_finite() || !a.is_finite() {
        return domain(format!("non-finite zeta argument s={s}, a={a}"));
    }
    if terms.is_empty() {
        return Ok(0.0);
    }
    let mut spread: f64 = 0.0;
    for &(_, o) in terms {
        if !(a + o > 0.0) {
            return domain(format!("hurwitz_zeta requires a > 0, got {}", a + o));
        }
        spread = spread.max(o.abs());
    }
    let m0: f64 = terms.iter().map(|t| t.0).sum();
    let weight_scale: f64 = terms.iter().map(|t| t.0.abs()).sum();
    let balanced = m0.abs() <= 1e-14 * weight_scale;
    if s == 1.0 && !balanced {
        return domain("zeta combination has a pole at s = 1");
    }

    let cutoff = MIN_CUTOFF.max(20.0 * spread).max(2.0 * s.abs() + 10.0);
    let head = if a < cutoff {
        (cutoff - a).ceil() as usize
    } else {
        0
    };
    let u = a + head as f64;

    let mut total = 0.0;
    for k in 0..head {
        let base = a + k as f64;
        for &(w, o) in terms {
            total += w * (base + o).powf(-s);
        }
    }

    // Moments M_m = Σ w_i o_i^m of the offsets.
    let mut moments = [0.0; TAYLOR_TERMS];
    for &(w, o) in terms {
        let mut p = w;
        for m in moments.iter_mut() {
            *m += p;
            p *= o;
        }
    }
    if balanced {
        moments[0] = 0.0;
    }
    let r = 1.0 / u;

    // u^{1-s}/(s-1) term: binom(1-s, m)/(s-1) = -Π_{k=1}^{m-1}(1-s-k) / m!.
    let mut lead = 0.0;
    if moments[0] != 0.0 {
        lead += moments[0] / (s - 1.0);
    }
    let mut c = -1.0;
    let mut rm = 1.0;
    for (m, &mm) in moments.iter().enumerate().skip(1) {
        if m > 1 {
            c *= (1.0 - s - (m as f64 - 1.0)) / m as f64;
        }
        rm *= r;
        lead += c * mm * rm;
    }
    total += u.powf(1.0 - s) * lead;

    // u^{-q} terms for q = s (the half term) and q = s + 2j - 1.
    let shifted = |q: f64| -> f64 {
        let mut acc = 0.0;
        let mut b = 1.0;
        let mut rm = 1.0;
        for (m, &mm) in moments.iter().enumerate() {
            if m > 0 {
                b *= (-q - (m as f64 - 1.0)) / m as f64;
                rm *= r;
            }
            let term = b * mm * rm;
            acc += term;
            if m > 4 && term.abs() < 1e-18 * acc.abs() {
                break;
            }
        }
        u.powf(-q) * acc
    };
    total += 0.5 * shifted(s);
    let mut rising = s;
    for (j, &bf) in BERNOULLI_OVER_FACT.iter().enumerate() {
        let q = s + 2.0 * j as f64 + 1.0;
        let term = bf * rising * shifted(q);
        total += term;
        if term.abs() < 1e-18 * total.abs().max(1e-300) {
            break;
        }
        rising *= (q) * (q + 1.0);
    }
    Ok(total)
}
