//! Empirical distances and summaries shared by the simulator checks,
//! the comparison reports and the fitting code.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Sample mean, second moment and squared coefficient of variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub n: usize,
    pub mean: f64,
    pub second_moment: f64,
    pub cv2: f64,
}

pub fn sample_moments(xs: &[f64]) -> SampleMoments {
    let n = xs.len();
    if n == 0 {
        return SampleMoments {
            n,
            mean: f64::NAN,
            second_moment: f64::NAN,
            cv2: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    // Centred accumulation keeps cv² accurate when it is small.
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    SampleMoments {
        n,
        mean,
        second_moment: var + mean * mean,
        cv2: var / (mean * mean),
    }
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `sup_x |F_n(x) - F(x)|` for a model CDF with possible jumps.
///
/// `cdf_left(x)` is the left limit `F(x-)`; pass the same closure twice for a
/// continuous model. `xs` must be sorted.
pub fn sup_distance_sorted(
    xs: &[f64],
    cdf: impl Fn(f64) -> f64,
    cdf_left: impl Fn(f64) -> f64,
) -> f64 {
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let v = xs[i];
        let below = i as f64 / n;
        let mut j = i;
        while j < xs.len() && xs[j] == v {
            j += 1;
        }
        let at = j as f64 / n;
        d = d.max((below - cdf_left(v)).abs()).max((at - cdf(v)).abs());
        i = j;
    }
    d
}

/// Kolmogorov distance against a continuous CDF.
pub fn ks_distance(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let s = sorted(xs);
    sup_distance_sorted(&s, &cdf, &cdf)
}

/// Two-sample Kolmogorov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Histogram of positive integer counts: `hist[k]` is the frequency of `k`.
pub fn count_histogram(counts: &[u64]) -> Vec<f64> {
    let max = counts.iter().copied().max().unwrap_or(0) as usize;
    let mut h = vec![0.0; max + 1];
    for &c in counts {
        h[c as usize] += 1.0;
    }
    let n = counts.len() as f64;
    h.iter_mut().for_each(|x| *x /= n);
    h
}

/// Total-variation distance between observed counts on `{1, 2, ...}` and a
/// model PMF. Model mass beyond the largest observation is included.
pub fn tv_distance_counts(counts: &[u64], pmf: impl Fn(u64) -> f64) -> f64 {
    let h = count_histogram(counts);
    let mut diff = 0.0;
    let mut covered = 0.0;
    for (k, &f) in h.iter().enumerate().skip(1) {
        let p = pmf(k as u64);
        covered += p;
        diff += (f - p).abs();
    }
    0.5 * (diff + (1.0 - covered).max(0.0))
}

/// Least-squares slope of `log CCDF` against `log x` over `[x0, x0·span]`,
/// where `x0` is the empirical `q0` quantile. Evaluated on 40 log-spaced
/// points.
pub fn tail_slope(xs: &[f64], q0: f64, span: f64) -> Result<f64> {
    if xs.len() < 100 || !(0.0..1.0).contains(&q0) || !(span > 1.0) {
        return domain("tail_slope needs at least 100 samples, q0 in [0,1) and span > 1");
    }
    let s = sorted(xs);
    let n = s.len() as f64;
    let x0 = s[((q0 * n) as usize).min(s.len() - 1)];
    let points = 40;
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..points {
        let x = x0 * span.powf(k as f64 / (points - 1) as f64);
        let above = s.len() - s.partition_point(|&v| v <= x);
        if above == 0 {
            continue;
        }
        let (lx, ly) = (x.ln(), (above as f64 / n).ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        m += 1.0;
    }
    if m < 3.0 {
        return domain("tail_slope: too few points with non-zero empirical tail");
    }
    Ok((m * sxy - sx * sy) / (m * sxx - sx * sx))
}
