//! Contact and intercontact duration distributions.
//!
//! [`DistSpec`] is the serializable description; [`Dist`] is the prepared
//! form with sorted samples and prefix sums for the empirical kind. The
//! Pareto kind uses the Lomax convention `P(S > x) = (b / (b + x))^α` on
//! `x ≥ 0`, so `E[S] = b / (α - 1)` and the tail behaves as `(b / x)^α`.

use serde::{Deserialize, Serialize};

use super::rng::StreamRng;
use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistSpec {
    Exponential { rate: f64 },
    Pareto { alpha: f64, b: f64 },
    Empirical { samples: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Pdf,
    Cdf,
    Ccdf,
}

/// First two moments. Infinite values encode non-existent moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub second_moment: f64,
    /// `None` when the second moment is infinite.
    pub cv2: Option<f64>,
}

impl Moments {
    pub fn from_mean_second(mean: f64, second_moment: f64) -> Self {
        let cv2 = (mean.is_finite() && second_moment.is_finite() && mean > 0.0)
            .then(|| (second_moment / (mean * mean) - 1.0).max(0.0));
        Self {
            mean,
            second_moment,
            cv2,
        }
    }

    pub fn from_mean_cv2(mean: f64, cv2: f64) -> Self {
        Self {
            mean,
            second_moment: mean * mean * (1.0 + cv2),
            cv2: Some(cv2),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.cv2.is_some()
    }
}

impl DistSpec {
    pub fn exponential(rate: f64) -> Self {
        DistSpec::Exponential { rate }
    }

    pub fn pareto(alpha: f64, b: f64) -> Self {
        DistSpec::Pareto { alpha, b }
    }

    pub fn empirical(samples: Vec<f64>) -> Self {
        DistSpec::Empirical { samples }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DistSpec::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return domain(format!("exponential rate must be positive, got {rate}"));
                }
            }
            DistSpec::Pareto { alpha, b } => {
                if !(alpha.is_finite() && *alpha > 0.0 && b.is_finite() && *b > 0.0) {
                    return domain(format!(
                        "pareto needs alpha > 0 and b > 0, got ({alpha}, {b})"
                    ));
                }
            }
            DistSpec::Empirical { samples } => {
                if samples.is_empty() {
                    return domain("empirical distribution needs at least one sample");
                }
                if let Some(x) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                    return domain(format!("empirical samples must be positive, got {x}"));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Dist> {
        Dist::new(self)
    }

    /// Short label used in reports, e.g. `exp:0.001` or `pareto:1.01:1000`.
    pub fn label(&self) -> String {
        match self {
            DistSpec::Exponential { rate } => format!("exp:{rate}"),
            DistSpec::Pareto { alpha, b } => format!("pareto:{alpha}:{b}"),
            DistSpec::Empirical { samples } => format!("empirical[{}]", samples.len()),
        }
    }
}

/// Splits `kind:a:b` into its kind and numeric fields.
pub(crate) fn compact_fields(s: &str) -> Result<(&str, Vec<f64>)> {
    let mut parts = s.split(':');
    let kind = parts.next().unwrap_or_default();
    let nums = parts
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .or_else(|_| domain(format!("bad number {p:?} in {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((kind, nums))
}

/// Parses the compact forms `exp:λ` and `pareto:α:b`.
impl std::str::FromStr for DistSpec {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        let spec = match compact_fields(s)? {
            ("exp", v) if v.len() == 1 => DistSpec::exponential(v[0]),
            ("pareto", v) if v.len() == 2 => DistSpec::pareto(v[0], v[1]),
            _ => return domain(format!("expected exp:RATE or pareto:ALPHA:B, got {s:?}")),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone)]
struct Empirical {
    sorted: Vec<f64>,
    /// `prefix[i] = Σ_{j<i} sorted[j]`.
    prefix: Vec<f64>,
    bin_origin: f64,
    bin_width: f64,
    bin_counts: Vec<u64>,
}

impl Empirical {
    fn new(samples: &[f64]) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &x in &sorted {
            acc += x;
            prefix.push(acc);
        }
        let n = sorted.len();
        let lo = sorted[0];
        let hi = sorted[n - 1];
        let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
        // Freedman–Diaconis, falling back to a square-root rule on degenerate spread.
        let mut width = 2.0 * iqr / (n as f64).cbrt();
        if !(width > 0.0) {
            width = (hi - lo) / (n as f64).sqrt();
        }
        if !(width > 0.0) {
            width = lo.max(f64::MIN_POSITIVE);
        }
        let bins = (((hi - lo) / width).floor() as usize + 1).min(1 << 20);
        let mut bin_counts = vec![0u64; bins];
        for &x in &sorted {
            let i = (((x - lo) / width) as usize).min(bins - 1);
            bin_counts[i] += 1;
        }
        Self {
            sorted,
            prefix,
            bin_origin: lo,
            bin_width: width,
            bin_counts,
        }
    }

    fn n(&self) -> f64 {
        self.sorted.len() as f64
    }

    fn count_le(&self, x: f64) -> usize {
        self.sorted.partition_point(|&s| s <= x)
    }
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let i = h.floor() as usize;
    let j = (i + 1).min(n - 1);
    sorted[i] + (h - i as f64) * (sorted[j] - sorted[i])
}

#[derive(Debug, Clone)]
enum Kind {
    Exponential { rate: f64 },
    Pareto { alpha: f64, b: f64 },
    Empirical(Box<Empirical>),
}

/// A validated distribution ready for repeated evaluation and sampling.
#[derive(Debug, Clone)]
pub struct Dist {
    spec: DistSpec,
    kind: Kind,
}

impl Dist {
    pub fn new(spec: &DistSpec) -> Result<Self> {
        spec.validate()?;
        let kind = match spec {
            DistSpec::Exponential { rate } => Kind::Exponential { rate: *rate },
            DistSpec::Pareto { alpha, b } => Kind::Pareto {
                alpha: *alpha,
                b: *b,
            },
            DistSpec::Empirical { samples } => Kind::Empirical(Box::new(Empirical::new(samples))),
        };
        Ok(Self {
            spec: spec.clone(),
            kind,
        })
    }

    pub fn spec(&self) -> &DistSpec {
        &self.spec
    }

    pub fn is_exponential(&self) -> Option<f64> {
        match self.kind {
            Kind::Exponential { rate } => Some(rate),
            _ => None,
        }
    }

    pub fn eval(&self, which: Which, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return domain(format!("distribution evaluated at negative or NaN x = {x}"));
        }
        Ok(match which {
            Which::Pdf => self.pdf(x),
            Which::Cdf => self.cdf(x),
            Which::Ccdf => self.ccdf(x),
        })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Exponential { rate } => rate * (-rate * x).exp(),
            Kind::Pareto { alpha, b } => alpha / b * (b / (b + x)).powf(alpha + 1.0),
            Kind::Empirical(e) => {
                let rel = (x - e.bin_origin) / e.bin_width;
                if rel < 0.0 || rel >= e.bin_counts.len() as f64 {
                    return 0.0;
                }
                e.bin_counts[rel as usize] as f64 / (e.n() * e.bin_width)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Exponential { rate } => -(-rate * x).exp_m1(),
            Kind::Pareto { alpha, b } => -(-alpha * (x / b).ln_1p()).exp_m1(),
            Kind::Empirical(e) => e.count_le(x) as f64 / e.n(),
        }
    }

    pub fn ccdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match &self.kind {
            Kind::Exponential { rate } => (-rate * x).exp(),
            Kind::Pareto { alpha, b } => (-alpha * (x / b).ln_1p()).exp(),
            Kind::Empirical(e) => (e.sorted.len() - e.count_le(x)) as f64 / e.n(),
        }
    }

    /// `P(S < x)`; differs from [`Dist::cdf`] only at empirical atoms.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Empirical(e) => e.sorted.partition_point(|&s| s < x) as f64 / e.n(),
            _ => self.cdf(x),
        }
    }

    /// Smallest `x` with `F(x) ≥ q`, for `q ∈ [0, 1)`.
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match &self.kind {
            Kind::Exponential { rate } => -(-q).ln_1p() / rate,
            Kind::Pareto { alpha, b } => b * (-(-q).ln_1p() / alpha).exp_m1(),
            Kind::Empirical(e) => {
                let n = e.sorted.len();
                let k = ((q * n as f64).ceil() as usize).clamp(1, n);
                e.sorted[k - 1]
            }
        }
    }

    pub fn moments(&self) -> Moments {
        match &self.kind {
            Kind::Exponential { rate } => {
                Moments::from_mean_second(1.0 / rate, 2.0 / (rate * rate))
            }
            Kind::Pareto { alpha, b } => {
                let mean = if *alpha > 1.0 {
                    b / (alpha - 1.0)
                } else {
                    f64::INFINITY
                };
                let second = if *alpha > 2.0 {
                    2.0 * b * b / ((alpha - 1.0) * (alpha - 2.0))
                } else {
                    f64::INFINITY
                };
                Moments::from_mean_second(mean, second)
            }
            Kind::Empirical(e) => {
                let mean = e.prefix[e.sorted.len()] / e.n();
                let second = e.sorted.iter().map(|x| x * x).sum::<f64>() / e.n();
                Moments::from_mean_second(mean, second)
            }
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match &self.kind {
            Kind::Exponential { rate } => rng.exponential(*rate),
            Kind::Pareto { alpha, b } => b * (rng.std_exponential() / alpha).exp_m1(),
            Kind::Empirical(e) => e.sorted[rng.index(e.sorted.len())],
        }
    }

    /// `∫_0^x P(S > u) du` for `x ≥ 0`, extended by `x` for `x < 0`
    /// (the CCDF is 1 on the negative axis).
    pub fn integrated_ccdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return x;
        }
        match &self.kind {
            Kind::Exponential { rate } => -(-rate * x).exp_m1() / rate,
            Kind::Pareto { alpha, b } => {
                let l = (x / b).ln_1p();
                if *alpha == 1.0 {
                    b * l
                } else {
                    -b * (-(alpha - 1.0) * l).exp_m1() / (alpha - 1.0)
                }
            }
            Kind::Empirical(e) => {
                let k = e.count_le(x);
                (e.prefix[k] + x * (e.sorted.len() - k) as f64) / e.n()
            }
        }
    }

    /// Window-averaged CCDF `Q_w(x) = (1/w) ∫_{x-w}^{x} P(S > u) du`,
    /// which equals `P(Z + S > x)` for `Z ~ Unif(0, w)` independent of `S`.
    pub fn window_ccdf(&self, w: f64, x: f64) -> f64 {
        debug_assert!(w > 0.0);
        if x <= 0.0 {
            return 1.0;
        }
        let lo = x - w;
        if lo < 0.0 {
            return ((self.integrated_ccdf(x) - lo) / w).min(1.0);
        }
        match &self.kind {
            Kind::Exponential { rate } => (-rate * lo).exp() * -(-rate * w).exp_m1() / (rate * w),
            Kind::Pareto { alpha, b } => {
                let tail = (-alpha * (x / b).ln_1p()).exp() * (b + x) / alpha;
                let l = (-w / (b + x)).ln_1p();
                let ratio = if *alpha == 1.0 {
                    -l
                } else {
                    (-(alpha - 1.0) * l).exp_m1() / (alpha - 1.0)
                };
                // ∫_{x-w}^{x} (b/(b+u))^α du = b^α (b+x)^{1-α} · ratio
                (tail * alpha * ratio / w).min(1.0)
            }
            Kind::Empirical(_) => {
                ((self.integrated_ccdf(x) - self.integrated_ccdf(lo)) / w).clamp(0.0, 1.0)
            }
        }
    }

    /// `P(Z + S ≤ x)` for `Z ~ Unif(0, w)`.
    pub fn uniform_plus_cdf(&self, w: f64, x: f64) -> Result<f64> {
        if !(w > 0.0) {
            return domain(format!("uniform window must be positive, got {w}"));
        }
        if !(x >= 0.0) {
            return domain(format!("uniform_plus_cdf at negative x = {x}"));
        }
        Ok(1.0 - self.window_ccdf(w, x))
    }

    /// `P(Z + S ∈ [lo, hi))` for `Z ~ Unif(0, w)`.
    pub fn uniform_plus_interval(&self, w: f64, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        (self.window_ccdf(w, lo) - self.window_ccdf(w, hi)).max(0.0)
    }

    /// Derivative of [`Dist::window_ccdf`] in `x`.
    pub fn window_ccdf_slope(&self, w: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -(self.ccdf(x - w) - self.ccdf(x)) / w
    }

    /// Upper end of the support, `∞` for the parametric kinds.
    pub fn support_max(&self) -> f64 {
        match &self.kind {
            Kind::Empirical(e) => e.sorted[e.sorted.len() - 1],
            _ => f64::INFINITY,
        }
    }

    /// Sorted samples of an empirical distribution.
    pub fn empirical_sorted(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::Empirical(e) => Some(&e.sorted),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_syntax_roundtrip() {
        for text in ["exp:0.001", "pareto:1.01:1000"] {
            let d: DistSpec = text.parse().unwrap();
            assert_eq!(d.label(), text);
        }
        assert!("exp:-1".parse::<DistSpec>().is_err());
        assert!("exp:1:2".parse::<DistSpec>().is_err());
        assert!("gamma:1".parse::<DistSpec>().is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for spec in [DistSpec::exponential(0.3), DistSpec::pareto(1.7, 40.0)] {
            let d = spec.build().unwrap();
            for q in [0.0, 0.1, 0.5, 0.9, 0.999] {
                assert!((d.cdf(d.quantile(q)) - q).abs() < 1e-12);
            }
        }
        let e = DistSpec::empirical(vec![3.0, 1.0, 2.0, 2.0])
            .build()
            .unwrap();
        assert_eq!(e.quantile(0.0), 1.0);
        assert_eq!(e.quantile(0.25), 1.0);
        assert_eq!(e.quantile(0.26), 2.0);
        assert_eq!(e.quantile(0.75), 2.0);
        assert_eq!(e.quantile(0.8), 3.0);
        assert_eq!(e.cdf_left(2.0), 0.25);
        assert_eq!(e.cdf(2.0), 0.75);
    }
    use crate::proc::quad::{integrate, integrate_to_infinity, QuadConfig};
    use crate::proc::rng::RandomStream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn exp(rate: f64) -> Dist {
        DistSpec::exponential(rate).build().unwrap()
    }

    fn par(alpha: f64, b: f64) -> Dist {
        DistSpec::pareto(alpha, b).build().unwrap()
    }

    #[test]
    fn textbook_values() {
        assert_abs_diff_eq!(
            exp(0.01).eval(Which::Cdf, 100.0).unwrap(),
            1.0 - (-1.0f64).exp(),
            epsilon = 1e-15
        );
        assert_eq!(par(1.01, 1000.0).eval(Which::Ccdf, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(par(2.0, 100.0).moments().mean, 100.0, epsilon = 1e-12);
        assert!(exp(0.01).eval(Which::Pdf, -1.0).is_err());
    }

    #[test]
    fn moment_edge_cases() {
        let m = exp(0.001).moments();
        assert_abs_diff_eq!(m.mean, 1000.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.cv2.unwrap(), 1.0, epsilon = 1e-12);
        let m = par(1.01, 1000.0).moments();
        assert_abs_diff_eq!(m.mean, 1e5, epsilon = 1e-6);
        assert!(m.second_moment.is_infinite() && m.cv2.is_none());
        assert!(par(0.9, 10.0).moments().mean.is_infinite());
        let m = par(4.0, 3.0).moments();
        assert_abs_diff_eq!(m.cv2.unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn serde_shape() {
        let d: DistSpec =
            serde_json::from_str(r#"{"kind":"pareto","alpha":1.01,"b":1000}"#).unwrap();
        assert_eq!(d, DistSpec::pareto(1.01, 1000.0));
        let s = serde_json::to_string(&DistSpec::exponential(0.5)).unwrap();
        assert_eq!(s, r#"{"kind":"exponential","rate":0.5}"#);
        assert!(DistSpec::empirical(vec![1.0, 0.0]).build().is_err());
        assert!(DistSpec::pareto(1.0, -1.0).build().is_err());
    }

    #[test]
    fn pdf_integrates_to_one() {
        let cfg = QuadConfig::default();
        for d in [exp(0.02), par(1.5, 10.0), par(2.5, 245.4)] {
            let m = integrate_to_infinity(|x| d.pdf(x), 0.0, &cfg).unwrap();
            assert_abs_diff_eq!(m, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn uniform_plus_matches_trapezoid() {
        // P(Z + S ≤ x) = (1/w) ∫_0^w F(x - z) dz by the composite trapezoid rule.
        let w = 20.0;
        for d in [exp(0.01), par(1.2, 30.0)] {
            for x in [5.0, 20.0, 60.0, 333.0] {
                let n = 200_000;
                let h = w / n as f64;
                let f = |z: f64| if x - z > 0.0 { d.cdf(x - z) } else { 0.0 };
                let mut acc = 0.5 * (f(0.0) + f(w));
                for i in 1..n {
                    acc += f(i as f64 * h);
                }
                let want = acc * h / w;
                assert_abs_diff_eq!(d.uniform_plus_cdf(w, x).unwrap(), want, epsilon = 1e-6);
            }
            assert_eq!(d.uniform_plus_cdf(w, 0.0).unwrap(), 0.0);
            assert!(d.uniform_plus_cdf(w, 1e12).unwrap() > 1.0 - 1e-3);
        }
    }

    #[test]
    fn integrated_ccdf_matches_quadrature() {
        let cfg = QuadConfig::default();
        for d in [exp(0.3), par(1.01, 7.0), par(1.0, 7.0), par(3.0, 0.5)] {
            for x in [0.1, 4.0, 90.0] {
                let q = integrate(|u| d.ccdf(u), 0.0, x, &cfg).unwrap();
                assert_abs_diff_eq!(d.integrated_ccdf(x), q, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn empirical_primitives() {
        let d = DistSpec::empirical(vec![3.0, 1.0, 2.0, 2.0])
            .build()
            .unwrap();
        assert_eq!(d.cdf(2.0), 0.75);
        assert_eq!(d.ccdf(0.5), 1.0);
        // E[min(S, 2.5)] = (1 + 2 + 2 + 2.5) / 4
        assert_abs_diff_eq!(d.integrated_ccdf(2.5), 7.5 / 4.0, epsilon = 1e-15);
        let m = d.moments();
        assert_abs_diff_eq!(m.mean, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.cv2.unwrap(), 4.5 / 4.0 - 1.0, epsilon = 1e-12);
        let mut r = RandomStream::new(1).rng();
        for _ in 0..100 {
            let x = d.sample(&mut r);
            assert!([1.0, 2.0, 3.0].contains(&x));
        }
        let grid: f64 = (0..4000).map(|i| d.pdf(i as f64 * 0.001) * 0.001).sum();
        assert_abs_diff_eq!(grid, 1.0, epsilon = 0.01);
    }

    #[test]
    fn pareto_sampler_tail() {
        let d = par(1.01, 1000.0);
        let mut r = RandomStream::new(3).rng();
        let n = 1_000_000;
        let x = 1e5;
        let hits = (0..n).filter(|_| d.sample(&mut r) > x).count() as f64;
        let p = d.ccdf(x);
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (hits / n as f64 - p).abs() < 3.0 * sigma,
            "{} vs {p}",
            hits / n as f64
        );
    }

    proptest! {
        #[test]
        fn ccdf_complements_cdf(rate in 1e-4f64..10.0, alpha in 0.2f64..6.0, b in 0.1f64..1e4, x in 0.0f64..1e6) {
            let e = exp(rate);
            prop_assert!((e.ccdf(x) + e.cdf(x) - 1.0).abs() <= 1e-12);
            let p = par(alpha, b);
            prop_assert!((p.ccdf(x) + p.cdf(x) - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn uniform_plus_is_bracketed_and_monotone(alpha in 0.5f64..4.0, b in 0.5f64..500.0, w in 0.5f64..200.0, x in 0.0f64..2e3, dx in 0.0f64..50.0) {
            let d = par(alpha, b);
            let v = d.uniform_plus_cdf(w, x).unwrap();
            let lower = if x > w { d.cdf(x - w) } else { 0.0 };
            prop_assert!(v >= lower - 1e-12 && v <= d.cdf(x) + 1e-12);
            prop_assert!(d.uniform_plus_cdf(w, x + dx).unwrap() >= v - 1e-12);
        }

        #[test]
        fn samples_strictly_positive(seed in 0u64..1000, alpha in 0.5f64..10.0) {
            let d = par(alpha, 1e-3);
            let mut r = RandomStream::new(seed).rng();
            for _ in 0..200 {
                prop_assert!(d.sample(&mut r) > 0.0);
            }
        }
    }
}
