//! Finite mixtures of analytic densities, point masses and sampler-only
//! components.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::proc::{Dist, RandomStream, StreamRng};

/// Default sample budget for estimating the CDF of a sampler-only component.
pub const DEFAULT_SAMPLER_BUDGET: usize = 1_000_000;
/// Fixed seed so sampler-based CDFs are reproducible.
pub const DEFAULT_SAMPLER_SEED: u64 = 0x5eed_dc00;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentKind {
    AnalyticDensity,
    PointMass(f64),
    SamplerOnly,
}

/// One mixture component.
pub trait Component: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn kind(&self) -> ComponentKind {
        ComponentKind::AnalyticDensity
    }
    fn cdf(&self, x: f64) -> f64;
    /// `P(X < x)`; equals `cdf` unless the component has atoms.
    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x)
    }
    /// Density of the absolutely continuous part.
    fn pdf(&self, x: f64) -> f64;
    fn sample(&self, rng: &mut StreamRng) -> f64;
    /// A value beyond which the component has negligible mass, for plotting.
    fn upper_hint(&self) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct PointMass(pub f64);

impl Component for PointMass {
    fn name(&self) -> String {
        format!("point_mass({})", self.0)
    }
    fn kind(&self) -> ComponentKind {
        ComponentKind::PointMass(self.0)
    }
    fn cdf(&self, x: f64) -> f64 {
        if x >= self.0 {
            1.0
        } else {
            0.0
        }
    }
    fn cdf_left(&self, x: f64) -> f64 {
        if x > self.0 {
            1.0
        } else {
            0.0
        }
    }
    fn pdf(&self, _x: f64) -> f64 {
        0.0
    }
    fn sample(&self, _rng: &mut StreamRng) -> f64 {
        self.0
    }
    fn upper_hint(&self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Uniform {
    pub lo: f64,
    pub hi: f64,
}

impl Component for Uniform {
    fn name(&self) -> String {
        format!("uniform({}, {})", self.lo, self.hi)
    }
    fn cdf(&self, x: f64) -> f64 {
        ((x - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }
    fn pdf(&self, x: f64) -> f64 {
        if x >= self.lo && x < self.hi {
            1.0 / (self.hi - self.lo)
        } else {
            0.0
        }
    }
    fn sample(&self, rng: &mut StreamRng) -> f64 {
        self.lo + (self.hi - self.lo) * rng.uniform()
    }
    fn upper_hint(&self) -> f64 {
        self.hi
    }
}

/// A plain contact or intercontact distribution used as a component.
#[derive(Debug, Clone)]
pub struct DistComponent(pub Dist);

impl Component for DistComponent {
    fn name(&self) -> String {
        self.0.spec().label()
    }
    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }
    fn cdf_left(&self, x: f64) -> f64 {
        self.0.cdf_left(x)
    }
    fn pdf(&self, x: f64) -> f64 {
        self.0.pdf(x)
    }
    fn sample(&self, rng: &mut StreamRng) -> f64 {
        self.0.sample(rng)
    }
    fn upper_hint(&self) -> f64 {
        self.0.support_max().min(self.0.quantile(0.999))
    }
}

type SamplerFn = dyn Fn(&mut StreamRng) -> f64 + Send + Sync;

/// A component known only through a sampler; its CDF is the empirical CDF
/// of a fixed-seed sample drawn on first use.
pub struct SamplerOnly {
    name: String,
    sampler: Arc<SamplerFn>,
    budget: usize,
    stream: RandomStream,
    cache: OnceLock<Vec<f64>>,
}

impl fmt::Debug for SamplerOnly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SamplerOnly")
            .field("name", &self.name)
            .field("budget", &self.budget)
            .field("stream", &self.stream)
            .finish()
    }
}

impl SamplerOnly {
    pub fn new(
        name: impl Into<String>,
        budget: usize,
        stream: RandomStream,
        sampler: Arc<SamplerFn>,
    ) -> Self {
        Self {
            name: name.into(),
            sampler,
            budget: budget.max(1),
            stream,
            cache: OnceLock::new(),
        }
    }

    /// The sorted self-estimation sample.
    pub fn sorted_sample(&self) -> &[f64] {
        self.cache.get_or_init(|| {
            let mut rng = self.stream.rng();
            let mut v: Vec<f64> = (0..self.budget).map(|_| (self.sampler)(&mut rng)).collect();
            v.sort_by(f64::total_cmp);
            v
        })
    }
}

impl Component for SamplerOnly {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn kind(&self) -> ComponentKind {
        ComponentKind::SamplerOnly
    }
    fn cdf(&self, x: f64) -> f64 {
        let s = self.sorted_sample();
        s.partition_point(|&v| v <= x) as f64 / s.len() as f64
    }
    fn cdf_left(&self, x: f64) -> f64 {
        let s = self.sorted_sample();
        s.partition_point(|&v| v < x) as f64 / s.len() as f64
    }
    fn pdf(&self, _x: f64) -> f64 {
        f64::NAN
    }
    fn sample(&self, rng: &mut StreamRng) -> f64 {
        (self.sampler)(rng)
    }
    fn upper_hint(&self) -> f64 {
        let s = self.sorted_sample();
        s[((s.len() as f64 * 0.999) as usize).min(s.len() - 1)]
    }
}

/// Weighted mixture; weights are non-negative and sum to one.
#[derive(Debug, Clone)]
pub struct MixtureDist {
    parts: Vec<(f64, Arc<dyn Component>)>,
}

const WEIGHT_TOL: f64 = 1e-9;
const RENORMALIZE_TOL: f64 = 1e-6;

impl MixtureDist {
    /// Validates weights: drift up to 1e-6 is renormalized, larger drift or
    /// a negative weight is a model inconsistency.
    pub fn new(parts: Vec<(f64, Arc<dyn Component>)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::ModelInconsistency(
                "mixture has no components".into(),
            ));
        }
        let mut parts = parts;
        for (w, c) in parts.iter_mut() {
            if !(w.is_finite() && *w >= -WEIGHT_TOL) {
                return Err(Error::ModelInconsistency(format!(
                    "weight {w} of {} is invalid",
                    c.name()
                )));
            }
            *w = w.max(0.0);
        }
        let total: f64 = parts.iter().map(|p| p.0).sum();
        let drift = (total - 1.0).abs();
        if drift > RENORMALIZE_TOL {
            return Err(Error::ModelInconsistency(format!(
                "mixture weights sum to {total}"
            )));
        }
        if drift > WEIGHT_TOL {
            parts.iter_mut().for_each(|p| p.0 /= total);
        }
        Ok(Self { parts })
    }

    pub fn single(c: Arc<dyn Component>) -> Self {
        Self {
            parts: vec![(1.0, c)],
        }
    }

    pub fn components(&self) -> &[(f64, Arc<dyn Component>)] {
        &self.parts
    }

    pub fn weights(&self) -> Vec<(String, f64)> {
        self.parts.iter().map(|(w, c)| (c.name(), *w)).collect()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.sum(|c| c.cdf(x)).clamp(0.0, 1.0)
    }

    pub fn cdf_left(&self, x: f64) -> f64 {
        self.sum(|c| c.cdf_left(x)).clamp(0.0, 1.0)
    }

    /// Density of the analytic part; `NaN` if any weighted component is
    /// sampler-only.
    pub fn pdf(&self, x: f64) -> f64 {
        self.sum(|c| c.pdf(x))
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        let u = rng.uniform();
        let mut acc = 0.0;
        for (w, c) in &self.parts {
            acc += w;
            if u < acc {
                return c.sample(rng);
            }
        }
        // Rounding left u above the last partial sum.
        let last = self
            .parts
            .iter()
            .rev()
            .find(|p| p.0 > 0.0)
            .unwrap_or(&self.parts[0]);
        last.1.sample(rng)
    }

    pub fn upper_hint(&self) -> f64 {
        self.parts
            .iter()
            .filter(|p| p.0 > 0.0)
            .map(|p| p.1.upper_hint())
            .fold(0.0, f64::max)
    }

    /// `(x, cdf)` pairs on `points` evenly spaced values in `[0, x_max]`,
    /// plus every atom inside that range.
    pub fn grid(&self, points: usize, x_max: f64) -> Vec<(f64, f64)> {
        let points = points.max(2);
        let mut xs: Vec<f64> = (0..points)
            .map(|i| x_max * i as f64 / (points - 1) as f64)
            .collect();
        for (w, c) in &self.parts {
            if let ComponentKind::PointMass(v) = c.kind() {
                if *w > 0.0 && v <= x_max {
                    xs.push(v);
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.into_iter().map(|x| (x, self.cdf(x))).collect()
    }

    fn sum(&self, f: impl Fn(&dyn Component) -> f64) -> f64 {
        self.parts
            .iter()
            .filter(|p| p.0 > 0.0)
            .map(|(w, c)| w * f(c.as_ref()))
            .sum()
    }
}

/// Writes `(x, cdf)` pairs as CSV with header `x,cdf`.
pub fn write_grid_csv<W: std::io::Write>(grid: &[(f64, f64)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "cdf"])?;
    for (x, f) in grid {
        out.write_record([x.to_string(), f.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Smallest `x` in `[lo, hi]` with `cdf(x) ≥ u`, by bisection.
pub(crate) fn invert_cdf(cdf: impl Fn(f64) -> f64, u: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) >= u {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
