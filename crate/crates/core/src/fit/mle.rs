//! Maximum-likelihood estimators for the two candidate families.

use crate::error::{domain, Error, Result};
use crate::proc::DistSpec;
use crate::stats::sorted;

/// Coarse scale candidates evaluated before the local refinement.
const COARSE_SCALES: usize = 128;

fn check_positive(samples: &[f64], min_len: usize) -> Result<()> {
    if samples.len() < min_len {
        return domain(format!(
            "need at least {min_len} samples, got {}",
            samples.len()
        ));
    }
    if let Some(x) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return domain(format!("samples must be positive and finite, found {x}"));
    }
    Ok(())
}

/// `λ̂ = 1 / mean`.
pub fn mle_exponential(samples: &[f64]) -> Result<f64> {
    check_positive(samples, 2)?;
    Ok(samples.len() as f64 / samples.iter().sum::<f64>())
}

/// Shape MLE for a Lomax law with known scale: `n / Σ ln(1 + x/b)`.
pub fn pareto_shape_given_scale(samples: &[f64], b: f64) -> f64 {
    samples.len() as f64 / samples.iter().map(|x| (x / b).ln_1p()).sum::<f64>()
}

/// KS distance between sorted data and a Lomax law.
fn lomax_ks(xs: &[f64], alpha: f64, b: f64) -> f64 {
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = -(-alpha * (x / b).ln_1p()).exp_m1();
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Lomax `(α̂, b̂)`: the scale is the observed value whose conditional
/// shape MLE gives the smallest KS distance to the data.
///
/// Candidates are a coarse set of order statistics, refined over every
/// observed value between the neighbours of the best coarse one.
pub fn mle_pareto(samples: &[f64]) -> Result<(f64, f64)> {
    check_positive(samples, 10)?;
    let xs = sorted(samples);
    let mut grid = xs.clone();
    grid.dedup();
    if grid.len() < 2 {
        return Err(Error::Fit(format!(
            "all {} samples equal {}",
            xs.len(),
            xs[0]
        )));
    }
    let score = |b: f64| {
        let a = pareto_shape_given_scale(&xs, b);
        (lomax_ks(&xs, a, b), a, b)
    };
    let best_of = |idx: &mut dyn Iterator<Item = usize>| {
        idx.map(|i| (i, score(grid[i])))
            .min_by(|x, y| x.1 .0.total_cmp(&y.1 .0))
            .expect("non-empty candidates")
    };
    let m = grid.len();
    let step = m.div_ceil(COARSE_SCALES).max(1);
    let (coarse, _) = best_of(&mut (0..m).step_by(step));
    let lo = coarse.saturating_sub(step);
    let hi = (coarse + step).min(m - 1);
    let (_, (_, alpha, b)) = best_of(&mut (lo..=hi));
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Fit(format!("shape estimate {alpha} at scale {b}")));
    }
    Ok((alpha, b))
}

/// Candidate family for a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Exponential,
    Pareto,
}

impl Model {
    pub fn fit(self, samples: &[f64]) -> Result<DistSpec> {
        match self {
            Model::Exponential => mle_exponential(samples).map(DistSpec::exponential),
            Model::Pareto => mle_pareto(samples).map(|(a, b)| DistSpec::pareto(a, b)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Exponential => "exponential",
            Model::Pareto => "pareto",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" | "exponential" => Ok(Model::Exponential),
            "pareto" => Ok(Model::Pareto),
            other => domain(format!("unknown model {other:?}")),
        }
    }
}
