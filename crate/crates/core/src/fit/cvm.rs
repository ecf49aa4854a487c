//! Cramér-von Mises goodness of fit with a parametric-bootstrap null.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mle::Model;
use crate::error::{domain, Result};
use crate::proc::{DistSpec, RandomStream};
use crate::stats::sorted;

pub const DEFAULT_BOOTSTRAP: usize = 2000;
pub const MIN_SAMPLES: usize = 10;

/// `W² = 1/(12n) + Σ (F(x_(i)) - (2i-1)/(2n))²`.
pub fn cvm_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let xs = sorted(samples);
    let n = xs.len() as f64;
    let sum: f64 = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let u = cdf(x) - (2 * i + 1) as f64 / (2.0 * n);
            u * u
        })
        .sum();
    1.0 / (12.0 * n) + sum
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub replicates: usize,
    pub stream: RandomStream,
}

impl Bootstrap {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            stream: RandomStream::new(seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvmOutcome {
    pub statistic: f64,
    /// Bootstrap p-value `(1 + #{W*_b ≥ W}) / (B + 1)`.
    pub p_value: f64,
    pub rejected: bool,
    pub replicates: usize,
}

/// Tests `samples` against `d`, whose parameters were estimated from the
/// same samples. The null distribution of `W²` is rebuilt by drawing from
/// `d` and refitting each replicate with the same family.
pub fn cvm_test(samples: &[f64], d: &DistSpec, phi: f64, boot: Bootstrap) -> Result<CvmOutcome> {
    if samples.len() < MIN_SAMPLES {
        return domain(format!(
            "CvM needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        ));
    }
    if !(phi > 0.0 && phi < 1.0) {
        return domain(format!("significance must lie in (0, 1), got {phi}"));
    }
    let model = match d {
        DistSpec::Exponential { .. } => Model::Exponential,
        DistSpec::Pareto { .. } => Model::Pareto,
        DistSpec::Empirical { .. } => return domain("CvM needs a parametric model"),
    };
    let dist = d.build()?;
    let statistic = cvm_statistic(samples, |x| dist.cdf(x));
    let n = samples.len();
    let exceed = (0..boot.replicates)
        .into_par_iter()
        .filter(|&b| {
            let mut rng = boot.stream.split(b as u64).rng();
            let xs: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
            // A replicate the estimator cannot fit counts against the data.
            match model.fit(&xs).and_then(|s| s.build()) {
                Ok(f) => cvm_statistic(&xs, |x| f.cdf(x)) >= statistic,
                Err(_) => true,
            }
        })
        .count();
    let p_value = (1 + exceed) as f64 / (boot.replicates + 1) as f64;
    Ok(CvmOutcome {
        statistic,
        p_value,
        rejected: p_value < phi,
        replicates: boot.replicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(spec: &DistSpec, n: usize, seed: u64) -> Vec<f64> {
        let d = spec.build().unwrap();
        let mut rng = RandomStream::new(seed).rng();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn statistic_reference() {
        // Uniform data on the plotting positions gives the minimum 1/(12n).
        let xs: Vec<f64> = (0..10).map(|i| (2 * i + 1) as f64 / 20.0).collect();
        assert!((cvm_statistic(&xs, |x| x) - 1.0 / 120.0).abs() < 1e-15);
        let w = cvm_statistic(&[0.1, 0.5, 0.9], |x| x);
        let direct = 1.0 / 36.0 + (0.1f64 - 1.0 / 6.0).powi(2) + 0.0 + (0.9f64 - 5.0 / 6.0).powi(2);
        assert!((w - direct).abs() < 1e-15);
    }

    #[test]
    fn invariant_under_time_transform() {
        let xs = draws(&DistSpec::exponential(0.01), 200, 2);
        let d = DistSpec::exponential(0.012).build().unwrap();
        let w = cvm_statistic(&xs, |x| d.cdf(x));
        // Apply t -> t³ to both samples and model.
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(3)).collect();
        let w2 = cvm_statistic(&ys, |y| d.cdf(y.cbrt()));
        assert!((w - w2).abs() < 1e-12);
    }

    #[test]
    fn too_few_samples() {
        let d = DistSpec::exponential(1.0);
        assert!(cvm_test(&[1.0; 9], &d, 0.01, Bootstrap::new(10, 0)).is_err());
    }

    #[test]
    fn power_against_wrong_family() {
        let mut rejected = 0;
        for s in 0..10 {
            let xs = draws(&DistSpec::pareto(1.01, 10.0), 1000, s);
            let fit = Model::Exponential.fit(&xs).unwrap();
            rejected += usize::from(
                cvm_test(&xs, &fit, 0.01, Bootstrap::new(200, s))
                    .unwrap()
                    .rejected,
            );
        }
        assert!(rejected >= 9, "{rejected}");
    }

    #[test]
    fn true_model_usually_accepted() {
        let mut rejected = 0;
        for s in 0..40 {
            let xs = draws(&DistSpec::exponential(0.01), 300, 100 + s);
            let fit = Model::Exponential.fit(&xs).unwrap();
            rejected += usize::from(
                cvm_test(&xs, &fit, 0.01, Bootstrap::new(300, s))
                    .unwrap()
                    .rejected,
            );
        }
        assert!(rejected <= 3, "{rejected}");
    }
}
