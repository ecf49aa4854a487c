//! Per-pair fitting of intercontact and contact durations.

pub mod cvm;
pub mod mle;

use std::io::Write;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cvm::{cvm_statistic, cvm_test, Bootstrap, CvmOutcome, DEFAULT_BOOTSTRAP, MIN_SAMPLES};
pub use mle::{mle_exponential, mle_pareto, pareto_shape_given_scale, Model};

use crate::error::Result;
use crate::proc::{ContactSeries, DistSpec, NodeId, Quantity, RandomStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub phi: f64,
    pub bootstrap: usize,
    pub seed: u64,
    /// Recorder sampling period; tied samples are jittered by `U(0, granularity)`.
    pub granularity: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            phi: 0.01,
            bootstrap: DEFAULT_BOOTSTRAP,
            seed: 0,
            granularity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub pair: (NodeId, NodeId),
    pub quantity: Quantity,
    pub model: Model,
    pub params: DistSpec,
    pub n_samples: usize,
    pub cvm_statistic: f64,
    pub p_value: f64,
    pub rejected: bool,
    pub bootstrap: usize,
}

impl FitResult {
    fn params_pair(&self) -> (f64, f64) {
        match self.params {
            DistSpec::Exponential { rate } => (rate, f64::NAN),
            DistSpec::Pareto { alpha, b } => (alpha, b),
            DistSpec::Empirical { .. } => (f64::NAN, f64::NAN),
        }
    }
}

fn has_ties(xs: &[f64]) -> bool {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v.windows(2).any(|w| w[0] == w[1])
}

/// Fits one model to one sample set and tests it.
pub fn fit_samples(
    samples: &[f64],
    model: Model,
    cfg: &FitConfig,
    stream: RandomStream,
) -> Result<(DistSpec, CvmOutcome, Vec<f64>)> {
    let mut xs = samples.to_vec();
    if let Some(g) = cfg.granularity.filter(|_| has_ties(samples)) {
        let mut rng = stream.split(u64::MAX).rng();
        for x in &mut xs {
            *x += g * rng.uniform_pos();
        }
    }
    let params = model.fit(&xs)?;
    let outcome = cvm_test(
        &xs,
        &params,
        cfg.phi,
        Bootstrap {
            replicates: cfg.bootstrap,
            stream,
        },
    )?;
    Ok((params, outcome, xs))
}

/// Fits every candidate model to every pair with more than nine samples of
/// `quantity`. Rows come back in pair order, then model order.
pub fn fit_all_pairs(
    series: &[ContactSeries],
    quantity: Quantity,
    models: &[Model],
    cfg: &FitConfig,
) -> Vec<FitResult> {
    let root = RandomStream::new(cfg.seed);
    let mut rows: Vec<(usize, Vec<FitResult>)> = series
        .par_iter()
        .enumerate()
        .filter_map(|(i, cs)| {
            let samples = cs.samples(quantity);
            if samples.len() < MIN_SAMPLES {
                info!("pair {:?}: {} samples, skipped", cs.pair, samples.len());
                return None;
            }
            let stream = root.split(cs.pair.0).split(cs.pair.1);
            let fits = models
                .iter()
                .enumerate()
                .filter_map(|(j, &model)| {
                    match fit_samples(&samples, model, cfg, stream.split(j as u64)) {
                        Ok((params, out, _)) => Some(FitResult {
                            pair: cs.pair,
                            quantity,
                            model,
                            params,
                            n_samples: samples.len(),
                            cvm_statistic: out.statistic,
                            p_value: out.p_value,
                            rejected: out.rejected,
                            bootstrap: out.replicates,
                        }),
                        Err(e) => {
                            warn!("pair {:?}: {} fit skipped: {e}", cs.pair, model.name());
                            None
                        }
                    }
                })
                .collect();
            Some((i, fits))
        })
        .collect();
    rows.sort_by_key(|(i, _)| *i);
    rows.into_iter().flat_map(|(_, r)| r).collect()
}

pub fn write_fit_csv<W: Write>(rows: &[FitResult], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "node_a", "node_b", "quantity", "model", "param1", "param2", "n", "cvm", "rejected",
    ])?;
    for r in rows {
        let (p1, p2) = r.params_pair();
        let quantity = match r.quantity {
            Quantity::Intercontact => "intercontact",
            Quantity::Contact => "contact",
        };
        out.write_record([
            r.pair.0.to_string(),
            r.pair.1.to_string(),
            quantity.to_string(),
            r.model.name().to_string(),
            p1.to_string(),
            if p2.is_nan() {
                String::new()
            } else {
                p2.to_string()
            },
            r.n_samples.to_string(),
            r.cvm_statistic.to_string(),
            r.rejected.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Five-number summary plus mean of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub model: Model,
    pub param: String,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

fn quartile(sorted: &[f64], q: f64) -> f64 {
    // Linear interpolation between order statistics.
    let h = q * (sorted.len() - 1) as f64;
    let (i, frac) = (h.floor() as usize, h.fract());
    match sorted.get(i + 1) {
        Some(next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

/// Parameter summaries over the non-rejected rows of each model.
pub fn summarize(rows: &[FitResult]) -> Vec<ParamSummary> {
    let mut out = Vec::new();
    for model in [Model::Exponential, Model::Pareto] {
        let accepted: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.model == model && !r.rejected)
            .map(FitResult::params_pair)
            .collect();
        if accepted.is_empty() {
            continue;
        }
        let names: &[&str] = match model {
            Model::Exponential => &["rate"],
            Model::Pareto => &["alpha", "b"],
        };
        for (k, name) in names.iter().enumerate() {
            let mut v: Vec<f64> = accepted
                .iter()
                .map(|p| if k == 0 { p.0 } else { p.1 })
                .collect();
            v.sort_by(f64::total_cmp);
            out.push(ParamSummary {
                model,
                param: name.to_string(),
                count: v.len(),
                min: v[0],
                q1: quartile(&v, 0.25),
                median: quartile(&v, 0.5),
                mean: v.iter().sum::<f64>() / v.len() as f64,
                q3: quartile(&v, 0.75),
                max: v[v.len() - 1],
            });
        }
    }
    out
}
