//! Synthetic contact traces with known per-pair laws.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use dcproc_core::proc::{DistSpec, RandomStream};
use dcproc_core::trace::{meta_path, synth_trace, write_intervals, PairGenerator};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Command;
use crate::common::Outputs;
use crate::config::RunConfig;

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_parser = crate::parse_dist)]
    s_dist: Option<DistSpec>,
    #[arg(long, value_parser = crate::parse_dist)]
    c_dist: Option<DistSpec>,
    #[arg(long)]
    pairs: Option<usize>,
    /// Trace length in seconds.
    #[arg(long)]
    horizon: Option<f64>,
    /// Recorder sampling period written to the sidecar.
    #[arg(long)]
    granularity: Option<f64>,
    /// Per-pair time scales are log-uniform in `[1/spread, spread]`.
    #[arg(long)]
    spread: Option<f64>,
    /// Trace file name inside the output directory.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthParams {
    pub s_dist: DistSpec,
    pub c_dist: DistSpec,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_granularity")]
    pub granularity: f64,
    #[serde(default = "default_spread")]
    pub spread: f64,
    #[serde(default = "default_file")]
    pub file: PathBuf,
}

fn default_pairs() -> usize {
    50
}

fn default_horizon() -> f64 {
    1e7
}

fn default_granularity() -> f64 {
    1.0
}

fn default_spread() -> f64 {
    1.0
}

fn default_file() -> PathBuf {
    PathBuf::from("trace.csv")
}

impl Command for SynthArgs {
    const NAME: &'static str = "synth";
    type Params = SynthParams;

    fn run(cfg: &RunConfig<SynthParams>) -> Result<()> {
        let p = &cfg.params;
        let generator = PairGenerator {
            s_dist: p.s_dist.clone(),
            c_dist: p.c_dist.clone(),
            spread: p.spread,
        };
        let (mut meta, series) = synth_trace(
            p.pairs,
            &generator,
            p.horizon,
            p.granularity,
            RandomStream::new(cfg.seed),
        )?;
        meta.name = p
            .file
            .file_stem()
            .map_or_else(|| "synthetic".into(), |s| s.to_string_lossy().into_owned());
        // The trace itself stays a plain interval file; provenance goes in the sidecar.
        let mut out = Outputs::create(&cfg.out, cfg.to_value())?;
        let path = out.path(&p.file.to_string_lossy());
        write_intervals(
            &series,
            std::io::BufWriter::new(std::fs::File::create(&path)?),
        )?;
        let sidecar = meta_path(&p.file);
        let mut body = serde_json::to_value(&meta)?;
        body["contacts"] = json!(series.iter().map(|s| s.len()).sum::<usize>());
        out.json(&sidecar.to_string_lossy(), &body)?;
        Ok(())
    }
}
