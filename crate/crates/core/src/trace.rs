//! Contact-trace files, per-pair series and synthetic traces.
//!
//! Interval traces are CSV with header `node_a,node_b,t_start,t_end`. Event
//! traces are CSV with header `node_a,node_b,time,event`, where `event` is
//! `up` or `down`. Both carry a JSON sidecar `<file>.meta.json` holding a
//! [`TraceMeta`].

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::proc::{ContactSeries, DistSpec, NodeId, Quantity, RandomStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub name: String,
    /// Sampling period of the recorder, in seconds.
    pub granularity: f64,
    pub n_nodes: u64,
    pub time_origin: f64,
}

impl TraceMeta {
    pub fn validate(&self) -> Result<()> {
        if !(self.granularity > 0.0 && self.granularity.is_finite()) {
            return Err(Error::Data(format!(
                "granularity must be positive, got {}",
                self.granularity
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormat {
    ContactIntervals,
    ContactEvents,
}

impl std::str::FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intervals" | "contact_intervals" => Ok(Self::ContactIntervals),
            "events" | "contact_events" => Ok(Self::ContactEvents),
            other => domain(format!("unknown trace format {other:?}")),
        }
    }
}

pub fn meta_path(trace: &Path) -> PathBuf {
    let mut s = trace.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn normalize(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

/// Sorts and merges overlapping or abutting intervals.
pub fn merge_intervals(mut iv: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    iv.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
    for (x, y) in iv {
        match out.last_mut() {
            Some(last) if x <= last.1 => last.1 = last.1.max(y),
            _ => out.push((x, y)),
        }
    }
    out
}

fn build_series(map: BTreeMap<(NodeId, NodeId), Vec<(f64, f64)>>) -> Result<Vec<ContactSeries>> {
    map.into_iter()
        .map(|(pair, iv)| {
            let (starts, ends) = merge_intervals(iv).into_iter().unzip();
            ContactSeries::new(pair, starts, ends)
        })
        .collect()
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn read_records<R: Read>(r: R, header: [&str; 4]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let found = rdr.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(parse_error(
            1,
            format!(
                "expected header {}, found {}",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            parse_error(e.position().map_or(0, |p| p.line() as usize), e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 4 {
            return Err(parse_error(
                line,
                format!("expected 4 fields, found {}", rec.len()),
            ));
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    rec[i].parse().map_err(|_| {
        parse_error(
            line,
            format!("cannot parse field {} ({:?})", i + 1, &rec[i]),
        )
    })
}

/// Reads interval records into merged per-pair series.
pub fn parse_intervals<R: Read>(r: R) -> Result<Vec<ContactSeries>> {
    let mut map: BTreeMap<_, Vec<(f64, f64)>> = BTreeMap::new();
    for (line, rec) in read_records(r, ["node_a", "node_b", "t_start", "t_end"])? {
        let (a, b): (NodeId, NodeId) = (field(&rec, 0, line)?, field(&rec, 1, line)?);
        let (x, y): (f64, f64) = (field(&rec, 2, line)?, field(&rec, 3, line)?);
        if !(x.is_finite() && y.is_finite()) {
            return Err(parse_error(line, "non-finite time"));
        }
        if x >= y {
            return Err(Error::Data(format!(
                "line {line}: start {x} is not before end {y}"
            )));
        }
        map.entry(normalize(a, b)).or_default().push((x, y));
    }
    build_series(map)
}

/// Reads up/down events. A `down` without an open contact is an error; a
/// contact still open at the end of the file is censored and dropped.
pub fn parse_events<R: Read>(r: R) -> Result<Vec<ContactSeries>> {
    let mut events: Vec<(usize, (NodeId, NodeId), f64, bool)> = Vec::new();
    for (line, rec) in read_records(r, ["node_a", "node_b", "time", "event"])? {
        let (a, b): (NodeId, NodeId) = (field(&rec, 0, line)?, field(&rec, 1, line)?);
        let t: f64 = field(&rec, 2, line)?;
        let up = match &rec[3] {
            "up" => true,
            "down" => false,
            other => {
                return Err(parse_error(
                    line,
                    format!("event must be up or down, got {other:?}"),
                ))
            }
        };
        events.push((line, normalize(a, b), t, up));
    }
    // Stable sort keeps file order for simultaneous events.
    events.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut open: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
    let mut map: BTreeMap<_, Vec<(f64, f64)>> = BTreeMap::new();
    for (line, pair, t, up) in events {
        if up {
            open.entry(pair).or_insert(t);
            continue;
        }
        let Some(x) = open.remove(&pair) else {
            return Err(Error::Data(format!(
                "line {line}: down event for {pair:?} without an open contact"
            )));
        };
        if x >= t {
            return Err(Error::Data(format!(
                "line {line}: contact for {pair:?} has zero length at {t}"
            )));
        }
        map.entry(pair).or_default().push((x, t));
    }
    for (pair, t) in open {
        warn!("pair {pair:?}: contact opened at {t} never closes, dropped");
    }
    build_series(map)
}

/// Parses a trace file and its sidecar. Without a sidecar the metadata
/// defaults to 1 s granularity and the observed node count.
pub fn parse_trace(path: &Path, format: TraceFormat) -> Result<(TraceMeta, Vec<ContactSeries>)> {
    let file =
        std::fs::File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let series = match format {
        TraceFormat::ContactIntervals => parse_intervals(file),
        TraceFormat::ContactEvents => parse_events(file),
    }
    .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let observed = series.iter().map(|s| s.pair.1 + 1).max().unwrap_or(0);
    let sidecar = meta_path(path);
    let meta = if sidecar.exists() {
        let m: TraceMeta = serde_json::from_str(&std::fs::read_to_string(&sidecar)?)?;
        m.validate()?;
        if m.n_nodes < observed {
            warn!(
                "{}: declares {} nodes but ids reach {}",
                sidecar.display(),
                m.n_nodes,
                observed - 1
            );
        }
        m
    } else {
        warn!(
            "{}: no metadata sidecar, assuming 1 s granularity",
            path.display()
        );
        TraceMeta {
            name: path
                .file_stem()
                .map_or_else(String::new, |s| s.to_string_lossy().into_owned()),
            granularity: 1.0,
            n_nodes: observed,
            time_origin: 0.0,
        }
    };
    Ok((meta, series))
}

pub fn write_intervals<W: Write>(series: &[ContactSeries], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["node_a", "node_b", "t_start", "t_end"])?;
    for cs in series {
        for (x, y) in cs.starts.iter().zip(&cs.ends) {
            out.write_record([
                cs.pair.0.to_string(),
                cs.pair.1.to_string(),
                x.to_string(),
                y.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes an interval trace and its sidecar.
pub fn write_trace(path: &Path, meta: &TraceMeta, series: &[ContactSeries]) -> Result<()> {
    write_intervals(
        series,
        std::io::BufWriter::new(std::fs::File::create(path)?),
    )?;
    std::fs::write(meta_path(path), serde_json::to_string_pretty(meta)? + "\n")?;
    Ok(())
}

pub fn extract_samples(cs: &ContactSeries, quantity: Quantity) -> Vec<f64> {
    cs.samples(quantity)
}

/// Per-pair generator: each pair's intercontact law is `s_dist` with its
/// time axis stretched by a log-uniform factor in `[1/spread, spread]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairGenerator {
    pub s_dist: DistSpec,
    pub c_dist: DistSpec,
    pub spread: f64,
}

impl PairGenerator {
    pub fn homogeneous(s_dist: DistSpec, c_dist: DistSpec) -> Self {
        Self {
            s_dist,
            c_dist,
            spread: 1.0,
        }
    }

    fn pair_laws(&self, stream: RandomStream) -> Result<(DistSpec, DistSpec)> {
        if !(self.spread >= 1.0) {
            return domain(format!("spread must be at least 1, got {}", self.spread));
        }
        let k = self.spread.powf(2.0 * stream.rng().uniform() - 1.0);
        let s = match &self.s_dist {
            DistSpec::Exponential { rate } => DistSpec::exponential(rate / k),
            DistSpec::Pareto { alpha, b } => DistSpec::pareto(*alpha, b * k),
            DistSpec::Empirical { samples } => {
                DistSpec::empirical(samples.iter().map(|x| x * k).collect())
            }
        };
        Ok((s, self.c_dist.clone()))
    }
}

/// Node pairs `(0,1), (0,2), …` in lexicographic order.
fn pairs(n_pairs: usize) -> (u64, Vec<(NodeId, NodeId)>) {
    let mut n = 2u64;
    while n * (n - 1) / 2 < n_pairs as u64 {
        n += 1;
    }
    let all = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .take(n_pairs)
        .collect();
    (n, all)
}

/// Independent alternating-renewal series for `n_pairs` pairs on
/// `[0, horizon]`. Contacts not finished by the horizon are dropped.
pub fn synth_trace(
    n_pairs: usize,
    generator: &PairGenerator,
    horizon: f64,
    granularity: f64,
    stream: RandomStream,
) -> Result<(TraceMeta, Vec<ContactSeries>)> {
    if n_pairs == 0 {
        return domain("synth_trace needs at least one pair");
    }
    if !(horizon > 0.0) {
        return domain(format!("horizon must be positive, got {horizon}"));
    }
    let (n_nodes, pair_ids) = pairs(n_pairs);
    let series = pair_ids
        .iter()
        .enumerate()
        .map(|(i, &pair)| {
            let pair_stream = stream.split(i as u64);
            let (s_spec, c_spec) = generator.pair_laws(pair_stream.split(0))?;
            let (s, c) = (s_spec.build()?, c_spec.build()?);
            let mut rng = pair_stream.split(1).rng();
            let (mut starts, mut ends) = (Vec::new(), Vec::new());
            let mut t = s.sample(&mut rng);
            loop {
                let end = t + c.sample(&mut rng);
                if end > horizon {
                    break;
                }
                starts.push(t);
                ends.push(end);
                t = end + s.sample(&mut rng);
            }
            ContactSeries::new(pair, starts, ends)
        })
        .collect::<Result<Vec<_>>>()?;
    let meta = TraceMeta {
        name: "synthetic".into(),
        granularity,
        n_nodes,
        time_origin: 0.0,
    };
    meta.validate()?;
    Ok((meta, series))
}
