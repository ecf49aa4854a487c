//! Monte-Carlo duty-cycle filter.
//!
//! A renewal contact process is laid over a duty-cycle timeline. A point
//! contact is detected when its instant falls in an ON interval; a contact
//! of positive length is detected when it overlaps an ON interval by a
//! positive amount. Everything between two measured contacts, including
//! undetected contacts and the unobserved parts of detected ones, is
//! measured intercontact time.

use std::io::Write;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::proc::{Dist, DistSpec, RandomStream};
use crate::sched::{DutyCycleKind, DutyCycleSpec, JointGenerator, Phase};
use crate::stats::{sample_moments, SampleMoments};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactMode {
    NegligibleContacts,
    FullContacts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SleepPolicy {
    SleepAlways,
    StayAwakeOnContact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mode: ContactMode,
    /// Measured intercontact samples (negligible mode) or detected real
    /// contacts (full mode) to collect after the warm-up.
    pub n_detected_target: usize,
    pub warmup_detections: usize,
    pub policy: SleepPolicy,
    /// Independent replications; the target is split between them.
    pub workers: usize,
    pub contact_cap: u64,
}

pub const DEFAULT_WARMUP: usize = 10;
pub const DEFAULT_CONTACT_CAP: u64 = 1_000_000_000;

impl SimConfig {
    pub fn negligible(target: usize) -> Self {
        Self {
            mode: ContactMode::NegligibleContacts,
            n_detected_target: target,
            warmup_detections: DEFAULT_WARMUP,
            policy: SleepPolicy::SleepAlways,
            workers: 1,
            contact_cap: DEFAULT_CONTACT_CAP,
        }
    }

    pub fn full(target: usize) -> Self {
        Self {
            mode: ContactMode::FullContacts,
            ..Self::negligible(target)
        }
    }

    pub fn with_policy(mut self, policy: SleepPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMeta {
    pub dc: DutyCycleSpec,
    pub s_dist: DistSpec,
    pub c_dist: Option<DistSpec>,
    pub stream: RandomStream,
    pub config: SimConfig,
    /// Policy in force: stay-awake if either the config or the duty cycle
    /// asks for it.
    pub policy: SleepPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredProcess {
    pub s_tilde: Vec<f64>,
    pub c_tilde: Vec<f64>,
    pub n_counts: Vec<u64>,
    pub h_counts: Vec<u64>,
    /// Measured intercontacts whose first real contact was missed (`N ≥ 2`).
    pub skipped_first: u64,
    /// Stay-awake mode: detected contacts observed from their real start.
    pub full_contacts: u64,
    /// Measured intercontacts of exactly `T - τ` created by split contacts.
    pub pseudo_intercontacts: u64,
    /// Wall time spanned by the recorded samples; equals the sum of all
    /// recorded `s_tilde` and `c_tilde` up to rounding.
    pub elapsed: f64,
    pub generated_contacts: u64,
    pub meta: SimMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimSummary {
    pub s_tilde: SampleMoments,
    pub c_tilde: Option<SampleMoments>,
    pub n: Option<SampleMoments>,
    pub h: Option<SampleMoments>,
    pub skip_fraction: Option<f64>,
    pub skipped_first: u64,
    pub full_contacts: u64,
    pub pseudo_intercontacts: u64,
    pub generated_contacts: u64,
    pub meta: SimMeta,
}

impl MeasuredProcess {
    /// Long-format CSV with header `quantity,value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["quantity", "value"])?;
        for x in &self.s_tilde {
            out.write_record(["s_tilde", &x.to_string()])?;
        }
        for x in &self.c_tilde {
            out.write_record(["c_tilde", &x.to_string()])?;
        }
        for k in &self.n_counts {
            out.write_record(["n", &k.to_string()])?;
        }
        for k in &self.h_counts {
            out.write_record(["h", &k.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> SimSummary {
        let counts = |v: &[u64]| {
            (!v.is_empty())
                .then(|| sample_moments(&v.iter().map(|&k| k as f64).collect::<Vec<_>>()))
        };
        SimSummary {
            s_tilde: sample_moments(&self.s_tilde),
            c_tilde: (!self.c_tilde.is_empty()).then(|| sample_moments(&self.c_tilde)),
            n: counts(&self.n_counts),
            h: counts(&self.h_counts),
            skip_fraction: skip_fraction(self).ok(),
            skipped_first: self.skipped_first,
            full_contacts: self.full_contacts,
            pseudo_intercontacts: self.pseudo_intercontacts,
            generated_contacts: self.generated_contacts,
            meta: self.meta.clone(),
        }
    }
}

/// Fraction of measured intercontacts in which the first real contact after
/// a detection was missed.
pub fn skip_fraction(mp: &MeasuredProcess) -> Result<f64> {
    if mp.n_counts.is_empty() {
        return domain("skip_fraction needs recorded N samples");
    }
    Ok(mp.n_counts.iter().filter(|&&k| k >= 2).count() as f64 / mp.n_counts.len() as f64)
}

pub fn filter_negligible(
    s_dist: &DistSpec,
    dc: &DutyCycleSpec,
    cfg: &SimConfig,
    rng: RandomStream,
) -> Result<MeasuredProcess> {
    if cfg.mode != ContactMode::NegligibleContacts {
        return domain("filter_negligible needs a negligible-contacts config");
    }
    run(s_dist, None, dc, cfg, rng)
}

pub fn filter_full(
    s_dist: &DistSpec,
    c_dist: &DistSpec,
    dc: &DutyCycleSpec,
    cfg: &SimConfig,
    rng: RandomStream,
) -> Result<MeasuredProcess> {
    if cfg.mode != ContactMode::FullContacts {
        return domain("filter_full needs a full-contacts config");
    }
    run(s_dist, Some(c_dist), dc, cfg, rng)
}

/// Either filter against a sampled joint schedule. Passing `None` for the
/// contact distribution selects negligible contacts.
pub fn filter_with_stochastic_dc(
    s_dist: &DistSpec,
    c_dist: Option<&DistSpec>,
    dc: &DutyCycleSpec,
    cfg: &SimConfig,
    rng: RandomStream,
) -> Result<MeasuredProcess> {
    if dc.rates().is_none() {
        return domain("filter_with_stochastic_dc needs a stochastic duty cycle");
    }
    let want = if c_dist.is_some() {
        ContactMode::FullContacts
    } else {
        ContactMode::NegligibleContacts
    };
    if cfg.mode != want {
        return domain("contact distribution and config mode disagree");
    }
    run(s_dist, c_dist, dc, cfg, rng)
}

fn run(
    s_spec: &DistSpec,
    c_spec: Option<&DistSpec>,
    dc: &DutyCycleSpec,
    cfg: &SimConfig,
    stream: RandomStream,
) -> Result<MeasuredProcess> {
    dc.validate()?;
    let s = s_spec.build()?;
    let c = c_spec.map(|d| d.build()).transpose()?;
    if cfg.n_detected_target == 0 {
        return domain("simulation target must be positive");
    }
    if cfg.n_detected_target < 1000 {
        warn!(
            "simulation target {} is below 1000; statistics will be noisy",
            cfg.n_detected_target
        );
    }
    let stay_awake = cfg.policy == SleepPolicy::StayAwakeOnContact || dc.stay_awake_on_contact;
    let workers = cfg.workers.max(1);
    let base = cfg.n_detected_target / workers;
    let extra = cfg.n_detected_target % workers;
    let parts: Vec<Partial> = (0..workers)
        .into_par_iter()
        .map(|k| {
            let job = Job {
                s: &s,
                c: c.as_ref(),
                stay_awake,
                target: base + usize::from(k < extra),
                warmup: cfg.warmup_detections,
                cap: cfg.contact_cap,
                stream: stream.split(k as u64),
            };
            match dc.kind {
                DutyCycleKind::Deterministic { tau, period } => job.run(Periodic {
                    tau,
                    period,
                    off: 0.0,
                }),
                DutyCycleKind::Stochastic {
                    on_rate_beta,
                    off_rate_alpha,
                } => job.run(Joint::new(
                    on_rate_beta,
                    off_rate_alpha,
                    job.stream.split(u64::MAX),
                )),
            }
        })
        .collect::<Result<_>>()?;

    let mut mp = MeasuredProcess {
        s_tilde: Vec::new(),
        c_tilde: Vec::new(),
        n_counts: Vec::new(),
        h_counts: Vec::new(),
        skipped_first: 0,
        full_contacts: 0,
        pseudo_intercontacts: 0,
        elapsed: 0.0,
        generated_contacts: 0,
        meta: SimMeta {
            dc: *dc,
            s_dist: s_spec.clone(),
            c_dist: c_spec.cloned(),
            stream,
            config: *cfg,
            policy: if stay_awake {
                SleepPolicy::StayAwakeOnContact
            } else {
                SleepPolicy::SleepAlways
            },
        },
    };
    for p in parts {
        mp.s_tilde.extend(p.s_tilde);
        mp.c_tilde.extend(p.c_tilde);
        mp.n_counts.extend(p.n_counts);
        mp.h_counts.extend(p.h_counts);
        mp.skipped_first += p.skipped_first;
        mp.full_contacts += p.full_contacts;
        mp.pseudo_intercontacts += p.pseudo;
        mp.elapsed += p.elapsed;
        mp.generated_contacts += p.generated;
    }
    Ok(mp)
}

/// ON portions of a swept window, relative to the window start.
#[derive(Debug, Default)]
struct Sweep {
    /// Offset of the first ON portion.
    lead: f64,
    lens: Vec<f64>,
    /// OFF stretches between consecutive portions.
    gaps: Vec<f64>,
    /// Time from the end of the last portion to the window end.
    tail: f64,
}

trait Timeline {
    fn is_on(&self) -> bool;
    fn advance(&mut self, dt: f64);
    /// Record the ON portions of `[now, now + len]` and move to `now + len`.
    fn sweep(&mut self, len: f64, out: &mut Sweep);
}

/// Deterministic schedule tracked by the offset within the current period,
/// so precision does not decay with elapsed time.
struct Periodic {
    tau: f64,
    period: f64,
    off: f64,
}

impl Timeline for Periodic {
    fn is_on(&self) -> bool {
        self.off < self.tau
    }

    fn advance(&mut self, dt: f64) {
        self.off += dt % self.period;
        if self.off >= self.period {
            self.off -= self.period;
        }
    }

    fn sweep(&mut self, len: f64, out: &mut Sweep) {
        out.lens.clear();
        out.gaps.clear();
        out.lead = 0.0;
        let (tau, period) = (self.tau, self.period);
        let mut last_end = 0.0;
        if tau >= period {
            out.lens.push(len);
            last_end = len;
        } else {
            if self.off < tau {
                let l = (tau - self.off).min(len);
                out.lens.push(l);
                last_end = l;
            }
            let mut pos = period - self.off;
            while pos < len {
                if out.lens.is_empty() {
                    out.lead = pos;
                } else {
                    out.gaps.push(period - tau);
                }
                let l = tau.min(len - pos);
                out.lens.push(l);
                last_end = pos + l;
                pos += period;
            }
        }
        out.tail = if out.lens.is_empty() {
            0.0
        } else {
            (len - last_end).max(0.0)
        };
        self.advance(len);
    }
}

/// Stochastic joint schedule generated lazily; `end` is when the current
/// phase changes.
struct Joint {
    gen: JointGenerator,
    now: f64,
    phase: Phase,
    end: f64,
}

impl Joint {
    fn new(beta: f64, alpha: f64, stream: RandomStream) -> Self {
        let (gen, first) = JointGenerator::warmed_up(beta, alpha, stream);
        Self {
            gen,
            now: 0.0,
            phase: first.phase,
            end: first.end,
        }
    }
}

impl Timeline for Joint {
    fn is_on(&self) -> bool {
        self.phase == Phase::On
    }

    fn advance(&mut self, dt: f64) {
        let t = self.now + dt;
        if t >= self.end {
            (self.phase, self.end) = self.gen.jump_to(t);
        }
        self.now = t;
    }

    fn sweep(&mut self, len: f64, out: &mut Sweep) {
        out.lens.clear();
        out.gaps.clear();
        out.lead = 0.0;
        let start = self.now;
        let stop = start + len;
        let mut pos = start;
        let mut last_end = start;
        loop {
            if self.phase == Phase::On {
                let b = self.end.min(stop);
                if b > pos {
                    if out.lens.is_empty() {
                        out.lead = pos - start;
                    } else {
                        out.gaps.push(pos - last_end);
                    }
                    out.lens.push(b - pos);
                    last_end = b;
                }
            }
            if self.end > stop {
                break;
            }
            pos = self.end;
            let seg = self.gen.next_segment();
            self.phase = seg.phase;
            self.end = seg.end;
        }
        out.tail = if out.lens.is_empty() {
            0.0
        } else {
            stop - last_end
        };
        self.now = stop;
    }
}

struct Job<'a> {
    s: &'a Dist,
    c: Option<&'a Dist>,
    stay_awake: bool,
    target: usize,
    warmup: usize,
    cap: u64,
    stream: RandomStream,
}

#[derive(Default)]
struct Partial {
    s_tilde: Vec<f64>,
    c_tilde: Vec<f64>,
    n_counts: Vec<u64>,
    h_counts: Vec<u64>,
    skipped_first: u64,
    full_contacts: u64,
    pseudo: u64,
    elapsed: f64,
    generated: u64,
}

impl Job<'_> {
    fn run<T: Timeline>(&self, tl: T) -> Result<Partial> {
        if self.target == 0 {
            return Ok(Partial::default());
        }
        match self.c {
            None => self.run_negligible(tl),
            Some(c) => self.run_full(tl, c),
        }
    }

    fn starved(&self, p: &Partial, detected: usize) -> Error {
        Error::Starved {
            generated: p.generated,
            detected,
            target: self.target,
        }
    }

    fn run_negligible<T: Timeline>(&self, mut tl: T) -> Result<Partial> {
        let mut rng = self.stream.rng();
        let mut p = Partial::default();
        let (mut acc, mut n, mut detections) = (0.0, 0u64, 0usize);
        loop {
            if p.generated >= self.cap {
                return Err(self.starved(&p, p.n_counts.len()));
            }
            let s = self.s.sample(&mut rng);
            p.generated += 1;
            tl.advance(s);
            acc += s;
            n += 1;
            if tl.is_on() {
                detections += 1;
                if detections > self.warmup.max(1) {
                    p.s_tilde.push(acc);
                    p.n_counts.push(n);
                    p.skipped_first += u64::from(n >= 2);
                    p.elapsed += acc;
                    if p.n_counts.len() == self.target {
                        return Ok(p);
                    }
                }
                acc = 0.0;
                n = 0;
            }
        }
    }

    fn run_full<T: Timeline>(&self, mut tl: T, c_dist: &Dist) -> Result<Partial> {
        let mut rng = self.stream.rng();
        let mut p = Partial::default();
        let mut sw = Sweep::default();
        // `acc` is unobserved time since the end of the last measured contact.
        let (mut acc, mut n, mut detections) = (0.0, 0u64, 0usize);
        // Absolute clock, kept apart from the timeline for the conservation check.
        let (mut now, mut last_measured_end, mut span_start) = (0.0, 0.0, None::<f64>);
        loop {
            if p.generated >= self.cap {
                return Err(self.starved(&p, p.h_counts.len()));
            }
            let s = self.s.sample(&mut rng);
            let c = c_dist.sample(&mut rng);
            p.generated += 1;
            tl.advance(s);
            now += s;
            acc += s;
            n += 1;
            tl.sweep(c, &mut sw);
            if sw.lens.is_empty() {
                acc += c;
                now += c;
                continue;
            }
            detections += 1;
            let record = detections > self.warmup;
            if record {
                if detections >= 2 {
                    span_start.get_or_insert(last_measured_end);
                    p.s_tilde.push(acc + sw.lead);
                    p.n_counts.push(n);
                    p.skipped_first += u64::from(n >= 2);
                } else {
                    span_start.get_or_insert(now + sw.lead);
                }
                if self.stay_awake {
                    p.c_tilde.push(c - sw.lead);
                    p.h_counts.push(1);
                    p.full_contacts += u64::from(sw.lead == 0.0);
                } else {
                    for (k, &l) in sw.lens.iter().enumerate() {
                        if k > 0 {
                            p.s_tilde.push(sw.gaps[k - 1]);
                            p.pseudo += 1;
                        }
                        p.c_tilde.push(l);
                    }
                    p.h_counts.push(sw.lens.len() as u64);
                }
            }
            let tail = if self.stay_awake { 0.0 } else { sw.tail };
            now += c;
            last_measured_end = now - tail;
            acc = tail;
            n = 0;
            if record && p.h_counts.len() == self.target {
                p.elapsed = last_measured_end - span_start.unwrap_or(last_measured_end);
                return Ok(p);
            }
        }
    }
}
