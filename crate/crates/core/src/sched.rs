//! Duty-cycle policies.
//!
//! A deterministic policy is ON on `[nT, nT + τ)` and OFF on
//! `[nT + τ, (n+1)T)`; intervals are half-open so an instant exactly at a
//! boundary belongs to the next interval. A stochastic policy gives each
//! node independent exponential ON (rate β) and OFF (rate α) periods; the
//! pair is jointly ON only while both nodes are ON.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::proc::{RandomStream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DutyCycleKind {
    Deterministic {
        tau: f64,
        period: f64,
    },
    Stochastic {
        on_rate_beta: f64,
        off_rate_alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DutyCycleSpec {
    #[serde(flatten)]
    pub kind: DutyCycleKind,
    #[serde(default)]
    pub stay_awake_on_contact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Phase {
    On,
    Off,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::On => "ON",
            Phase::Off => "OFF",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalId {
    pub index: u64,
    pub phase: Phase,
}

impl DutyCycleSpec {
    pub fn deterministic(tau: f64, period: f64) -> Result<Self> {
        let s = Self {
            kind: DutyCycleKind::Deterministic { tau, period },
            stay_awake_on_contact: false,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn stochastic(on_rate_beta: f64, off_rate_alpha: f64) -> Result<Self> {
        let s = Self {
            kind: DutyCycleKind::Stochastic {
                on_rate_beta,
                off_rate_alpha,
            },
            stay_awake_on_contact: false,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_stay_awake(mut self, on: bool) -> Self {
        self.stay_awake_on_contact = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DutyCycleKind::Deterministic { tau, period } => {
                if !(tau.is_finite() && period.is_finite() && tau > 0.0 && tau <= period) {
                    return domain(format!("deterministic duty cycle needs 0 < tau <= period, got tau={tau}, period={period}"));
                }
            }
            DutyCycleKind::Stochastic {
                on_rate_beta,
                off_rate_alpha,
            } => {
                if !(on_rate_beta > 0.0
                    && off_rate_alpha > 0.0
                    && on_rate_beta.is_finite()
                    && off_rate_alpha.is_finite())
                {
                    return domain(format!(
                        "stochastic duty cycle needs positive rates, got beta={on_rate_beta}, alpha={off_rate_alpha}"
                    ));
                }
            }
        }
        Ok(())
    }

    /// `(τ, T)` of a deterministic policy.
    pub fn tau_period(&self) -> Option<(f64, f64)> {
        match self.kind {
            DutyCycleKind::Deterministic { tau, period } => Some((tau, period)),
            DutyCycleKind::Stochastic { .. } => None,
        }
    }

    /// `(β, α)` of a stochastic policy.
    pub fn rates(&self) -> Option<(f64, f64)> {
        match self.kind {
            DutyCycleKind::Stochastic {
                on_rate_beta,
                off_rate_alpha,
            } => Some((on_rate_beta, off_rate_alpha)),
            DutyCycleKind::Deterministic { .. } => None,
        }
    }

    fn require_tau_period(&self) -> Result<(f64, f64)> {
        match self.tau_period() {
            Some(tp) => Ok(tp),
            None => domain("operation needs a deterministic duty cycle"),
        }
    }

    fn require_rates(&self) -> Result<(f64, f64)> {
        self.validate()?;
        match self.rates() {
            Some(r) => Ok(r),
            None => domain("operation needs a stochastic duty cycle"),
        }
    }

    /// Compact label, e.g. `det:20:100` or `stoch:0.025:0.02`.
    pub fn label(&self) -> String {
        match self.kind {
            DutyCycleKind::Deterministic { tau, period } => format!("det:{tau}:{period}"),
            DutyCycleKind::Stochastic {
                on_rate_beta,
                off_rate_alpha,
            } => format!("stoch:{on_rate_beta}:{off_rate_alpha}"),
        }
    }
}

/// Parses the compact forms `det:τ:T` and `stoch:β:α`.
impl std::str::FromStr for DutyCycleSpec {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match crate::proc::dist::compact_fields(s)? {
            ("det", v) if v.len() == 2 => Self::deterministic(v[0], v[1]),
            ("stoch", v) if v.len() == 2 => Self::stochastic(v[0], v[1]),
            _ => domain(format!("expected det:TAU:T or stoch:BETA:ALPHA, got {s:?}")),
        }
    }
}

pub fn phase_at(dc: &DutyCycleSpec, t: f64) -> Result<Phase> {
    Ok(interval_of(dc, t)?.phase)
}

pub fn interval_of(dc: &DutyCycleSpec, t: f64) -> Result<IntervalId> {
    let (tau, period) = dc.require_tau_period()?;
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("duty-cycle time must be non-negative, got {t}"));
    }
    let index = (t / period).floor();
    let mut offset = t - index * period;
    let mut index = index as u64;
    // Guard against `t / period` rounding up across a boundary.
    if offset < 0.0 {
        index -= 1;
        offset += period;
    }
    let phase = if offset < tau { Phase::On } else { Phase::Off };
    Ok(IntervalId { index, phase })
}

/// Moments of the joint OFF duration: `(mean, second moment, cv²)`.
pub fn joint_off_moments(dc: &DutyCycleSpec) -> Result<(f64, f64, f64)> {
    let (beta, alpha) = dc.require_rates()?;
    Ok(off_moments(beta, alpha))
}

fn off_moments(beta: f64, alpha: f64) -> (f64, f64, f64) {
    let mean = (2.0 * alpha + beta) / (2.0 * alpha * alpha);
    let a2 = alpha * alpha;
    let second =
        (10.0 * a2 * alpha + 11.0 * a2 * beta + 6.0 * alpha * beta * beta + beta * beta * beta)
            / (2.0 * a2 * a2 * (alpha + beta));
    // second/mean² - 1 in closed form, free of cancellation at extreme rates.
    let cv2 =
        (16.0 * a2 * alpha + 14.0 * a2 * beta + 7.0 * alpha * beta * beta + beta * beta * beta)
            / ((alpha + beta) * (2.0 * alpha + beta).powi(2));
    (mean, second, cv2)
}

/// Exact joint OFF moments `(mean, second moment, cv²)` of two independent
/// exponential ON/OFF nodes, from the absorbing chain "one node OFF" ⇄
/// "both OFF". The mean agrees with [`joint_off_moments`]; the second moment
/// does not, and this is the one the simulated schedule reproduces.
pub fn chain_off_moments(dc: &DutyCycleSpec) -> Result<(f64, f64, f64)> {
    let (beta, alpha) = dc.require_rates()?;
    let mean = (2.0 * alpha + beta) / (2.0 * alpha * alpha);
    let second = (alpha + beta) * (4.0 * alpha + beta) / (2.0 * alpha.powi(4));
    let cv2 =
        (4.0 * alpha * alpha + 6.0 * alpha * beta + beta * beta) / (2.0 * alpha + beta).powi(2);
    Ok((mean, second, cv2))
}

/// Deterministic policy with the same mean joint ON and OFF durations.
pub fn deterministic_equivalent(dc: &DutyCycleSpec) -> Result<DutyCycleSpec> {
    let (beta, alpha) = dc.require_rates()?;
    let tau = 1.0 / (2.0 * beta);
    let (off, _, _) = off_moments(beta, alpha);
    Ok(DutyCycleSpec {
        kind: DutyCycleKind::Deterministic {
            tau,
            period: tau + off,
        },
        stay_awake_on_contact: dc.stay_awake_on_contact,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub phase: Phase,
}

impl Segment {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSchedule {
    pub segments: Vec<Segment>,
    pub horizon: f64,
}

/// Sample means and second moments of complete (uncensored) segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub on_count: usize,
    pub on_mean: f64,
    pub off_count: usize,
    pub off_mean: f64,
    pub off_second_moment: f64,
    pub off_cv2: f64,
}

impl JointSchedule {
    /// Statistics over segments, skipping the first and last because they
    /// are cut by the window edges.
    pub fn stats(&self) -> SegmentStats {
        let inner = if self.segments.len() > 2 {
            &self.segments[1..self.segments.len() - 1]
        } else {
            &[][..]
        };
        let (mut on_n, mut on_s, mut off_n, mut off_s, mut off_s2) =
            (0usize, 0.0, 0usize, 0.0, 0.0);
        for s in inner {
            let l = s.len();
            match s.phase {
                Phase::On => {
                    on_n += 1;
                    on_s += l;
                }
                Phase::Off => {
                    off_n += 1;
                    off_s += l;
                    off_s2 += l * l;
                }
            }
        }
        let off_mean = off_s / off_n as f64;
        let off_second = off_s2 / off_n as f64;
        SegmentStats {
            on_count: on_n,
            on_mean: on_s / on_n as f64,
            off_count: off_n,
            off_mean,
            off_second_moment: off_second,
            off_cv2: off_second / (off_mean * off_mean) - 1.0,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["start", "end", "phase"])?;
        for s in &self.segments {
            out.write_record([s.start.to_string(), s.end.to_string(), s.phase.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Joint ON/OFF phases of two independent two-state nodes.
///
/// Both nodes start ON; callers discard an initial stretch (see
/// [`JointGenerator::warmed_up`]) to forget this start.
#[derive(Debug, Clone)]
pub struct JointGenerator {
    beta: f64,
    alpha: f64,
    rng: StreamRng,
    node_on: [bool; 2],
    now: f64,
}

impl JointGenerator {
    pub fn new(beta: f64, alpha: f64, stream: RandomStream) -> Self {
        Self {
            beta,
            alpha,
            rng: stream.rng(),
            node_on: [true, true],
            now: 0.0,
        }
    }

    /// A generator advanced through 100 expected joint cycles, with its clock
    /// reset so the returned value starts at time 0 in whatever phase the
    /// chain has reached. Returns the generator and the end of the segment
    /// in progress at time 0.
    pub fn warmed_up(beta: f64, alpha: f64, stream: RandomStream) -> (Self, Segment) {
        let mut g = Self::new(beta, alpha, stream);
        let (off_mean, _, _) = off_moments(beta, alpha);
        let warmup = 100.0 * (1.0 / (2.0 * beta) + off_mean);
        loop {
            let phase = g.phase();
            let end = g.advance_phase();
            if end > warmup {
                g.now -= warmup;
                return (
                    g,
                    Segment {
                        start: 0.0,
                        end: end - warmup,
                        phase,
                    },
                );
            }
        }
    }

    pub fn phase(&self) -> Phase {
        if self.node_on[0] && self.node_on[1] {
            Phase::On
        } else {
            Phase::Off
        }
    }

    /// Run the chain until the joint phase flips; returns the flip time.
    pub fn advance_phase(&mut self) -> f64 {
        let start = self.phase();
        loop {
            let r0 = if self.node_on[0] {
                self.beta
            } else {
                self.alpha
            };
            let r1 = if self.node_on[1] {
                self.beta
            } else {
                self.alpha
            };
            let total = r0 + r1;
            self.now += self.rng.exponential(total);
            let which = if self.rng.uniform() * total < r0 {
                0
            } else {
                1
            };
            self.node_on[which] = !self.node_on[which];
            if self.phase() != start {
                return self.now;
            }
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Move the clock to `t ≥ now` without walking every transition.
    ///
    /// Each node relaxes to stationarity at rate `α + β`; once
    /// `(t - now)(α + β)` exceeds 40 the node states are redrawn from the
    /// stationary law instead, which is exact to within `e^{-40}`. Shorter
    /// jumps run the chain. Returns the joint phase at `t` and the time it
    /// next changes.
    pub fn jump_to(&mut self, t: f64) -> (Phase, f64) {
        if (t - self.now) * (self.alpha + self.beta) > 40.0 {
            let p_on = self.alpha / (self.alpha + self.beta);
            for s in self.node_on.iter_mut() {
                *s = self.rng.uniform() < p_on;
            }
            self.now = t;
            let phase = self.phase();
            return (phase, self.advance_phase());
        }
        loop {
            let phase = self.phase();
            let end = self.advance_phase();
            if end > t {
                return (phase, end);
            }
        }
    }

    /// Next complete segment after the current time.
    pub fn next_segment(&mut self) -> Segment {
        let phase = self.phase();
        let start = self.now;
        let end = self.advance_phase();
        Segment { start, end, phase }
    }
}

/// Sample the joint schedule over `[0, horizon)` after the warm-up.
pub fn sample_joint_schedule(
    dc: &DutyCycleSpec,
    horizon: f64,
    stream: RandomStream,
) -> Result<JointSchedule> {
    let (beta, alpha) = dc.require_rates()?;
    if !(horizon > 0.0) {
        return domain(format!(
            "joint schedule horizon must be positive, got {horizon}"
        ));
    }
    let (mut g, first) = JointGenerator::warmed_up(beta, alpha, stream);
    let mut segments = Vec::new();
    let mut seg = first;
    loop {
        if seg.end >= horizon {
            seg.end = horizon;
            if seg.end > seg.start {
                segments.push(seg);
            }
            break;
        }
        segments.push(seg);
        seg = g.next_segment();
    }
    Ok(JointSchedule { segments, horizon })
}
