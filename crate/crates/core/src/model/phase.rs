//! Two-moment phase-type fits: balanced-means hyper-exponential above
//! `cv² = 1`, Erlang stages followed by one exponential stage below it.

use serde::{Deserialize, Serialize};

use super::mixture::Component;
use crate::error::{domain, Result};
use crate::proc::quad::{integrate, QuadConfig};
use crate::proc::StreamRng;

/// Cap on the number of Erlang stages of the hypo-exponential form.
pub const MAX_ERLANG_STAGES: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseTypeSpec {
    Exponential {
        rate: f64,
    },
    HyperExponential {
        p1: f64,
        rate1: f64,
        rate2: f64,
    },
    /// `Erlang(erlang_stages, erlang_rate) + Exp(exp_rate)`.
    HypoExponential {
        erlang_stages: u32,
        erlang_rate: f64,
        exp_rate: f64,
    },
}

pub fn phase_type_fit(mean: f64, cv2: f64) -> Result<PhaseTypeSpec> {
    if !(mean > 0.0 && mean.is_finite() && cv2 > 0.0 && cv2.is_finite()) {
        return domain(format!(
            "phase-type fit needs mean > 0 and cv2 > 0, got ({mean}, {cv2})"
        ));
    }
    if (cv2 - 1.0).abs() <= 1e-12 {
        return Ok(PhaseTypeSpec::Exponential { rate: 1.0 / mean });
    }
    if cv2 > 1.0 {
        let p1 = 0.5 * (1.0 + ((cv2 - 1.0) / (cv2 + 1.0)).sqrt());
        return Ok(PhaseTypeSpec::HyperExponential {
            p1,
            rate1: 2.0 * p1 / mean,
            rate2: 2.0 * (1.0 - p1) / mean,
        });
    }
    // Fewest stages that can reach cv²; the snap absorbs rounding of 1/cv².
    let inv = 1.0 / cv2;
    let n = if (inv - inv.round()).abs() < 1e-9 {
        inv.round()
    } else {
        inv.ceil()
    };
    if n - 1.0 > MAX_ERLANG_STAGES as f64 {
        return domain(format!(
            "cv2 = {cv2} needs more than {MAX_ERLANG_STAGES} Erlang stages (floor is 1/{})",
            MAX_ERLANG_STAGES + 1
        ));
    }
    // Fraction of the mean carried by the exponential stage.
    let x = (1.0 + (1.0 - n + n * (n - 1.0) * cv2).max(0.0).sqrt()) / n;
    Ok(PhaseTypeSpec::HypoExponential {
        erlang_stages: (n - 1.0) as u32,
        erlang_rate: (n - 1.0) / ((1.0 - x) * mean),
        exp_rate: 1.0 / (x * mean),
    })
}

/// `P(Erlang(k, rate) ≤ x)`.
fn erlang_cdf(k: u32, rate: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let z = rate * x;
    // 1 - e^{-z} Σ_{j<k} z^j / j!.
    let mut term = (-z).exp();
    let mut tail = term;
    for j in 1..k {
        term *= z / j as f64;
        tail += term;
    }
    (1.0 - tail).clamp(0.0, 1.0)
}

fn erlang_pdf(k: u32, rate: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let lg: f64 = (1..k).map(|j| (j as f64).ln()).sum();
    (k as f64 * rate.ln() + (k as f64 - 1.0) * x.max(f64::MIN_POSITIVE).ln() - rate * x - lg).exp()
}

fn quad() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_panels: 2000,
    }
}

impl PhaseTypeSpec {
    pub fn mean(&self) -> f64 {
        match *self {
            PhaseTypeSpec::Exponential { rate } => 1.0 / rate,
            PhaseTypeSpec::HyperExponential { p1, rate1, rate2 } => p1 / rate1 + (1.0 - p1) / rate2,
            PhaseTypeSpec::HypoExponential {
                erlang_stages,
                erlang_rate,
                exp_rate,
            } => erlang_stages as f64 / erlang_rate + 1.0 / exp_rate,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            PhaseTypeSpec::Exponential { rate } => 2.0 / (rate * rate),
            PhaseTypeSpec::HyperExponential { p1, rate1, rate2 } => {
                2.0 * p1 / (rate1 * rate1) + 2.0 * (1.0 - p1) / (rate2 * rate2)
            }
            PhaseTypeSpec::HypoExponential {
                erlang_stages,
                erlang_rate,
                exp_rate,
            } => {
                let k = erlang_stages as f64;
                let var = k / (erlang_rate * erlang_rate) + 1.0 / (exp_rate * exp_rate);
                var + self.mean() * self.mean()
            }
        }
    }

    pub fn cv2(&self) -> f64 {
        let m = self.mean();
        self.second_moment() / (m * m) - 1.0
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            PhaseTypeSpec::Exponential { rate } => -(-rate * x).exp_m1(),
            PhaseTypeSpec::HyperExponential { p1, rate1, rate2 } => {
                1.0 - p1 * (-rate1 * x).exp() - (1.0 - p1) * (-rate2 * x).exp()
            }
            PhaseTypeSpec::HypoExponential {
                erlang_stages: k,
                erlang_rate: a,
                exp_rate: b,
            } => {
                if k == 0 {
                    return -(-b * x).exp_m1();
                }
                if (a - b).abs() <= 1e-12 * a {
                    return erlang_cdf(k + 1, a, x);
                }
                if k == 1 && (a - b).abs() > 1e-4 * a {
                    // Two well-separated rates in closed form.
                    let s = (b * (-a * x).exp() - a * (-b * x).exp()) / (b - a);
                    return (1.0 - s).clamp(0.0, 1.0);
                }
                // P(E + X ≤ x) = ∫_0^x f_E(t) (1 - e^{-b(x - t)}) dt.
                let f = |t: f64| erlang_pdf(k, a, t) * -(-b * (x - t)).exp_m1();
                integrate(f, 0.0, x, &quad())
                    .unwrap_or(f64::NAN)
                    .clamp(0.0, 1.0)
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match *self {
            PhaseTypeSpec::Exponential { rate } => rate * (-rate * x).exp(),
            PhaseTypeSpec::HyperExponential { p1, rate1, rate2 } => {
                p1 * rate1 * (-rate1 * x).exp() + (1.0 - p1) * rate2 * (-rate2 * x).exp()
            }
            PhaseTypeSpec::HypoExponential {
                erlang_stages: k,
                erlang_rate: a,
                exp_rate: b,
            } => {
                if k == 0 {
                    return b * (-b * x).exp();
                }
                if (a - b).abs() <= 1e-12 * a {
                    return erlang_pdf(k + 1, a, x);
                }
                if k == 1 && (a - b).abs() > 1e-4 * a {
                    return a * b * ((-b * x).exp() - (-a * x).exp()) / (a - b);
                }
                let f = |t: f64| erlang_pdf(k, a, t) * b * (-b * (x - t)).exp();
                integrate(f, 0.0, x, &quad()).unwrap_or(f64::NAN)
            }
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match *self {
            PhaseTypeSpec::Exponential { rate } => rng.exponential(rate),
            PhaseTypeSpec::HyperExponential { p1, rate1, rate2 } => {
                if rng.uniform() < p1 {
                    rng.exponential(rate1)
                } else {
                    rng.exponential(rate2)
                }
            }
            PhaseTypeSpec::HypoExponential {
                erlang_stages,
                erlang_rate,
                exp_rate,
            } => {
                (0..erlang_stages)
                    .map(|_| rng.exponential(erlang_rate))
                    .sum::<f64>()
                    + rng.exponential(exp_rate)
            }
        }
    }
}

impl Component for PhaseTypeSpec {
    fn name(&self) -> String {
        match self {
            PhaseTypeSpec::Exponential { .. } => "exponential".into(),
            PhaseTypeSpec::HyperExponential { .. } => "hyper_exponential".into(),
            PhaseTypeSpec::HypoExponential { .. } => "hypo_exponential".into(),
        }
    }
    fn cdf(&self, x: f64) -> f64 {
        PhaseTypeSpec::cdf(self, x)
    }
    fn pdf(&self, x: f64) -> f64 {
        PhaseTypeSpec::pdf(self, x)
    }
    fn sample(&self, rng: &mut StreamRng) -> f64 {
        PhaseTypeSpec::sample(self, rng)
    }
    fn upper_hint(&self) -> f64 {
        // Chebyshev-style bound, ample for plotting.
        self.mean() * (1.0 + 10.0 * self.cv2().sqrt())
    }
}
