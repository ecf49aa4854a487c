//! Per-pair contact series and the alternating-renewal generator.

use serde::{Deserialize, Serialize};

use super::dist::Dist;
use super::rng::RandomStream;
use crate::error::{domain, Error, Result};

pub type NodeId = u64;

/// Ordered contacts `[X_i, Y_i]` of one node pair.
///
/// Point contacts (`X_i = Y_i`) represent the negligible-duration model;
/// otherwise `X_i < Y_i < X_{i+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSeries {
    pub pair: (NodeId, NodeId),
    pub starts: Vec<f64>,
    pub ends: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Intercontact,
    Contact,
}

impl ContactSeries {
    pub fn new(pair: (NodeId, NodeId), starts: Vec<f64>, ends: Vec<f64>) -> Result<Self> {
        let s = Self { pair, starts, ends };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.starts.len() != self.ends.len() {
            return Err(Error::Data(format!(
                "pair {:?}: {} starts but {} ends",
                self.pair,
                self.starts.len(),
                self.ends.len()
            )));
        }
        for i in 0..self.starts.len() {
            let (x, y) = (self.starts[i], self.ends[i]);
            if !(x.is_finite() && y.is_finite() && x <= y) {
                return Err(Error::Data(format!(
                    "pair {:?}: contact {i} has start {x} after end {y}",
                    self.pair
                )));
            }
            if let Some(&next) = self.starts.get(i + 1) {
                if !(y < next) {
                    return Err(Error::Data(format!(
                        "pair {:?}: contact {i} ends at {y}, not before the next start {next}",
                        self.pair
                    )));
                }
            }
        }
        Ok(())
    }

    /// `C_i = Y_i - X_i`.
    pub fn contacts(&self) -> Vec<f64> {
        self.starts
            .iter()
            .zip(&self.ends)
            .map(|(x, y)| y - x)
            .collect()
    }

    /// `S_i = X_{i+1} - Y_i`.
    pub fn intercontacts(&self) -> Vec<f64> {
        self.ends
            .iter()
            .zip(self.starts.iter().skip(1))
            .map(|(y, x)| x - y)
            .collect()
    }

    pub fn samples(&self, q: Quantity) -> Vec<f64> {
        match q {
            Quantity::Contact => self.contacts(),
            Quantity::Intercontact => self.intercontacts(),
        }
    }
}

/// Draw `n` contacts: `X_1 = S_1`, `Y_i = X_i + C_i`, `X_{i+1} = Y_i + S_{i+1}`.
/// Without a contact distribution every contact is a point (`C_i = 0`).
pub fn sample_contact_process(
    s_dist: &Dist,
    c_dist: Option<&Dist>,
    n_contacts: usize,
    stream: RandomStream,
) -> Result<ContactSeries> {
    if n_contacts == 0 {
        return domain("sample_contact_process needs at least one contact");
    }
    let mut rng = stream.rng();
    let mut starts = Vec::with_capacity(n_contacts);
    let mut ends = Vec::with_capacity(n_contacts);
    let mut t = 0.0;
    for _ in 0..n_contacts {
        t += s_dist.sample(&mut rng);
        starts.push(t);
        if let Some(c) = c_dist {
            t += c.sample(&mut rng);
        }
        ends.push(t);
    }
    Ok(ContactSeries {
        pair: (0, 1),
        starts,
        ends,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proc::dist::DistSpec;
    use proptest::prelude::*;

    #[test]
    fn renewal_sums() {
        let s = DistSpec::exponential(0.001).build().unwrap();
        let c = DistSpec::exponential(0.02).build().unwrap();
        let stream = RandomStream::new(5);
        let cs = sample_contact_process(&s, Some(&c), 3, stream).unwrap();
        // Replay the same stream by hand.
        let mut r = stream.rng();
        let (s1, c1, s2) = (s.sample(&mut r), c.sample(&mut r), s.sample(&mut r));
        assert_eq!(cs.starts[0], s1);
        assert_eq!(cs.ends[0], s1 + c1);
        assert_eq!(cs.starts[1], s1 + c1 + s2);
    }

    #[test]
    fn negligible_mean() {
        let s = DistSpec::exponential(0.001).build().unwrap();
        let cs = sample_contact_process(&s, None, 100_000, RandomStream::new(9)).unwrap();
        let ict = cs.intercontacts();
        let mean = ict.iter().sum::<f64>() / ict.len() as f64;
        assert!((mean - 1000.0).abs() < 20.0, "{mean}");
        assert!(cs.contacts().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn series_arithmetic() {
        let cs = ContactSeries::new((1, 2), vec![0.0, 10.0, 20.0], vec![5.0, 12.0, 21.0]).unwrap();
        assert_eq!(cs.intercontacts(), vec![5.0, 8.0]);
        assert_eq!(cs.contacts(), vec![5.0, 2.0, 1.0]);
        assert!(ContactSeries::new((1, 2), vec![0.0, 4.0], vec![5.0, 6.0]).is_err());
        let single = ContactSeries::new((1, 2), vec![1.0], vec![2.0]).unwrap();
        assert!(single.intercontacts().is_empty());
    }

    proptest! {
        #[test]
        fn generated_series_are_valid(seed in any::<u64>(), alpha in 0.8f64..3.0, n in 1usize..200) {
            let s = DistSpec::pareto(alpha, 5.0).build().unwrap();
            let c = DistSpec::exponential(0.1).build().unwrap();
            let cs = sample_contact_process(&s, Some(&c), n, RandomStream::new(seed)).unwrap();
            prop_assert!(cs.validate().is_ok());
            prop_assert!(cs.intercontacts().iter().all(|&x| x > 0.0));
            prop_assert!(cs.contacts().iter().all(|&x| x > 0.0));
        }
    }
}
