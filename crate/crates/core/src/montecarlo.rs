//! Finite-shot emulation of coincidence counting.
//!
//! Streams come from SplitMix64 so that a `(master seed, point index)` pair
//! fixes every draw regardless of how sweep points are scheduled.

use std::collections::BTreeMap;

use rand_core::RngCore;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::protocols::{PointerStats, LABEL_MINUS, LABEL_PHI, LABEL_PHI_PERP, LABEL_PLUS};

pub const LABEL_PLUS_Y: &str = "plus_y";
pub const LABEL_MINUS_Y: &str = "minus_y";

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX2: u64 = 0x94D0_49BB_1331_11EB;

/// Tolerance on the total mass of an outcome distribution.
pub const DISTRIBUTION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("invalid outcome distribution: {0}")]
    InvalidDistribution(String),
    #[error("shots must be at least 1")]
    ZeroShots,
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX2);
    z ^ (z >> 31)
}

/// SplitMix64 (Steele, Lea and Flood): a Weyl sequence with step `GOLDEN`
/// passed through a 64-bit finalizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }
}

impl RngCore for SplitMix64 {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Seed of the `point_index`-th stream under `master`:
/// `mix(master + GOLDEN·(point_index + 1))`, i.e. the `point_index`-th output
/// of a SplitMix64 generator seeded with `master`.
pub fn derive_seed(master: u64, point_index: u64) -> u64 {
    mix(master.wrapping_add(GOLDEN.wrapping_mul(point_index.wrapping_add(1))))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
    pub seed: u64,
}

impl MeasurementRecord {
    pub fn count(&self, label: &str) -> u64 {
        self.counts.get(label).copied().unwrap_or(0)
    }
}

fn validate(probs: &BTreeMap<String, f64>) -> Result<(), SamplingError> {
    if probs.is_empty() {
        return Err(SamplingError::InvalidDistribution("no outcomes".into()));
    }
    for (k, &p) in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(SamplingError::InvalidDistribution(format!(
                "probability of '{k}' is {p}"
            )));
        }
    }
    let total: f64 = probs.values().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(SamplingError::InvalidDistribution(format!(
            "probabilities sum to {total}"
        )));
    }
    Ok(())
}

/// Multinomial draw of `shots` outcomes, realised as a chain of conditional
/// binomials over the labels in sorted order.
pub fn sample_record(
    probs: &BTreeMap<String, f64>,
    shots: u64,
    seed: u64,
) -> Result<MeasurementRecord, SamplingError> {
    validate(probs)?;
    if shots == 0 {
        return Err(SamplingError::ZeroShots);
    }
    let mut rng = SplitMix64::new(seed);
    let mut counts = BTreeMap::new();
    let mut left = shots;
    let mut mass_left: f64 = probs.values().sum();
    let last = probs.len() - 1;
    for (i, (label, &p)) in probs.iter().enumerate() {
        let n = if i == last || left == 0 {
            if i == last {
                left
            } else {
                0
            }
        } else {
            let q = if mass_left > 0.0 {
                (p / mass_left).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let draw = Binomial::new(left, q)
                .map_err(|e| SamplingError::InvalidDistribution(e.to_string()))?;
            draw.sample(&mut rng)
        };
        counts.insert(label.clone(), n);
        left -= n;
        mass_left -= p;
    }
    Ok(MeasurementRecord {
        counts,
        shots,
        seed,
    })
}

/// Plug-in estimate of a ±1 observable with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub shots: u64,
}

pub fn binomial_stderr(expectation: f64, shots: u64) -> f64 {
    ((1.0 - expectation * expectation).max(0.0) / shots as f64).sqrt()
}

fn two_outcome(record: &MeasurementRecord, plus: &str, minus: &str) -> Option<Estimate> {
    if !record.counts.contains_key(plus) && !record.counts.contains_key(minus) {
        return None;
    }
    let (np, nm) = (record.count(plus), record.count(minus));
    let n = np + nm;
    if n == 0 {
        return None;
    }
    let value = (np as f64 - nm as f64) / n as f64;
    Some(Estimate {
        value,
        stderr: binomial_stderr(value, n),
        shots: n,
    })
}

/// Empirical pointer expectations recovered from a record. An expectation is
/// `None` when the record holds no counts for its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalStats {
    pub exp_x: Option<Estimate>,
    pub exp_y: Option<Estimate>,
    pub exp_z: Option<Estimate>,
    pub outcome_freqs: BTreeMap<String, f64>,
}

impl EmpiricalStats {
    /// Replaces the expectations and outcome distribution of `exact` with the
    /// sampled ones; bases that were not sampled keep their exact values.
    pub fn apply_to(&self, exact: &PointerStats) -> PointerStats {
        let mut out = exact.clone();
        if let Some(e) = self.exp_x {
            out.exp_x = e.value;
        }
        if let Some(e) = self.exp_y {
            out.exp_y = e.value;
        }
        if let Some(e) = self.exp_z {
            out.exp_z = e.value;
        }
        out.outcome_probs = self.outcome_freqs.clone();
        out
    }
}

pub fn empirical_stats(record: &MeasurementRecord) -> EmpiricalStats {
    let outcome_freqs = record
        .counts
        .iter()
        .map(|(k, &n)| (k.clone(), n as f64 / record.shots as f64))
        .collect();
    EmpiricalStats {
        exp_x: two_outcome(record, LABEL_PLUS, LABEL_MINUS),
        exp_y: two_outcome(record, LABEL_PLUS_Y, LABEL_MINUS_Y),
        exp_z: two_outcome(record, LABEL_PHI, LABEL_PHI_PERP),
        outcome_freqs,
    }
}

/// Samples the pointer measurement of `stats` and returns the record with its
/// empirical summary.
pub fn sample_pointer_stats(
    stats: &PointerStats,
    shots: u64,
    seed: u64,
) -> Result<(MeasurementRecord, EmpiricalStats), SamplingError> {
    let record = sample_record(&stats.outcome_probs, shots, seed)?;
    let empirical = empirical_stats(&record);
    Ok((record, empirical))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn splitmix_reference_stream() {
        // first outputs of SplitMix64 seeded with 0
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn derive_seed_pins() {
        assert_eq!(derive_seed(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(derive_seed(0, 1), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(derive_seed(42, 7), derive_seed(42, 7));
    }

    #[test]
    fn derive_seed_separates_neighbours() {
        let mut rng = SplitMix64::new(12345);
        for _ in 0..1000 {
            let s = rng.next_u64();
            assert_ne!(derive_seed(s, 0), derive_seed(s, 1));
        }
    }

    #[test]
    fn degenerate_distribution() {
        let r = sample_record(&dist(&[("a", 1.0)]), 100, 9).unwrap();
        assert_eq!(r.count("a"), 100);
        let r = sample_record(&dist(&[("a", 0.0), ("b", 1.0)]), 100, 9).unwrap();
        assert_eq!(r.count("a"), 0);
        assert_eq!(r.count("b"), 100);
    }

    #[test]
    fn fair_coin_is_reproducible() {
        let p = dist(&[("a", 0.5), ("b", 0.5)]);
        let r1 = sample_record(&p, 3000, 2024).unwrap();
        let r2 = sample_record(&p, 3000, 2024).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.count("a") + r1.count("b"), 3000);
        let frac = r1.count("a") as f64 / 3000.0;
        let se = (0.25f64 / 3000.0).sqrt();
        assert!((frac - 0.5).abs() < 5.0 * se);
        assert_eq!(r1.count("a"), 1543);
    }

    #[test]
    fn invalid_inputs() {
        let p = dist(&[("a", 0.5), ("b", 0.5)]);
        assert_eq!(sample_record(&p, 0, 1), Err(SamplingError::ZeroShots));
        assert!(sample_record(&dist(&[("a", 0.5), ("b", 0.4)]), 10, 1).is_err());
        assert!(sample_record(&dist(&[("a", 1.5), ("b", -0.5)]), 10, 1).is_err());
        assert!(sample_record(&BTreeMap::new(), 10, 1).is_err());
    }

    fn record(pairs: &[(&str, u64)]) -> MeasurementRecord {
        let counts: BTreeMap<String, u64> =
            pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let shots = counts.values().sum();
        MeasurementRecord {
            counts,
            shots,
            seed: 0,
        }
    }

    #[test]
    fn empirical_examples() {
        let e = empirical_stats(&record(&[(LABEL_PLUS, 3000), (LABEL_MINUS, 0)]))
            .exp_x
            .unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.stderr, 0.0);

        let e = empirical_stats(&record(&[(LABEL_PLUS, 1500), (LABEL_MINUS, 1500)]))
            .exp_x
            .unwrap();
        assert_eq!(e.value, 0.0);
        assert!((e.stderr - 1.0 / 3000f64.sqrt()).abs() < 1e-15);
        assert!((e.stderr - 0.01826).abs() < 1e-5);

        let e = empirical_stats(&record(&[(LABEL_PLUS, 2250), (LABEL_MINUS, 750)]))
            .exp_x
            .unwrap();
        assert_eq!(e.value, 0.5);

        let s = empirical_stats(&record(&[(LABEL_PHI, 10), (LABEL_PHI_PERP, 30)]));
        assert!(s.exp_x.is_none());
        assert_eq!(s.exp_z.unwrap().value, -0.5);
    }
}
