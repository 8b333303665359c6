//! Block entropies and entropy-rate profiles (natural log).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{MeasureOracle, ProbabilityVector};
use crate::symbolic::Interval;

/// `-Σ p ln p` with `0 ln 0 = 0`.
pub fn shannon(dist: &[f64]) -> f64 {
    -dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Entropy of one step of the Bernoulli shift, `-Σ p(i) ln p(i)`.
pub fn bernoulli_entropy_exact(p: &ProbabilityVector) -> f64 {
    shannon(p.as_slice())
}

fn block_window(oracle: &dyn MeasureOracle, m: usize) -> Result<Interval> {
    if m == 0 {
        return Err(Error::OutOfRange("block length must be positive".into()));
    }
    let start = oracle.window().map(|w| w.start).unwrap_or(0);
    let window = Interval::with_len(start, m)?;
    if let Some(w) = oracle.window() {
        if !w.contains_interval(&window) {
            return Err(Error::OutOfRange(format!(
                "block length {m} exceeds the oracle window {w}"
            )));
        }
    }
    Ok(window)
}

fn block_distribution(oracle: &dyn MeasureOracle, m: usize) -> Result<Vec<f64>> {
    let window = block_window(oracle, m)?;
    oracle.joint_distribution(&window.to_support())
}

/// `H_m = -Σ_b ν(b) ln ν(b)` over the length-`m` blocks at the start of the
/// oracle's window.
pub fn block_entropy(oracle: &dyn MeasureOracle, m: usize) -> Result<f64> {
    Ok(shannon(&block_distribution(oracle, m)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub m: usize,
    /// `H_m` in nats.
    pub block_entropy: f64,
    /// `H_m / m`.
    pub rate: f64,
    /// `H_m - H_{m-1}` with `H_0 = 0`.
    pub increment: f64,
    /// Blocks of positive measure.
    pub distinct_blocks: usize,
    /// `H_m + (distinct - 1) / (2 N_s)`; empirical oracles only.
    pub miller_madow: Option<f64>,
}

impl EntropyRow {
    pub fn rate_bits(&self) -> f64 {
        self.rate / std::f64::consts::LN_2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub rows: Vec<EntropyRow>,
    /// Sample count behind an empirical oracle.
    pub samples: Option<usize>,
    /// Undersampling warning for empirical oracles.
    pub bias_note: Option<String>,
}

pub fn entropy_profile(oracle: &dyn MeasureOracle, m_max: usize) -> Result<EntropyProfile> {
    if m_max == 0 {
        return Err(Error::OutOfRange("m_max must be positive".into()));
    }
    let samples = oracle.sample_count();
    let mut rows = Vec::with_capacity(m_max);
    let mut previous = 0.0;
    for m in 1..=m_max {
        let dist = block_distribution(oracle, m)?;
        let h = shannon(&dist);
        let distinct = dist.iter().filter(|&&p| p > 0.0).count();
        rows.push(EntropyRow {
            m,
            block_entropy: h,
            rate: h / m as f64,
            increment: h - previous,
            distinct_blocks: distinct,
            miller_madow: samples.map(|n| h + (distinct as f64 - 1.0) / (2.0 * n as f64)),
        });
        previous = h;
    }
    let bias_note = samples.map(|n| {
        let last = rows.last().expect("m_max >= 1");
        format!(
            "{} distinct length-{} blocks from {} samples; plug-in entropies are biased low when the ratio is not small",
            last.distinct_blocks, last.m, n
        )
    });
    Ok(EntropyProfile {
        rows,
        samples,
        bias_note,
    })
}

impl EntropyProfile {
    /// CSV with header `m,H_m,H_m/m,H_m-H_{m-1},distinct_blocks,samples`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,H_m,H_m/m,H_m-H_{m-1},distinct_blocks,samples\n");
        let samples = self.samples.map(|n| n.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.m, r.block_entropy, r.rate, r.increment, r.distinct_blocks, samples
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{BernoulliMeasure, EmpiricalMeasure};
    use crate::symbolic::Alphabet;
    use proptest::prelude::*;

    #[test]
    fn uniform_binary_three_blocks() {
        let b = BernoulliMeasure::new(ProbabilityVector::uniform(2).unwrap());
        let h = block_entropy(&b, 3).unwrap();
        assert!((h - 3.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn skewed_single_symbol() {
        let p = ProbabilityVector::new(vec![0.2, 0.8]).unwrap();
        let expected = -0.2 * 0.2f64.ln() - 0.8 * 0.8f64.ln();
        let h = block_entropy(&BernoulliMeasure::new(p), 1).unwrap();
        assert!((h - expected).abs() < 1e-15);
        assert!((h - 0.5004).abs() < 1e-4);
    }

    #[test]
    fn exact_bernoulli_entropy() {
        for k in 2..6 {
            let p = ProbabilityVector::uniform(k).unwrap();
            assert!((bernoulli_entropy_exact(&p) - (k as f64).ln()).abs() < 1e-14);
        }
        let nearly = ProbabilityVector::new(vec![1e-12, 1.0]).unwrap();
        assert!(bernoulli_entropy_exact(&nearly) < 1e-10);
    }

    #[test]
    fn deterministic_oracle_has_zero_entropy() {
        let a = Alphabet::new(3).unwrap();
        let window = Interval::new(0, 5).unwrap();
        let em = EmpiricalMeasure::from_flat(a, window, vec![2, 0, 1, 1, 0, 2], None).unwrap();
        let profile = entropy_profile(&em, 6).unwrap();
        assert!(profile.rows.iter().all(|r| r.block_entropy == 0.0));
        assert_eq!(profile.samples, Some(1));
        assert!(profile.bias_note.is_some());
    }

    #[test]
    fn budget_guard() {
        let b = BernoulliMeasure::new(ProbabilityVector::uniform(4).unwrap());
        let err = block_entropy(&b, 20).unwrap_err();
        assert!(err.to_string().starts_with("block length exceeds enumeration budget"));
    }

    #[test]
    fn csv_header_and_rows() {
        let b = BernoulliMeasure::new(ProbabilityVector::uniform(2).unwrap());
        let csv = entropy_profile(&b, 3).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "m,H_m,H_m/m,H_m-H_{m-1},distinct_blocks,samples");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("3,"));
    }

    proptest! {
        #[test]
        fn bernoulli_rate_and_subadditivity(
            k in 2usize..=4,
            raw in proptest::collection::vec(0.05f64..1.0, 4),
        ) {
            let p = ProbabilityVector::new(raw[..k].to_vec()).unwrap();
            let h = bernoulli_entropy_exact(&p);
            let profile = entropy_profile(&BernoulliMeasure::new(p), 8).unwrap();
            let mut prev = 0.0;
            for r in &profile.rows {
                prop_assert!((r.rate - h).abs() < 1e-9);
                prop_assert!(r.block_entropy + 1e-12 >= prev);
                prop_assert!(r.block_entropy <= prev + profile.rows[0].block_entropy + 1e-9);
                prev = r.block_entropy;
            }
        }
    }
}
