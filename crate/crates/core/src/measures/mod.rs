//! Cylinder and Hamming-ball probabilities.
//!
//! [`MeasureOracle`] abstracts over the exact product measures
//! ([`BernoulliMeasure`]) and finite sample measures ([`EmpiricalMeasure`]).

mod bernoulli;
mod bounds;
mod empirical;
mod file;

pub use bernoulli::{
    ball_measure_bernoulli_exact, cylinder_measure_bernoulli, mismatch_distribution,
    BernoulliMeasure,
};
pub use bounds::{ball_measure_binomial_bound, binomial_floor, ln_binomial, stirling_ratio};
pub use empirical::{ball_measure_empirical, EmpiricalMeasure, RAW_SAMPLE_LIMIT};
pub use file::{read_empirical, write_empirical};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::symbolic::{Alphabet, FunnyWord, Interval, Support, Word};

/// Largest number of blocks an exact oracle will enumerate.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

/// Probability vector with strictly positive entries, renormalized to sum 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector {
    p: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidProbability(format!(
                "need at least 2 entries, got {}",
                weights.len()
            )));
        }
        if weights.len() > u8::MAX as usize {
            return Err(Error::InvalidProbability("more than 255 entries".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidProbability(format!(
                "entries must be positive and finite, got {w}"
            )));
        }
        let total: f64 = weights.iter().sum();
        Ok(ProbabilityVector {
            p: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        ProbabilityVector::new(vec![1.0; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn get(&self, symbol: usize) -> f64 {
        self.p[symbol]
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.p.len()).expect("validated on construction")
    }

    pub fn max(&self) -> f64 {
        self.p.iter().copied().fold(f64::MIN, f64::max)
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        ProbabilityVector::new(v)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Vec<f64> {
        p.p
    }
}

/// A ball probability together with its uncertainty (zero for exact oracles).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallEstimate {
    pub estimate: f64,
    pub half_width: f64,
}

impl BallEstimate {
    pub fn exact(value: f64) -> Self {
        BallEstimate {
            estimate: value,
            half_width: 0.0,
        }
    }
}

/// Source of cylinder and ball probabilities for a shift-invariant measure.
pub trait MeasureOracle: Send + Sync {
    fn alphabet(&self) -> Alphabet;

    /// Coordinates the oracle can answer about; `None` means all of ℤ.
    fn window(&self) -> Option<Interval>;

    /// Whether probabilities are exact (as opposed to sample frequencies).
    fn is_exact(&self) -> bool;

    /// Number of samples behind an empirical oracle.
    fn sample_count(&self) -> Option<usize> {
        None
    }

    fn cylinder_measure(&self, word: &FunnyWord) -> Result<f64>;

    /// Joint law of the coordinates in `support`, indexed by
    /// [`block_index`](crate::symbolic::block_index) of the restricted word.
    fn joint_distribution(&self, support: &Support) -> Result<Vec<f64>>;

    /// Measure of `{x : d_Λ(x|_Λ, word) < eps}`.
    fn ball_measure(&self, word: &FunnyWord, eps: f64, confidence: f64) -> Result<BallEstimate>;

    /// Batch form of [`MeasureOracle::ball_measure`]; oracles may share work across words.
    fn ball_measures(
        &self,
        words: &[FunnyWord],
        eps: f64,
        confidence: f64,
    ) -> Result<Vec<BallEstimate>> {
        words
            .iter()
            .map(|w| self.ball_measure(w, eps, confidence))
            .collect()
    }

    /// Draws one word on `window` from the measure.
    fn sample_word(&self, window: Interval, rng: &mut dyn RngCore) -> Result<Word>;

    /// Law of the single coordinate `n`.
    fn marginal(&self, n: i64) -> Result<Vec<f64>> {
        self.joint_distribution(&Support::new(vec![n])?)
    }

    /// Checks that `support` lies in the oracle's window.
    fn check_support(&self, support: &Support) -> Result<()> {
        match self.window() {
            Some(w) if !(w.contains(support.min()) && w.contains(support.max())) => {
                Err(Error::SupportOutOfRange)
            }
            _ => Ok(()),
        }
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("ε must lie in (0,1), got {eps}")))
    }
}

/// Two-sided normal quantile `z` for the given confidence level.
pub fn z_value(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::OutOfRange(format!(
            "confidence must lie in (0,1), got {confidence}"
        )));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 + confidence / 2.0))
}

/// Half-width of a binomial proportion confidence interval.
///
/// Normal approximation, switching to the Wilson score interval when fewer
/// than ten hits were observed. For Wilson the larger of the two one-sided
/// distances from `p_hat` is returned.
pub fn proportion_half_width(hits: u64, n: u64, z: f64) -> f64 {
    let n_f = n as f64;
    let p_hat = hits as f64 / n_f;
    if (hits as f64) < 10.0 {
        let z2 = z * z;
        let denom = 1.0 + z2 / n_f;
        let centre = (p_hat + z2 / (2.0 * n_f)) / denom;
        let spread = z * (p_hat * (1.0 - p_hat) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
        let (lo, hi) = ((centre - spread).max(0.0), (centre + spread).min(1.0));
        (hi - p_hat).max(p_hat - lo)
    } else {
        z * (p_hat * (1.0 - p_hat) / n_f).sqrt()
    }
}

pub(crate) fn check_budget(alphabet: Alphabet, len: usize) -> Result<usize> {
    let blocks = alphabet.block_count(len).unwrap_or(u128::MAX);
    if blocks > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            blocks,
            budget: ENUMERATION_BUDGET,
        });
    }
    Ok(blocks as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_vector_renormalizes() {
        let p = ProbabilityVector::new(vec![1.0, 3.0]).unwrap();
        assert_eq!(p.as_slice(), &[0.25, 0.75]);
        assert!(ProbabilityVector::new(vec![0.0, 1.0]).is_err());
        assert!(ProbabilityVector::new(vec![1.0]).is_err());
        assert!(ProbabilityVector::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn z_value_95() {
        assert!((z_value(0.95).unwrap() - 1.959964).abs() < 1e-5);
        assert!(z_value(1.0).is_err());
    }

    #[test]
    fn wilson_kicks_in_near_zero() {
        let z = 1.96;
        assert!(proportion_half_width(0, 1000, z) > 0.0);
        assert_eq!(proportion_half_width(1000, 1000, z), 0.0);
        let normal = proportion_half_width(500, 1000, z);
        assert!((normal - z * (0.25f64 / 1000.0).sqrt()).abs() < 1e-15);
    }
}
