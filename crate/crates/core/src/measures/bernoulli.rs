use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{check_budget, check_eps, BallEstimate, MeasureOracle, ProbabilityVector};
use crate::error::{Error, Result};
use crate::symbolic::{max_mismatches, Alphabet, FunnyWord, Interval, Support, Symbol, Word};

/// The i.i.d. product measure `μ_p` on the full shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliMeasure {
    p: ProbabilityVector,
}

impl BernoulliMeasure {
    pub fn new(p: ProbabilityVector) -> Self {
        BernoulliMeasure { p }
    }

    pub fn probabilities(&self) -> &ProbabilityVector {
        &self.p
    }

    fn sample_symbol(&self, rng: &mut dyn RngCore) -> Symbol {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &pi) in self.p.as_slice().iter().enumerate() {
            acc += pi;
            if u < acc {
                return i as Symbol;
            }
        }
        (self.p.len() - 1) as Symbol
    }
}

fn check_alphabet(p: &ProbabilityVector, word: &FunnyWord) -> Result<()> {
    if word.alphabet().size() != p.len() {
        return Err(Error::AlphabetMismatch {
            expected: p.len(),
            got: word.alphabet().size(),
        });
    }
    Ok(())
}

/// `Π_{n∈Λ} p(W_n)`.
pub fn cylinder_measure_bernoulli(p: &ProbabilityVector, word: &FunnyWord) -> Result<f64> {
    check_alphabet(p, word)?;
    Ok(word.symbols().iter().map(|&s| p.get(s as usize)).product())
}

/// Distribution of the number of mismatches against `word`, truncated to
/// counts `0..=max_count`.
///
/// Position `j` mismatches with probability `1 - p(W_j)`; the count is
/// Poisson-binomial and is built up one position at a time.
pub fn mismatch_distribution(
    p: &ProbabilityVector,
    word: &FunnyWord,
    max_count: usize,
) -> Result<Vec<f64>> {
    check_alphabet(p, word)?;
    let cap = max_count.min(word.len());
    let mut dist = vec![0.0; cap + 1];
    dist[0] = 1.0;
    for (seen, &s) in word.symbols().iter().enumerate() {
        let hit = p.get(s as usize);
        let miss = 1.0 - hit;
        let top = cap.min(seen + 1);
        for j in (1..=top).rev() {
            dist[j] = dist[j] * hit + dist[j - 1] * miss;
        }
        dist[0] *= hit;
    }
    Ok(dist)
}

/// Exact `μ_p{x : d_Λ(x|_Λ, W) < eps}`.
pub fn ball_measure_bernoulli_exact(p: &ProbabilityVector, word: &FunnyWord, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let k_max = max_mismatches(word.len(), eps).expect("eps is positive");
    let dist = mismatch_distribution(p, word, k_max)?;
    Ok(dist.iter().sum::<f64>().min(1.0))
}

impl MeasureOracle for BernoulliMeasure {
    fn alphabet(&self) -> Alphabet {
        self.p.alphabet()
    }

    fn window(&self) -> Option<Interval> {
        None
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn cylinder_measure(&self, word: &FunnyWord) -> Result<f64> {
        cylinder_measure_bernoulli(&self.p, word)
    }

    fn joint_distribution(&self, support: &Support) -> Result<Vec<f64>> {
        let k = self.p.len();
        let blocks = check_budget(self.alphabet(), support.len())?;
        // Product measure: grow the table one coordinate at a time.
        let mut dist = Vec::with_capacity(blocks);
        dist.push(1.0);
        for _ in 0..support.len() {
            let mut next = Vec::with_capacity(dist.len() * k);
            for &d in &dist {
                next.extend(self.p.as_slice().iter().map(|&pi| d * pi));
            }
            dist = next;
        }
        Ok(dist)
    }

    fn ball_measure(&self, word: &FunnyWord, eps: f64, _confidence: f64) -> Result<BallEstimate> {
        ball_measure_bernoulli_exact(&self.p, word, eps).map(BallEstimate::exact)
    }

    fn sample_word(&self, window: Interval, rng: &mut dyn RngCore) -> Result<Word> {
        let symbols = (0..window.len()).map(|_| self.sample_symbol(rng)).collect();
        Word::new(self.alphabet(), window.start, symbols)
    }

    fn marginal(&self, _n: i64) -> Result<Vec<f64>> {
        Ok(self.p.as_slice().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{decode_block, hamming_distance, ratio_below};
    use proptest::prelude::*;

    fn word(k: usize, symbols: Vec<u8>) -> FunnyWord {
        let sup = Support::interval(0, symbols.len() as i64 - 1).unwrap();
        FunnyWord::new(Alphabet::new(k).unwrap(), sup, symbols).unwrap()
    }

    /// Enumerates every sequence on the support and sums the ones inside the ball.
    fn brute_force_ball(p: &ProbabilityVector, w: &FunnyWord, eps: f64) -> f64 {
        let k = p.len();
        let m = w.len();
        let mut buf = vec![0u8; m];
        let mut total = 0.0;
        for idx in 0..k.pow(m as u32) {
            decode_block(idx, k, m, &mut buf);
            let y = w.with_symbols(buf.clone()).unwrap();
            if ratio_below(hamming_distance(&y, w).unwrap(), eps) {
                total += buf.iter().map(|&s| p.get(s as usize)).product::<f64>();
            }
        }
        total
    }

    #[test]
    fn cylinder_examples() {
        let p = ProbabilityVector::new(vec![0.2, 0.8]).unwrap();
        let w = FunnyWord::from_one_based(
            Alphabet::new(2).unwrap(),
            Support::interval(0, 2).unwrap(),
            &[2, 2, 1],
        )
        .unwrap();
        assert!((cylinder_measure_bernoulli(&p, &w).unwrap() - 0.128).abs() < 1e-15);
        assert_eq!(cylinder_measure_bernoulli(&p, &word(2, vec![1])).unwrap(), 0.8);
        let u = ProbabilityVector::uniform(2).unwrap();
        assert_eq!(cylinder_measure_bernoulli(&u, &word(2, vec![0, 1, 1])).unwrap(), 0.125);
        assert!(cylinder_measure_bernoulli(&u, &word(3, vec![2])).is_err());
    }

    #[test]
    fn ball_half_uniform_four() {
        // Brute force over 2^4 sequences: 1 exact match + 4 single mismatches.
        let p = ProbabilityVector::uniform(2).unwrap();
        let w = word(2, vec![0, 1, 1, 0]);
        let got = ball_measure_bernoulli_exact(&p, &w, 0.3).unwrap();
        assert!((got - 5.0 / 16.0).abs() < 1e-15);
        assert!((brute_force_ball(&p, &w, 0.3) - 5.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn ball_small_eps_is_cylinder() {
        let p = ProbabilityVector::new(vec![0.3, 0.5, 0.2]).unwrap();
        let w = word(3, vec![0, 2, 1, 1, 0]);
        let ball = ball_measure_bernoulli_exact(&p, &w, 0.1).unwrap();
        assert!((ball - cylinder_measure_bernoulli(&p, &w).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn ball_large_eps_is_complement_of_total_mismatch() {
        let p = ProbabilityVector::new(vec![0.3, 0.5, 0.2]).unwrap();
        for m in 1..=10usize {
            let symbols: Vec<u8> = (0..m).map(|i| (i % 3) as u8).collect();
            let w = word(3, symbols);
            // K_max = m - 1 for every eps in ((m-1)/m, 1).
            let eps = 1.0 - 0.5 / m as f64;
            let got = ball_measure_bernoulli_exact(&p, &w, eps).unwrap();
            let brute = brute_force_ball(&p, &w, eps);
            let all_miss: f64 = w.symbols().iter().map(|&s| 1.0 - p.get(s as usize)).product();
            assert!((got - brute).abs() < 1e-12);
            assert!((got - (1.0 - all_miss)).abs() < 1e-12);
        }
    }

    #[test]
    fn eps_domain() {
        let p = ProbabilityVector::uniform(2).unwrap();
        let w = word(2, vec![0, 1]);
        assert!(ball_measure_bernoulli_exact(&p, &w, 0.0).is_err());
        assert!(ball_measure_bernoulli_exact(&p, &w, 1.0).is_err());
        assert!(ball_measure_bernoulli_exact(&p, &w, 1.5).is_err());
    }

    #[test]
    fn joint_distribution_sums_to_one() {
        let m = BernoulliMeasure::new(ProbabilityVector::new(vec![0.1, 0.2, 0.7]).unwrap());
        for len in 1..=8 {
            let sup = Support::interval(0, len - 1).unwrap();
            let total: f64 = m.joint_distribution(&sup).unwrap().iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn dp_matches_enumeration(
            k in 2usize..=3,
            raw_p in proptest::collection::vec(0.05f64..1.0, 3),
            syms in proptest::collection::vec(0u8..3, 1..=9),
            eps in 0.01f64..0.99,
        ) {
            let p = ProbabilityVector::new(raw_p[..k].to_vec()).unwrap();
            let w = word(k, syms.into_iter().map(|s| s % k as u8).collect());
            let dp = ball_measure_bernoulli_exact(&p, &w, eps).unwrap();
            prop_assert!((dp - brute_force_ball(&p, &w, eps)).abs() < 1e-12);
        }

        #[test]
        fn ball_monotone_in_eps(
            syms in proptest::collection::vec(0u8..2, 1..40),
            e1 in 0.01f64..0.99,
            e2 in 0.01f64..0.99,
        ) {
            let p = ProbabilityVector::new(vec![0.35, 0.65]).unwrap();
            let w = word(2, syms);
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(
                ball_measure_bernoulli_exact(&p, &w, lo).unwrap()
                    <= ball_measure_bernoulli_exact(&p, &w, hi).unwrap() + 1e-15
            );
        }
    }
}
