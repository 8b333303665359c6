use std::collections::HashMap;

use rand::{Rng, RngCore};
use rayon::prelude::*;

use super::{check_budget, check_eps, proportion_half_width, z_value, BallEstimate, MeasureOracle};
use crate::error::{Error, Result};
use crate::symbolic::{
    block_index, max_mismatches, Alphabet, FunnyWord, Interval, Support, Symbol, Word,
};

/// Above this many samples the raw words are collapsed into a table of
/// distinct window words with multiplicities.
pub const RAW_SAMPLE_LIMIT: usize = 1_000_000;

const CHUNK_RECORDS: usize = 8192;

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// One record per sample, row-major.
    Raw(Vec<Symbol>),
    /// Distinct window words (row-major) with their sample counts.
    Counted { words: Vec<Symbol>, counts: Vec<u64> },
}

/// Finite sample measure: `N_s` words on a common window.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    alphabet: Alphabet,
    window: Interval,
    storage: Storage,
    samples: usize,
    seed: Option<u64>,
}

impl EmpiricalMeasure {
    /// Builds the measure from row-major sample words of length `window.len()`.
    pub fn from_flat(
        alphabet: Alphabet,
        window: Interval,
        data: Vec<Symbol>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let width = window.len();
        if data.is_empty() || data.len() % width != 0 {
            return Err(Error::OutOfRange(format!(
                "sample data of length {} does not split into nonempty words of length {width}",
                data.len()
            )));
        }
        if let Some(&s) = data.iter().find(|&&s| (s as usize) >= alphabet.size()) {
            return Err(Error::SymbolOutOfAlphabet {
                symbol: s as usize,
                size: alphabet.size(),
            });
        }
        let samples = data.len() / width;
        let storage = if samples > RAW_SAMPLE_LIMIT {
            collapse(&data, width)
        } else {
            Storage::Raw(data)
        };
        Ok(EmpiricalMeasure {
            alphabet,
            window,
            storage,
            samples,
            seed,
        })
    }

    pub fn from_words(alphabet: Alphabet, words: &[Word], seed: Option<u64>) -> Result<Self> {
        let first = words
            .first()
            .ok_or_else(|| Error::OutOfRange("need at least one sample".into()))?;
        let window = first.interval();
        let mut data = Vec::with_capacity(words.len() * window.len());
        for w in words {
            if w.interval() != window {
                return Err(Error::WindowMismatch);
            }
            data.extend_from_slice(w.symbols());
        }
        EmpiricalMeasure::from_flat(alphabet, window, data, seed)
    }

    pub fn window_interval(&self) -> Interval {
        self.window
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn is_raw(&self) -> bool {
        matches!(self.storage, Storage::Raw(_))
    }

    /// Number of distinct words on the full window.
    pub fn distinct_words(&self) -> usize {
        match &self.storage {
            Storage::Raw(data) => collapse_counts(data, self.window.len()).len(),
            Storage::Counted { counts, .. } => counts.len(),
        }
    }

    /// Visits every stored record as `(word, multiplicity)`.
    pub fn for_each_record(&self, mut f: impl FnMut(&[Symbol], u64)) {
        let width = self.window.len();
        match &self.storage {
            Storage::Raw(data) => data.chunks_exact(width).for_each(|w| f(w, 1)),
            Storage::Counted { words, counts } => words
                .chunks_exact(width)
                .zip(counts)
                .for_each(|(w, &c)| f(w, c)),
        }
    }

    /// Sum of `score(word) * multiplicity` over records, in parallel with a
    /// reduction that does not depend on the thread count.
    fn weighted_count(&self, score: impl Fn(&[Symbol]) -> bool + Sync) -> u64 {
        let width = self.window.len();
        match &self.storage {
            Storage::Raw(data) => data
                .par_chunks(width * CHUNK_RECORDS)
                .map(|chunk| chunk.chunks_exact(width).filter(|w| score(w)).count() as u64)
                .sum(),
            Storage::Counted { words, counts } => words
                .chunks_exact(width)
                .zip(counts)
                .filter(|(w, _)| score(w))
                .map(|(_, &c)| c)
                .sum(),
        }
    }

    fn positions(&self, support: &Support) -> Result<Vec<usize>> {
        if !(self.window.contains(support.min()) && self.window.contains(support.max())) {
            return Err(Error::SupportOutOfRange);
        }
        Ok(support
            .indices()
            .iter()
            .map(|&n| (n - self.window.start) as usize)
            .collect())
    }

    /// Multiplicity of every distinct restriction `x|_Λ`.
    pub fn restricted_counts(&self, support: &Support) -> Result<HashMap<Vec<Symbol>, u64>> {
        let pos = self.positions(support)?;
        let mut table: HashMap<Vec<Symbol>, u64> = HashMap::new();
        let mut key = vec![0; pos.len()];
        self.for_each_record(|w, c| {
            for (slot, &p) in key.iter_mut().zip(&pos) {
                *slot = w[p];
            }
            match table.get_mut(key.as_slice()) {
                Some(v) => *v += c,
                None => {
                    table.insert(key.clone(), c);
                }
            }
        });
        Ok(table)
    }

    /// Number of samples `x` with fewer than `k_max + 1` mismatches against `word` on `pos`.
    fn ball_hits(&self, pos: &[usize], word: &[Symbol], k_max: usize) -> u64 {
        self.weighted_count(|w| {
            let mut misses = 0;
            for (&p, &s) in pos.iter().zip(word) {
                if w[p] != s {
                    misses += 1;
                    if misses > k_max {
                        return false;
                    }
                }
            }
            true
        })
    }

    fn estimate(&self, hits: u64, z: f64) -> BallEstimate {
        let n = self.samples as u64;
        BallEstimate {
            estimate: hits as f64 / n as f64,
            half_width: proportion_half_width(hits, n, z),
        }
    }
}

fn collapse_counts(data: &[Symbol], width: usize) -> HashMap<&[Symbol], u64> {
    let mut table: HashMap<&[Symbol], u64> = HashMap::new();
    for w in data.chunks_exact(width) {
        *table.entry(w).or_insert(0) += 1;
    }
    table
}

fn collapse(data: &[Symbol], width: usize) -> Storage {
    let mut entries: Vec<(&[Symbol], u64)> = collapse_counts(data, width).into_iter().collect();
    // Deterministic record order.
    entries.sort_unstable();
    let mut words = Vec::with_capacity(entries.len() * width);
    let mut counts = Vec::with_capacity(entries.len());
    for (w, c) in entries {
        words.extend_from_slice(w);
        counts.push(c);
    }
    Storage::Counted { words, counts }
}

/// Fraction of samples inside the ball, with a confidence half-width.
pub fn ball_measure_empirical(
    em: &EmpiricalMeasure,
    word: &FunnyWord,
    eps: f64,
    confidence: f64,
) -> Result<BallEstimate> {
    check_eps(eps)?;
    let z = z_value(confidence)?;
    if word.alphabet() != em.alphabet {
        return Err(Error::AlphabetMismatch {
            expected: em.alphabet.size(),
            got: word.alphabet().size(),
        });
    }
    let pos = em.positions(word.support())?;
    let k_max = max_mismatches(word.len(), eps).expect("eps is positive");
    let hits = em.ball_hits(&pos, word.symbols(), k_max);
    Ok(em.estimate(hits, z))
}

impl MeasureOracle for EmpiricalMeasure {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn window(&self) -> Option<Interval> {
        Some(self.window)
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn sample_count(&self) -> Option<usize> {
        Some(self.samples)
    }

    fn cylinder_measure(&self, word: &FunnyWord) -> Result<f64> {
        let pos = self.positions(word.support())?;
        let target = word.symbols();
        let hits = self.weighted_count(|w| pos.iter().zip(target).all(|(&p, &s)| w[p] == s));
        Ok(hits as f64 / self.samples as f64)
    }

    fn joint_distribution(&self, support: &Support) -> Result<Vec<f64>> {
        let k = self.alphabet.size();
        let blocks = check_budget(self.alphabet, support.len())?;
        let mut dist = vec![0.0; blocks];
        for (key, c) in self.restricted_counts(support)? {
            dist[block_index(&key, k)] += c as f64;
        }
        let n = self.samples as f64;
        dist.iter_mut().for_each(|d| *d /= n);
        Ok(dist)
    }

    fn ball_measure(&self, word: &FunnyWord, eps: f64, confidence: f64) -> Result<BallEstimate> {
        ball_measure_empirical(self, word, eps, confidence)
    }

    /// Words sharing a support are scored against the table of distinct
    /// restrictions instead of the raw samples.
    fn ball_measures(
        &self,
        words: &[FunnyWord],
        eps: f64,
        confidence: f64,
    ) -> Result<Vec<BallEstimate>> {
        check_eps(eps)?;
        let z = z_value(confidence)?;
        let mut out = Vec::with_capacity(words.len());
        let mut cache: Option<(Support, Vec<(Vec<Symbol>, u64)>)> = None;
        for word in words {
            if cache.as_ref().map(|(s, _)| s != word.support()).unwrap_or(true) {
                let mut table: Vec<_> = self.restricted_counts(word.support())?.into_iter().collect();
                table.sort_unstable();
                cache = Some((word.support().clone(), table));
            }
            let (_, table) = cache.as_ref().expect("filled above");
            let k_max = max_mismatches(word.len(), eps).expect("eps is positive");
            let hits: u64 = table
                .iter()
                .filter(|(key, _)| {
                    key.iter().zip(word.symbols()).filter(|(a, b)| a != b).count() <= k_max
                })
                .map(|(_, c)| c)
                .sum();
            out.push(self.estimate(hits, z));
        }
        Ok(out)
    }

    fn sample_word(&self, window: Interval, rng: &mut dyn RngCore) -> Result<Word> {
        if !self.window.contains_interval(&window) {
            return Err(Error::SupportOutOfRange);
        }
        let width = self.window.len();
        let offset = (window.start - self.window.start) as usize;
        let pick = |w: &[Symbol]| Word::new(self.alphabet, window.start, w[offset..offset + window.len()].to_vec());
        match &self.storage {
            Storage::Raw(data) => {
                let i = rng.random_range(0..self.samples);
                pick(&data[i * width..(i + 1) * width])
            }
            Storage::Counted { words, counts } => {
                let mut target = rng.random_range(0..self.samples as u64);
                for (w, &c) in words.chunks_exact(width).zip(counts) {
                    if target < c {
                        return pick(w);
                    }
                    target -= c;
                }
                unreachable!("counts sum to the sample count")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{ball_measure_bernoulli_exact, BernoulliMeasure, ProbabilityVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn alpha(k: usize) -> Alphabet {
        Alphabet::new(k).unwrap()
    }

    #[test]
    fn all_samples_equal_word() {
        let window = Interval::new(0, 4).unwrap();
        let sample = vec![1u8, 0, 2, 2, 1];
        let data: Vec<u8> = sample.iter().copied().cycle().take(5 * 20).collect();
        let em = EmpiricalMeasure::from_flat(alpha(3), window, data, None).unwrap();
        let w = FunnyWord::new(alpha(3), Support::new(vec![1, 3]).unwrap(), vec![0, 2]).unwrap();
        let est = ball_measure_empirical(&em, &w, 0.2, 0.95).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.half_width, 0.0);
    }

    #[test]
    fn rejects_out_of_window_and_bad_eps() {
        let em = EmpiricalMeasure::from_flat(alpha(2), Interval::new(0, 2).unwrap(), vec![0, 1, 0], None)
            .unwrap();
        let w = FunnyWord::new(alpha(2), Support::new(vec![2, 3]).unwrap(), vec![0, 0]).unwrap();
        assert_eq!(
            ball_measure_empirical(&em, &w, 0.3, 0.95).unwrap_err(),
            Error::SupportOutOfRange
        );
        let w = FunnyWord::new(alpha(2), Support::new(vec![0]).unwrap(), vec![0]).unwrap();
        assert!(ball_measure_empirical(&em, &w, 1.5, 0.95).is_err());
    }

    #[test]
    fn marginals_partition_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bern = BernoulliMeasure::new(ProbabilityVector::new(vec![0.2, 0.3, 0.5]).unwrap());
        let window = Interval::new(-2, 3).unwrap();
        let words: Vec<Word> = (0..500).map(|_| bern.sample_word(window, &mut rng).unwrap()).collect();
        let em = EmpiricalMeasure::from_words(alpha(3), &words, Some(3)).unwrap();
        let dist = em.joint_distribution(&Support::new(vec![-2, 0, 3]).unwrap()).unwrap();
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(dist.iter().all(|&d| (0.0..=1.0).contains(&d)));
        // Refinement can only shrink a cylinder.
        let coarse = FunnyWord::new(alpha(3), Support::new(vec![0]).unwrap(), vec![2]).unwrap();
        let fine = FunnyWord::new(alpha(3), Support::new(vec![0, 1]).unwrap(), vec![2, 1]).unwrap();
        assert!(em.cylinder_measure(&fine).unwrap() <= em.cylinder_measure(&coarse).unwrap());
    }

    #[test]
    fn batch_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bern = BernoulliMeasure::new(ProbabilityVector::uniform(2).unwrap());
        let window = Interval::new(0, 9).unwrap();
        let words: Vec<Word> = (0..2000).map(|_| bern.sample_word(window, &mut rng).unwrap()).collect();
        let em = EmpiricalMeasure::from_words(alpha(2), &words, None).unwrap();
        let sup = Support::new(vec![0, 2, 4, 6, 8]).unwrap();
        let queries: Vec<FunnyWord> = (0..8u8)
            .map(|i| FunnyWord::new(alpha(2), sup.clone(), (0..5).map(|j| (i >> (j % 3)) & 1).collect()).unwrap())
            .collect();
        let batch = em.ball_measures(&queries, 0.45, 0.99).unwrap();
        for (q, b) in queries.iter().zip(batch) {
            assert_eq!(b, ball_measure_empirical(&em, q, 0.45, 0.99).unwrap());
        }
    }

    #[test]
    fn collapsed_storage_answers_like_raw() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let window = Interval::new(0, 1).unwrap();
        let n = RAW_SAMPLE_LIMIT + 10;
        let data: Vec<u8> = (0..2 * n).map(|_| rng.random_range(0..2u8)).collect();
        let raw_half = EmpiricalMeasure::from_flat(alpha(2), window, data[..2 * (n / 2)].to_vec(), None).unwrap();
        assert!(raw_half.is_raw());
        let em = EmpiricalMeasure::from_flat(alpha(2), window, data.clone(), None).unwrap();
        assert!(!em.is_raw());
        assert_eq!(em.distinct_words(), 4);
        let w = FunnyWord::new(alpha(2), Support::new(vec![0, 1]).unwrap(), vec![1, 1]).unwrap();
        let expected = data.chunks_exact(2).filter(|c| c == &[1, 1]).count() as f64 / n as f64;
        assert!((em.cylinder_measure(&w).unwrap() - expected).abs() < 1e-15);
        let sampled = em.sample_word(window, &mut rng).unwrap();
        assert_eq!(sampled.interval(), window);
    }

    #[test]
    fn empirical_tracks_exact_ball() {
        // 200 independent empirical measures; the exact DP value must fall
        // within three half-widths in at least 99% of them.
        let p = ProbabilityVector::new(vec![0.6, 0.4]).unwrap();
        let bern = BernoulliMeasure::new(p.clone());
        let window = Interval::new(0, 11).unwrap();
        let w = FunnyWord::new(alpha(2), window.to_support(), vec![0; 12]).unwrap();
        let exact = ball_measure_bernoulli_exact(&p, &w, 0.3).unwrap();
        let mut inside = 0;
        for trial in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
            let words: Vec<Word> = (0..2000).map(|_| bern.sample_word(window, &mut rng).unwrap()).collect();
            let em = EmpiricalMeasure::from_words(alpha(2), &words, None).unwrap();
            let est = ball_measure_empirical(&em, &w, 0.3, 0.6827).unwrap();
            if (est.estimate - exact).abs() <= 3.0 * est.half_width {
                inside += 1;
            }
        }
        assert!(inside >= 198, "{inside}/200");
    }
}
