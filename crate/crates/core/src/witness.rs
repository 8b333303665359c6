//! The statistic `Σ_i |Λⁱ|·ν(B_ε(Wⁱ))` behind the AT(n) necessary condition,
//! evaluated on given funny words or maximized by search.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{BallEstimate, MeasureOracle};
use crate::seed::stream_rng;
use crate::symbolic::{restrict, FunnyWord, Interval, Support, Symbol};

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem21Instance {
    /// `Wⁱ`; each is based on its own support `Λⁱ`.
    pub words: Vec<FunnyWord>,
    pub eps: f64,
    pub delta: f64,
}

impl Theorem21Instance {
    pub fn new(words: Vec<FunnyWord>, eps: f64, delta: f64) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::OutOfRange("need at least one word".into()));
        }
        for (name, v) in [("eps", eps), ("delta", delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::OutOfRange(format!("{name} = {v} not in (0, 1)")));
            }
        }
        let a = words[0].alphabet();
        if words.iter().any(|w| w.alphabet() != a) {
            return Err(Error::AlphabetMismatch {
                expected: a.size(),
                got: words.iter().find(|w| w.alphabet() != a).map(|w| w.alphabet().size()).unwrap_or(0),
            });
        }
        Ok(Theorem21Instance { words, eps, delta })
    }

    pub fn n(&self) -> usize {
        self.words.len()
    }

    pub fn min_support_len(&self) -> usize {
        self.words.iter().map(|w| w.len()).min().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// `Σ|Λⁱ|νᵢ > 1 − δ`.
    #[serde(rename = "condition met")]
    ConditionMet,
    /// Even the optimistic value is at most `1 − δ`.
    #[serde(rename = "violated at this resolution")]
    ViolatedAtResolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallTerm {
    pub word: String,
    pub support_len: usize,
    pub estimate: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub support_sizes: Vec<usize>,
    pub budget: usize,
    pub evaluations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub confidence: f64,
    pub exact: bool,
    pub terms: Vec<BallTerm>,
    /// `Σ|Λⁱ|·νᵢ` from point estimates.
    pub statistic: f64,
    /// `Σ|Λⁱ|·(νᵢ + half_widthᵢ)`.
    pub optimistic: f64,
    /// `1 − δ`.
    pub threshold: f64,
    pub min_support_len: usize,
    pub verdict: Verdict,
    pub search: Option<SearchSummary>,
}

impl WitnessReport {
    fn build(inst: &Theorem21Instance, estimates: &[BallEstimate], exact: bool, confidence: f64) -> Self {
        let terms: Vec<BallTerm> = inst
            .words
            .iter()
            .zip(estimates)
            .map(|(w, e)| BallTerm {
                word: w.to_string(),
                support_len: w.len(),
                estimate: e.estimate,
                half_width: e.half_width,
            })
            .collect();
        let statistic = terms.iter().map(|t| t.support_len as f64 * t.estimate).sum();
        let optimistic = terms
            .iter()
            .map(|t| t.support_len as f64 * (t.estimate + t.half_width))
            .sum::<f64>();
        let threshold = 1.0 - inst.delta;
        WitnessReport {
            n: inst.n(),
            eps: inst.eps,
            delta: inst.delta,
            confidence,
            exact,
            terms,
            statistic,
            optimistic,
            threshold,
            min_support_len: inst.min_support_len(),
            verdict: if optimistic <= threshold {
                Verdict::ViolatedAtResolution
            } else {
                Verdict::ConditionMet
            },
            search: None,
        }
    }
}

/// Evaluates the statistic for the given words.
pub fn theorem21_statistic(
    inst: &Theorem21Instance,
    oracle: &dyn MeasureOracle,
    confidence: f64,
) -> Result<WitnessReport> {
    let estimates = oracle.ball_measures(&inst.words, inst.eps, confidence)?;
    Ok(WitnessReport::build(inst, &estimates, oracle.is_exact(), confidence))
}

/// Most probable symbol at each coordinate of `support` (smallest on ties).
pub fn greedy_funny_word(oracle: &dyn MeasureOracle, support: &Support) -> Result<FunnyWord> {
    oracle.check_support(support)?;
    let symbols = support
        .indices()
        .iter()
        .map(|&j| {
            let m = oracle.marginal(j)?;
            let mut best = 0;
            for (s, &p) in m.iter().enumerate() {
                if p > m[best] {
                    best = s;
                }
            }
            Ok(best as Symbol)
        })
        .collect::<Result<Vec<_>>>()?;
    FunnyWord::new(oracle.alphabet(), support.clone(), symbols)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    /// `|Λⁱ|` for `i = 1..=n`; a single entry applies to all `i`.
    pub support_sizes: Vec<usize>,
    /// Ball-measure evaluations per distinct support size.
    pub budget: usize,
    pub seed: u64,
    pub confidence: f64,
}

impl SearchParams {
    fn sizes(&self) -> Result<Vec<usize>> {
        if self.n == 0 {
            return Err(Error::OutOfRange("n must be positive".into()));
        }
        if self.budget == 0 {
            return Err(Error::OutOfRange("search budget must be at least 1".into()));
        }
        let sizes = match self.support_sizes.as_slice() {
            [s] => vec![*s; self.n],
            s if s.len() == self.n => s.to_vec(),
            _ => {
                return Err(Error::OutOfRange(format!(
                    "{} support sizes given for n = {}",
                    self.support_sizes.len(),
                    self.n
                )))
            }
        };
        if sizes.contains(&0) {
            return Err(Error::OutOfRange("support sizes must be positive".into()));
        }
        Ok(sizes)
    }
}

/// Search objective: the estimate, less its half-width for empirical oracles.
fn score(e: &BallEstimate) -> f64 {
    e.estimate - e.half_width
}

/// Region where supports are drawn: the oracle window or `[0, 3·size)`.
fn region(oracle: &dyn MeasureOracle, size: usize) -> Result<Interval> {
    match oracle.window() {
        Some(w) if w.len() < size => Err(Error::OutOfRange(format!(
            "support size {size} exceeds the oracle window {w}"
        ))),
        Some(w) => Ok(w),
        None => Interval::with_len(0, 3 * size),
    }
}

struct Best {
    word: FunnyWord,
    estimate: BallEstimate,
}

/// Evaluates candidates in parallel; the argmax prefers the lowest index on ties.
fn evaluate(
    oracle: &dyn MeasureOracle,
    words: &[FunnyWord],
    eps: f64,
    confidence: f64,
) -> Result<Vec<BallEstimate>> {
    // Group by support so empirical oracles can share restricted tables.
    let mut order: Vec<usize> = (0..words.len()).collect();
    order.sort_by(|&a, &b| words[a].support().indices().cmp(words[b].support().indices()).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if words[g[0]].support() == words[i].support() => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let results: Vec<Vec<(usize, BallEstimate)>> = groups
        .par_iter()
        .map(|g| {
            let batch: Vec<FunnyWord> = g.iter().map(|&i| words[i].clone()).collect();
            let est = oracle.ball_measures(&batch, eps, confidence)?;
            Ok(g.iter().copied().zip(est).collect())
        })
        .collect::<Result<_>>()?;
    let mut out = vec![BallEstimate::exact(0.0); words.len()];
    for (i, e) in results.into_iter().flatten() {
        out[i] = e;
    }
    Ok(out)
}

fn argmax(estimates: &[BallEstimate]) -> usize {
    let mut best = 0;
    for (i, e) in estimates.iter().enumerate() {
        if score(e) > score(&estimates[best]) {
            best = i;
        }
    }
    best
}

/// Best word found for one support size within `budget` evaluations.
fn search_size(
    oracle: &dyn MeasureOracle,
    size: usize,
    params: &SearchParams,
) -> Result<(Best, usize)> {
    let mut rng = stream_rng(params.seed, "witness", size as u64);
    let area = region(oracle, size)?;
    let k = oracle.alphabet().size();
    let contiguous = Support::new((area.start..area.start + size as i64).collect())?;
    let seeds = (params.budget / 4).max(1);

    let mut candidates = vec![greedy_funny_word(oracle, &contiguous)?];
    while candidates.len() < seeds {
        let support = if candidates.len() % 2 == 0 {
            let offset = rng.random_range(0..=(area.len() - size)) as i64;
            Support::new((area.start + offset..area.start + offset + size as i64).collect())?
        } else {
            let picks = sample(&mut rng, area.len(), size);
            Support::new(picks.into_iter().map(|p| area.start + p as i64).collect())?
        };
        let word = match candidates.len() % 3 {
            0 => greedy_funny_word(oracle, &support)?,
            1 => {
                let w = oracle.sample_word(support.hull(), &mut rng)?;
                restrict(&w, &support)?
            }
            _ => {
                let symbols = (0..size).map(|_| rng.random_range(0..k) as Symbol).collect();
                FunnyWord::new(oracle.alphabet(), support, symbols)?
            }
        };
        candidates.push(word);
    }
    let estimates = evaluate(oracle, &candidates, params.eps, params.confidence)?;
    let mut used = candidates.len();
    let i = argmax(&estimates);
    let mut best = Best {
        word: candidates.swap_remove(i),
        estimate: estimates[i],
    };

    // Coordinate-flip hill climbing: take the best single-symbol change
    // while it improves the score and the budget allows a full sweep.
    let sweep = size * (k - 1);
    while used + sweep <= params.budget {
        let neighbours: Vec<FunnyWord> = (0..size)
            .flat_map(|j| (0..k).map(move |s| (j, s)))
            .filter(|&(j, s)| best.word.symbols()[j] as usize != s)
            .map(|(j, s)| {
                let mut symbols = best.word.symbols().to_vec();
                symbols[j] = s as Symbol;
                best.word.with_symbols(symbols)
            })
            .collect::<Result<_>>()?;
        let estimates = evaluate(oracle, &neighbours, params.eps, params.confidence)?;
        used += sweep;
        let i = argmax(&estimates);
        if score(&estimates[i]) <= score(&best.estimate) {
            break;
        }
        best = Best {
            word: neighbours[i].clone(),
            estimate: estimates[i],
        };
    }
    Ok((best, used))
}

/// Maximizes the statistic over supports of the given sizes and words from
/// greedy, sampled and random starts refined by coordinate flips.
///
/// The statistic separates over `i`, so each distinct size is searched
/// once and its best word is used for every `i` of that size.
pub fn non_atn_evidence(oracle: &dyn MeasureOracle, params: &SearchParams) -> Result<WitnessReport> {
    let sizes = params.sizes()?;
    // Validates eps and delta before any search work.
    Theorem21Instance::new(
        vec![FunnyWord::new(oracle.alphabet(), Support::new(vec![0])?, vec![0])?],
        params.eps,
        params.delta,
    )?;
    let mut distinct = sizes.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let mut evaluations = 0;
    let mut found = Vec::with_capacity(distinct.len());
    for &size in &distinct {
        let (best, used) = search_size(oracle, size, params)?;
        evaluations += used;
        found.push((size, best));
    }
    let pick = |size: usize| found.iter().find(|(s, _)| *s == size).map(|(_, b)| b).expect("searched");
    let words = sizes.iter().map(|&s| pick(s).word.clone()).collect();
    let estimates: Vec<BallEstimate> = sizes.iter().map(|&s| pick(s).estimate).collect();
    let inst = Theorem21Instance::new(words, params.eps, params.delta)?;
    let mut report = WitnessReport::build(&inst, &estimates, oracle.is_exact(), params.confidence);
    report.search = Some(SearchSummary {
        support_sizes: sizes,
        budget: params.budget,
        evaluations,
        seed: params.seed,
    });
    Ok(report)
}
