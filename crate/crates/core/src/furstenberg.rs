//! The skew product `T(s, t) = (s + α, 2s + t + α)` on the 2-torus, coded
//! into `k + 1` symbols by the `t`-coordinate, and the statistics of the
//! coded measure.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{proportion_half_width, EmpiricalMeasure};
use crate::seed::stream_rng;
use crate::symbolic::{max_mismatches, Alphabet, FunnyWord, Interval, Support, Symbol, Word};

/// Golden-ratio fraction `(√5 − 1) / 2` as an unevaluated sum `HI + LO`.
pub const GOLDEN_HI: f64 = 0.618_033_988_749_894_9;
pub const GOLDEN_LO: f64 = -5.432_115_203_682_506e-17;

/// Largest `|n|` for which `n²` and `n²α` stay exact enough in double-double.
pub const MAX_TIME: i64 = 10_000_000;

/// Samples per deterministic work chunk.
const CHUNK: usize = 1 << 14;

/// Confidence of a one-sigma interval.
const SIGMA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub s: f64,
    pub t: f64,
}

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // `x - floor(x)` can round up to 1 for tiny negative `x`.
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Fractional part of `n·(hi + lo)` with the product split exactly.
fn frac_times(n: f64, hi: f64, lo: f64) -> f64 {
    let p = n * hi;
    let e = n.mul_add(hi, -p);
    frac(frac(p) + e + n * lo)
}

impl TorusPoint {
    /// Reduces both coordinates mod 1.
    pub fn new(s: f64, t: f64) -> Self {
        TorusPoint {
            s: frac(s),
            t: frac(t),
        }
    }

    /// Haar-uniform point.
    pub fn random(rng: &mut dyn RngCore) -> Self {
        TorusPoint::new(rng.random::<f64>(), rng.random::<f64>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewParams {
    alpha_hi: f64,
    alpha_lo: f64,
    k: usize,
}

/// Rejects `α` within `1e-13` of a fraction with denominator at most `10^6`.
fn looks_rational(alpha: f64) -> bool {
    let (mut h0, mut h1) = (0.0f64, 1.0f64);
    let (mut k0, mut k1) = (1.0f64, 0.0f64);
    let mut x = alpha;
    for _ in 0..40 {
        let a = x.floor();
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > 1e6 {
            return false;
        }
        if (alpha - h2 / k2).abs() < 1e-13 {
            return true;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let r = x - a;
        if r == 0.0 {
            return true;
        }
        x = 1.0 / r;
    }
    false
}

impl SkewParams {
    /// `α` must lie in `(0, 1)` and not be a fraction with a small denominator.
    pub fn new(alpha: f64, k: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::OutOfRange(format!("alpha {alpha} not in (0, 1)")));
        }
        if looks_rational(alpha) {
            return Err(Error::OutOfRange(format!("alpha {alpha} is (numerically) rational")));
        }
        Self::checked_k(k)?;
        Ok(SkewParams {
            alpha_hi: alpha,
            alpha_lo: 0.0,
            k,
        })
    }

    /// Golden-ratio rotation number, carried to double-double precision.
    pub fn golden(k: usize) -> Result<Self> {
        Self::checked_k(k)?;
        Ok(SkewParams {
            alpha_hi: GOLDEN_HI,
            alpha_lo: GOLDEN_LO,
            k,
        })
    }

    /// Any `α` in `[0, 1)`, including rationals. For tests only.
    #[doc(hidden)]
    pub fn with_any_alpha(alpha: f64, k: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::OutOfRange(format!("alpha {alpha} not in [0, 1)")));
        }
        Self::checked_k(k)?;
        Ok(SkewParams {
            alpha_hi: alpha,
            alpha_lo: 0.0,
            k,
        })
    }

    fn checked_k(k: usize) -> Result<()> {
        if k < 2 || k > Symbol::MAX as usize - 1 {
            return Err(Error::OutOfRange(format!("k = {k} must be at least 2")));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha_hi + self.alpha_lo
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The coding alphabet `{1, …, k+1}`.
    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.k + 1).expect("k >= 2")
    }
}

/// One application of `T`.
pub fn skew_step(z: TorusPoint, params: &SkewParams) -> TorusPoint {
    let s = frac(z.s + params.alpha_hi + params.alpha_lo);
    let t = frac(z.t + 2.0 * z.s + params.alpha_hi + params.alpha_lo);
    TorusPoint { s, t }
}

/// One application of `T⁻¹`.
pub fn skew_step_back(z: TorusPoint, params: &SkewParams) -> TorusPoint {
    let s = frac(z.s - params.alpha_hi - params.alpha_lo);
    let t = frac(z.t - 2.0 * s - params.alpha_hi - params.alpha_lo);
    TorusPoint { s, t }
}

fn check_time(n: i64) -> Result<()> {
    if n.abs() > MAX_TIME {
        return Err(Error::OutOfRange(format!("time {n} exceeds ±{MAX_TIME}")));
    }
    Ok(())
}

/// `T^n(z) = (s + nα, t + n²α + 2ns) mod 1`.
pub fn skew_point(z: TorusPoint, params: &SkewParams, n: i64) -> Result<TorusPoint> {
    check_time(n)?;
    let nf = n as f64;
    let s = frac(z.s + frac_times(nf, params.alpha_hi, params.alpha_lo));
    Ok(TorusPoint {
        s,
        t: t_phase(z, frac_times(nf * nf, params.alpha_hi, params.alpha_lo), 2.0 * nf),
    })
}

/// `t + c + 2n·s mod 1` with `c = n²α mod 1` precomputed.
fn t_phase(z: TorusPoint, c: f64, two_n: f64) -> f64 {
    let q = two_n * z.s;
    let e = two_n.mul_add(z.s, -q);
    frac(z.t + c + frac(q) + e)
}

/// Orbit points `T^n(z)` for `n_from ≤ n ≤ n_to`, by the closed form.
pub fn skew_orbit(z: TorusPoint, params: &SkewParams, n_from: i64, n_to: i64) -> Result<Vec<TorusPoint>> {
    if n_from > n_to {
        return Err(Error::OutOfRange(format!("empty time range {n_from}..={n_to}")));
    }
    (n_from..=n_to).map(|n| skew_point(z, params, n)).collect()
}

/// Unevaluated sum `hi + lo` reduced mod 1, for exact-ish accumulation.
#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn add(self, o: Dd) -> Dd {
        let s = self.hi + o.hi;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (o.hi - bb);
        let lo = err + self.lo + o.lo;
        let hi = s + lo;
        let lo = lo - (hi - s);
        let f = hi.floor();
        Dd { hi: hi - f, lo }
    }

    fn scale(self, c: f64) -> Dd {
        Dd {
            hi: self.hi * c,
            lo: self.lo * c,
        }
    }

    fn value(self) -> f64 {
        frac(self.hi + self.lo)
    }
}

/// The same orbit by repeated application of `T` (or `T⁻¹`) from time 0,
/// accumulated in double-double so it can serve as a reference.
pub fn skew_orbit_iterated(
    z: TorusPoint,
    params: &SkewParams,
    n_from: i64,
    n_to: i64,
) -> Result<Vec<TorusPoint>> {
    if n_from > n_to {
        return Err(Error::OutOfRange(format!("empty time range {n_from}..={n_to}")));
    }
    check_time(n_from)?;
    check_time(n_to)?;
    let alpha = Dd {
        hi: params.alpha_hi,
        lo: params.alpha_lo,
    };
    let minus_alpha = alpha.scale(-1.0);
    let mut s = Dd { hi: z.s, lo: 0.0 };
    let mut t = Dd { hi: z.t, lo: 0.0 };
    let forward = |s: &mut Dd, t: &mut Dd| {
        *t = t.add(s.scale(2.0)).add(alpha);
        *s = s.add(alpha);
    };
    for _ in 0..n_from.max(0) {
        forward(&mut s, &mut t);
    }
    for _ in n_from.min(0)..0 {
        s = s.add(minus_alpha);
        t = t.add(s.scale(-2.0)).add(minus_alpha);
    }
    let mut out = Vec::with_capacity((n_to - n_from + 1) as usize);
    for _ in n_from..=n_to {
        out.push(TorusPoint {
            s: s.value(),
            t: t.value(),
        });
        forward(&mut s, &mut t);
    }
    Ok(out)
}

/// Circle distance between two values mod 1.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = frac(a - b);
    d.min(1.0 - d)
}

/// `R(s, t) = (s, t + 1/(k+1))`.
pub fn rotate(z: TorusPoint, params: &SkewParams) -> TorusPoint {
    TorusPoint::new(z.s, z.t + 1.0 / (params.k + 1) as f64)
}

/// 0-based symbol of a `t`-coordinate: `i` such that `t ∈ [i/(k+1), (i+1)/(k+1))`.
pub fn symbol_of(t: f64, k1: usize) -> Symbol {
    ((k1 as f64 * t).floor() as usize).min(k1 - 1) as Symbol
}

/// Codes Haar points on a fixed set of times.
struct Coder {
    k1: usize,
    consts: Vec<f64>,
    two_n: Vec<f64>,
}

impl Coder {
    fn new(params: &SkewParams, times: &[i64]) -> Result<Self> {
        for &n in times {
            check_time(n)?;
        }
        Ok(Coder {
            k1: params.k + 1,
            consts: times
                .iter()
                .map(|&n| frac_times((n * n) as f64, params.alpha_hi, params.alpha_lo))
                .collect(),
            two_n: times.iter().map(|&n| 2.0 * n as f64).collect(),
        })
    }

    fn code(&self, z: TorusPoint, out: &mut [Symbol]) {
        for ((o, &c), &two_n) in out.iter_mut().zip(&self.consts).zip(&self.two_n) {
            *o = symbol_of(t_phase(z, c, two_n), self.k1);
        }
    }
}

/// The coding of `z` on `window`: symbol `i` at time `n` iff the
/// `t`-coordinate of `T^n(z)` lies in `[(i-1)/(k+1), i/(k+1))`.
pub fn code_point(z: TorusPoint, params: &SkewParams, window: Interval) -> Result<Word> {
    let times: Vec<i64> = window.indices().collect();
    let coder = Coder::new(params, &times)?;
    let mut symbols = vec![0; times.len()];
    coder.code(z, &mut symbols);
    Word::new(params.alphabet(), window.start, symbols)
}

/// Runs `visit` on the coded words of `n_s` Haar points, in fixed chunks
/// with one random stream each; returns the per-chunk states in order.
fn stream_codes<T: Send>(
    params: &SkewParams,
    times: &[i64],
    n_s: usize,
    seed: u64,
    init: impl Fn() -> T + Sync,
    visit: impl Fn(&mut T, &[Symbol]) + Sync,
) -> Result<Vec<T>> {
    if n_s == 0 {
        return Err(Error::OutOfRange("need at least one sample".into()));
    }
    let coder = Coder::new(params, times)?;
    let chunks = n_s.div_ceil(CHUNK);
    Ok((0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, "haar", c as u64);
            let mut state = init();
            let mut word = vec![0; times.len()];
            let count = CHUNK.min(n_s - c * CHUNK);
            for _ in 0..count {
                coder.code(TorusPoint::random(&mut rng), &mut word);
                visit(&mut state, &word);
            }
            state
        })
        .collect())
}

/// Empirical coded measure from `n_s` Haar samples on `window`.
pub fn sample_coded_measure(
    params: &SkewParams,
    window: Interval,
    n_s: usize,
    seed: u64,
) -> Result<EmpiricalMeasure> {
    let times: Vec<i64> = window.indices().collect();
    let chunks = stream_codes(params, &times, n_s, seed, Vec::new, |buf: &mut Vec<Symbol>, w| {
        buf.extend_from_slice(w)
    })?;
    let data = chunks.concat();
    EmpiricalMeasure::from_flat(params.alphabet(), window, data, Some(seed))
}

/// A base word for the checks: the coding of one Haar point on `support`.
pub fn sample_base_word(params: &SkewParams, support: &Support, seed: u64) -> Result<FunnyWord> {
    let coder = Coder::new(params, support.indices())?;
    let mut rng = stream_rng(seed, "base-word", 0);
    let mut symbols = vec![0; support.len()];
    coder.code(TorusPoint::random(&mut rng), &mut symbols);
    FunnyWord::new(params.alphabet(), support.clone(), symbols)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterSum {
    /// Base word `x`; its support is `Λ`.
    pub x: FunnyWord,
    /// `S = Σ_i a_i ε^(i-1)`.
    pub value: Complex64,
    /// `a_i = #{j ∈ Λ : y_j = x_j + i - 1 (mod k+1)}`, `i = 1..=k+1`.
    pub counts: Vec<usize>,
}

/// `a_i` counts of `y` against `x` (0-based `i`).
fn offset_counts(y: &[Symbol], x: &[Symbol], k1: usize, counts: &mut [usize]) {
    counts.iter_mut().for_each(|c| *c = 0);
    for (&a, &b) in y.iter().zip(x) {
        counts[(a as usize + k1 - b as usize) % k1] += 1;
    }
}

fn roots_of_unity(k1: usize) -> Vec<Complex64> {
    (0..k1)
        .map(|i| Complex64::from_polar(1.0, TAU * i as f64 / k1 as f64))
        .collect()
}

fn sum_from_counts(counts: &[usize], roots: &[Complex64]) -> Complex64 {
    counts.iter().zip(roots).map(|(&a, r)| r * a as f64).sum()
}

/// `S = Σ_{j ∈ Λ} ε^((y_j - x_j) mod (k+1))` with `ε = e^{2πi/(k+1)}`,
/// where `k + 1` is the alphabet size.
pub fn character_sum(y: &FunnyWord, x: &FunnyWord) -> Result<CharacterSum> {
    if y.support() != x.support() {
        return Err(Error::SupportMismatch);
    }
    if y.alphabet() != x.alphabet() {
        return Err(Error::AlphabetMismatch {
            expected: x.alphabet().size(),
            got: y.alphabet().size(),
        });
    }
    let k1 = x.alphabet().size();
    let mut counts = vec![0; k1];
    offset_counts(y.symbols(), x.symbols(), k1, &mut counts);
    let roots = roots_of_unity(k1);
    Ok(CharacterSum {
        x: x.clone(),
        value: sum_from_counts(&counts, &roots),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCell {
    pub lag: usize,
    /// 1-based symbols.
    pub i: usize,
    pub j: usize,
    pub frequency: f64,
    /// `sqrt(f(1-f)/N)`.
    pub sigma: f64,
    /// `|f - 1/(k+1)²| < 3σ`.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelationReport {
    pub k: usize,
    pub samples: usize,
    pub expected: f64,
    pub cells: Vec<PairCell>,
    pub pass: bool,
}

/// Frequencies of `(y_0, y_n) = (i, j)` for lags `1..=max_lag`.
pub fn pair_correlations(
    params: &SkewParams,
    max_lag: usize,
    n_s: usize,
    seed: u64,
) -> Result<PairCorrelationReport> {
    if max_lag == 0 {
        return Err(Error::OutOfRange("max_lag must be positive".into()));
    }
    let k1 = params.k + 1;
    let times: Vec<i64> = (0..=max_lag as i64).collect();
    let cells = k1 * k1;
    let chunks = stream_codes(
        params,
        &times,
        n_s,
        seed,
        || vec![0u64; max_lag * cells],
        |counts, w| {
            let first = w[0] as usize * k1;
            for (lag, &y) in w[1..].iter().enumerate() {
                counts[lag * cells + first + y as usize] += 1;
            }
        },
    )?;
    let mut counts = vec![0u64; max_lag * cells];
    for c in chunks {
        counts.iter_mut().zip(c).for_each(|(a, b)| *a += b);
    }
    let expected = 1.0 / (k1 * k1) as f64;
    let n = n_s as f64;
    let cells: Vec<PairCell> = counts
        .iter()
        .enumerate()
        .map(|(idx, &c)| {
            let f = c as f64 / n;
            let sigma = (f * (1.0 - f) / n).sqrt();
            PairCell {
                lag: idx / cells + 1,
                i: (idx % cells) / k1 + 1,
                j: idx % k1 + 1,
                frequency: f,
                sigma,
                pass: (f - expected).abs() < 3.0 * sigma,
            }
        })
        .collect();
    Ok(PairCorrelationReport {
        k: params.k,
        samples: n_s,
        expected,
        pass: cells.iter().all(|c| c.pass),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSquareReport {
    pub support_len: usize,
    pub samples: usize,
    /// Sample mean of `|S|²`.
    pub mean: f64,
    /// Standard error of the mean.
    pub sigma: f64,
    /// `|mean - |Λ|| <= 3σ`.
    pub pass: bool,
}

/// Sample mean of `|S|²` over coded Haar points, against base word `x`.
pub fn mean_square_character_sum(
    params: &SkewParams,
    x: &FunnyWord,
    n_s: usize,
    seed: u64,
) -> Result<MeanSquareReport> {
    check_base(params, x)?;
    let k1 = params.k + 1;
    let roots = roots_of_unity(k1);
    let chunks = stream_codes(
        params,
        x.support().indices(),
        n_s,
        seed,
        || (vec![0usize; k1], 0.0f64, 0.0f64),
        |(counts, sum, sum_sq), w| {
            offset_counts(w, x.symbols(), k1, counts);
            let v = sum_from_counts(counts, &roots).norm_sqr();
            *sum += v;
            *sum_sq += v * v;
        },
    )?;
    let (sum, sum_sq) = chunks
        .iter()
        .fold((0.0, 0.0), |(a, b), (_, s, q)| (a + s, b + q));
    let n = n_s as f64;
    let mean = sum / n;
    let var = if n_s > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let sigma = (var / n).sqrt();
    let len = x.len() as f64;
    Ok(MeanSquareReport {
        support_len: x.len(),
        samples: n_s,
        mean,
        sigma,
        pass: (mean - len).abs() <= 3.0 * sigma,
    })
}

fn check_base(params: &SkewParams, x: &FunnyWord) -> Result<()> {
    if x.alphabet() != params.alphabet() {
        return Err(Error::AlphabetMismatch {
            expected: params.k + 1,
            got: x.alphabet().size(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub support_len: usize,
    pub samples: usize,
    pub statistic: f64,
    pub bound: f64,
    /// One standard error of `statistic`.
    pub sigma: f64,
    /// `statistic <= bound + 3σ`.
    pub pass: bool,
    /// Samples in the ball `B_{1/(4k+4), x, Λ}`.
    pub ball_hits: u64,
    /// Samples with `|S| > (2k+1)/(2k+2)·|Λ|`.
    pub tail_hits: u64,
    /// Ball samples that are not in the tail (must be zero).
    pub implication_violations: u64,
}

/// `((2k+2)² / (2k+1)²) / n`.
pub fn markov_bound(k: usize, n: usize) -> f64 {
    let (a, b) = ((2 * k + 2) as f64, (2 * k + 1) as f64);
    a * a / (b * b) / n as f64
}

/// `1 − 1/(4k² + 4k + 1)`.
pub fn ineq3_threshold(k: usize) -> f64 {
    1.0 - 1.0 / (4 * k * k + 4 * k + 1) as f64
}

/// `1/(4k + 4)`.
pub fn ineq3_radius(k: usize) -> f64 {
    1.0 / (4 * k + 4) as f64
}

struct BallTail {
    ball: u64,
    tail: u64,
    violations: u64,
}

fn ball_and_tail(params: &SkewParams, x: &FunnyWord, n_s: usize, seed: u64) -> Result<BallTail> {
    check_base(params, x)?;
    let k = params.k;
    let k1 = k + 1;
    let n = x.len();
    let roots = roots_of_unity(k1);
    let c = (2 * k + 1) as f64 / (2 * k + 2) as f64;
    let threshold = c * c * (n * n) as f64;
    // |S|² equal to the threshold up to round-off counts as not exceeding it.
    let guard = threshold * 1e-12;
    let k_max = max_mismatches(n, ineq3_radius(k)).expect("radius is positive");
    let chunks = stream_codes(
        params,
        x.support().indices(),
        n_s,
        seed,
        || (vec![0usize; k1], BallTail { ball: 0, tail: 0, violations: 0 }),
        |(counts, acc), w| {
            offset_counts(w, x.symbols(), k1, counts);
            let in_tail = sum_from_counts(counts, &roots).norm_sqr() > threshold + guard;
            let in_ball = n - counts[0] <= k_max;
            acc.tail += in_tail as u64;
            acc.ball += in_ball as u64;
            acc.violations += (in_ball && !in_tail) as u64;
        },
    )?;
    Ok(chunks.into_iter().fold(
        BallTail { ball: 0, tail: 0, violations: 0 },
        |a, (_, b)| BallTail {
            ball: a.ball + b.ball,
            tail: a.tail + b.tail,
            violations: a.violations + b.violations,
        },
    ))
}

/// Empirical `ν(|S| > (2k+1)/(2k+2)·n)` against the Markov bound.
pub fn markov_tail_check(params: &SkewParams, x: &FunnyWord, n_s: usize, seed: u64) -> Result<CheckReport> {
    let bt = ball_and_tail(params, x, n_s, seed)?;
    let statistic = bt.tail as f64 / n_s as f64;
    let sigma = proportion_half_width(bt.tail, n_s as u64, SIGMA);
    let bound = markov_bound(params.k, x.len());
    Ok(CheckReport {
        support_len: x.len(),
        samples: n_s,
        statistic,
        bound,
        sigma,
        pass: statistic <= bound + 3.0 * sigma,
        ball_hits: bt.ball,
        tail_hits: bt.tail,
        implication_violations: bt.violations,
    })
}

/// `k·|Λ|·ν̂(B_{1/(4k+4), x, Λ})` against `1 − 1/(4k²+4k+1)`.
pub fn ineq3_check(params: &SkewParams, x: &FunnyWord, n_s: usize, seed: u64) -> Result<CheckReport> {
    let bt = ball_and_tail(params, x, n_s, seed)?;
    let scale = (params.k * x.len()) as f64;
    let statistic = scale * bt.ball as f64 / n_s as f64;
    let sigma = scale * proportion_half_width(bt.ball, n_s as u64, SIGMA);
    let bound = ineq3_threshold(params.k);
    Ok(CheckReport {
        support_len: x.len(),
        samples: n_s,
        statistic,
        bound,
        sigma,
        pass: statistic <= bound + 3.0 * sigma,
        ball_hits: bt.ball,
        tail_hits: bt.tail,
        implication_violations: bt.violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_stays_in_unit_interval() {
        assert_eq!(frac(-1e-300), 0.0);
        assert_eq!(frac(3.25), 0.25);
        assert!((frac(-0.25) - 0.75).abs() < 1e-16);
    }

    #[test]
    fn golden_split_is_accurate() {
        // φ satisfies φ² + φ = 1.
        let (hi, lo) = (GOLDEN_HI, GOLDEN_LO);
        let sq = hi * hi;
        let sq_err = hi.mul_add(hi, -sq) + 2.0 * hi * lo;
        let residual = (sq - 1.0) + hi + (sq_err + lo);
        assert!(residual.abs() < 1e-30);
    }

    #[test]
    fn rational_alpha_rejected() {
        assert!(SkewParams::new(0.5, 2).is_err());
        assert!(SkewParams::new(1.0 / 3.0, 2).is_err());
        assert!(SkewParams::new(GOLDEN_HI, 2).is_ok());
        assert!(SkewParams::new(std::f64::consts::SQRT_2 - 1.0, 3).is_ok());
        assert!(SkewParams::new(0.0, 2).is_err());
        assert!(SkewParams::golden(1).is_err());
        assert!(SkewParams::with_any_alpha(0.0, 2).is_ok());
    }

    #[test]
    fn markov_and_threshold_arithmetic() {
        assert!((markov_bound(2, 36) - 0.04).abs() < 1e-15);
        assert!(markov_bound(2, 1) >= 1.0);
        assert!((ineq3_threshold(2) - 0.96).abs() < 1e-15);
        assert!((ineq3_radius(2) - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn symbol_boundaries() {
        assert_eq!(symbol_of(0.0, 3), 0);
        assert_eq!(symbol_of(0.5, 3), 1);
        assert_eq!(symbol_of(1.0 / 3.0, 3), 1);
        assert_eq!(symbol_of(1.0 - 1e-17, 3), 2);
    }
}
