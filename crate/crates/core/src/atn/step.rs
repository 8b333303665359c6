use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::MeasureOracle;
use crate::symbolic::{block_index, decode_block, Alphabet, Interval, Support, Word};

/// Nonnegative function of the coordinates in a finite window.
///
/// Values are indexed by [`block_index`] of the window word. The block law
/// of the reference measure is carried along so norms need no oracle.
#[derive(Debug, Clone)]
pub struct StepFunction {
    window: Interval,
    alphabet: Alphabet,
    values: Vec<f64>,
    weights: Arc<Vec<f64>>,
}

/// Serializable view of a [`StepFunction`] (weights are recomputed on load).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunctionData {
    pub window: Interval,
    pub alphabet: Alphabet,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn new(oracle: &dyn MeasureOracle, window: Interval, values: Vec<f64>) -> Result<Self> {
        let weights = Arc::new(oracle.joint_distribution(&window.to_support())?);
        StepFunction::with_weights(window, oracle.alphabet(), values, weights)
    }

    /// Uses an already computed block law for `window`.
    pub fn with_weights(
        window: Interval,
        alphabet: Alphabet,
        values: Vec<f64>,
        weights: Arc<Vec<f64>>,
    ) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::WindowMismatch);
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::OutOfRange(format!(
                "step function values must be finite and nonnegative, got {v}"
            )));
        }
        Ok(StepFunction {
            window,
            alphabet,
            values,
            weights,
        })
    }

    pub fn constant(oracle: &dyn MeasureOracle, window: Interval, c: f64) -> Result<Self> {
        let weights = Arc::new(oracle.joint_distribution(&window.to_support())?);
        let values = vec![c; weights.len()];
        StepFunction::with_weights(window, oracle.alphabet(), values, weights)
    }

    /// `1_C / ν(C)` for the cylinder fixed by `word` (the word's interval is the window).
    pub fn normalized_indicator(oracle: &dyn MeasureOracle, word: &Word) -> Result<Self> {
        let window = word.interval();
        let weights = Arc::new(oracle.joint_distribution(&window.to_support())?);
        let idx = block_index(word.symbols(), oracle.alphabet().size());
        let mass = weights[idx];
        if mass <= 0.0 {
            return Err(Error::OutOfRange("cylinder has zero measure".into()));
        }
        let mut values = vec![0.0; weights.len()];
        values[idx] = 1.0 / mass;
        StepFunction::with_weights(window, oracle.alphabet(), values, weights)
    }

    pub fn from_data(oracle: &dyn MeasureOracle, data: &StepFunctionData) -> Result<Self> {
        if data.alphabet != oracle.alphabet() {
            return Err(Error::AlphabetMismatch {
                expected: oracle.alphabet().size(),
                got: data.alphabet.size(),
            });
        }
        StepFunction::new(oracle, data.window, data.values.clone())
    }

    pub fn to_data(&self) -> StepFunctionData {
        StepFunctionData {
            window: self.window,
            alphabet: self.alphabet,
            values: self.values.clone(),
        }
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &Arc<Vec<f64>> {
        &self.weights
    }

    /// `∫ f dν`.
    pub fn norm(&self) -> f64 {
        self.values.iter().zip(self.weights.iter()).map(|(v, w)| v * w).sum()
    }

    /// Same window and weights, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<StepFunction> {
        StepFunction::with_weights(self.window, self.alphabet, values, Arc::clone(&self.weights))
    }

    fn compatible(&self, other: &StepFunction) -> bool {
        self.window == other.window
            && self.alphabet == other.alphabet
            && (Arc::ptr_eq(&self.weights, &other.weights)
                || self
                    .weights
                    .iter()
                    .zip(other.weights.iter())
                    .all(|(a, b)| (a - b).abs() <= 1e-12))
    }
}

/// `Σ_b |f(b) - g(b)| ν(b)`.
pub fn l1_distance(f: &StepFunction, g: &StepFunction) -> Result<f64> {
    if !f.compatible(g) {
        return Err(Error::WindowMismatch);
    }
    Ok(weighted_l1(&f.values, &g.values, &f.weights))
}

pub(crate) fn weighted_l1(f: &[f64], g: &[f64], w: &[f64]) -> f64 {
    f.iter()
        .zip(g)
        .zip(w)
        .map(|((a, b), w)| (a - b).abs() * w)
        .sum()
}

/// Linear map taking a function on `source` to the conditional expectation of
/// its translate onto the coordinates of `target`.
///
/// The translate of `g` by `t` reads coordinates `source - t`; it is the
/// composition of `g` with the `t`-fold inverse shift.
#[derive(Debug, Clone)]
pub struct ShiftProjection {
    pub shift: i64,
    pub source: Interval,
    pub target: Interval,
    source_blocks: usize,
    target_blocks: usize,
    /// Row-major `target_blocks x source_blocks` transition weights.
    matrix: Vec<f64>,
}

impl ShiftProjection {
    pub fn new(
        oracle: &dyn MeasureOracle,
        source: Interval,
        shift: i64,
        target: Interval,
    ) -> Result<Self> {
        let k = oracle.alphabet().size();
        let moved = source.translate(-shift).to_support();
        let target_sup = target.to_support();
        let union = moved.union(&target_sup);
        let joint = oracle.joint_distribution(&union).map_err(|e| match e {
            Error::SupportOutOfRange => Error::ShiftOutOfRange,
            other => other,
        })?;
        let src_pos = moved.positions_in(&union)?;
        let tgt_pos = target_sup.positions_in(&union)?;
        let source_blocks = k.pow(source.len() as u32);
        let target_blocks = k.pow(target.len() as u32);
        let mut matrix = vec![0.0; target_blocks * source_blocks];
        let mut buf = vec![0u8; union.len()];
        let mut src = vec![0u8; src_pos.len()];
        let mut tgt = vec![0u8; tgt_pos.len()];
        for (u, &mass) in joint.iter().enumerate() {
            if mass <= 0.0 {
                continue;
            }
            decode_block(u, k, union.len(), &mut buf);
            for (s, &p) in src.iter_mut().zip(&src_pos) {
                *s = buf[p];
            }
            for (s, &p) in tgt.iter_mut().zip(&tgt_pos) {
                *s = buf[p];
            }
            matrix[block_index(&tgt, k) * source_blocks + block_index(&src, k)] += mass;
        }
        for row in matrix.chunks_exact_mut(source_blocks) {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|x| *x /= total);
            }
        }
        Ok(ShiftProjection {
            shift,
            source,
            target,
            source_blocks,
            target_blocks,
            matrix,
        })
    }

    pub fn source_blocks(&self) -> usize {
        self.source_blocks
    }

    pub fn target_blocks(&self) -> usize {
        self.target_blocks
    }

    /// `P[b][c]`: weight of source block `c` given target block `b`.
    #[inline]
    pub fn entry(&self, b: usize, c: usize) -> f64 {
        self.matrix[b * self.source_blocks + c]
    }

    pub fn row(&self, b: usize) -> &[f64] {
        &self.matrix[b * self.source_blocks..(b + 1) * self.source_blocks]
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        self.matrix
            .chunks_exact(self.source_blocks)
            .map(|row| row.iter().zip(values).map(|(p, v)| p * v).sum())
            .collect()
    }
}

/// The translate of `g` by `t`, projected onto `target` by conditional expectation.
pub fn shift_column(
    oracle: &dyn MeasureOracle,
    g: &StepFunction,
    t: i64,
    target: Interval,
) -> Result<StepFunction> {
    if g.alphabet != oracle.alphabet() {
        return Err(Error::AlphabetMismatch {
            expected: oracle.alphabet().size(),
            got: g.alphabet.size(),
        });
    }
    let proj = ShiftProjection::new(oracle, g.window, t, target)?;
    let weights = Arc::new(oracle.joint_distribution(&target.to_support())?);
    StepFunction::with_weights(target, g.alphabet, proj.apply(&g.values), weights)
}

/// Value of `f` on the block of `x` restricted to `f`'s window.
pub fn evaluate(f: &StepFunction, x: &Word) -> Result<f64> {
    let sup: Support = f.window.to_support();
    let restricted = crate::symbolic::restrict(x, &sup)?;
    Ok(f.values[block_index(restricted.symbols(), f.alphabet.size())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{BernoulliMeasure, EmpiricalMeasure, ProbabilityVector};
    use proptest::prelude::*;

    fn bern(p: &[f64]) -> BernoulliMeasure {
        BernoulliMeasure::new(ProbabilityVector::new(p.to_vec()).unwrap())
    }

    #[test]
    fn l1_examples() {
        let b = bern(&[0.3, 0.7]);
        let w = Interval::new(0, 2).unwrap();
        let f = StepFunction::new(&b, w, (0..8).map(|i| i as f64).collect()).unwrap();
        assert_eq!(l1_distance(&f, &f).unwrap(), 0.0);
        let two = StepFunction::constant(&b, w, 2.0).unwrap();
        let one = StepFunction::constant(&b, w, 1.0).unwrap();
        assert!((l1_distance(&two, &one).unwrap() - 1.0).abs() < 1e-15);
        let other = StepFunction::constant(&b, Interval::new(1, 3).unwrap(), 1.0).unwrap();
        assert_eq!(l1_distance(&one, &other).unwrap_err(), Error::WindowMismatch);
    }

    #[test]
    fn l1_matches_enumeration() {
        // Random f, g on a window of length 3 over two symbols: sum over the 8 blocks.
        let p = [0.35, 0.65];
        let b = bern(&p);
        let w = Interval::new(0, 2).unwrap();
        let fv = vec![0.1, 2.0, 0.0, 1.5, 0.7, 0.2, 3.0, 0.9];
        let gv = vec![1.0, 0.5, 0.25, 0.0, 0.7, 1.2, 0.1, 2.0];
        let f = StepFunction::new(&b, w, fv.clone()).unwrap();
        let g = StepFunction::new(&b, w, gv.clone()).unwrap();
        let mut brute = 0.0;
        for idx in 0..8usize {
            let bits = [(idx >> 2) & 1, (idx >> 1) & 1, idx & 1];
            let mass: f64 = bits.iter().map(|&s| p[s]).product();
            brute += (fv[idx] - gv[idx]).abs() * mass;
        }
        assert!((l1_distance(&f, &g).unwrap() - brute).abs() < 1e-14);
    }

    #[test]
    fn shift_identity_and_constants() {
        let b = bern(&[0.2, 0.5, 0.3]);
        let w = Interval::new(0, 1).unwrap();
        let g = StepFunction::new(&b, w, (0..9).map(|i| (i * i) as f64).collect()).unwrap();
        let same = shift_column(&b, &g, 0, w).unwrap();
        assert!(same.values().iter().zip(g.values()).all(|(a, b)| (a - b).abs() < 1e-14));
        let c = StepFunction::constant(&b, w, 4.0).unwrap();
        for t in -3..=3 {
            let moved = shift_column(&b, &c, t, w).unwrap();
            assert!(moved.values().iter().all(|v| (v - 4.0).abs() < 1e-12));
        }
    }

    #[test]
    fn shift_out_of_window_integrates() {
        // g reads coordinate 0; its translate by 1 reads coordinate -1, which
        // the target window {0} does not see, so the projection is ∫ g.
        let b = bern(&[0.25, 0.75]);
        let w = Interval::new(0, 0).unwrap();
        let g = StepFunction::new(&b, w, vec![2.0, 6.0]).unwrap();
        let moved = shift_column(&b, &g, 1, w).unwrap();
        let integral = 0.25 * 2.0 + 0.75 * 6.0;
        assert!(moved.values().iter().all(|v| (v - integral).abs() < 1e-14));
    }

    #[test]
    fn shift_beyond_empirical_window_errors() {
        let a = Alphabet::new(2).unwrap();
        let window = Interval::new(0, 3).unwrap();
        let em = EmpiricalMeasure::from_flat(a, window, vec![0, 1, 1, 0, 1, 1, 0, 0], None).unwrap();
        let g = StepFunction::constant(&em, Interval::new(0, 1).unwrap(), 1.0).unwrap();
        let err = shift_column(&em, &g, 5, Interval::new(0, 1).unwrap()).unwrap_err();
        assert_eq!(err.to_string(), "shift out of range");
    }

    #[test]
    fn translate_reads_moved_coordinates() {
        // g = indicator of x_0 = 1 on window {0,1}; translate by -1 reads x_1.
        let b = bern(&[0.5, 0.5]);
        let w = Interval::new(0, 1).unwrap();
        let g = StepFunction::new(&b, w, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let moved = shift_column(&b, &g, -1, w).unwrap();
        assert_eq!(moved.values(), &[0.0, 1.0, 0.0, 1.0]);
    }

    proptest! {
        #[test]
        fn shift_preserves_norm(
            vals in proptest::collection::vec(0.0f64..5.0, 8),
            t in -4i64..=4,
            p0 in 0.1f64..0.9,
        ) {
            let b = bern(&[p0, 1.0 - p0]);
            let w = Interval::new(0, 2).unwrap();
            let g = StepFunction::new(&b, w, vals).unwrap();
            let moved = shift_column(&b, &g, t, w).unwrap();
            prop_assert!((moved.norm() - g.norm()).abs() < 1e-9);
        }
    }
}
