//! Target families for the solver.

use rand::Rng;

use super::step::{ShiftProjection, StepFunction};
use crate::error::{Error, Result};
use crate::measures::MeasureOracle;
use crate::seed::stream_rng;
use crate::symbolic::{decode_block, Interval, Word};

/// Targets built as nonnegative combinations of planted generators, so the
/// problem with `generators.len()` generators has optimum zero.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub targets: Vec<StepFunction>,
    /// Planted block values, each of unit norm.
    pub generators: Vec<Vec<f64>>,
    /// `coefficients[i][m][j]`.
    pub coefficients: Vec<Vec<Vec<f64>>>,
}

/// `count` targets from `n` random generators on `window` over the shifts.
///
/// Generators and coefficients are strictly positive and random, so the
/// planted solution lies in the interior of the nonnegative orthant.
pub fn planted_instance(
    oracle: &dyn MeasureOracle,
    window: Interval,
    shifts: &[i64],
    n: usize,
    count: usize,
    seed: u64,
) -> Result<PlantedInstance> {
    if n == 0 || count == 0 {
        return Err(Error::OutOfRange("need at least one generator and target".into()));
    }
    let mut rng = stream_rng(seed, "planted", 0);
    let support = window.to_support();
    let weights = oracle.joint_distribution(&support)?;
    let projections = shifts
        .iter()
        .map(|&t| ShiftProjection::new(oracle, window, t, window))
        .collect::<Result<Vec<_>>>()?;
    let generators: Vec<Vec<f64>> = (0..n)
        .map(|_| loop {
            let g: Vec<f64> = weights
                .iter()
                .map(|_| rng.random_range(0.05..1.0))
                .collect();
            let norm: f64 = g.iter().zip(&weights).map(|(a, b)| a * b).sum();
            if norm > 1e-3 {
                break g.into_iter().map(|v| v / norm).collect();
            }
        })
        .collect();
    let mut targets = Vec::with_capacity(count);
    let mut coefficients = Vec::with_capacity(count);
    for _ in 0..count {
        let alpha: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                shifts
                    .iter()
                    .map(|_| rng.random_range(0.2..1.5))
                    .collect()
            })
            .collect();
        let mut values = vec![0.0; weights.len()];
        for (g, a_m) in generators.iter().zip(&alpha) {
            for (p, &a) in projections.iter().zip(a_m) {
                if a > 0.0 {
                    values.iter_mut().zip(p.apply(g)).for_each(|(v, x)| *v += a * x);
                }
            }
        }
        targets.push(StepFunction::new(oracle, window, values)?);
        coefficients.push(alpha);
    }
    Ok(PlantedInstance {
        targets,
        generators,
        coefficients,
    })
}

/// Normalized indicators `1_[b] / ν[b]` of `count` distinct length-`len`
/// cylinders starting at coordinate 0, at evenly spaced block indices.
pub fn cylinder_targets(oracle: &dyn MeasureOracle, len: usize, count: usize) -> Result<Vec<StepFunction>> {
    let window = Interval::with_len(0, len)?;
    let alphabet = oracle.alphabet();
    let blocks = crate::measures::check_budget(alphabet, len)?;
    if count == 0 || count > blocks {
        return Err(Error::OutOfRange(format!(
            "cannot pick {count} distinct cylinders out of {blocks}"
        )));
    }
    (0..count)
        .map(|i| {
            let index = i * blocks / count;
            let mut symbols = vec![0; len];
            decode_block(index, alphabet.size(), len, &mut symbols);
            let word = Word::new(alphabet, 0, symbols)?;
            let f = StepFunction::normalized_indicator(oracle, &word)?;
            debug_assert_eq!(f.window(), window);
            Ok(f)
        })
        .collect()
}
