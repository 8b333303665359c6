//! Alternating LP minimization of the worst-case L1 error
//! `max_i ‖f_i - Σ_m Σ_j α_{i,m,j} P_j g_m‖₁` over generators `g_m >= 0`
//! and coefficients `α >= 0`, where `P_j` is the projected translate by the
//! `j`-th allowed shift.

use std::sync::Arc;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::step::{weighted_l1, ShiftProjection, StepFunction};
use crate::error::{Error, Result};
use crate::lp::LinearProgram;
use crate::measures::MeasureOracle;
use crate::seed::stream_rng;
use crate::symbolic::Interval;

/// A step is accepted only if the recomputed worst-case error does not grow
/// by more than this, which keeps every trace exactly monotone.
const STEP_SLACK: f64 = 0.0;

/// Relative decrease of one alternation below which the joint step is tried.
const PROGRESS: f64 = 0.05;

/// Weight of the mean error next to the worst-case error in the joint step.
const JOINT_SUM_WEIGHT: f64 = 0.1;

/// Multiplicative least-squares rounds before the L1 descent.
const WARMUP_ROUNDS: usize = 2000;

/// Smallest trust-region radius tried by the joint step.
const MIN_RADIUS: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct AtnProblem {
    pub targets: Vec<StepFunction>,
    /// Number of generators `n`.
    pub generators: usize,
    /// Allowed shifts; must be symmetric around 0.
    pub shifts: Vec<i64>,
    pub generator_window: Interval,
    pub max_iterations: usize,
    /// Stop once the worst-case error is at most this.
    pub tolerance: f64,
    /// Random restarts on top of the target-seeded start.
    pub restarts: usize,
    /// Enforce `Σ_{m,j} α_{i,m,j} = ‖f_i‖` and `‖g_m‖ = 1`.
    pub mass_normalized: bool,
}

impl AtnProblem {
    /// Problem with default settings: generators live on the target window,
    /// 200 iterations, tolerance `1e-9`, 3 random restarts.
    pub fn new(targets: Vec<StepFunction>, generators: usize, shifts: Vec<i64>) -> Result<Self> {
        let window = targets
            .first()
            .map(|t| t.window())
            .ok_or_else(|| Error::OutOfRange("need at least one target".into()))?;
        let problem = AtnProblem {
            targets,
            generators,
            shifts,
            generator_window: window,
            max_iterations: 200,
            tolerance: 1e-9,
            restarts: 3,
            mass_normalized: false,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn target_window(&self) -> Interval {
        self.targets[0].window()
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::OutOfRange("need at least one target".into()));
        }
        if self.generators == 0 {
            return Err(Error::OutOfRange("need at least one generator".into()));
        }
        if self.shifts.is_empty() {
            return Err(Error::OutOfRange("shift set is empty".into()));
        }
        let mut sorted = self.shifts.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.shifts.len() {
            return Err(Error::OutOfRange("shift set has duplicates".into()));
        }
        if sorted.iter().any(|t| sorted.binary_search(&-t).is_err()) {
            return Err(Error::OutOfRange("shift set must be symmetric around 0".into()));
        }
        let first = &self.targets[0];
        if self.targets.iter().any(|t| {
            t.window() != first.window()
                || t.alphabet() != first.alphabet()
                || !Arc::ptr_eq(t.weights(), first.weights()) && t.weights() != first.weights()
        }) {
            return Err(Error::WindowMismatch);
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::OutOfRange("tolerance must be nonnegative".into()));
        }
        Ok(())
    }

    /// Copy of the problem with a different generator count.
    pub fn with_generators(&self, n: usize) -> AtnProblem {
        AtnProblem {
            generators: n,
            ..self.clone()
        }
    }
}

/// Generators, coefficients and achieved errors of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtnWitness {
    pub generator_window: Interval,
    pub shifts: Vec<i64>,
    /// Block values of each generator, `‖g_m‖₁ = 1`.
    pub generators: Vec<Vec<f64>>,
    /// `coefficients[i][m][j]` multiplies generator `m` translated by `shifts[j]` for target `i`.
    pub coefficients: Vec<Vec<Vec<f64>>>,
    pub errors: Vec<f64>,
    pub max_error: f64,
    pub mean_error: f64,
    /// Worst-case error after every accepted half-step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// Index of the start that produced this witness (0 = target-seeded).
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFit {
    /// `coefficients[i][c]` for target `i`, column `c`.
    pub coefficients: Vec<Vec<f64>>,
    pub errors: Vec<f64>,
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn mean_of(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Best nonnegative combination of `columns` for one target under weights `w`.
///
/// Minimizes `Σ_b w_b |f_b - Σ_c α_c col_c(b)|` as an LP with split
/// residuals. With `mass = Some(m)` the coefficients must sum to `m`.
fn fit_one(f: &[f64], w: &[f64], columns: &[Vec<f64>], mass: Option<f64>) -> Result<(Vec<f64>, f64)> {
    let c = columns.len();
    let zero = vec![0.0; c];
    if columns.iter().all(|col| col.iter().zip(w).all(|(v, w)| *v == 0.0 || *w == 0.0)) {
        return Ok((zero, weighted_l1(f, &vec![0.0; f.len()], w)));
    }
    let active: Vec<usize> = (0..f.len()).filter(|&b| w[b] > 0.0).collect();
    let scale = w.iter().copied().fold(0.0, f64::max);
    let nv = c + 2 * active.len();
    let mut cost = vec![0.0; nv];
    for (a, &b) in active.iter().enumerate() {
        cost[c + 2 * a] = w[b] / scale;
        cost[c + 2 * a + 1] = w[b] / scale;
    }
    let mut lp = LinearProgram::new(cost);
    for (a, &b) in active.iter().enumerate() {
        let mut row = vec![0.0; nv];
        for (j, col) in columns.iter().enumerate() {
            row[j] = col[b];
        }
        row[c + 2 * a] = 1.0;
        row[c + 2 * a + 1] = -1.0;
        lp.add_row(row, f[b]);
    }
    if let Some(m) = mass {
        let mut row = vec![0.0; nv];
        row[..c].iter_mut().for_each(|x| *x = 1.0);
        lp.add_row(row, m);
    }
    let sol = lp.solve()?;
    let alpha = sol.x[..c].to_vec();
    let approx = combine(columns, &alpha, f.len());
    Ok((alpha, weighted_l1(f, &approx, w)))
}

fn combine(columns: &[Vec<f64>], alpha: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (col, &a) in columns.iter().zip(alpha) {
        if a != 0.0 {
            out.iter_mut().zip(col).for_each(|(o, v)| *o += a * v);
        }
    }
    out
}

/// Solves the coefficient LP for every target independently.
///
/// All targets and columns must share one window and reference measure.
pub fn solve_coefficients(
    targets: &[StepFunction],
    columns: &[StepFunction],
    mass_normalized: bool,
) -> Result<CoefficientFit> {
    let Some(first) = targets.first() else {
        return Ok(CoefficientFit {
            coefficients: Vec::new(),
            errors: Vec::new(),
        });
    };
    let same = |s: &StepFunction| {
        s.window() == first.window()
            && s.alphabet() == first.alphabet()
            && (Arc::ptr_eq(s.weights(), first.weights()) || s.weights() == first.weights())
    };
    if !targets.iter().chain(columns).all(same) {
        return Err(Error::WindowMismatch);
    }
    let w = first.weights();
    let cols: Vec<Vec<f64>> = columns.iter().map(|c| c.values().to_vec()).collect();
    let mut coefficients = Vec::with_capacity(targets.len());
    let mut errors = Vec::with_capacity(targets.len());
    for t in targets {
        let mass = mass_normalized.then(|| t.norm());
        let (a, e) = fit_one(t.values(), w, &cols, mass)?;
        coefficients.push(a);
        errors.push(e);
    }
    Ok(CoefficientFit {
        coefficients,
        errors,
    })
}

/// Precomputed projections and block laws for one problem.
struct Context<'a> {
    problem: &'a AtnProblem,
    projections: Vec<ShiftProjection>,
    target_weights: Arc<Vec<f64>>,
    generator_weights: Vec<f64>,
    active: Vec<usize>,
    scale: f64,
}

#[derive(Debug, Clone)]
struct State {
    generators: Vec<Vec<f64>>,
    /// `alpha[i][m][j]`.
    alpha: Vec<Vec<Vec<f64>>>,
    errors: Vec<f64>,
}

impl State {
    fn worst(&self) -> f64 {
        max_of(&self.errors)
    }
}

impl<'a> Context<'a> {
    fn new(problem: &'a AtnProblem, oracle: &dyn MeasureOracle) -> Result<Self> {
        problem.validate()?;
        if problem.targets[0].alphabet() != oracle.alphabet() {
            return Err(Error::AlphabetMismatch {
                expected: oracle.alphabet().size(),
                got: problem.targets[0].alphabet().size(),
            });
        }
        let target = problem.target_window();
        let projections = problem
            .shifts
            .iter()
            .map(|&t| ShiftProjection::new(oracle, problem.generator_window, t, target))
            .collect::<Result<Vec<_>>>()?;
        let generator_weights = oracle.joint_distribution(&problem.generator_window.to_support())?;
        let target_weights = Arc::clone(problem.targets[0].weights());
        let active: Vec<usize> = (0..target_weights.len())
            .filter(|&b| target_weights[b] > 0.0)
            .collect();
        let scale = target_weights.iter().copied().fold(0.0, f64::max);
        Ok(Context {
            problem,
            projections,
            target_weights,
            generator_weights,
            active,
            scale,
        })
    }

    fn n_shifts(&self) -> usize {
        self.projections.len()
    }

    fn gen_blocks(&self) -> usize {
        self.generator_weights.len()
    }

    fn target_blocks(&self) -> usize {
        self.target_weights.len()
    }

    fn norm(&self, g: &[f64]) -> f64 {
        g.iter().zip(&self.generator_weights).map(|(a, b)| a * b).sum()
    }

    /// Columns `P_j g_m`, indexed `m * J + j`.
    fn columns(&self, generators: &[Vec<f64>]) -> Vec<Vec<f64>> {
        generators
            .iter()
            .flat_map(|g| self.projections.iter().map(move |p| p.apply(g)))
            .collect()
    }

    fn errors(&self, generators: &[Vec<f64>], alpha: &[Vec<Vec<f64>>]) -> Vec<f64> {
        let cols = self.columns(generators);
        self.problem
            .targets
            .iter()
            .zip(alpha)
            .map(|(t, a)| {
                let flat: Vec<f64> = a.iter().flatten().copied().collect();
                let approx = combine(&cols, &flat, self.target_blocks());
                weighted_l1(t.values(), &approx, &self.target_weights)
            })
            .collect()
    }

    fn unflatten(&self, flat: &[f64]) -> Vec<Vec<f64>> {
        flat.chunks(self.n_shifts()).map(|c| c.to_vec()).collect()
    }

    /// Step (a): optimal coefficients for fixed generators.
    fn fit_coefficients(&self, generators: &[Vec<f64>]) -> Result<(Vec<Vec<Vec<f64>>>, Vec<f64>)> {
        let cols = self.columns(generators);
        let mut alpha = Vec::with_capacity(self.problem.targets.len());
        let mut errors = Vec::with_capacity(self.problem.targets.len());
        for t in &self.problem.targets {
            let mass = self.problem.mass_normalized.then(|| t.norm());
            let (a, e) = fit_one(t.values(), &self.target_weights, &cols, mass)?;
            alpha.push(self.unflatten(&a));
            errors.push(e);
        }
        Ok((alpha, errors))
    }

    /// Step (b): optimal generator values for fixed coefficients.
    ///
    /// First minimizes the worst-case error `z`, then, holding `z` at its
    /// optimum, minimizes the summed error so targets that are not binding
    /// also improve.
    fn fit_generators(&self, alpha: &[Vec<Vec<f64>>]) -> Result<Vec<Vec<f64>>> {
        let n = self.problem.generators;
        let g_blocks = self.gen_blocks();
        let k_targets = self.problem.targets.len();
        let act = self.active.len();
        let g_vars = n * g_blocks;
        let u = |i: usize, a: usize| g_vars + 2 * (i * act + a);
        let z = g_vars + 2 * k_targets * act;
        let slack = |i: usize| z + 1 + i;
        let nv = z + 1 + k_targets;

        // Effective linear maps A_im = Σ_j α_imj P_j restricted to active rows.
        let mut fit_rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k_targets * act);
        for (i, t) in self.problem.targets.iter().enumerate() {
            for (a, &b) in self.active.iter().enumerate() {
                let mut row = vec![0.0; nv];
                for m in 0..n {
                    for (j, p) in self.projections.iter().enumerate() {
                        let coef = alpha[i][m][j];
                        if coef == 0.0 {
                            continue;
                        }
                        for (c, &pv) in p.row(b).iter().enumerate() {
                            row[m * g_blocks + c] += coef * pv;
                        }
                    }
                }
                row[u(i, a)] = 1.0;
                row[u(i, a) + 1] = -1.0;
                fit_rows.push((row, t.values()[b]));
            }
        }
        let error_row = |i: usize, with_z: bool| {
            let mut row = vec![0.0; nv];
            for (a, &b) in self.active.iter().enumerate() {
                let w = self.target_weights[b] / self.scale;
                row[u(i, a)] = w;
                row[u(i, a) + 1] = w;
            }
            row[slack(i)] = 1.0;
            if with_z {
                row[z] = -1.0;
            }
            row
        };
        let mass_rows = || {
            (0..n).map(move |m| {
                let mut row = vec![0.0; nv];
                row[m * g_blocks..(m + 1) * g_blocks].copy_from_slice(&self.generator_weights);
                row
            })
        };

        let mut cost = vec![0.0; nv];
        cost[z] = 1.0;
        let mut first = LinearProgram::new(cost);
        for (row, rhs) in &fit_rows {
            first.add_row(row.clone(), *rhs);
        }
        for i in 0..k_targets {
            first.add_row(error_row(i, true), 0.0);
        }
        if self.problem.mass_normalized {
            for row in mass_rows() {
                first.add_row(row, 1.0);
            }
        }
        let sol = first.solve()?;
        let mut x = sol.x;

        if k_targets > 1 {
            let cap = x[z] * (1.0 + 1e-9) + 1e-12;
            let mut cost = vec![0.0; nv];
            for i in 0..k_targets {
                for (a, &b) in self.active.iter().enumerate() {
                    let w = self.target_weights[b] / self.scale;
                    cost[u(i, a)] = w;
                    cost[u(i, a) + 1] = w;
                }
            }
            let mut second = LinearProgram::new(cost);
            for (row, rhs) in fit_rows {
                second.add_row(row, rhs);
            }
            for i in 0..k_targets {
                second.add_row(error_row(i, false), cap);
            }
            if self.problem.mass_normalized {
                for row in mass_rows() {
                    second.add_row(row, 1.0);
                }
            }
            if let Ok(sol) = second.solve() {
                x = sol.x;
            }
        }
        Ok(x[..g_vars].chunks(g_blocks).map(|c| c.to_vec()).collect())
    }

    fn random_generator(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        loop {
            let g: Vec<f64> = (0..self.gen_blocks())
                .map(|_| {
                    let u: f64 = rng.random();
                    u * u * u
                })
                .collect();
            let norm = self.norm(&g);
            if norm > 0.0 {
                return g.into_iter().map(|v| v / norm).collect();
            }
        }
    }

    /// Rescales every generator to unit norm, moving the scale into the coefficients.
    fn renormalize(&self, state: &mut State, rng: &mut dyn RngCore) {
        for m in 0..state.generators.len() {
            let norm = self.norm(&state.generators[m]);
            if norm > 1e-300 {
                state.generators[m].iter_mut().for_each(|v| *v /= norm);
                for a in state.alpha.iter_mut() {
                    a[m].iter_mut().for_each(|v| *v *= norm);
                }
            } else {
                // A null generator contributes nothing; replace it and drop its weights.
                state.generators[m] = self.random_generator(rng);
                for a in state.alpha.iter_mut() {
                    a[m].iter_mut().for_each(|v| *v = 0.0);
                }
            }
        }
    }

    /// Target values as generator seeds, chosen farthest-first.
    fn seeded_generators(&self, rng: &mut dyn RngCore) -> Vec<Vec<f64>> {
        let n = self.problem.generators;
        let targets = &self.problem.targets;
        let same_window = self.problem.generator_window == self.problem.target_window();
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
        if same_window {
            let mut chosen: Vec<usize> = Vec::new();
            let first = (0..targets.len())
                .max_by(|&a, &b| targets[a].norm().total_cmp(&targets[b].norm()).then(b.cmp(&a)))
                .expect("targets nonempty");
            chosen.push(first);
            while chosen.len() < n.min(targets.len()) {
                let next = (0..targets.len())
                    .filter(|i| !chosen.contains(i))
                    .max_by(|&a, &b| {
                        let da = self.min_distance(a, &chosen);
                        let db = self.min_distance(b, &chosen);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("unchosen target exists");
                chosen.push(next);
            }
            for i in chosen {
                let v = targets[i].values().to_vec();
                let norm = self.norm(&v);
                if norm > 0.0 {
                    out.push(v.into_iter().map(|x| x / norm).collect());
                }
            }
        }
        while out.len() < n {
            out.push(self.random_generator(rng));
        }
        out
    }

    fn min_distance(&self, i: usize, chosen: &[usize]) -> f64 {
        let t = &self.problem.targets;
        chosen
            .iter()
            .map(|&c| {
                let (a, b) = (t[i].norm(), t[c].norm());
                if a == 0.0 || b == 0.0 {
                    return 0.0;
                }
                let x: Vec<f64> = t[i].values().iter().map(|v| v / a).collect();
                let y: Vec<f64> = t[c].values().iter().map(|v| v / b).collect();
                weighted_l1(&x, &y, &self.target_weights)
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn initial_generators(&self, start: usize, rng: &mut dyn RngCore) -> Vec<Vec<f64>> {
        if start == 0 {
            return self.seeded_generators(rng);
        }
        let targets = &self.problem.targets;
        (0..self.problem.generators)
            .map(|_| {
                // Half of the random seeds are perturbed targets, half are noise.
                if rng.random_bool(0.5) {
                    let t = &targets[rng.random_range(0..targets.len())];
                    if self.problem.generator_window == self.problem.target_window() && t.norm() > 0.0 {
                        let v: Vec<f64> = t
                            .values()
                            .iter()
                            .map(|x| x * (0.5 + rng.random::<f64>()))
                            .collect();
                        let norm = self.norm(&v);
                        if norm > 0.0 {
                            return v.into_iter().map(|x| x / norm).collect();
                        }
                    }
                }
                self.random_generator(rng)
            })
            .collect()
    }

    /// Trust-region step on generators and coefficients together.
    ///
    /// The bilinear term `α·P g` is linearized around the current point and
    /// the worst-case error of the linear model is minimized over a box of
    /// relative size `radius`. The step is kept only if the true error drops;
    /// otherwise the radius shrinks and the step is retried.
    fn joint_descent(&self, state: &State, radius: &mut f64, rng: &mut dyn RngCore) -> Option<State> {
        let before = state.worst();
        while *radius >= MIN_RADIUS {
            if let Ok((mut next, predicted)) = self.joint_step(state, *radius) {
                self.renormalize(&mut next, rng);
                next.errors = self.errors(&next.generators, &next.alpha);
                if next.worst() < before * (1.0 - 1e-12) {
                    // Agreement between model and actual decrease sets the next radius.
                    let ratio = (before - next.worst()) / (before - predicted).max(1e-300);
                    if ratio > 0.75 {
                        *radius = (*radius * 2.0).min(1.0);
                    } else if ratio < 0.25 {
                        *radius *= 0.5;
                    }
                    return Some(next);
                }
            }
            *radius *= 0.25;
        }
        None
    }

    /// Returns the step and the worst-case error predicted by the linear model.
    fn joint_step(&self, state: &State, radius: f64) -> Result<(State, f64)> {
        let n = self.problem.generators;
        let nj = self.n_shifts();
        let g_blocks = self.gen_blocks();
        let k_targets = self.problem.targets.len();
        let act = self.active.len();

        let g_scale = state.generators.iter().flatten().copied().fold(0.0, f64::max).max(1e-12);
        let a_scale = state.alpha.iter().flatten().flatten().copied().fold(0.0, f64::max).max(1e-12);
        let g_lo: Vec<Vec<f64>> = state
            .generators
            .iter()
            .map(|g| g.iter().map(|v| (v - radius * g_scale).max(0.0)).collect())
            .collect();
        let a_lo: Vec<Vec<Vec<f64>>> = state
            .alpha
            .iter()
            .map(|a| a.iter().map(|r| r.iter().map(|v| (v - radius * a_scale).max(0.0)).collect()).collect())
            .collect();

        // Layout: shifted generator values, shifted coefficients, their box
        // slacks, split residuals, z, per-target error slacks.
        let gx = |m: usize, c: usize| m * g_blocks + c;
        let a_off = n * g_blocks;
        let ay = |i: usize, m: usize, j: usize| a_off + (i * n + m) * nj + j;
        let bounded = a_off + k_targets * n * nj;
        let res = 2 * bounded;
        let u = |i: usize, a: usize| res + 2 * (i * act + a);
        let z = res + 2 * k_targets * act;
        let nv = z + 1 + k_targets;

        let mut cost = vec![0.0; nv];
        cost[z] = 1.0;
        // A small weight on the summed error keeps non-binding targets moving.
        let spread = JOINT_SUM_WEIGHT / k_targets as f64;
        for i in 0..k_targets {
            for (a, &b) in self.active.iter().enumerate() {
                let w = spread * self.target_weights[b] / self.scale;
                cost[u(i, a)] = w;
                cost[u(i, a) + 1] = w;
            }
        }
        let mut lp = LinearProgram::new(cost);

        // Box rows `x + s = hi - lo`.
        for m in 0..n {
            for c in 0..g_blocks {
                let v = state.generators[m][c];
                let width = v + radius * g_scale - g_lo[m][c];
                lp.add_sparse_row(&[(gx(m, c), 1.0), (bounded + gx(m, c), 1.0)], width);
            }
        }
        for i in 0..k_targets {
            for m in 0..n {
                for j in 0..nj {
                    let v = state.alpha[i][m][j];
                    let width = v + radius * a_scale - a_lo[i][m][j];
                    lp.add_sparse_row(&[(ay(i, m, j), 1.0), (bounded + ay(i, m, j), 1.0)], width);
                }
            }
        }

        // Linearized fit rows:
        // Σ α'·P g + Σ α·P g' - Σ α·P g + u - v = f.
        let columns: Vec<Vec<Vec<f64>>> = state
            .generators
            .iter()
            .map(|g| self.projections.iter().map(|p| p.apply(g)).collect())
            .collect();
        let lo_columns: Vec<Vec<Vec<f64>>> = g_lo
            .iter()
            .map(|g| self.projections.iter().map(|p| p.apply(g)).collect())
            .collect();
        for (i, t) in self.problem.targets.iter().enumerate() {
            for (a, &b) in self.active.iter().enumerate() {
                let mut row = vec![0.0; nv];
                let mut rhs = t.values()[b];
                for m in 0..n {
                    for (j, p) in self.projections.iter().enumerate() {
                        let alpha = state.alpha[i][m][j];
                        let col = columns[m][j][b];
                        row[ay(i, m, j)] = col;
                        rhs -= a_lo[i][m][j] * col;
                        if alpha != 0.0 {
                            for (c, &pv) in p.row(b).iter().enumerate() {
                                row[gx(m, c)] += alpha * pv;
                            }
                            rhs += alpha * col - alpha * lo_columns[m][j][b];
                        }
                    }
                }
                row[u(i, a)] = 1.0;
                row[u(i, a) + 1] = -1.0;
                lp.add_row(row, rhs);
            }
        }
        for i in 0..k_targets {
            let mut entries = Vec::with_capacity(2 * act + 2);
            for (a, &b) in self.active.iter().enumerate() {
                let w = self.target_weights[b] / self.scale;
                entries.push((u(i, a), w));
                entries.push((u(i, a) + 1, w));
            }
            entries.push((z + 1 + i, 1.0));
            entries.push((z, -1.0));
            lp.add_sparse_row(&entries, 0.0);
        }
        if self.problem.mass_normalized {
            for m in 0..n {
                let entries: Vec<(usize, f64)> =
                    (0..g_blocks).map(|c| (gx(m, c), self.generator_weights[c])).collect();
                lp.add_sparse_row(&entries, 1.0 - self.norm(&g_lo[m]));
            }
            for (i, t) in self.problem.targets.iter().enumerate() {
                let entries: Vec<(usize, f64)> = (0..n)
                    .flat_map(|m| (0..nj).map(move |j| (ay(i, m, j), 1.0)))
                    .collect();
                let base: f64 = a_lo[i].iter().flatten().sum();
                lp.add_sparse_row(&entries, t.norm() - base);
            }
        }
        let x = lp.solve()?.x;
        let predicted = x[z] * self.scale;
        let generators = (0..n)
            .map(|m| (0..g_blocks).map(|c| g_lo[m][c] + x[gx(m, c)]).collect())
            .collect();
        let alpha = (0..k_targets)
            .map(|i| {
                (0..n)
                    .map(|m| (0..nj).map(|j| a_lo[i][m][j] + x[ay(i, m, j)]).collect())
                    .collect()
            })
            .collect();
        Ok((
            State {
                generators,
                alpha,
                errors: Vec::new(),
            },
            predicted,
        ))
    }

    /// Runs the alternating iteration from the given generators (and
    /// optionally coefficients) until convergence or budget.
    fn descend(
        &self,
        generators: Vec<Vec<f64>>,
        alpha: Option<Vec<Vec<Vec<f64>>>>,
        rng: &mut dyn RngCore,
        start: usize,
    ) -> Result<AtnWitness> {
        let cold = alpha.is_none();
        let mut state = match alpha {
            Some(alpha) => {
                let errors = self.errors(&generators, &alpha);
                State {
                    generators,
                    alpha,
                    errors,
                }
            }
            None => {
                let (alpha, errors) = self.fit_coefficients(&generators)?;
                State {
                    generators,
                    alpha,
                    errors,
                }
            }
        };
        let off_norm = state
            .generators
            .iter()
            .any(|g| (self.norm(g) - 1.0).abs() > 1e-12);
        if cold || off_norm {
            self.renormalize(&mut state, rng);
            state.errors = self.errors(&state.generators, &state.alpha);
        }
        // With coefficients supplied, a refit can only help.
        if let Ok((alpha, errors)) = self.fit_coefficients(&state.generators) {
            if max_of(&errors) <= state.worst() + STEP_SLACK {
                state.alpha = alpha;
                state.errors = errors;
            }
        }
        let mut trace = vec![state.worst()];
        let mut iterations = 0;
        let mut radius = 0.5;
        while iterations < self.problem.max_iterations && state.worst() > self.problem.tolerance {
            iterations += 1;
            let before = state.worst();

            if let Ok(generators) = self.fit_generators(&state.alpha) {
                let mut next = State {
                    errors: Vec::new(),
                    generators,
                    alpha: state.alpha.clone(),
                };
                self.renormalize(&mut next, rng);
                next.errors = self.errors(&next.generators, &next.alpha);
                if next.worst() <= state.worst() + STEP_SLACK {
                    state = next;
                    trace.push(state.worst());
                }
            }
            if let Ok((alpha, errors)) = self.fit_coefficients(&state.generators) {
                if max_of(&errors) <= state.worst() + STEP_SLACK {
                    state.alpha = alpha;
                    state.errors = errors;
                    trace.push(state.worst());
                }
            }
            if before - state.worst() > PROGRESS * before {
                continue;
            }
            // Alternation is slow or stalled; try a joint step on both blocks.
            match self.joint_descent(&state, &mut radius, rng) {
                Some(next) => {
                    state = next;
                    trace.push(state.worst());
                }
                None => break,
            }
        }
        Ok(AtnWitness {
            generator_window: self.problem.generator_window,
            shifts: self.problem.shifts.clone(),
            generators: state.generators,
            coefficients: state.alpha,
            max_error: max_of(&state.errors),
            mean_error: mean_of(&state.errors),
            errors: state.errors,
            trace,
            iterations,
            start,
        })
    }
}

impl Context<'_> {
    /// Weighted least-squares multiplicative updates from `generators`.
    ///
    /// The squared loss is smooth, so these updates move toward a good basin
    /// from a poor start far more reliably than the exact L1 steps, which are
    /// used afterwards for refinement.
    fn warmup(&self, mut generators: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
        let n = generators.len();
        let nj = self.n_shifts();
        let targets = &self.problem.targets;
        let w = &self.target_weights;
        let tb = self.target_blocks();
        const TINY: f64 = 1e-300;
        let mut alpha: Vec<Vec<Vec<f64>>> = targets
            .iter()
            .map(|f| vec![vec![f.norm() / (n * nj) as f64; nj]; n])
            .collect();
        let approx_of = |cols: &[Vec<Vec<f64>>], a: &[Vec<f64>]| {
            let mut out = vec![0.0; tb];
            for (cm, am) in cols.iter().zip(a) {
                for (col, &x) in cm.iter().zip(am) {
                    out.iter_mut().zip(col).for_each(|(o, v)| *o += x * v);
                }
            }
            out
        };
        for _ in 0..WARMUP_ROUNDS {
            let cols: Vec<Vec<Vec<f64>>> = generators
                .iter()
                .map(|g| self.projections.iter().map(|p| p.apply(g)).collect())
                .collect();
            for (f, a) in targets.iter().zip(alpha.iter_mut()) {
                let approx = approx_of(&cols, a);
                for m in 0..n {
                    for j in 0..nj {
                        let col = &cols[m][j];
                        let (mut num, mut den) = (0.0, 0.0);
                        for b in 0..tb {
                            num += w[b] * f.values()[b] * col[b];
                            den += w[b] * approx[b] * col[b];
                        }
                        a[m][j] *= num / (den + TINY);
                    }
                }
            }
            let approx: Vec<Vec<f64>> = alpha.iter().map(|a| approx_of(&cols, a)).collect();
            for m in 0..n {
                let mut num = vec![0.0; self.gen_blocks()];
                let mut den = vec![0.0; self.gen_blocks()];
                for (i, f) in targets.iter().enumerate() {
                    for (j, p) in self.projections.iter().enumerate() {
                        let a = alpha[i][m][j];
                        if a == 0.0 {
                            continue;
                        }
                        for b in 0..tb {
                            let (nf, na) = (a * w[b] * f.values()[b], a * w[b] * approx[i][b]);
                            for (c, &pv) in p.row(b).iter().enumerate() {
                                num[c] += nf * pv;
                                den[c] += na * pv;
                            }
                        }
                    }
                }
                for c in 0..self.gen_blocks() {
                    generators[m][c] *= num[c] / (den[c] + TINY);
                }
                let norm = self.norm(&generators[m]);
                if norm > TINY {
                    generators[m].iter_mut().for_each(|v| *v /= norm);
                    alpha.iter_mut().for_each(|a| a[m].iter_mut().for_each(|v| *v *= norm));
                }
            }
        }
        (generators, alpha)
    }
}

fn better(a: AtnWitness, b: AtnWitness) -> AtnWitness {
    if b.max_error < a.max_error {
        b
    } else {
        a
    }
}

/// Alternating minimization with a target-seeded start plus
/// `problem.restarts` random starts; returns the best witness.
///
/// A zero iteration budget returns the initial (target-seeded) fit.
pub fn alternate_optimize(
    problem: &AtnProblem,
    oracle: &dyn MeasureOracle,
    seed: u64,
) -> Result<AtnWitness> {
    let ctx = Context::new(problem, oracle)?;
    let starts = if problem.max_iterations == 0 {
        1
    } else {
        1 + problem.restarts
    };
    let results: Vec<Result<AtnWitness>> = (0..starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, "atn-start", s as u64);
            let gens = ctx.initial_generators(s, &mut rng);
            let (gens, alpha) = ctx.warmup(gens);
            // The warm-up ignores the mass constraint, so refit in that mode.
            let alpha = (!problem.mass_normalized).then_some(alpha);
            ctx.descend(gens, alpha, &mut rng, s)
        })
        .collect();
    let mut best: Option<AtnWitness> = None;
    for r in results {
        let w = r?;
        best = Some(match best {
            None => w,
            Some(b) => better(b, w),
        });
    }
    Ok(best.expect("at least one start"))
}

/// Continues from an existing witness with one extra generator whose
/// coefficients start at zero, so the starting error equals the witness error.
fn extend_witness(
    ctx: &Context<'_>,
    previous: &AtnWitness,
    seed: u64,
) -> Result<AtnWitness> {
    let mut rng = stream_rng(seed, "atn-warm", previous.generators.len() as u64);
    let mut generators = previous.generators.clone();
    // Fresh generator: the worst-fit target, normalized.
    let worst = previous
        .errors
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let fresh = if ctx.problem.generator_window == ctx.problem.target_window() {
        let v = ctx.problem.targets[worst].values().to_vec();
        let norm = ctx.norm(&v);
        if norm > 0.0 {
            v.into_iter().map(|x| x / norm).collect()
        } else {
            ctx.random_generator(&mut rng)
        }
    } else {
        ctx.random_generator(&mut rng)
    };
    generators.push(fresh);
    let alpha: Vec<Vec<Vec<f64>>> = previous
        .coefficients
        .iter()
        .map(|a| {
            let mut a = a.clone();
            a.push(vec![0.0; ctx.n_shifts()]);
            a
        })
        .collect();
    ctx.descend(generators, Some(alpha), &mut rng, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectEntry {
    pub n: usize,
    pub max_error: f64,
    pub mean_error: f64,
    pub witness: AtnWitness,
}

/// `e*(n)` for `n = 1..=n_max`.
///
/// Each `n > 1` is warm-started from the `n - 1` witness plus one fresh
/// generator and compared against cold starts; the better result is kept,
/// so `e*(n) <= e*(n - 1)`.
pub fn defect_profile(
    problem: &AtnProblem,
    oracle: &dyn MeasureOracle,
    n_max: usize,
    seed: u64,
) -> Result<Vec<DefectEntry>> {
    if n_max == 0 {
        return Err(Error::OutOfRange("n_max must be positive".into()));
    }
    let mut entries: Vec<DefectEntry> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let sub = problem.with_generators(n);
        let cold = alternate_optimize(&sub, oracle, crate::seed::derive_seed(seed, "profile", n as u64))?;
        let witness = match entries.last() {
            None => cold,
            Some(prev) => {
                let ctx = Context::new(&sub, oracle)?;
                let warm = extend_witness(&ctx, &prev.witness, seed)?;
                better(warm, cold)
            }
        };
        entries.push(DefectEntry {
            n,
            max_error: witness.max_error,
            mean_error: witness.mean_error,
            witness,
        });
    }
    Ok(entries)
}

impl AtnWitness {
    /// Recomputes the per-target errors of this witness from scratch.
    pub fn verify(&self, problem: &AtnProblem, oracle: &dyn MeasureOracle) -> Result<Vec<f64>> {
        let target = problem.target_window();
        let projections = self
            .shifts
            .iter()
            .map(|&t| ShiftProjection::new(oracle, self.generator_window, t, target))
            .collect::<Result<Vec<_>>>()?;
        let weights = problem.targets[0].weights();
        Ok(problem
            .targets
            .iter()
            .zip(&self.coefficients)
            .map(|(f, alpha)| {
                let mut approx = vec![0.0; f.values().len()];
                for (g, a_m) in self.generators.iter().zip(alpha) {
                    for (p, &a) in projections.iter().zip(a_m) {
                        if a != 0.0 {
                            approx.iter_mut().zip(p.apply(g)).for_each(|(o, v)| *o += a * v);
                        }
                    }
                }
                weighted_l1(f.values(), &approx, weights)
            })
            .collect())
    }
}
