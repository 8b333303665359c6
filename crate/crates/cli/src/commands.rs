//! Subcommands. Each fills its defaults into its arguments, so the report
//! echoes the values actually used.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use atn_core::atn::{
    alternate_optimize, cylinder_targets, defect_profile, planted_instance, AtnProblem, StepFunction,
};
use atn_core::entropy::{bernoulli_entropy_exact, entropy_profile};
use atn_core::furstenberg::{
    code_point, ineq3_check, markov_tail_check, mean_square_character_sum, pair_correlations, sample_base_word,
    skew_orbit, symbol_of, TorusPoint,
};
use atn_core::measures::{
    ball_measure_bernoulli_exact, ball_measure_binomial_bound, binomial_floor, stirling_ratio, write_empirical,
    EmpiricalMeasure, MeasureOracle,
};
use atn_core::seed::stream_rng;
use atn_core::symbolic::{max_mismatches, FunnyWord, Interval, Support};
use atn_core::witness::{non_atn_evidence, theorem21_statistic, SearchParams, Theorem21Instance, Verdict};
use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::parse::{self, at_least, open_unit, usage, Oracle};
use crate::UsageError;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

pub struct Outcome {
    pub payload: Value,
    pub checks: Vec<Check>,
    pub csv: Option<String>,
}

impl Outcome {
    fn new(payload: Value) -> Self {
        Outcome {
            payload,
            checks: Vec::new(),
            csv: None,
        }
    }

    fn check(mut self, name: &str, pass: bool) -> Self {
        self.checks.push(Check {
            name: name.into(),
            pass,
        });
        self
    }

    fn table(mut self, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        for r in rows {
            w.write_record(&r).expect("in-memory write");
        }
        self.csv = Some(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"));
        self
    }
}

type Run = Result<Outcome, UsageError>;

fn required<T: Copy>(value: Option<T>, flag: &str) -> Result<T, UsageError> {
    value.ok_or_else(|| UsageError(format!("{flag} is required")))
}

fn required_str<'a>(value: &'a Option<String>, flag: &str) -> Result<&'a str, UsageError> {
    value.as_deref().ok_or_else(|| UsageError(format!("{flag} is required")))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct BallArgs {
    /// Oracle spec: bernoulli:P1,P2,.. | empirical:PATH | furstenberg:k=K,window=A..B,samples=N,seed=S
    #[arg(long)]
    pub oracle: Option<String>,
    /// Shorthand for --oracle bernoulli:P1,P2,..
    #[arg(long)]
    pub bernoulli: Option<String>,
    /// Funny word `Λ=[n1,..]; W=[s1,..]` with 1-based symbols
    #[arg(long)]
    pub word: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub confidence: Option<f64>,
}

fn oracle_or_bernoulli(oracle: &Option<String>, bernoulli: &Option<String>) -> Result<Oracle, UsageError> {
    match (oracle, bernoulli) {
        (Some(_), Some(_)) => usage("give either --oracle or --bernoulli"),
        (Some(o), None) => parse::oracle(o),
        (None, Some(p)) => parse::oracle(&format!("bernoulli:{p}")),
        (None, None) => usage("--oracle (or --bernoulli) is required"),
    }
}

pub fn ball(a: &mut BallArgs) -> Run {
    let eps = open_unit("--eps", required(a.eps, "--eps")?)?;
    let confidence = open_unit("--confidence", *a.confidence.get_or_insert(0.95))?;
    let text = required_str(&a.word, "--word")?;
    let oracle = oracle_or_bernoulli(&a.oracle, &a.bernoulli)?;
    let o = oracle.as_dyn();
    let word = FunnyWord::parse(text, o.alphabet())?;
    let est = o.ball_measure(&word, eps, confidence)?;
    Ok(Outcome::new(json!({
        "word": word.to_string(),
        "support_len": word.len(),
        "eps": eps,
        "max_mismatches": max_mismatches(word.len(), eps),
        "exact": o.is_exact(),
        "estimate": est.estimate,
        "half_width": est.half_width,
        "confidence": confidence,
    })))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct BoundArgs {
    /// Support size m
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Largest symbol probability
    #[arg(long)]
    pub r: Option<f64>,
    /// Product measure; sets r = max p and adds exact ball measures of the mode word
    #[arg(long)]
    pub bernoulli: Option<String>,
    /// Also check m·ball(m) < (1-eps)/n
    #[arg(long)]
    pub n: Option<usize>,
    /// Tabulate every m' = 1..=m
    #[arg(long)]
    pub sweep: bool,
}

pub fn bound(a: &mut BoundArgs) -> Run {
    let m = at_least("--m", required(a.m, "--m")?, 1)?;
    let eps = open_unit("--eps", required(a.eps, "--eps")?)?;
    if let Some(n) = a.n {
        at_least("--n", n, 1)?;
    }
    let p = a.bernoulli.as_deref().map(|t| parse::probability("--bernoulli", t)).transpose()?;
    let r = match (a.r, &p) {
        (Some(_), Some(_)) => return usage("give either --r or --bernoulli"),
        (Some(r), None) => open_unit("--r", r)?,
        (None, Some(p)) => {
            a.r = Some(p.max());
            p.max()
        }
        (None, None) => return usage("--r (or --bernoulli) is required"),
    };
    let mode = p.as_ref().map(|p| {
        let s = (0..p.len()).fold(0, |b, s| if p.get(s) > p.get(b) { s } else { b });
        s as u8
    });
    let first = if a.sweep { 1 } else { m };
    let mut rows = Vec::new();
    let mut table = Vec::new();
    let mut within = true;
    let mut last = f64::NAN;
    for mm in first..=m {
        let bound = ball_measure_binomial_bound(mm, eps, r)?;
        let exact = match (&p, mode) {
            (Some(p), Some(s)) => {
                let w = FunnyWord::new(p.alphabet(), Support::interval(0, mm as i64 - 1)?, vec![s; mm])?;
                Some(ball_measure_bernoulli_exact(p, &w, eps)?)
            }
            _ => None,
        };
        if let Some(e) = exact {
            within &= e <= bound * (1.0 + 1e-12);
        }
        last = exact.unwrap_or(bound);
        rows.push(json!({
            "m": mm,
            "floor_m_eps": binomial_floor(mm, eps),
            "bound": bound,
            "exact_mode_ball": exact,
            "m_times_ball": mm as f64 * last,
        }));
        table.push(vec![
            mm.to_string(),
            binomial_floor(mm, eps).to_string(),
            bound.to_string(),
            exact.map(|e| e.to_string()).unwrap_or_default(),
        ]);
    }
    let ratio = stirling_ratio(eps, r)?;
    let mut out = Outcome::new(json!({ "eps": eps, "r": r, "stirling_ratio": ratio, "rows": rows }));
    if p.is_some() {
        out = out.check("exact ball within binomial bound", within);
    }
    if let Some(n) = a.n {
        out = out.check("m·ball(m) below (1-eps)/n", m as f64 * last < (1.0 - eps) / n as f64);
    }
    Ok(out.table(&["m", "floor_m_eps", "bound", "exact_mode_ball"], table))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct EntropyArgs {
    #[arg(long)]
    pub oracle: Option<String>,
    /// Largest block length
    #[arg(long)]
    pub m_max: Option<usize>,
}

pub fn entropy(a: &mut EntropyArgs) -> Run {
    let m_max = at_least("--m-max", *a.m_max.get_or_insert(8), 1)?;
    let oracle = parse::oracle(required_str(&a.oracle, "--oracle")?)?;
    let profile = entropy_profile(oracle.as_dyn(), m_max)?;
    let exact = match &oracle {
        Oracle::Bernoulli(b) => Some(bernoulli_entropy_exact(b.probabilities())),
        Oracle::Empirical(_) => None,
    };
    let mut out = Outcome::new(json!({ "profile": profile, "exact_rate": exact }));
    if let Some(h) = exact {
        let ok = profile.rows.iter().all(|r| (r.rate - h).abs() < 1e-9);
        out = out.check("block rates equal the exact entropy", ok);
    }
    out.csv = Some(profile.to_csv());
    Ok(out)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct AtnArgs {
    /// Oracle spec (default bernoulli:0.5,0.5)
    #[arg(long)]
    pub oracle: Option<String>,
    /// planted | cylinders | file:PATH (JSON {"window": "A..B", "values": [[..], ..]})
    #[arg(long)]
    pub targets: Option<String>,
    /// Target window length for planted and cylinder targets
    #[arg(long)]
    pub window_len: Option<usize>,
    /// Number of targets
    #[arg(long)]
    pub count: Option<usize>,
    /// Rank of the planted instance (default: --n)
    #[arg(long)]
    pub planted_n: Option<usize>,
    /// Number of generators
    #[arg(long)]
    pub n: Option<usize>,
    /// Symmetric shift set, e.g. -1,0,1
    #[arg(long, allow_hyphen_values = true)]
    pub shifts: Option<String>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Constrain coefficient sums to the target norms
    #[arg(long)]
    pub mass_normalized: bool,
    /// Solve for every n' = 1..=N and report e*(n')
    #[arg(long)]
    pub profile: Option<usize>,
    /// Emit the objective trace as the CSV table
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Deserialize)]
struct TargetFile {
    window: String,
    values: Vec<Vec<f64>>,
}

pub fn atn_solve(a: &mut AtnArgs) -> Run {
    let n = at_least("--n", *a.n.get_or_insert(1), 1)?;
    let seed = *a.seed.get_or_insert(0);
    let shifts: Vec<i64> = parse::list("--shifts", a.shifts.get_or_insert_with(|| "-1,0,1".into()))?;
    let targets_spec = a.targets.get_or_insert_with(|| "planted".into()).clone();
    let oracle = parse::oracle(a.oracle.get_or_insert_with(|| "bernoulli:0.5,0.5".into()))?;
    let o = oracle.as_dyn();
    let tolerance = *a.tolerance.get_or_insert(1e-9);
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return usage(format!("--tolerance = {tolerance} must be finite and nonnegative"));
    }
    if let Some(p) = a.profile {
        at_least("--profile", p, 1)?;
    }
    let targets = match targets_spec.as_str() {
        "planted" | "cylinders" => {
            let len = at_least("--window-len", *a.window_len.get_or_insert(3), 1)?;
            let count = at_least("--count", *a.count.get_or_insert(3), 1)?;
            if targets_spec == "planted" {
                let rank = at_least("--planted-n", *a.planted_n.get_or_insert(n), 1)?;
                planted_instance(o, Interval::with_len(0, len)?, &shifts, rank, count, seed)?.targets
            } else {
                cylinder_targets(o, len, count)?
            }
        }
        spec => {
            let Some(path) = spec.strip_prefix("file:") else {
                return usage(format!("--targets: expected planted, cylinders or file:PATH, got `{spec}`"));
            };
            let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("{path}: {e}")))?;
            let file: TargetFile =
                serde_json::from_str(&text).map_err(|e| UsageError(format!("{path}:{}: {e}", e.line())))?;
            let window = parse::interval("targets window", &file.window)?;
            file.values
                .into_iter()
                .map(|v| StepFunction::new(o, window, v))
                .collect::<Result<_, _>>()?
        }
    };
    let mut problem = AtnProblem::new(targets, n, shifts)?;
    problem.max_iterations = *a.iterations.get_or_insert(problem.max_iterations);
    problem.restarts = *a.restarts.get_or_insert(problem.restarts);
    problem.tolerance = tolerance;
    problem.mass_normalized = a.mass_normalized;
    problem.validate()?;
    let monotone = |t: &[f64]| t.windows(2).all(|p| p[1] <= p[0]);

    if let Some(n_max) = a.profile {
        let profile = defect_profile(&problem, o, n_max, seed)?;
        let nested = profile.windows(2).all(|p| p[1].max_error <= p[0].max_error);
        let traces = profile.iter().all(|e| monotone(&e.witness.trace));
        let rows = profile
            .iter()
            .map(|e| vec![e.n.to_string(), e.max_error.to_string(), e.mean_error.to_string()])
            .collect();
        return Ok(Outcome::new(json!({ "profile": profile }))
            .check("e*(n) nonincreasing", nested)
            .check("objective traces nonincreasing", traces)
            .table(&["n", "max_error", "mean_error"], rows));
    }
    let witness = alternate_optimize(&problem, o, seed)?;
    let ok = monotone(&witness.trace);
    let out = Outcome::new(json!({ "witness": witness })).check("objective trace nonincreasing", ok);
    Ok(if a.trace {
        let rows = witness.trace.iter().enumerate().map(|(i, e)| vec![i.to_string(), e.to_string()]).collect();
        out.table(&["iteration", "max_error"], rows)
    } else {
        let rows = witness.errors.iter().enumerate().map(|(i, e)| vec![i.to_string(), e.to_string()]).collect();
        out.table(&["target", "error"], rows)
    })
}

#[derive(Debug, Clone, Subcommand)]
pub enum FurstenbergCommand {
    /// Orbit of a torus point under the skew product
    Orbit(OrbitArgs),
    /// Symbolic coding of a torus point on a window
    Code(CodeArgs),
    /// Pair frequencies of coded symbols at lags 1..=max-lag
    PairCorr(PairArgs),
    /// Mean of |S|² over sampled coded words
    Charsum(SupportArgs),
    /// Tail of |S| against the Markov bound
    Markov(SupportArgs),
    /// k·|Λ|·ν(ball) against 1 - 1/(2k+1)²
    Ineq3(SupportArgs),
}

impl FurstenbergCommand {
    pub fn name(&self) -> &'static str {
        match self {
            FurstenbergCommand::Orbit(_) => "furstenberg orbit",
            FurstenbergCommand::Code(_) => "furstenberg code",
            FurstenbergCommand::PairCorr(_) => "furstenberg pair-corr",
            FurstenbergCommand::Charsum(_) => "furstenberg charsum",
            FurstenbergCommand::Markov(_) => "furstenberg markov",
            FurstenbergCommand::Ineq3(_) => "furstenberg ineq3",
        }
    }
}

fn start_point(s: &mut Option<f64>, t: &mut Option<f64>, seed: u64) -> TorusPoint {
    let random = TorusPoint::random(&mut stream_rng(seed, "start-point", 0));
    TorusPoint::new(*s.get_or_insert(random.s), *t.get_or_insert(random.t))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct OrbitArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Start point; drawn from --seed when missing
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<i64>,
}

pub fn orbit(a: &mut OrbitArgs) -> Run {
    let params = parse::skew(*a.k.get_or_insert(2), a.alpha)?;
    let (from, to) = (*a.from.get_or_insert(0), *a.to.get_or_insert(20));
    if to < from || to - from > 1_000_000 {
        return usage(format!("orbit range {from}..{to} must be increasing and at most 10^6 long"));
    }
    let z = start_point(&mut a.s, &mut a.t, *a.seed.get_or_insert(0));
    let points = skew_orbit(z, &params, from, to)?;
    let k1 = params.k() + 1;
    let rows: Vec<Vec<String>> = points
        .iter()
        .zip(from..)
        .map(|(p, n)| vec![n.to_string(), p.s.to_string(), p.t.to_string(), (symbol_of(p.t, k1) + 1).to_string()])
        .collect();
    let payload: Vec<Value> = points
        .iter()
        .zip(from..)
        .map(|(p, n)| json!({ "n": n, "s": p.s, "t": p.t, "symbol": symbol_of(p.t, k1) + 1 }))
        .collect();
    Ok(Outcome::new(json!({ "alpha": params.alpha(), "orbit": payload })).table(&["n", "s", "t", "symbol"], rows))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct CodeArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Coordinates A..B (inclusive)
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
}

pub fn code(a: &mut CodeArgs) -> Run {
    let params = parse::skew(*a.k.get_or_insert(2), a.alpha)?;
    let window = parse::interval("--window", a.window.get_or_insert_with(|| "0..19".into()))?;
    let z = start_point(&mut a.s, &mut a.t, *a.seed.get_or_insert(0));
    let word = code_point(z, &params, window)?;
    let symbols: Vec<usize> = word.symbols().iter().map(|&s| s as usize + 1).collect();
    let rows = window.indices().zip(&symbols).map(|(n, s)| vec![n.to_string(), s.to_string()]).collect();
    Ok(Outcome::new(json!({
        "alpha": params.alpha(),
        "word": word.to_funny().to_string(),
        "symbols": symbols,
    }))
    .table(&["n", "symbol"], rows))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct PairArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub max_lag: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn pair_corr(a: &mut PairArgs) -> Run {
    let params = parse::skew(*a.k.get_or_insert(2), a.alpha)?;
    let max_lag = at_least("--max-lag", *a.max_lag.get_or_insert(1), 1)?;
    let samples = at_least("--samples", *a.samples.get_or_insert(100_000), 1)?;
    let r = pair_correlations(&params, max_lag, samples, *a.seed.get_or_insert(0))?;
    let rows = r
        .cells
        .iter()
        .map(|c| {
            vec![
                c.lag.to_string(),
                c.i.to_string(),
                c.j.to_string(),
                c.frequency.to_string(),
                r.expected.to_string(),
                c.sigma.to_string(),
                c.pass.to_string(),
            ]
        })
        .collect();
    let pass = r.pass;
    Ok(Outcome::new(to_value(&r))
        .check("all pair frequencies within 3 sigma", pass)
        .table(&["lag", "i", "j", "frequency", "expected", "sigma", "pass"], rows))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SupportArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Λ as A..B (inclusive) or a coordinate list
    #[arg(long, allow_hyphen_values = true)]
    pub support: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub enum SupportCheck {
    Charsum,
    Markov,
    Ineq3,
}

pub fn support_check(a: &mut SupportArgs, which: SupportCheck) -> Run {
    let params = parse::skew(*a.k.get_or_insert(2), a.alpha)?;
    let support = parse::support("--support", a.support.get_or_insert_with(|| "0..29".into()))?;
    let samples = at_least("--samples", *a.samples.get_or_insert(100_000), 1)?;
    let seed = *a.seed.get_or_insert(0);
    let x = sample_base_word(&params, &support, seed)?;
    let (report, pass, name, header, row) = match which {
        SupportCheck::Charsum => {
            let r = mean_square_character_sum(&params, &x, samples, seed)?;
            let row = vec![r.support_len.to_string(), r.samples.to_string(), r.mean.to_string(), r.sigma.to_string()];
            (to_value(&r), r.pass, "mean of |S|^2 within 3 sigma of |Λ|", ["support_len", "samples", "mean", "sigma"], row)
        }
        SupportCheck::Markov | SupportCheck::Ineq3 => {
            let (r, name) = if matches!(which, SupportCheck::Markov) {
                (markov_tail_check(&params, &x, samples, seed)?, "tail frequency within Markov bound + 3 sigma")
            } else {
                (ineq3_check(&params, &x, samples, seed)?, "k|Λ|ν(ball) within threshold + 3 sigma")
            };
            let row = vec![r.support_len.to_string(), r.samples.to_string(), r.statistic.to_string(), r.bound.to_string()];
            (to_value(&r), r.pass, name, ["support_len", "samples", "statistic", "bound"], row)
        }
    };
    Ok(Outcome::new(json!({ "base_word": x.to_string(), "report": report }))
        .check(name, pass)
        .table(&header, vec![row]))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct Thm21Args {
    #[arg(long)]
    pub oracle: Option<String>,
    /// Number of funny words
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// |Λⁱ| for the search: one size for all i, or n comma-separated sizes
    #[arg(long)]
    pub sizes: Option<String>,
    /// Ball-measure evaluations per support size
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub confidence: Option<f64>,
    /// Evaluate these words instead of searching, separated by `|`
    #[arg(long)]
    pub words: Option<String>,
}

pub fn check_thm21(a: &mut Thm21Args) -> Run {
    let eps = open_unit("--eps", required(a.eps, "--eps")?)?;
    let delta = open_unit("--delta", required(a.delta, "--delta")?)?;
    let confidence = open_unit("--confidence", *a.confidence.get_or_insert(0.95))?;
    let oracle = parse::oracle(required_str(&a.oracle, "--oracle")?)?;
    let o = oracle.as_dyn();
    let report = if let Some(text) = &a.words {
        let words = text
            .split('|')
            .map(|w| FunnyWord::parse(w.trim(), o.alphabet()))
            .collect::<Result<Vec<_>, _>>()?;
        if a.n.is_some_and(|n| n != words.len()) {
            return usage(format!("--n = {} but {} words given", a.n.unwrap_or(0), words.len()));
        }
        a.n = Some(words.len());
        theorem21_statistic(&Theorem21Instance::new(words, eps, delta)?, o, confidence)?
    } else {
        let n = at_least("--n", *a.n.get_or_insert(2), 1)?;
        let sizes = match (&a.sizes, o.window()) {
            (Some(s), _) => parse::list::<usize>("--sizes", s)?,
            (None, Some(w)) => vec![w.len()],
            (None, None) => return usage("--sizes is required for oracles without a window"),
        };
        a.sizes = Some(sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
        let params = SearchParams {
            n,
            eps,
            delta,
            support_sizes: sizes,
            budget: at_least("--budget", *a.budget.get_or_insert(1000), 1)?,
            seed: *a.seed.get_or_insert(0),
            confidence,
        };
        non_atn_evidence(o, &params)?
    };
    let rows = report
        .terms
        .iter()
        .enumerate()
        .map(|(i, t)| {
            vec![
                (i + 1).to_string(),
                t.support_len.to_string(),
                t.estimate.to_string(),
                t.half_width.to_string(),
                t.word.clone(),
            ]
        })
        .collect();
    let met = report.verdict == Verdict::ConditionMet;
    Ok(Outcome::new(to_value(&report))
        .check("condition met", met)
        .table(&["i", "support_len", "estimate", "half_width", "word"], rows))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SampleArgs {
    /// bernoulli:.. (with --window and --samples) or furstenberg:..
    #[arg(long)]
    pub oracle: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Destination of the sampled measure
    #[arg(long)]
    pub measure_out: Option<PathBuf>,
}

pub fn sample(a: &mut SampleArgs) -> Run {
    let path = a.measure_out.clone().ok_or_else(|| UsageError("--measure-out is required".into()))?;
    let spec = required_str(&a.oracle, "--oracle")?;
    let em = match parse::oracle(spec)? {
        Oracle::Bernoulli(b) => {
            let window = parse::interval("--window", required_str(&a.window, "--window")?)?;
            let samples = at_least("--samples", required(a.samples, "--samples")?, 1)?;
            let seed = *a.seed.get_or_insert(0);
            let mut rng = stream_rng(seed, "sample", 0);
            let words = (0..samples)
                .map(|_| b.sample_word(window, &mut rng))
                .collect::<Result<Vec<_>, _>>()?;
            EmpiricalMeasure::from_words(b.alphabet(), &words, Some(seed))?
        }
        Oracle::Empirical(em) => {
            if a.window.is_some() || a.samples.is_some() || a.seed.is_some() {
                return usage("window, samples and seed belong in the furstenberg oracle spec");
            }
            if spec.starts_with("empirical:") {
                return usage("sample needs a bernoulli or furstenberg oracle");
            }
            em
        }
    };
    let file = File::create(&path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    write_empirical(&em, BufWriter::new(file))?;
    Ok(Outcome::new(json!({
        "path": path,
        "window": em.window_interval().to_string(),
        "samples": em.samples(),
        "distinct_words": em.distinct_words(),
        "seed": em.seed(),
    })))
}
