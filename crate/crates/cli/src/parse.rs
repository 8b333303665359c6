//! Parsers for oracle specs, windows, supports and lists.

use std::fs::File;
use std::io::BufReader;

use atn_core::furstenberg::{sample_coded_measure, SkewParams};
use atn_core::measures::{read_empirical, BernoulliMeasure, EmpiricalMeasure, MeasureOracle, ProbabilityVector};
use atn_core::symbolic::{Interval, Support};

use crate::UsageError;

pub fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

pub fn list<T: std::str::FromStr>(what: &str, text: &str) -> Result<Vec<T>, UsageError> {
    text.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| UsageError(format!("{what}: bad entry `{}`", t.trim()))))
        .collect()
}

/// `a..b` (inclusive).
pub fn interval(what: &str, text: &str) -> Result<Interval, UsageError> {
    let Some((a, b)) = text.split_once("..") else {
        return usage(format!("{what}: expected `a..b`, got `{text}`"));
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<i64>()
            .map_err(|_| UsageError(format!("{what}: bad bound `{}`", s.trim())))
    };
    Interval::new(parse(a)?, parse(b)?).map_err(|e| UsageError(format!("{what}: {e}")))
}

/// `a..b` (inclusive) or a comma-separated coordinate list.
pub fn support(what: &str, text: &str) -> Result<Support, UsageError> {
    if text.contains("..") {
        return Ok(interval(what, text)?.to_support());
    }
    Support::new(list(what, text)?).map_err(|e| UsageError(format!("{what}: {e}")))
}

pub fn probability(what: &str, text: &str) -> Result<ProbabilityVector, UsageError> {
    ProbabilityVector::new(list(what, text)?).map_err(|e| UsageError(format!("{what}: {e}")))
}

pub fn skew(k: usize, alpha: Option<f64>) -> Result<SkewParams, UsageError> {
    if k == 0 {
        return usage("--k must be at least 1");
    }
    match alpha {
        None => SkewParams::golden(k),
        Some(a) => SkewParams::new(a, k),
    }
    .map_err(|e| UsageError(e.to_string()))
}

pub fn open_unit(what: &str, v: f64) -> Result<f64, UsageError> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        usage(format!("{what} = {v} must lie in (0, 1)"))
    }
}

pub fn at_least(what: &str, v: usize, min: usize) -> Result<usize, UsageError> {
    if v >= min {
        Ok(v)
    } else {
        usage(format!("{what} = {v} must be at least {min}"))
    }
}

pub enum Oracle {
    Bernoulli(BernoulliMeasure),
    Empirical(EmpiricalMeasure),
}

impl Oracle {
    pub fn as_dyn(&self) -> &dyn MeasureOracle {
        match self {
            Oracle::Bernoulli(b) => b,
            Oracle::Empirical(e) => e,
        }
    }
}

/// `bernoulli:P1,P2,..`, `empirical:PATH` or
/// `furstenberg:k=K,window=A..B,samples=N,seed=S[,alpha=X]`.
pub fn oracle(text: &str) -> Result<Oracle, UsageError> {
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| UsageError(format!("--oracle: expected `kind:spec`, got `{text}`")))?;
    match kind {
        "bernoulli" => Ok(Oracle::Bernoulli(BernoulliMeasure::new(probability("--oracle", rest)?))),
        "empirical" => {
            let file = File::open(rest).map_err(|e| UsageError(format!("{rest}: {e}")))?;
            read_empirical(BufReader::new(file))
                .map(Oracle::Empirical)
                .map_err(|e| UsageError(format!("{rest}: {e}")))
        }
        "furstenberg" => {
            let (mut k, mut window, mut samples, mut seed, mut alpha) = (2usize, None, 100_000usize, 0u64, None);
            for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
                let (key, value) = part
                    .split_once('=')
                    .ok_or_else(|| UsageError(format!("--oracle: expected key=value, got `{part}`")))?;
                let bad = || UsageError(format!("--oracle: bad value for {key}: `{value}`"));
                match key.trim() {
                    "k" => k = value.trim().parse().map_err(|_| bad())?,
                    "window" => window = Some(interval("--oracle window", value)?),
                    "samples" => samples = value.trim().parse().map_err(|_| bad())?,
                    "seed" => seed = value.trim().parse().map_err(|_| bad())?,
                    "alpha" => alpha = Some(value.trim().parse().map_err(|_| bad())?),
                    other => return usage(format!("--oracle: unknown furstenberg key `{other}`")),
                }
            }
            let window = window.ok_or_else(|| UsageError("--oracle: furstenberg needs window=A..B".into()))?;
            at_least("--oracle samples", samples, 1)?;
            let params = skew(k, alpha)?;
            sample_coded_measure(&params, window, samples, seed)
                .map(Oracle::Empirical)
                .map_err(|e| UsageError(e.to_string()))
        }
        other => usage(format!("--oracle: unknown kind `{other}` (bernoulli, empirical, furstenberg)")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_windows_and_supports() {
        assert_eq!(interval("w", "-2..3").unwrap(), Interval::new(-2, 3).unwrap());
        assert!(interval("w", "3..1").is_err());
        assert!(interval("w", "3").is_err());
        assert_eq!(support("s", "0,5,2").unwrap().indices(), &[0, 2, 5]);
        assert_eq!(support("s", "1..3").unwrap().indices(), &[1, 2, 3]);
        assert!(support("s", "1,x").is_err());
    }

    #[test]
    fn parses_oracles() {
        assert!(matches!(oracle("bernoulli:0.3,0.7").unwrap(), Oracle::Bernoulli(_)));
        assert!(oracle("bernoulli:1").is_err());
        assert!(oracle("poisson:1").is_err());
        assert!(oracle("furstenberg:k=2").is_err());
        let o = oracle("furstenberg:k=2,window=0..3,samples=100,seed=4").unwrap();
        assert_eq!(o.as_dyn().sample_count(), Some(100));
        assert!(oracle("furstenberg:k=2,window=0..3,samples=0").is_err());
    }
}
