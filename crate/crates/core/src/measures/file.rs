//! Line-based persistence for [`EmpiricalMeasure`].
//!
//! ```text
//! # atn-lab empirical measure v1
//! window=0,9
//! alphabet=3
//! samples=2
//! seed=7
//! data
//! 1231231231
//! 3332221113
//! ```
//!
//! One record per sample, symbols 1-based. Alphabets of at most nine symbols
//! write one digit per symbol; larger alphabets separate symbols with commas.
//! `seed=none` marks a measure that was not produced from a seed.

use std::io::{BufRead, Write};

use super::EmpiricalMeasure;
use crate::error::{Error, Result};
use crate::symbolic::{Alphabet, Interval, Symbol};

const MAGIC: &str = "# atn-lab empirical measure v1";

pub fn write_empirical<W: Write>(em: &EmpiricalMeasure, mut out: W) -> Result<()> {
    let window = em.window_interval();
    let k = em.alphabet_size();
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "window={},{}", window.start, window.end)?;
    writeln!(out, "alphabet={k}")?;
    writeln!(out, "samples={}", em.samples())?;
    match em.seed() {
        Some(s) => writeln!(out, "seed={s}")?,
        None => writeln!(out, "seed=none")?,
    }
    writeln!(out, "data")?;
    let compact = k <= 9;
    let mut line = String::with_capacity(window.len() * 3);
    let mut result = Ok(());
    em.for_each_record(|w, count| {
        if result.is_err() {
            return;
        }
        line.clear();
        for (i, &s) in w.iter().enumerate() {
            if compact {
                line.push((b'1' + s) as char);
            } else {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&(s as usize + 1).to_string());
            }
        }
        for _ in 0..count {
            if let Err(e) = writeln!(out, "{line}") {
                result = Err(e);
                return;
            }
        }
    });
    result?;
    out.flush()?;
    Ok(())
}

pub fn read_empirical<R: BufRead>(input: R) -> Result<EmpiricalMeasure> {
    let mut lines = input.lines().enumerate();
    let mut next_line = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(Error::Parse(format!("line {}: {e}", i + 1))),
            None => Err(Error::Parse(format!("unexpected end of file, expected {what}"))),
        }
    };
    let (ln, magic) = next_line("header")?;
    if magic.trim() != MAGIC {
        return Err(Error::Parse(format!("line {ln}: not an empirical measure file")));
    }
    let mut window = None;
    let mut alphabet = None;
    let mut samples = None;
    let mut seed = None;
    loop {
        let (ln, line) = next_line("`data`")?;
        let line = line.trim();
        if line == "data" {
            break;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {ln}: expected key=value, got `{line}`")))?;
        let bad = |what: &str| Error::Parse(format!("line {ln}: bad {what} `{value}`"));
        match key.trim() {
            "window" => {
                let (a, b) = value.split_once(',').ok_or_else(|| bad("window"))?;
                let a: i64 = a.trim().parse().map_err(|_| bad("window"))?;
                let b: i64 = b.trim().parse().map_err(|_| bad("window"))?;
                window = Some(Interval::new(a, b).map_err(|_| bad("window"))?);
            }
            "alphabet" => {
                let k: usize = value.trim().parse().map_err(|_| bad("alphabet"))?;
                alphabet = Some(Alphabet::new(k).map_err(|_| bad("alphabet"))?);
            }
            "samples" => samples = Some(value.trim().parse::<usize>().map_err(|_| bad("samples"))?),
            "seed" => {
                seed = match value.trim() {
                    "none" => None,
                    v => Some(v.parse::<u64>().map_err(|_| bad("seed"))?),
                }
            }
            other => return Err(Error::Parse(format!("line {ln}: unknown key `{other}`"))),
        }
    }
    let window = window.ok_or_else(|| Error::Parse("missing window".into()))?;
    let alphabet = alphabet.ok_or_else(|| Error::Parse("missing alphabet".into()))?;
    let samples = samples.ok_or_else(|| Error::Parse("missing samples".into()))?;
    let width = window.len();
    let compact = alphabet.size() <= 9;
    let mut data: Vec<Symbol> = Vec::with_capacity(samples.saturating_mul(width));
    let mut records = 0usize;
    while let Some((i, line)) = lines.next() {
        let ln = i + 1;
        let line = line.map_err(|e| Error::Parse(format!("line {ln}: {e}")))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        let parse_symbol = |v: usize| -> Result<Symbol> {
            if v == 0 || v > alphabet.size() {
                Err(Error::Parse(format!("line {ln}: symbol {v} outside 1..={}", alphabet.size())))
            } else {
                Ok((v - 1) as Symbol)
            }
        };
        if compact {
            for c in line.chars() {
                let v = c
                    .to_digit(10)
                    .ok_or_else(|| Error::Parse(format!("line {ln}: bad symbol `{c}`")))?;
                data.push(parse_symbol(v as usize)?);
            }
        } else {
            for tok in line.split(',') {
                let v: usize = tok
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {ln}: bad symbol `{tok}`")))?;
                data.push(parse_symbol(v)?);
            }
        }
        if data.len() - before != width {
            return Err(Error::Parse(format!(
                "line {ln}: record has {} symbols, window needs {width}",
                data.len() - before
            )));
        }
        records += 1;
    }
    if records != samples {
        return Err(Error::Parse(format!(
            "header announces {samples} samples, file holds {records}"
        )));
    }
    EmpiricalMeasure::from_flat(alphabet, window, data, seed)
}

impl EmpiricalMeasure {
    fn alphabet_size(&self) -> usize {
        use super::MeasureOracle;
        self.alphabet().size()
    }
}
