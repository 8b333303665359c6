//! Alphabets, supports, funny words and the normalized Hamming metric.
//!
//! Symbols are stored 0-based (`0..k`). Everything that is printed or parsed
//! uses the 1-based convention `1..=k`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = u8;

/// Alphabet `{0, .., k-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Alphabet(u8);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::AlphabetTooSmall(size));
        }
        if size > u8::MAX as usize {
            return Err(Error::OutOfRange(format!("alphabet size {size} exceeds 255")));
        }
        Ok(Alphabet(size as u8))
    }

    pub fn size(self) -> usize {
        self.0 as usize
    }

    pub fn check(self, symbol: Symbol) -> Result<()> {
        if (symbol as usize) < self.size() {
            Ok(())
        } else {
            Err(Error::SymbolOutOfAlphabet {
                symbol: symbol as usize,
                size: self.size(),
            })
        }
    }

    /// Number of words of length `len`, or `None` on overflow.
    pub fn block_count(self, len: usize) -> Option<u128> {
        (self.size() as u128).checked_pow(len as u32)
    }
}

impl TryFrom<usize> for Alphabet {
    type Error = Error;
    fn try_from(k: usize) -> Result<Self> {
        Alphabet::new(k)
    }
}

impl From<Alphabet> for usize {
    fn from(a: Alphabet) -> usize {
        a.size()
    }
}

/// Closed integer interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: i64,
    pub end: i64,
}

impl Interval {
    pub fn new(start: i64, end: i64) -> Result<Self> {
        if end < start {
            return Err(Error::OutOfRange(format!("empty interval [{start}, {end}]")));
        }
        Ok(Interval { start, end })
    }

    /// Interval `[start, start + len - 1]`; `len` must be positive.
    pub fn with_len(start: i64, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptySupport);
        }
        Interval::new(start, start + len as i64 - 1)
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: i64) -> bool {
        self.start <= n && n <= self.end
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn translate(&self, t: i64) -> Interval {
        Interval {
            start: self.start + t,
            end: self.end + t,
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.start..=self.end
    }

    pub fn to_support(&self) -> Support {
        Support {
            indices: self.indices().collect(),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

/// Finite nonempty set of coordinates, stored strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct Support {
    indices: Vec<i64>,
}

impl Support {
    /// Sorts the input; rejects duplicates and the empty set.
    pub fn new(mut indices: Vec<i64>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptySupport);
        }
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateIndex(w[0]));
        }
        Ok(Support { indices })
    }

    pub fn interval(start: i64, end: i64) -> Result<Self> {
        Ok(Interval::new(start, end)?.to_support())
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn min(&self) -> i64 {
        self.indices[0]
    }

    pub fn max(&self) -> i64 {
        self.indices[self.indices.len() - 1]
    }

    /// Smallest interval containing the support.
    pub fn hull(&self) -> Interval {
        Interval {
            start: self.min(),
            end: self.max(),
        }
    }

    pub fn is_interval(&self) -> bool {
        self.hull().len() == self.len()
    }

    pub fn is_subset_of(&self, other: &Support) -> bool {
        self.indices
            .iter()
            .all(|i| other.indices.binary_search(i).is_ok())
    }

    /// Position of each index of `self` inside `other`, if `self ⊆ other`.
    pub fn positions_in(&self, other: &Support) -> Result<Vec<usize>> {
        self.indices
            .iter()
            .map(|i| {
                other
                    .indices
                    .binary_search(i)
                    .map_err(|_| Error::SupportOutOfRange)
            })
            .collect()
    }

    /// Union of two supports.
    pub fn union(&self, other: &Support) -> Support {
        let mut all = self.indices.clone();
        all.extend_from_slice(&other.indices);
        all.sort_unstable();
        all.dedup();
        Support { indices: all }
    }
}

impl TryFrom<Vec<i64>> for Support {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        Support::new(v)
    }
}

impl From<Support> for Vec<i64> {
    fn from(s: Support) -> Vec<i64> {
        s.indices
    }
}

/// Translates every index by `t`.
pub fn shift_support(support: &Support, t: i64) -> Support {
    Support {
        indices: support.indices.iter().map(|i| i + t).collect(),
    }
}

/// A symbol assignment on a finite support.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunnyWord {
    alphabet: Alphabet,
    support: Support,
    symbols: Vec<Symbol>,
}

impl FunnyWord {
    pub fn new(alphabet: Alphabet, support: Support, symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.len() != support.len() {
            return Err(Error::LengthMismatch {
                symbols: symbols.len(),
                support: support.len(),
            });
        }
        for &s in &symbols {
            alphabet.check(s)?;
        }
        Ok(FunnyWord {
            alphabet,
            support,
            symbols,
        })
    }

    /// Builds a word from 1-based symbols.
    pub fn from_one_based(alphabet: Alphabet, support: Support, symbols: &[usize]) -> Result<Self> {
        let zero_based = symbols
            .iter()
            .map(|&s| {
                if s == 0 || s > alphabet.size() {
                    Err(Error::SymbolOutOfAlphabet {
                        symbol: s,
                        size: alphabet.size(),
                    })
                } else {
                    Ok((s - 1) as Symbol)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        FunnyWord::new(alphabet, support, zero_based)
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn shifted(&self, t: i64) -> FunnyWord {
        FunnyWord {
            alphabet: self.alphabet,
            support: shift_support(&self.support, t),
            symbols: self.symbols.clone(),
        }
    }

    /// Same support, new symbols.
    pub fn with_symbols(&self, symbols: Vec<Symbol>) -> Result<FunnyWord> {
        FunnyWord::new(self.alphabet, self.support.clone(), symbols)
    }

    /// Interprets the word as a contiguous [`Word`] if its support is an interval.
    pub fn as_word(&self) -> Option<Word> {
        self.support.is_interval().then(|| Word {
            alphabet: self.alphabet,
            start: self.support.min(),
            symbols: self.symbols.clone(),
        })
    }
}

impl fmt::Display for FunnyWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.support.indices.iter().map(|i| i.to_string()).collect();
        let sym: Vec<String> = self.symbols.iter().map(|s| (s + 1).to_string()).collect();
        write!(f, "Λ=[{}]; W=[{}]", idx.join(","), sym.join(","))
    }
}

impl FunnyWord {
    /// Parses `Λ=[n1,n2,...]; W=[s1,s2,...]` (1-based symbols). `L=` is accepted for `Λ=`.
    pub fn parse(text: &str, alphabet: Alphabet) -> Result<FunnyWord> {
        let (lhs, rhs) = text
            .split_once(';')
            .ok_or_else(|| Error::Parse(format!("expected `Λ=[..]; W=[..]`, got `{text}`")))?;
        let lhs = lhs.trim();
        let lhs = lhs
            .strip_prefix("Λ=")
            .or_else(|| lhs.strip_prefix("L="))
            .ok_or_else(|| Error::Parse("missing `Λ=`".into()))?;
        let rhs = rhs
            .trim()
            .strip_prefix("W=")
            .ok_or_else(|| Error::Parse("missing `W=`".into()))?;
        let indices: Vec<i64> = parse_list(lhs)?;
        let symbols: Vec<usize> = parse_list(rhs)?;
        // Λ is given in the same order as W; sort the pairs together.
        if indices.len() != symbols.len() {
            return Err(Error::LengthMismatch {
                symbols: symbols.len(),
                support: indices.len(),
            });
        }
        let mut pairs: Vec<(i64, usize)> = indices.into_iter().zip(symbols).collect();
        pairs.sort_unstable_by_key(|p| p.0);
        let support = Support::new(pairs.iter().map(|p| p.0).collect())?;
        let symbols: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        FunnyWord::from_one_based(alphabet, support, &symbols)
    }
}

fn parse_list<T: FromStr>(text: &str) -> Result<Vec<T>> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| Error::Parse(format!("expected bracketed list, got `{text}`")))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<T>()
                .map_err(|_| Error::Parse(format!("bad list element `{}`", tok.trim())))
        })
        .collect()
}

/// A contiguous word `[y_0, .., y_m]_n` occupying coordinates `n..=n+m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    alphabet: Alphabet,
    start: i64,
    symbols: Vec<Symbol>,
}

impl Word {
    pub fn new(alphabet: Alphabet, start: i64, symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptySupport);
        }
        for &s in &symbols {
            alphabet.check(s)?;
        }
        Ok(Word {
            alphabet,
            start,
            symbols,
        })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn interval(&self) -> Interval {
        Interval {
            start: self.start,
            end: self.start + self.symbols.len() as i64 - 1,
        }
    }

    pub fn at(&self, n: i64) -> Option<Symbol> {
        let off = n - self.start;
        if off < 0 {
            return None;
        }
        self.symbols.get(off as usize).copied()
    }

    pub fn to_funny(&self) -> FunnyWord {
        FunnyWord {
            alphabet: self.alphabet,
            support: self.interval().to_support(),
            symbols: self.symbols.clone(),
        }
    }
}

/// `x|_Λ`: the symbols of `x` at the coordinates of `support`.
pub fn restrict(x: &Word, support: &Support) -> Result<FunnyWord> {
    let domain = x.interval();
    let symbols = support
        .indices()
        .iter()
        .map(|&n| {
            if domain.contains(n) {
                Ok(x.symbols[(n - x.start) as usize])
            } else {
                Err(Error::SupportOutOfRange)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FunnyWord {
        alphabet: x.alphabet,
        support: support.clone(),
        symbols,
    })
}

/// Number of positions where two equally long symbol slices differ.
#[inline]
pub fn mismatch_count(a: &[Symbol], b: &[Symbol]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// `d_Λ(W, W')` as an exact fraction `mismatches / |Λ|`.
pub fn hamming_distance(w: &FunnyWord, other: &FunnyWord) -> Result<Ratio<usize>> {
    if w.support != other.support {
        return Err(Error::SupportMismatch);
    }
    if w.alphabet != other.alphabet {
        return Err(Error::AlphabetMismatch {
            expected: w.alphabet.size(),
            got: other.alphabet.size(),
        });
    }
    Ok(Ratio::new(
        mismatch_count(&w.symbols, &other.symbols),
        w.len(),
    ))
}

/// The exact rational value of the shortest decimal that round-trips to `eps`.
///
/// `0.1` maps to `1/10` rather than to the binary value stored in the float,
/// so radii typed as decimals behave as written at integer boundaries.
pub fn decimal_rational(eps: f64) -> Option<BigRational> {
    if !eps.is_finite() {
        return None;
    }
    let text = format!("{eps}");
    let (sign, digits) = match text.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, text.as_str()),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    let numer: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    Some(BigRational::new(numer * sign, denom))
}

/// Exact test of `ratio < eps`, with `eps` read as its decimal value.
pub fn ratio_below(ratio: Ratio<usize>, eps: f64) -> bool {
    let Some(eps) = decimal_rational(eps) else {
        return false;
    };
    let lhs = BigRational::new(BigInt::from(*ratio.numer()), BigInt::from(*ratio.denom()));
    lhs < eps
}

/// Largest mismatch count `K` with `K / len < eps`, i.e. `K < eps * len` exactly
/// (see [`decimal_rational`]).
///
/// Returns `None` when no count qualifies (`eps <= 0`).
pub fn max_mismatches(len: usize, eps: f64) -> Option<usize> {
    let eps = decimal_rational(eps)?;
    if !eps.is_positive() {
        return None;
    }
    let scaled = eps * BigRational::from_usize(len)?;
    let k = scaled.ceil().to_integer() - BigInt::from(1);
    let k = k.to_usize()?;
    Some(k.min(len))
}

/// Mixed-radix index of a block (first symbol most significant).
pub fn block_index(symbols: &[Symbol], k: usize) -> usize {
    symbols
        .iter()
        .fold(0usize, |acc, &s| acc * k + s as usize)
}

/// Inverse of [`block_index`] for a block of length `len`.
pub fn decode_block(mut index: usize, k: usize, len: usize, out: &mut [Symbol]) {
    debug_assert_eq!(out.len(), len);
    for slot in out.iter_mut().rev() {
        *slot = (index % k) as Symbol;
        index /= k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(k: usize) -> Alphabet {
        Alphabet::new(k).unwrap()
    }

    #[test]
    fn alphabet_rejects_singleton() {
        assert_eq!(Alphabet::new(1), Err(Error::AlphabetTooSmall(1)));
    }

    #[test]
    fn support_sorts_and_rejects_duplicates() {
        let s = Support::new(vec![3, -1, 2]).unwrap();
        assert_eq!(s.indices(), &[-1, 2, 3]);
        assert_eq!(Support::new(vec![1, 1]), Err(Error::DuplicateIndex(1)));
        assert_eq!(Support::new(vec![]), Err(Error::EmptySupport));
    }

    #[test]
    fn hamming_examples() {
        let sup = Support::new(vec![-1, 0, 1]).unwrap();
        let w = FunnyWord::new(a(2), sup.clone(), vec![0, 1, 0]).unwrap();
        let v = FunnyWord::new(a(2), sup, vec![0, 1, 1]).unwrap();
        assert_eq!(hamming_distance(&w, &w).unwrap(), Ratio::new(0, 1));
        assert_eq!(hamming_distance(&w, &v).unwrap(), Ratio::new(1, 3));

        let sup5 = Support::interval(0, 4).unwrap();
        let x = FunnyWord::new(a(3), sup5.clone(), vec![0; 5]).unwrap();
        let y = FunnyWord::new(a(3), sup5, vec![1, 2, 1, 2, 1]).unwrap();
        assert_eq!(hamming_distance(&x, &y).unwrap(), Ratio::new(1, 1));
    }

    #[test]
    fn hamming_support_mismatch() {
        let w = FunnyWord::new(a(2), Support::interval(0, 2).unwrap(), vec![0; 3]).unwrap();
        let v = FunnyWord::new(a(2), Support::interval(1, 3).unwrap(), vec![0; 3]).unwrap();
        let err = hamming_distance(&w, &v).unwrap_err();
        assert_eq!(err.to_string(), "support mismatch");
    }

    #[test]
    fn restrict_examples() {
        let x = Word::new(a(3), 0, vec![0, 1, 2]).unwrap();
        let r = restrict(&x, &Support::new(vec![0, 2]).unwrap()).unwrap();
        assert_eq!(r.symbols(), &[0, 2]);
        let full = restrict(&x, &x.interval().to_support()).unwrap();
        assert_eq!(full, x.to_funny());
        let err = restrict(&x, &Support::new(vec![5]).unwrap()).unwrap_err();
        assert_eq!(err.to_string(), "support out of range");
    }

    #[test]
    fn shift_support_examples() {
        let s = Support::interval(0, 2).unwrap();
        assert_eq!(shift_support(&s, 3).indices(), &[3, 4, 5]);
        assert_eq!(shift_support(&s, 0), s);
        let s = Support::new(vec![-1, 4]).unwrap();
        assert_eq!(shift_support(&s, -4).indices(), &[-5, 0]);
    }

    #[test]
    fn text_roundtrip() {
        let w = FunnyWord::new(a(3), Support::new(vec![-2, 0, 7]).unwrap(), vec![0, 2, 1]).unwrap();
        let text = w.to_string();
        assert_eq!(text, "Λ=[-2,0,7]; W=[1,3,2]");
        assert_eq!(FunnyWord::parse(&text, a(3)).unwrap(), w);
        assert_eq!(FunnyWord::parse("L=[7,-2,0]; W=[2,1,3]", a(3)).unwrap(), w);
        assert!(FunnyWord::parse("Λ=[0]; W=[4]", a(3)).is_err());
    }

    #[test]
    fn max_mismatches_boundaries() {
        // 0.25 * 12 = 3 exactly: strict inequality excludes 3.
        assert_eq!(max_mismatches(12, 0.25), Some(2));
        assert_eq!(max_mismatches(10, 0.25), Some(2));
        assert_eq!(max_mismatches(4, 0.3), Some(1));
        assert_eq!(max_mismatches(60, 0.1), Some(5));
        assert_eq!(max_mismatches(3, 0.1), Some(0));
        assert_eq!(max_mismatches(5, 0.0), None);
        assert_eq!(max_mismatches(3, 1.5), Some(3));
        assert_eq!(max_mismatches(30, 1.0 / 12.0), Some(2));
        assert_eq!(max_mismatches(12, 1.0 / 12.0), Some(0));
    }

    #[test]
    fn decimal_rational_values() {
        let r = decimal_rational(0.1).unwrap();
        assert_eq!(r, BigRational::new(BigInt::from(1), BigInt::from(10)));
        assert_eq!(
            decimal_rational(-2.5).unwrap(),
            BigRational::new(BigInt::from(-5), BigInt::from(2))
        );
        assert_eq!(decimal_rational(3.0).unwrap(), BigRational::from_integer(BigInt::from(3)));
        assert!(decimal_rational(f64::NAN).is_none());
    }

    #[test]
    fn ratio_below_is_exact() {
        assert!(!ratio_below(Ratio::new(1, 4), 0.25));
        assert!(ratio_below(Ratio::new(1, 5), 0.25));
        // 0.1 is read as 1/10, not as the slightly larger binary value.
        assert!(!ratio_below(Ratio::new(1, 10), 0.1));
        assert!(ratio_below(Ratio::new(1, 3), 0.3333333333333334));
        assert!(!ratio_below(Ratio::new(1, 3), 1.0 / 3.0));
    }

    #[test]
    fn block_index_roundtrip() {
        let mut out = [0u8; 4];
        for i in 0..81 {
            decode_block(i, 3, 4, &mut out);
            assert_eq!(block_index(&out, 3), i);
        }
    }

    fn triple() -> impl Strategy<Value = (usize, Vec<u8>, Vec<u8>, Vec<u8>)> {
        (2usize..=5, 1usize..=20).prop_flat_map(|(k, n)| {
            let sym = proptest::collection::vec(0u8..k as u8, n);
            (Just(k), sym.clone(), sym.clone(), sym)
        })
    }

    proptest! {
        #[test]
        fn hamming_is_a_metric((k, x, y, z) in triple()) {
            let sup = Support::interval(0, x.len() as i64 - 1).unwrap();
            let w = |s: Vec<u8>| FunnyWord::new(a(k), sup.clone(), s).unwrap();
            let (x, y, z) = (w(x), w(y), w(z));
            let dxy = hamming_distance(&x, &y).unwrap();
            let dyx = hamming_distance(&y, &x).unwrap();
            let dxz = hamming_distance(&x, &z).unwrap();
            let dyz = hamming_distance(&y, &z).unwrap();
            prop_assert_eq!(dxy, dyx);
            prop_assert_eq!(dxy == Ratio::new(0, 1), x == y);
            prop_assert!(dxz <= dxy + dyz);
        }

        #[test]
        fn hamming_translation_invariant((k, x, y, _z) in triple(), t in -50i64..50) {
            let sup = Support::new((0..x.len() as i64).map(|i| 3 * i - 7).collect()).unwrap();
            let wx = FunnyWord::new(a(k), sup.clone(), x).unwrap();
            let wy = FunnyWord::new(a(k), sup, y).unwrap();
            prop_assert_eq!(
                hamming_distance(&wx, &wy).unwrap(),
                hamming_distance(&wx.shifted(t), &wy.shifted(t)).unwrap()
            );
        }

        #[test]
        fn restrict_composes(
            syms in proptest::collection::vec(0u8..3, 12),
            inner in proptest::collection::btree_set(2i64..8, 1..6),
        ) {
            let x = Word::new(a(3), -2, syms).unwrap();
            let mid = Support::interval(1, 8).unwrap();
            let lam = Support::new(inner.into_iter().collect()).unwrap();
            let outer = restrict(&x, &mid).unwrap().as_word().unwrap();
            prop_assert_eq!(restrict(&outer, &lam).unwrap(), restrict(&x, &lam).unwrap());
        }
    }
}
