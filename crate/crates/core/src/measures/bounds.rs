use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, ToPrimitive};

use super::check_eps;
use crate::error::{Error, Result};
use crate::symbolic::decimal_rational;

/// `⌊m·eps⌋`, computed exactly from the decimal value of `eps`.
pub fn binomial_floor(m: usize, eps: f64) -> usize {
    let eps = decimal_rational(eps).unwrap_or_else(|| BigRational::from_integer(BigInt::from(0)));
    let scaled = eps * BigRational::from_usize(m).expect("usize fits");
    scaled.floor().to_integer().to_usize().unwrap_or(0)
}

/// `ln C(m, j)`; exact integer arithmetic up to `m = 30`, log-gamma beyond.
pub fn ln_binomial(m: usize, j: usize) -> f64 {
    if j > m {
        return f64::NEG_INFINITY;
    }
    if m <= 30 {
        let j = j.min(m - j);
        let mut c: u128 = 1;
        for i in 0..j {
            c = c * (m - i) as u128 / (i + 1) as u128;
        }
        (c as f64).ln()
    } else {
        statrs::function::factorial::ln_binomial(m as u64, j as u64)
    }
}

/// `C(m, ⌊m·eps⌋) · r^(m - ⌊m·eps⌋)`, the union bound on a Hamming ball of
/// radius `eps` when every symbol has probability at most `r`.
pub fn ball_measure_binomial_bound(m: usize, eps: f64, r: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::OutOfRange("m must be at least 1".into()));
    }
    check_eps(eps)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::OutOfRange(format!("r must lie in (0,1), got {r}")));
    }
    let f = binomial_floor(m, eps);
    Ok((ln_binomial(m, f) + (m - f) as f64 * r.ln()).exp())
}

/// `r(1-eps)^eps / ((1-eps) eps^eps r^eps)`, the per-coordinate growth
/// factor of the Stirling estimate for the binomial bound.
pub fn stirling_ratio(eps: f64, r: f64) -> Result<f64> {
    check_eps(eps)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::OutOfRange(format!("r must lie in (0,1), got {r}")));
    }
    let ln = r.ln() + eps * (1.0 - eps).ln() - (1.0 - eps).ln() - eps * eps.ln() - eps * r.ln();
    Ok(ln.exp())
}
