//! Helpers around arbitrary-precision rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact conversion of a finite binary64 value.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::Domain(format!("non-finite value {x}")))
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"p/q"`, an integer, or a decimal literal (optionally with exponent).
/// Decimals are converted from their printed digits, so `"0.1"` is exactly 1/10.
pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let joined = format!("{whole}{frac}");
    let mut value = Rational::from_integer(joined.parse::<BigInt>().map_err(|_| bad())?);
    let scale = exponent - frac.len() as i64;
    let ten = BigInt::from(10);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

/// `p/q` form, or just `p` for integers.
pub fn format(x: &Rational) -> String {
    x.to_string()
}

pub fn floor_u64(x: &Rational) -> Option<u64> {
    x.floor().to_integer().to_u64()
}

pub fn ceil_u64(x: &Rational) -> Option<u64> {
    x.ceil().to_integer().to_u64()
}

/// Largest `k >= 0` with `base^k <= x`, for `base > 1` and `x >= 1`.
///
/// The exponent is estimated in floating point and then corrected with exact
/// comparisons, so the result is exact. Fails when `k` would exceed `max_k`.
pub fn floor_log(base: &Rational, x: &Rational, max_k: u64) -> Result<u64> {
    debug_assert!(base > &Rational::one());
    if x < &Rational::one() {
        return domain_err("floor_log needs x >= 1");
    }
    if x.is_one() {
        return Ok(0);
    }
    let estimate = ln(x) / to_f64(&(base - Rational::one())).ln_1p();
    if !estimate.is_finite() || estimate > max_k as f64 + 1.0 {
        return Err(Error::Resource(format!("exponent estimate {estimate:.3e} exceeds the cap {max_k}")));
    }
    let mut k = estimate.floor().max(0.0) as u64;
    let mut power = pow(base, k);
    while &power > x {
        if k == 0 {
            break;
        }
        power /= base;
        k -= 1;
    }
    loop {
        let next = &power * base;
        if &next <= x {
            power = next;
            k += 1;
        } else {
            break;
        }
    }
    if k > max_k {
        return Err(Error::Resource(format!("exponent {k} exceeds the cap {max_k}")));
    }
    Ok(k)
}

fn domain_err<T>(msg: &str) -> Result<T> {
    Err(Error::Domain(msg.to_string()))
}

pub fn pow(base: &Rational, k: u64) -> Rational {
    let numer = num_traits::pow(base.numer().clone(), k as usize);
    let denom = num_traits::pow(base.denom().clone(), k as usize);
    Rational::new_raw(numer, denom)
}

/// Natural log of a positive rational, accurate even when numerator and
/// denominator overflow binary64.
pub fn ln(x: &Rational) -> f64 {
    if !x.is_positive() {
        return f64::NAN;
    }
    ln_bigint(x.numer()) - ln_bigint(x.denom())
}

fn ln_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(xs: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    xs.into_iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// Scales `x` to an integer count of `1/denominator` units. `x * denominator`
/// must be integral.
pub fn to_units(x: &Rational, denominator: &BigInt) -> BigInt {
    let scaled = x * Rational::from_integer(denominator.clone());
    debug_assert!(scaled.is_integer());
    scaled.to_integer()
}

pub fn is_nonnegative(x: &Rational) -> bool {
    !x.is_negative()
}
