//! Exact rational arithmetic helpers.
//!
//! All numeric values in the engine are arbitrary-precision rationals; no
//! floating point is used anywhere on the evaluation path. Decimal literals
//! in graph files and queries are converted exactly (`"0.5"` becomes 1/2).

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

pub type Rat = num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `[-]digits[.digits]` or `[-]digits/digits` into an exact rational.
pub fn parse_rat(text: &str) -> Option<Rat> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    if body.is_empty() {
        return None;
    }
    let value = if let Some((num, den)) = body.split_once('/') {
        if num.is_empty() || den.is_empty() {
            return None;
        }
        if !num.bytes().all(|b| b.is_ascii_digit()) || !den.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let den: BigInt = den.parse().ok()?;
        if den.is_zero() {
            return None;
        }
        Rat::new(num.parse().ok()?, den)
    } else {
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return None;
        }
        if body.contains('.') && (int_part.is_empty() || frac_part.is_empty()) {
            return None;
        }
        let scale = BigInt::from(10u8).pow(frac_part.len() as u32);
        let int: BigInt = if int_part.is_empty() {
            BigInt::zero()
        } else {
            int_part.parse().ok()?
        };
        let frac: BigInt = if frac_part.is_empty() {
            BigInt::zero()
        } else {
            frac_part.parse().ok()?
        };
        Rat::new(int * &scale + frac, scale)
    };
    Some(if neg { -value } else { value })
}

/// Renders a rational as a decimal literal when the denominator is of the
/// form 2^a·5^b, and as `num/den` otherwise.
pub fn render_rat(value: &Rat) -> String {
    let neg = value.is_negative();
    let abs = value.abs();
    let den = abs.denom().clone();
    if den.is_one() {
        return format!("{}{}", if neg { "-" } else { "" }, abs.numer());
    }
    let (mut rest, mut twos, mut fives) = (den, 0u32, 0u32);
    let two = BigInt::from(2u8);
    let five = BigInt::from(5u8);
    while (&rest % &two).is_zero() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() {
        return format!(
            "{}{}/{}",
            if neg { "-" } else { "" },
            abs.numer(),
            abs.denom()
        );
    }
    let k = twos.max(fives);
    let scaled = abs.numer() * two.pow(k - twos) * five.pow(k - fives);
    let digits = scaled.to_string();
    let k = k as usize;
    let (int_part, frac_part) = if digits.len() > k {
        (
            digits[..digits.len() - k].to_string(),
            digits[digits.len() - k..].to_string(),
        )
    } else {
        ("0".to_string(), format!("{:0>width$}", digits, width = k))
    };
    format!("{}{}.{}", if neg { "-" } else { "" }, int_part, frac_part)
}
