//! Exact rational numbers for time stamps, interval endpoints and thresholds.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Rational number stored in lowest terms with a positive denominator.
pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("empty number literal")]
    Empty,
    #[error("malformed number literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("number literal `{0}` is out of range")]
    Overflow(String),
}

/// Parses `12`, `-3`, `0.125` or `3/4` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, RationalError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(RationalError::Empty);
    }
    let malformed = || RationalError::Malformed(text.to_string());
    let overflow = || RationalError::Overflow(text.to_string());

    if let Some((num, den)) = text.split_once('/') {
        let num: i64 = parse_int(num.trim()).ok_or_else(malformed)?;
        let den: i64 = parse_int(den.trim()).ok_or_else(malformed)?;
        if den == 0 {
            return Err(RationalError::ZeroDenominator(text.to_string()));
        }
        return Ok(Rational::new(num, den));
    }

    let (negative, body) = match text.as_bytes()[0] {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(malformed());
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(malformed());
    }
    let mut numer: i64 = 0;
    let mut denom: i64 = 1;
    for digit in int_part.bytes().chain(frac_part.bytes()) {
        numer = numer
            .checked_mul(10)
            .and_then(|n| n.checked_add(i64::from(digit - b'0')))
            .ok_or_else(overflow)?;
    }
    for _ in 0..frac_part.len() {
        denom = denom.checked_mul(10).ok_or_else(overflow)?;
    }
    if negative {
        numer = -numer;
    }
    Ok(Rational::new(numer, denom))
}

fn parse_int(text: &str) -> Option<i64> {
    let digits = text.strip_prefix('-').unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

/// Converts a finite `f64` to the rational denoted by its shortest decimal rendering,
/// so `0.1` becomes exactly `1/10`.
pub fn rational_from_f64(value: f64) -> Result<Rational, RationalError> {
    if !value.is_finite() {
        return Err(RationalError::Malformed(value.to_string()));
    }
    let rendered = format!("{value}");
    if rendered.contains('e') {
        return Err(RationalError::Overflow(rendered));
    }
    parse_rational(&rendered)
}

pub fn to_f64(value: Rational) -> f64 {
    value.numer().to_f64().unwrap_or(f64::NAN) / value.denom().to_f64().unwrap_or(f64::NAN)
}

/// Greatest common divisor of two non-negative rationals: gcd(a/b, c/d) = gcd(a, c) / lcm(b, d).
pub fn gcd(a: Rational, b: Rational) -> Rational {
    if a.is_zero() {
        return b.abs();
    }
    if b.is_zero() {
        return a.abs();
    }
    let numer = a.numer().gcd(b.numer());
    let denom = a.denom().lcm(b.denom());
    Rational::new(numer, denom)
}

/// True when `value` is an integer multiple of `step`.
pub fn is_multiple_of(value: Rational, step: Rational) -> bool {
    !step.is_zero() && (value / step).is_integer()
}

/// Display wrapper rendering integers as `30`, terminating decimals as `0.125`
/// and everything else as `1/3`.
pub struct Display(pub Rational);

impl fmt::Display for Display {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let value = self.0;
        if value.is_integer() {
            return write!(f, "{}", value.numer());
        }
        let mut denom = *value.denom();
        let (mut twos, mut fives) = (0u32, 0u32);
        while denom % 2 == 0 {
            denom /= 2;
            twos += 1;
        }
        while denom % 5 == 0 {
            denom /= 5;
            fives += 1;
        }
        let digits = twos.max(fives);
        if denom != 1 || digits > 18 {
            return write!(f, "{}/{}", value.numer(), value.denom());
        }
        let scale = 10i128.pow(digits);
        let scaled = i128::from(*value.numer()) * scale / i128::from(*value.denom());
        let sign = if scaled < 0 { "-" } else { "" };
        let scaled = scaled.abs();
        let int_part = scaled / scale;
        let frac_part = scaled % scale;
        let frac = format!("{:0width$}", frac_part, width = digits as usize);
        write!(f, "{sign}{int_part}.{}", frac.trim_end_matches('0'))
    }
}

pub fn format_rational(value: Rational) -> String {
    Display(value).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_literals() {
        assert_eq!(parse_rational("30").unwrap(), Rational::from_integer(30));
        assert_eq!(parse_rational("0.125").unwrap(), Rational::new(1, 8));
        assert_eq!(parse_rational("-2.5").unwrap(), Rational::new(-5, 2));
        assert_eq!(parse_rational("6/8").unwrap(), Rational::new(3, 4));
        assert_eq!(parse_rational(".5").unwrap(), Rational::new(1, 2));
        assert!(matches!(
            parse_rational("1/0"),
            Err(RationalError::ZeroDenominator(_))
        ));
        assert!(matches!(
            parse_rational("1.2.3"),
            Err(RationalError::Malformed(_))
        ));
        assert!(matches!(parse_rational(""), Err(RationalError::Empty)));
    }

    #[test]
    fn formats_canonically() {
        assert_eq!(format_rational(Rational::from_integer(30)), "30");
        assert_eq!(format_rational(Rational::new(1, 10)), "0.1");
        assert_eq!(format_rational(Rational::new(-3, 8)), "-0.375");
        assert_eq!(format_rational(Rational::new(1, 3)), "1/3");
        assert_eq!(format_rational(Rational::new(-1, 20)), "-0.05");
    }

    #[test]
    fn rational_gcd() {
        assert_eq!(
            gcd(Rational::from_integer(30), Rational::from_integer(20)),
            Rational::from_integer(10)
        );
        assert_eq!(
            gcd(Rational::new(1, 2), Rational::new(3, 4)),
            Rational::new(1, 4)
        );
        assert_eq!(
            gcd(Rational::zero(), Rational::new(3, 4)),
            Rational::new(3, 4)
        );
    }

    #[test]
    fn from_f64_uses_shortest_decimal() {
        assert_eq!(rational_from_f64(0.1).unwrap(), Rational::new(1, 10));
        assert_eq!(rational_from_f64(40.0).unwrap(), Rational::from_integer(40));
        assert!(rational_from_f64(f64::NAN).is_err());
    }

    proptest::proptest! {
        #[test]
        fn format_parse_round_trip(n in -100_000i64..100_000, d in 1i64..2_000) {
            let value = Rational::new(n, d);
            proptest::prop_assert_eq!(parse_rational(&format_rational(value)).unwrap(), value);
        }
    }
}
