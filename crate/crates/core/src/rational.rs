//! Exact probabilities.
//!
//! Every probability in the crate is a [`Rational`] in reduced form with a
//! positive denominator. The canonical text form is always `"num/den"`,
//! including integers (`"0/1"`, `"1/1"`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

pub type Rational = BigRational;

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Canonical `"num/den"` text.
pub fn format(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// A parsed rational together with whether the input text was already canonical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub value: Rational,
    pub canonical: bool,
}

/// Parses `"n/d"` or a bare integer `"n"`.
pub fn parse(text: &str) -> Result<Parsed, Error> {
    let bad = || Error::Parse(format!("not a rational: {text:?}"));
    let trimmed = text.trim();
    let (num, den) = match trimmed.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (trimmed, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator: {text:?}")));
    }
    let value = Rational::new(num, den);
    let canonical = format(&value) == text;
    Ok(Parsed { value, canonical })
}

pub fn is_probability(r: &Rational) -> bool {
    !r.is_negative() && r <= &one()
}

pub fn min<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if a <= b {
        a
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_reduces() {
        let p = parse("2/4").unwrap();
        assert_eq!(p.value, ratio(1, 2));
        assert!(!p.canonical);
        assert_eq!(format(&p.value), "1/2");
    }

    #[test]
    fn integers_keep_denominator() {
        assert_eq!(format(&zero()), "0/1");
        assert_eq!(format(&one()), "1/1");
        let p = parse("1/1").unwrap();
        assert!(p.canonical);
        assert!(!parse("1").unwrap().canonical);
    }

    #[test]
    fn negative_denominator_normalized() {
        let p = parse("1/-3").unwrap();
        assert_eq!(format(&p.value), "-1/3");
        assert!(!p.canonical);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
        assert!(parse("").is_err());
    }
}
