//! Exact rational helpers shared by every layer of the crate.
//!
//! All model quantities (holding times, markings, probabilities, germ
//! components) are arbitrary-precision fractions. Text encoding is `p/q` or a
//! bare integer, both in parsing and rendering.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational `{text}`: {reason}")]
pub struct ParseRationalError {
    pub text: String,
    pub reason: &'static str,
}

fn parse_int(text: &str) -> Option<BigInt> {
    let digits = text.strip_prefix(['-', '+']).unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

/// Parses `p/q`, `p` or `-p/q`. Whitespace around the number is ignored,
/// whitespace inside is not.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = |reason| ParseRationalError {
        text: text.to_owned(),
        reason,
    };
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(err("empty"));
    }
    match trimmed.split_once('/') {
        None => parse_int(trimmed)
            .map(Rational::from_integer)
            .ok_or_else(|| err("not an integer")),
        Some((num, den)) => {
            let num = parse_int(num).ok_or_else(|| err("bad numerator"))?;
            if den.starts_with(['-', '+']) {
                return Err(err("signed denominator"));
            }
            let den = parse_int(den).ok_or_else(|| err("bad denominator"))?;
            if den.is_zero() {
                return Err(err("zero denominator"));
            }
            Ok(Rational::new(num, den))
        }
    }
}

/// Renders as `p/q`, or bare `p` when the denominator is one.
pub fn format_rational(value: &Rational) -> String {
    DisplayRational(value).to_string()
}

pub struct DisplayRational<'a>(pub &'a Rational);

impl fmt::Display for DisplayRational<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Greatest positive rational `g` such that every input is an integer
/// multiple of `g`. Inputs must be positive.
pub fn rational_gcd<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Option<Rational> {
    // gcd(a/b, c/d) = gcd(a, c) / lcm(b, d) for reduced fractions.
    values.into_iter().fold(None, |acc: Option<Rational>, v| {
        Some(match acc {
            None => v.abs(),
            Some(g) => Rational::new(
                g.numer().gcd(v.numer()),
                g.denom().lcm(v.denom()),
            ),
        })
    })
}

/// `Some(k)` when `value = k * step` for a non-negative integer `k`.
pub fn steps_of(value: &Rational, step: &Rational) -> Option<u64> {
    let q = value / step;
    if !q.is_integer() || q.is_negative() {
        return None;
    }
    u64::try_from(q.to_integer()).ok()
}

pub fn ceil_to_int(value: &Rational) -> BigInt {
    value.ceil().to_integer()
}

/// Serde adapter: rationals as `"p/q"` strings or JSON integers.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        if value.is_integer() {
            if let Ok(n) = i64::try_from(value.to_integer()) {
                return s.serialize_i64(n);
            }
        }
        s.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        d.deserialize_any(RationalVisitor)
    }

    pub(crate) struct RationalVisitor;

    impl Visitor<'_> for RationalVisitor {
        type Value = Rational;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("an integer or a \"p/q\" string")
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
            Ok(int(v))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
            Ok(Rational::from_integer(BigInt::from(v)))
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
            parse_rational(v).map_err(E::custom)
        }
    }
}

pub mod serde_rational_opt {
    use super::*;
    use serde::Deserialize;

    pub fn serialize<S: Serializer>(value: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => serde_rational::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "serde_rational")] Rational);
        Option::<Wrap>::deserialize(d).map(|o| o.map(|w| w.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational(" -4 ").unwrap(), int(-4));
        assert_eq!(parse_rational("-3/4").unwrap(), ratio(-3, 4));
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("1/-2").is_err());
        assert!(parse_rational("1 / 2").is_err());
        assert!(parse_rational("0x10").is_err());
        assert!(parse_rational("1/2/3").is_err());
    }

    #[test]
    fn formats_canonically() {
        assert_eq!(format_rational(&ratio(6, 4)), "3/2");
        assert_eq!(format_rational(&int(-7)), "-7");
        assert_eq!(format_rational(&ratio(-1, 3)), "-1/3");
    }

    #[test]
    fn gcd_of_rationals() {
        assert_eq!(rational_gcd(&[int(2), int(3), int(1)]), Some(int(1)));
        assert_eq!(rational_gcd(&[ratio(3, 2), ratio(1, 2)]), Some(ratio(1, 2)));
        assert_eq!(rational_gcd(&[int(5)]), Some(int(5)));
        assert_eq!(rational_gcd(&[ratio(2, 3), ratio(1, 2)]), Some(ratio(1, 6)));
        assert_eq!(rational_gcd(std::iter::empty()), None);
    }

    #[test]
    fn step_counts() {
        assert_eq!(steps_of(&ratio(7, 4), &ratio(1, 4)), Some(7));
        assert_eq!(steps_of(&ratio(1, 3), &ratio(1, 2)), None);
    }
}
