//! Exact rational helpers shared by every module.
//!
//! Rationals travel through files as `"p/q"` strings (or `"p"` when the
//! denominator is 1), always in lowest terms with a positive denominator.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Q = BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseQError {
    #[error("malformed rational {0:?}")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn half(n2: i64) -> Q {
    qr(n2, 2)
}

pub fn parse_q(s: &str) -> Result<Q, ParseQError> {
    let t = s.trim();
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (t, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| ParseQError::Malformed(s.to_string()))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| ParseQError::Malformed(s.to_string()))?;
    if d.is_zero() {
        return Err(ParseQError::ZeroDenominator(s.to_string()));
    }
    Ok(Q::new(n, d))
}

/// Canonical `p/q` text; integers print without a denominator.
pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Returns the integer value when `x` has denominator 1.
pub fn as_i64(x: &Q) -> Option<i64> {
    if x.denom().is_one() {
        i64::try_from(x.numer()).ok()
    } else {
        None
    }
}

pub fn is_integer(x: &Q) -> bool {
    x.denom().is_one()
}

/// `iota`-style sign of a rational: +1 when positive, -1 otherwise.
pub fn pos_sign(x: &Q) -> i32 {
    if x.is_positive() {
        1
    } else {
        -1
    }
}

pub mod serde_q {
    //! Serde adapter storing a rational as a `"p/q"` string.
    use super::{fmt_q, parse_q, Q};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_text() {
        for s in ["0", "3", "-21/4", "1/4", "7/8"] {
            assert_eq!(fmt_q(&parse_q(s).unwrap()), s);
        }
        assert_eq!(fmt_q(&parse_q("6/-8").unwrap()), "-3/4");
        assert_eq!(fmt_q(&parse_q(" 4/2 ").unwrap()), "2");
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn integer_view() {
        assert_eq!(as_i64(&qr(6, 3)), Some(2));
        assert_eq!(as_i64(&qr(1, 2)), None);
        assert_eq!(pos_sign(&qi(0)), -1);
        assert_eq!(pos_sign(&qr(1, 8)), 1);
    }
}
