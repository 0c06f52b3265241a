//! Serialization helpers: big integers and rationals as decimal strings,
//! reals as outward-rounded hex-float pairs with their precision.

use std::collections::HashMap;
use std::fmt::Display;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;

use serde::{Deserialize, Serialize, Serializer};

use crate::interval::Interval;

pub(crate) fn ser_display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub(crate) fn ser_display_vec<T: Display, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

/// A real number as an enclosure: `lo`/`hi` are hex floats
/// (`0x<mantissa>p<binary exponent>`), `approx` a decimal rendering and
/// `log2` the base-2 logarithm of the magnitude, which stays meaningful for
/// values far outside the `f64` range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealJson {
    pub lo: String,
    pub hi: String,
    pub approx: String,
    pub log2: f64,
    pub precision_bits: u64,
}

impl RealJson {
    pub fn from_interval(iv: &Interval, precision_bits: u64) -> Self {
        RealJson {
            lo: iv.lo_hex(),
            hi: iv.hi_hex(),
            approx: format!("{:.17e}", iv.mid_f64()),
            log2: iv.mid_log2(),
            precision_bits,
        }
    }
}

/// Decimal parsing that stays fast for numbers with millions of digits:
/// split the digit string in halves and combine with cached powers of ten.
pub trait FromDecimal: Sized {
    fn from_decimal(s: &str) -> Option<Self>;
}

const DIRECT_DIGITS: usize = 4096;

fn parse_digits(digits: &str, pow10: &mut HashMap<usize, BigUint>) -> BigUint {
    if digits.len() <= DIRECT_DIGITS {
        return digits.parse().expect("validated digits");
    }
    let k = digits.len() / 2;
    let (hi, lo) = digits.split_at(digits.len() - k);
    let hi = parse_digits(hi, pow10);
    let lo = parse_digits(lo, pow10);
    let p = pow10
        .entry(k)
        .or_insert_with(|| num_traits::pow(BigUint::from(10u32), k));
    hi * &*p + lo
}

impl FromDecimal for BigUint {
    fn from_decimal(s: &str) -> Option<Self> {
        let s = s.strip_prefix('+').unwrap_or(s);
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        Some(parse_digits(s, &mut HashMap::new()))
    }
}

impl FromDecimal for BigInt {
    fn from_decimal(s: &str) -> Option<Self> {
        match s.strip_prefix('-') {
            Some(rest) => BigUint::from_decimal(rest).map(|m| -BigInt::from(m)),
            None => BigUint::from_decimal(s).map(BigInt::from),
        }
    }
}

impl FromDecimal for BigRational {
    fn from_decimal(s: &str) -> Option<Self> {
        match s.split_once('/') {
            Some((n, d)) => {
                let n = BigInt::from_decimal(n.trim())?;
                let d = BigInt::from_decimal(d.trim())?;
                (!d.is_zero()).then(|| BigRational::new(n, d))
            }
            None => BigInt::from_decimal(s).map(BigRational::from_integer),
        }
    }
}

fn parse_dec<T: FromDecimal, E: serde::de::Error>(s: &str) -> Result<T, E> {
    T::from_decimal(s.trim()).ok_or_else(|| E::custom(format!("invalid decimal number {:?}", truncate(s))))
}

fn truncate(s: &str) -> &str {
    &s[..s.len().min(40)]
}

/// Decimal-string (de)serialization for integers and rationals.
pub mod dec {
    use std::fmt::Display;

    use serde::{Deserialize, Deserializer, Serializer};

    use super::FromDecimal;

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T: FromDecimal, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        super::parse_dec(&String::deserialize(d)?)
    }
}

/// [`dec`] for optional values; `None` is `null`.
pub mod dec_opt {
    use std::fmt::Display;

    use serde::{Deserialize, Deserializer, Serializer};

    use super::FromDecimal;

    pub fn serialize<T: Display, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.collect_str(x),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, T: FromDecimal, D: Deserializer<'de>>(d: D) -> Result<Option<T>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| super::parse_dec(&s))
            .transpose()
    }
}

/// [`dec`] for a pair, as a two-element array.
pub mod dec_pair {
    use std::fmt::Display;

    use serde::{Deserialize, Deserializer, Serializer};

    use super::FromDecimal;

    pub fn serialize<T: Display, S: Serializer>(v: &(T, T), s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq([v.0.to_string(), v.1.to_string()])
    }

    pub fn deserialize<'de, T: FromDecimal, D: Deserializer<'de>>(d: D) -> Result<(T, T), D::Error> {
        let [a, b] = <[String; 2]>::deserialize(d)?;
        Ok((super::parse_dec(&a)?, super::parse_dec(&b)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_decimals_round_trip() {
        let x: BigInt = -(BigInt::from(7) << 100_000u32) / BigInt::from(3);
        let s = x.to_string();
        assert_eq!(BigInt::from_decimal(&s), Some(x));
        assert_eq!(BigInt::from_decimal("0012"), Some(BigInt::from(12)));
        assert_eq!(BigRational::from_decimal("6/8"), Some(BigRational::new(3.into(), 4.into())));
        assert_eq!(BigInt::from_decimal("1e5"), None);
        assert_eq!(BigInt::from_decimal(""), None);
        assert_eq!(BigRational::from_decimal("1/0"), None);
    }
}
