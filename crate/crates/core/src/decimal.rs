//! Exact decimal values compared in predicates.

use std::fmt;
use std::str::FromStr;

use bigdecimal::BigDecimal;

/// An arbitrary-precision decimal literal.
///
/// Equality and ordering are by numeric value (`2.0 == 2`), while the textual
/// scale of the literal is kept for rendering (`2.0` prints as `2.0`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Decimal(BigDecimal);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDecimalError;

impl fmt::Display for ParseDecimalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("not a decimal literal")
    }
}

impl std::error::Error for ParseDecimalError {}

impl Decimal {
    pub fn from_i64(v: i64) -> Self {
        Decimal(BigDecimal::from(v))
    }

    /// Arithmetic mean, used to pick sample points between bounds.
    pub fn midpoint(&self, other: &Decimal) -> Decimal {
        Decimal((&self.0 + &other.0) / BigDecimal::from(2))
    }
}

/// Accepts `-?digits(.digits)?` only: no exponents, no leading `+`.
fn is_literal(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    digits(int) && frac.is_none_or(digits)
}

impl FromStr for Decimal {
    type Err = ParseDecimalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if !is_literal(s) {
            return Err(ParseDecimalError);
        }
        BigDecimal::from_str(s)
            .map(Decimal)
            .map_err(|_| ParseDecimalError)
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.to_plain_string())
    }
}

impl From<i64> for Decimal {
    fn from(v: i64) -> Self {
        Decimal::from_i64(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_scale_but_compares_by_value() {
        let a: Decimal = "2.0".parse().unwrap();
        let b: Decimal = "2".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "2.0");
        assert_eq!(b.to_string(), "2");
    }

    #[test]
    fn rejects_non_literals() {
        for s in ["", "-", "1e5", "+3", "1.", ".5", "abc", "1.2.3", "NaN"] {
            assert!(s.parse::<Decimal>().is_err(), "{s}");
        }
        assert_eq!("-0.25".parse::<Decimal>().unwrap().to_string(), "-0.25");
    }

    #[test]
    fn ordering_is_exact() {
        let a: Decimal = "0.1000000000000000000000000000001".parse().unwrap();
        let b: Decimal = "0.1".parse().unwrap();
        assert!(a > b);
        assert_eq!(Decimal::from(2).midpoint(&Decimal::from(3)).to_string(), "2.5");
    }
}
