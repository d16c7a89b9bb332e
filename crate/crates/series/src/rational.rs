use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::SeriesError;

/// Exact rational number; always reduced with a positive denominator.
pub type Rational = BigRational;

/// Rational `n/d` from machine integers.
pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as a rational.
pub fn qi(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `n!` as a big integer.
pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Generalized binomial coefficient `C(a, k)` for rational `a` and `k >= 0`.
pub fn binomial(a: &Rational, k: u64) -> Rational {
    let mut acc = Rational::one();
    for i in 0..k {
        acc = acc * (a - qi(i as i64)) / qi(i as i64 + 1);
    }
    acc
}

/// Harmonic number `H_n = 1 + 1/2 + ... + 1/n`.
pub fn harmonic(n: u64) -> Rational {
    (1..=n).fold(Rational::zero(), |acc, k| acc + q(1, k as i64))
}

/// Parse `"a"` or `"a/b"` into a rational.
pub fn parse_rational(s: &str) -> Result<Rational, SeriesError> {
    let s = s.trim();
    let bad = || SeriesError::Parse(format!("not a rational: {s}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}
