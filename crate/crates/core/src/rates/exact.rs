//! Exact rational evaluation of the rate formulas.
//!
//! Each function evaluates a defining sum term by term over big rationals,
//! independently of the floating-point routes in the parent module, so it
//! can arbitrate between them.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::Relation;

pub type Rational = BigRational;

pub fn binomial(n: i64, r: i64) -> BigInt {
    if n < 0 || r < 0 || r > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for j in 1..=r {
        acc = acc * BigInt::from(n - r + j) / BigInt::from(j);
    }
    acc
}

fn ratio(num: BigInt, den: BigInt) -> Rational {
    Rational::new(num, den)
}

fn int(x: i64) -> Rational {
    Rational::from_integer(BigInt::from(x))
}

/// `lambda` as an exact rational `num / den`.
pub fn rational(num: i64, den: i64) -> Rational {
    ratio(BigInt::from(num), BigInt::from(den))
}

/// Hypergeometric definition of the effective rate.
pub fn lambda_rate_hyper(n: usize, d: usize, lambda: &Rational, pi_k: usize, pi_k1: usize) -> Rational {
    let (n, d, level, above) = (n as i64, d as i64, (pi_k - pi_k1) as i64, pi_k1 as i64);
    let mut sum = Rational::zero();
    for i in 1..=d {
        sum += ratio(binomial(level - 1, i - 1) * binomial(above, d - i), BigInt::from(i));
    }
    lambda * int(n) * sum / Rational::from_integer(binomial(n, d))
}

/// Binomial-difference form of the effective rate.
pub fn lambda_rate_closed(n: usize, d: usize, lambda: &Rational, pi_k: usize, pi_k1: usize) -> Rational {
    let (n, d) = (n as i64, d as i64);
    let diff = binomial(pi_k as i64, d) - binomial(pi_k1 as i64, d);
    lambda * int(n) * ratio(diff, binomial(n, d) * BigInt::from((pi_k - pi_k1) as i64))
}

/// Stream decomposition of the rate in the `N + 1` system.
pub fn lambda_rate_np1(n: usize, d: usize, lambda: &Rational, pi_k: usize, pi_k1: usize, extra: Relation) -> Rational {
    let (ni, di, level, above) = (n as i64, d as i64, (pi_k - pi_k1) as i64, pi_k1 as i64);
    let common = lambda * int(ni - (di - 1));
    let yellow = common * ratio(binomial(pi_k as i64, di) - binomial(above, di), binomial(ni, di) * BigInt::from(level));
    let blue_norm = Rational::from_integer(binomial(ni, di - 1));
    let blue = match extra {
        Relation::Below => Rational::zero(),
        Relation::Above => {
            let mut sum = Rational::zero();
            for i in 1..=di {
                sum += ratio(binomial(level - 1, i - 1) * binomial(above, di - 1 - i), BigInt::from(i));
            }
            lambda * int(di) * sum / blue_norm
        }
        Relation::Equal => {
            let mut sum = Rational::zero();
            for i in 2..=di {
                sum += ratio(binomial(level - 1, i - 2) * binomial(above, di - i), BigInt::from(i));
            }
            lambda * int(di) * sum / blue_norm
        }
    };
    yellow + blue
}

/// `lambda D^D / (D-1)!`.
pub fn c_d_bound(d: usize, lambda: &Rational) -> Rational {
    let mut acc = int(d as i64);
    for j in 1..d as i64 {
        acc = acc * int(d as i64) / int(j);
    }
    lambda * acc
}

pub fn to_f64(x: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}
