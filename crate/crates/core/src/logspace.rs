//! Log-space primitives shared by the combinatorial and distributional code.
//!
//! Probabilities in the subcritical window regimes underflow `f64` long
//! before the quantities of interest degenerate, so everything numeric is
//! carried as a natural log with `-inf` encoding exact zero.

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{BigUint, Zero};
use statrs::function::gamma::ln_gamma;

pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

/// `log(exp(x) + exp(y))` without leaving log space.
#[inline]
pub fn log_add(x: f64, y: f64) -> f64 {
    if x == LOG_ZERO {
        return y;
    }
    if y == LOG_ZERO {
        return x;
    }
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log of the sum of exponentials of a slice.
pub fn log_sum(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(LOG_ZERO, f64::max);
    if hi == LOG_ZERO {
        return LOG_ZERO;
    }
    hi + xs.iter().map(|&x| (x - hi).exp()).sum::<f64>().ln()
}

/// `ln(1 - 1/n)` without cancellation for large `n`.
#[inline]
pub fn ln_one_minus_inv(n: u64) -> f64 {
    (-1.0 / n as f64).ln_1p()
}

/// `ln(e^x - 1)` for `x > 0`, stable at both ends.
pub fn ln_expm1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 1e-3 {
        // ln(e^x - 1) = ln x + ln1p((e^x - 1 - x) / x)
        x.ln() + ((x.exp_m1() - x) / x).ln_1p()
    } else if x > 33.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// Natural log of a nonnegative big integer; `-inf` for zero.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return LOG_ZERO;
    }
    let bits = x.bits();
    if bits <= 53 {
        // fits a double exactly
        return to_f64(x).ln();
    }
    let shift = bits - 53;
    to_f64(&(x >> shift)).ln() + shift as f64 * std::f64::consts::LN_2
}

fn to_f64(x: &BigUint) -> f64 {
    use num::ToPrimitive;
    x.to_f64().expect("BigUint below 2^53 converts to f64")
}

/// Natural log of a nonnegative rational; `-inf` for zero.
pub fn ln_ratio(r: &Ratio<BigInt>) -> f64 {
    debug_assert!(!r.numer().is_negative() && !r.denom().is_negative());
    if r.is_zero() {
        return LOG_ZERO;
    }
    ln_biguint(r.numer().magnitude()) - ln_biguint(r.denom().magnitude())
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return LOG_ZERO;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

trait SignExt {
    fn is_negative(&self) -> bool;
}

impl SignExt for BigInt {
    fn is_negative(&self) -> bool {
        self.sign() == num::bigint::Sign::Minus
    }
}
