//! Dual exact/log probability representation.

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{One, Zero};

use crate::error::{Error, Result};
use crate::logspace::{ln_ratio, LOG_ZERO};

pub type BigRational = Ratio<BigInt>;

/// A probability carried simultaneously as an exact rational (when the
/// exact-mode budget allows it) and as a natural log.
///
/// `-inf` in the log slot encodes exact zero. When both representations are
/// present they must agree to within `1e-9` relative in log space; the
/// constructor enforces this.
#[derive(Debug, Clone, PartialEq)]
pub struct DualProb {
    exact: Option<BigRational>,
    log_value: f64,
}

const LOG_CONSISTENCY_TOL: f64 = 1e-9;

impl DualProb {
    pub fn new(exact: Option<BigRational>, log_value: f64) -> Result<Self> {
        let mut log_value = log_value;
        if log_value > 0.0 {
            if log_value < 1e-12 {
                // rounding residue from a log-space pipeline; the value is 1
                log_value = 0.0;
            } else {
                return Err(Error::Internal(format!(
                    "log-probability {log_value} is positive"
                )));
            }
        }
        if let Some(r) = &exact {
            if r < &BigRational::zero() || r > &BigRational::one() {
                return Err(Error::Internal(format!("exact probability {r} outside [0,1]")));
            }
            if r.is_zero() {
                if log_value != LOG_ZERO {
                    return Err(Error::Internal(
                        "exact zero paired with finite log value".into(),
                    ));
                }
            } else {
                let lr = ln_ratio(r);
                let tol = LOG_CONSISTENCY_TOL * log_value.abs().max(1.0);
                if (lr - log_value).abs() > tol {
                    return Err(Error::Internal(format!(
                        "exact/log mismatch: ln({r}) = {lr} vs log value {log_value}"
                    )));
                }
            }
        }
        Ok(Self { exact, log_value })
    }

    /// The zero probability (exact 0, log `-inf`).
    pub fn zero() -> Self {
        Self {
            exact: Some(BigRational::zero()),
            log_value: LOG_ZERO,
        }
    }

    pub fn one() -> Self {
        Self {
            exact: Some(BigRational::one()),
            log_value: 0.0,
        }
    }

    /// Build from an exact rational alone; the log slot is derived from it.
    pub fn from_exact(exact: BigRational) -> Result<Self> {
        let log_value = ln_ratio(&exact);
        Self::new(Some(exact), log_value)
    }

    pub fn exact(&self) -> Option<&BigRational> {
        self.exact.as_ref()
    }

    /// Natural log of the probability; `-inf` means exact zero.
    pub fn log_value(&self) -> f64 {
        self.log_value
    }

    /// The probability as a double (may underflow to 0 in deep regimes).
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    /// `"p/q"` rendering of the exact part, when present.
    pub fn exact_string(&self) -> Option<String> {
        self.exact.as_ref().map(|r| r.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inconsistent_pairs() {
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        assert!(DualProb::new(Some(half.clone()), 0.5f64.ln()).is_ok());
        assert!(DualProb::new(Some(half), 0.4f64.ln()).is_err());
        assert!(DualProb::new(None, 0.5).is_err());
    }

    #[test]
    fn zero_and_one() {
        assert_eq!(DualProb::zero().log_value(), LOG_ZERO);
        assert_eq!(DualProb::one().value(), 1.0);
        assert_eq!(DualProb::zero().exact_string().unwrap(), "0");
    }
}
