//! Exact and log-space window combinatorics.
//!
//! The two central quantities are the stationary onto-window mass
//!
//! ```text
//! pi(n, M) = n! S(M, n) / n^M
//! ```
//!
//! and the stationary entry flux
//!
//! ```text
//! mu(n, M) = (n-1) (n-1)! S(M-1, n-1) / n^M
//!          = (1 - 1/n)^M * (n-1)! S(M-1, n-1) / (n-1)^(M-1),
//! ```
//!
//! where `S` is a Stirling number of the second kind. Exact rationals are
//! produced while the Stirling table fits a configurable cell budget; the
//! log-space route is always available and goes through the cancellation-free
//! coverage recurrence rather than the alternating inclusion-exclusion sum.

use num::bigint::BigInt;
use num::traits::Pow;
use num::{BigUint, One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::logspace::{log_add, ln_one_minus_inv, LOG_ZERO};
use crate::params::ModelParams;
use crate::prob::{BigRational, DualProb};

/// Default cell budget for exact Stirling tables (`m * k` cells).
pub const DEFAULT_EXACT_CELL_CAP: u64 = 10_000_000;

/// Row width below which the coverage recurrence stays single-threaded.
const PAR_ROW_MIN: usize = 4096;

/// Stirling number of the second kind `S(m, k)` by the triangular recurrence
/// `S(m,k) = k S(m-1,k) + S(m-1,k-1)`, under the default cell budget.
pub fn stirling2(m: u64, k: u64) -> Result<BigUint> {
    stirling2_with_cap(m, k, DEFAULT_EXACT_CELL_CAP)
}

pub fn stirling2_with_cap(m: u64, k: u64, cell_cap: u64) -> Result<BigUint> {
    if k == 0 {
        return Ok(if m == 0 { BigUint::one() } else { BigUint::zero() });
    }
    if k > m {
        return Ok(BigUint::zero());
    }
    let cells = m
        .checked_mul(k)
        .filter(|&c| c <= cell_cap)
        .ok_or_else(|| {
            Error::Budget(format!(
                "exact Stirling table S({m},{k}) needs {m}*{k} cells (cap {cell_cap}); \
                 use the log-space coverage routes instead"
            ))
        })?;
    let _ = cells;

    let width = k as usize;
    let mut row = vec![BigUint::zero(); width + 1];
    row[0] = BigUint::one(); // S(0,0)
    for i in 1..=m {
        let jmax = k.min(i) as usize;
        for j in (1..=jmax).rev() {
            let kept = &row[j] * j;
            row[j] = kept + &row[j - 1];
        }
        row[0] = BigUint::zero();
    }
    Ok(row[width].clone())
}

pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// Distribution of the number of distinct types covered by `length` uniform
/// draws from an alphabet, held in log space.
#[derive(Debug, Clone)]
pub struct CoverageDistribution {
    alphabet: u64,
    length: u64,
    log_probs: Vec<f64>,
}

impl CoverageDistribution {
    pub fn alphabet(&self) -> u64 {
        self.alphabet
    }

    pub fn length(&self) -> u64 {
        self.length
    }

    /// `ln P(exactly `covered` types appear)`; `-inf` for impossible counts.
    pub fn log_prob(&self, covered: u64) -> f64 {
        self.log_probs[covered as usize]
    }

    pub fn prob(&self, covered: u64) -> f64 {
        self.log_prob(covered).exp()
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }
}

/// Forward coverage recurrence
/// `p(t+1, k) = p(t, k) k/n + p(t, k-1) (n-k+1)/n`, `p(0, 0) = 1`.
///
/// Each cell depends only on the previous row, so rows are computed in
/// parallel chunks when wide enough; the result is bit-identical regardless
/// of thread count.
pub fn coverage_dp(alphabet: u64, length: u64) -> CoverageDistribution {
    assert!(alphabet >= 1, "alphabet must be nonempty");
    let n = alphabet as usize;
    let nf = alphabet as f64;
    let stay: Vec<f64> = (0..=n)
        .map(|k| if k == 0 { LOG_ZERO } else { (k as f64 / nf).ln() })
        .collect();
    let grow: Vec<f64> = (0..=n)
        .map(|k| if k == 0 { LOG_ZERO } else { ((n - k + 1) as f64 / nf).ln() })
        .collect();

    let mut cur = vec![LOG_ZERO; n + 1];
    cur[0] = 0.0;
    let mut next = vec![LOG_ZERO; n + 1];
    for _ in 0..length {
        if n + 1 >= PAR_ROW_MIN {
            next.par_iter_mut().enumerate().for_each(|(k, slot)| {
                *slot = coverage_cell(k, &cur, &stay, &grow);
            });
        } else {
            for (k, slot) in next.iter_mut().enumerate() {
                *slot = coverage_cell(k, &cur, &stay, &grow);
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    CoverageDistribution {
        alphabet,
        length,
        log_probs: cur,
    }
}

#[inline]
fn coverage_cell(k: usize, prev: &[f64], stay: &[f64], grow: &[f64]) -> f64 {
    let kept = prev[k] + stay[k];
    let grown = if k > 0 { prev[k - 1] + grow[k] } else { LOG_ZERO };
    log_add(kept, grown)
}

/// Probability that `length` uniform draws over an alphabet of `alphabet`
/// types are onto: `N! S(m, N) / N^m`. Returns exact zero for `length <
/// alphabet`.
pub fn onto_prob(alphabet: u64, length: u64) -> DualProb {
    assert!(alphabet >= 1, "alphabet must be nonempty");
    if length < alphabet {
        return DualProb::zero();
    }
    let exact = match stirling2(length, alphabet) {
        Ok(s) => {
            let numer = factorial(alphabet) * s;
            let denom = BigUint::from(alphabet).pow(length);
            Some(BigRational::new(numer.into(), denom.into()))
        }
        Err(_) => None,
    };
    let log_value = coverage_dp(alphabet, length).log_prob(alphabet);
    DualProb::new(exact, log_value).expect("onto probability representations agree")
}

/// Stationary onto-window mass `pi(n, M) = n! S(M, n) / n^M`.
pub fn mass(params: ModelParams) -> DualProb {
    onto_prob(params.n(), params.window())
}

/// Stationary entry flux `mu(n, M) = (n-1)(n-1)! S(M-1, n-1) / n^M`.
///
/// The exact value is computed in both the direct and the factored form and
/// the two are required to agree identically; the log value goes through the
/// `(1-1/n)^M` prefactor and the reduced coverage recurrence.
pub fn flux(params: ModelParams) -> Result<DualProb> {
    let n = params.n();
    let window = params.window();
    if n < 2 {
        return Err(Error::Domain(
            "entry flux is undefined for n = 1: completion happens at the first draw".into(),
        ));
    }

    let exact = match stirling2(window - 1, n - 1) {
        Ok(s) => {
            let s: BigInt = s.into();
            let n_pow: BigInt = BigUint::from(n).pow(window).into();
            let reduced_fact: BigInt = factorial(n - 1).into();
            let direct = BigRational::new((&s * &reduced_fact) * BigInt::from(n - 1), n_pow.clone());
            let shrink_pow: BigInt = BigUint::from(n - 1).pow(window).into();
            let reduced_pow: BigInt = BigUint::from(n - 1).pow(window - 1).into();
            let factored = BigRational::new(shrink_pow, n_pow)
                * BigRational::new(s * reduced_fact, reduced_pow);
            if direct != factored {
                return Err(Error::Internal("flux factored-form mismatch".into()));
            }
            Some(direct)
        }
        Err(_) => None,
    };

    let log_value = window as f64 * ln_one_minus_inv(n)
        + coverage_dp(n - 1, window - 1).log_prob(n - 1);
    DualProb::new(exact, log_value)
}

/// Mean number of missing types after `length` draws over `alphabet` types:
/// `Lambda(N, m) = N (1 - 1/N)^m`, evaluated in log space.
pub fn missing_mean(alphabet: u64, length: u64) -> f64 {
    assert!(alphabet >= 1);
    ((alphabet as f64).ln() + length as f64 * ln_one_minus_inv(alphabet)).exp()
}

/// Occupancy upper bound `exp(-Lambda(N, m)) >= onto_prob(N, m)`.
pub fn occupancy_upper_bound(alphabet: u64, length: u64) -> Result<f64> {
    if alphabet < 2 || length < alphabet {
        return Err(Error::Domain(format!(
            "occupancy bound needs m >= N >= 2, got N={alphabet}, m={length}"
        )));
    }
    Ok((-missing_mean(alphabet, length)).exp())
}

/// Alternating inclusion-exclusion evaluation of the onto-window mass,
/// exact-rational only. A cross-check route: the alternating sum loses all
/// precision in floating point once the window is subcritical.
pub fn mass_inclusion_exclusion(params: ModelParams) -> BigRational {
    let n = params.n();
    let window = params.window();
    let mut acc = BigInt::zero();
    let mut binom = BigUint::one();
    for j in 0..=n {
        if j > 0 {
            binom = binom * (n - j + 1) / j;
        }
        let term = BigInt::from(binom.clone()) * BigInt::from(BigUint::from(n - j).pow(window));
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    BigRational::new(acc, BigUint::from(n).pow(window).into())
}
