//! Ground-truth engines at tiny scale.
//!
//! Everything here is exact or absent: enumeration and chain solves run in
//! rational arithmetic under explicit budgets and never fall back to
//! sampling. These are the independent cross-checks for the closed-form
//! combinatorics and for the simulator.

use num::bigint::BigInt;
use num::traits::Pow;
use num::{BigUint, One, Zero};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::prob::BigRational;

/// Word-count budget for exhaustive enumeration.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;

/// State-count budget for the absorbing-chain solve.
pub const CHAIN_STATE_BUDGET: u64 = 30_000;

fn checked_word_count(n: u64, len: u64, budget: u64, what: &str) -> Result<u64> {
    let mut total = 1u64;
    for _ in 0..len {
        total = total
            .checked_mul(n)
            .filter(|&t| t <= budget)
            .ok_or_else(|| {
                Error::Budget(format!(
                    "{what} would enumerate {n}^{len} words (budget {budget})"
                ))
            })?;
    }
    Ok(total)
}

/// Depth-first enumeration over all words of the given length, maintaining
/// per-type counts and the distinct-type count; `leaf` sees the word.
fn enumerate_words<F: FnMut(&[u32], &[u32], u32) -> u64>(
    n: u32,
    len: usize,
    leaf: &mut F,
) -> u64 {
    fn rec<F: FnMut(&[u32], &[u32], u32) -> u64>(
        n: u32,
        len: usize,
        word: &mut Vec<u32>,
        counts: &mut Vec<u32>,
        distinct: u32,
        leaf: &mut F,
    ) -> u64 {
        if word.len() == len {
            return leaf(word, counts, distinct);
        }
        let mut total = 0;
        for s in 0..n {
            word.push(s);
            let newly = counts[s as usize] == 0;
            counts[s as usize] += 1;
            total += rec(n, len, word, counts, distinct + newly as u32, leaf);
            counts[s as usize] -= 1;
            word.pop();
        }
        total
    }
    let mut word = Vec::with_capacity(len);
    let mut counts = vec![0u32; n as usize];
    rec(n, len, &mut word, &mut counts, 0, leaf)
}

fn ratio(count: u64, n: u64, len: u64) -> BigRational {
    BigRational::new(BigInt::from(count), BigUint::from(n).pow(len).into())
}

/// Fraction of length-`M` words over `n` types that are onto, by full
/// enumeration.
pub fn enumerate_mass(params: ModelParams) -> Result<BigRational> {
    let n = params.n();
    let window = params.window();
    checked_word_count(n, window, ENUMERATION_BUDGET, "mass")?;
    let count = enumerate_words(n as u32, window as usize, &mut |_, _, distinct| {
        (distinct == n as u32) as u64
    });
    Ok(ratio(count, n, window))
}

/// Fraction of length-`M+1` words whose leading window is not onto while the
/// trailing window is, by full enumeration.
pub fn enumerate_flux(params: ModelParams) -> Result<BigRational> {
    let n = params.n();
    let window = params.window() as usize;
    checked_word_count(n, params.window() + 1, ENUMERATION_BUDGET, "flux")?;
    // with counts over all M+1 symbols: the leading window drops the last
    // symbol, the trailing window drops the first; an entry needs the full
    // word onto, the first symbol duplicated, and the last one fresh
    let count = enumerate_words(n as u32, window + 1, &mut |word, counts, distinct| {
        (distinct == n as u32
            && counts[word[0] as usize] >= 2
            && counts[word[window] as usize] == 1) as u64
    });
    Ok(ratio(count, n, params.window() + 1))
}

/// Exact expected completion time from an empty start.
#[derive(Debug, Clone)]
pub struct ChainSolveResult {
    pub expected: BigRational,
    pub expected_f64: f64,
    /// Number of full-window states in the chain (`n^M`).
    pub states: u64,
}

/// Solve the absorbing window chain in rational arithmetic.
///
/// Completion during the first `M` draws is handled exactly: while the
/// window is still filling, the active set grows monotonically, so the first
/// covering time of each length-`M` prefix is read off during enumeration.
/// Prefixes that never cover continue from their full-window state, whose
/// expected absorption time solves a dense linear system.
pub fn exact_expected_completion(params: ModelParams) -> Result<ChainSolveResult> {
    let n = params.n();
    let window = params.window() as usize;
    let states = checked_word_count(n, params.window(), CHAIN_STATE_BUDGET, "chain solve")?;
    let nu = n as u32;

    // pass 1: first covering time per prefix; uncovered prefixes are exactly
    // the non-onto full windows. Returns (sum of covering times, count).
    fn cover_dfs(
        n: u32,
        len: usize,
        depth: usize,
        counts: &mut Vec<u32>,
        distinct: u32,
        cover_at: Option<u64>,
    ) -> (u64, u64) {
        if depth == len {
            return cover_at.map_or((0, 0), |t| (t, 1));
        }
        let mut total = (0u64, 0u64);
        for s in 0..n {
            let newly = counts[s as usize] == 0;
            counts[s as usize] += 1;
            let d = distinct + newly as u32;
            let c = cover_at.or((d == n).then_some(depth as u64 + 1));
            let (t, w) = cover_dfs(n, len, depth + 1, counts, d, c);
            total.0 += t;
            total.1 += w;
            counts[s as usize] -= 1;
        }
        total
    }
    let (covered_time_total, covered_words) = {
        let mut counts = vec![0u32; n as usize];
        cover_dfs(nu, window, 0, &mut counts, 0, None)
    };

    // pass 2: index the non-onto windows (lexicographic = increasing word id)
    let mut non_onto_ids: Vec<u64> = Vec::new();
    {
        let mut id = 0u64;
        enumerate_words(nu, window, &mut |_, _, distinct| {
            if distinct != nu {
                non_onto_ids.push(id);
            }
            id += 1;
            0
        });
    }
    let var_of = |id: u64| non_onto_ids.binary_search(&id).ok();
    let unknowns = non_onto_ids.len();

    // h(w) = 1 + (1/n) sum_s h(shift(w, s)), h = 0 on onto windows:
    // n h(w) - sum_{s: shift not onto} h(shift(w, s)) = n
    let tail_mod = states / n; // strip the oldest symbol
    let mut matrix: Vec<Vec<BigRational>> =
        vec![vec![BigRational::zero(); unknowns + 1]; unknowns];
    for (row, &id) in non_onto_ids.iter().enumerate() {
        matrix[row][row] += BigRational::from(BigInt::from(n));
        let suffix = (id % tail_mod) * n;
        for s in 0..n {
            if let Some(col) = var_of(suffix + s) {
                matrix[row][col] -= BigRational::one();
            }
        }
        matrix[row][unknowns] = BigRational::from(BigInt::from(n));
    }
    let h = solve_dense(matrix)?;

    // E T = [ sum of prefix covering times + sum over uncovered of (M + h) ] / n^M
    let mut total = BigRational::from(BigInt::from(covered_time_total));
    total += BigRational::from(BigInt::from(unknowns as u64 * params.window()));
    for v in &h {
        total += v;
    }
    debug_assert_eq!(covered_words + unknowns as u64, states);
    let expected = total / BigRational::from(BigInt::from(BigUint::from(n).pow(params.window())));

    use num::ToPrimitive;
    let expected_f64 = expected.to_f64().unwrap_or(f64::INFINITY);
    Ok(ChainSolveResult {
        expected,
        expected_f64,
        states,
    })
}

/// Gauss-Jordan elimination over the rationals.
#[allow(clippy::needless_range_loop)]
fn solve_dense(mut m: Vec<Vec<BigRational>>) -> Result<Vec<BigRational>> {
    let nvars = m.len();
    for col in 0..nvars {
        let pivot = (col..nvars)
            .find(|&r| !m[r][col].is_zero())
            .ok_or_else(|| Error::Internal("singular hitting-time system".into()))?;
        m.swap(col, pivot);
        let inv = m[col][col].clone();
        for j in col..=nvars {
            let v = std::mem::take(&mut m[col][j]);
            m[col][j] = v / &inv;
        }
        for r in 0..nvars {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = std::mem::take(&mut m[r][col]);
            for j in (col + 1)..=nvars {
                let sub = &f * &m[col][j];
                let v = std::mem::take(&mut m[r][j]);
                m[r][j] = v - sub;
            }
        }
    }
    Ok(m.into_iter().map(|mut row| std::mem::take(&mut row[nvars])).collect())
}

/// Exact joint probability `P(E_0 = 1, E_u = 1)` by enumeration over the
/// `M + u + 1` symbols spanning both windows.
pub fn exact_entry_pair(params: ModelParams, u: u64) -> Result<BigRational> {
    let n = params.n();
    let window = params.window() as usize;
    if u < 1 || u > params.window() {
        return Err(Error::Domain(format!(
            "pair offset u = {u} outside 1..={}",
            params.window()
        )));
    }
    let span = params.window() + u + 1;
    checked_word_count(n, span, ENUMERATION_BUDGET, "entry pair")?;

    let nu = n as u32;
    let u = u as usize;
    let onto = |w: &[u32]| -> bool {
        let mut mask = 0u64;
        for &s in w {
            mask |= 1 << s;
        }
        mask == (1u64 << n) - 1
    };

    // prune subtrees at depth M+1 where the first window shift is not an
    // entry; the survivors are a mu-fraction of all prefixes
    fn rec(
        nu: u32,
        span: usize,
        window: usize,
        u: usize,
        word: &mut Vec<u32>,
        onto: &dyn Fn(&[u32]) -> bool,
    ) -> u64 {
        if word.len() == window + 1 {
            let e0 = !onto(&word[..window]) && onto(&word[1..=window]);
            if !e0 {
                return 0;
            }
        }
        if word.len() == span {
            let eu = !onto(&word[u..u + window]) && onto(&word[u + 1..=u + window]);
            return eu as u64;
        }
        let mut total = 0;
        for s in 0..nu {
            word.push(s);
            total += rec(nu, span, window, u, word, onto);
            word.pop();
        }
        total
    }
    let mut word = Vec::with_capacity(span as usize);
    let count = rec(nu, span as usize, window, u, &mut word, &onto);
    Ok(ratio(count, n, span))
}

/// Exact `theta = sum_u P(E_u = 1 | E_0 = 1)` over `u = 1..=M`.
pub fn exact_theta(params: ModelParams) -> Result<BigRational> {
    let flux = enumerate_flux(params)?;
    let mut total = BigRational::zero();
    for u in 1..=params.window() {
        total += exact_entry_pair(params, u)?;
    }
    Ok(total / flux)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u64, m: u64) -> ModelParams {
        ModelParams::new(n, m).unwrap()
    }

    fn rational(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn mass_enumeration_small_cases() {
        assert_eq!(enumerate_mass(params(2, 2)).unwrap(), rational(1, 2));
        assert_eq!(enumerate_mass(params(3, 3)).unwrap(), rational(2, 9));
        assert_eq!(enumerate_mass(params(2, 5)).unwrap(), rational(30, 32));
    }

    #[test]
    fn flux_enumeration_small_cases() {
        assert_eq!(enumerate_flux(params(2, 2)).unwrap(), rational(1, 4));
        assert_eq!(enumerate_flux(params(3, 3)).unwrap(), rational(4, 27));
        assert_eq!(enumerate_flux(params(2, 3)).unwrap(), rational(1, 8));
    }

    #[test]
    fn budgets_are_enforced() {
        match enumerate_mass(params(4, 13)) {
            Err(Error::Budget(_)) => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn expected_completion_small_cases() {
        let r = exact_expected_completion(params(1, 1)).unwrap();
        assert_eq!(r.expected, rational(1, 1));
        assert_eq!(r.states, 1);

        // hand computation: sum_{t>=2} t 2^{-(t-1)} = 3
        let r = exact_expected_completion(params(2, 2)).unwrap();
        assert_eq!(r.expected, rational(3, 1));
        assert_eq!(r.states, 4);
    }

    #[test]
    fn expected_completion_exceeds_window_start() {
        for (n, m) in [(2u64, 3u64), (3, 3), (3, 4)] {
            let r = exact_expected_completion(params(n, m)).unwrap();
            assert!(r.expected_f64 >= n as f64, "n={n} m={m}");
        }
    }

    #[test]
    fn entry_pairs_small_cases() {
        let p = params(2, 2);
        let flux = enumerate_flux(p).unwrap();
        // consecutive entries are impossible at M = 2
        assert_eq!(exact_entry_pair(p, 1).unwrap(), rational(0, 1));
        // the endpoint is an independent fresh entry: P(E_M | E_0) = mu
        assert_eq!(exact_entry_pair(p, 2).unwrap() / &flux, rational(1, 4));

        let p = params(3, 3);
        let flux = enumerate_flux(p).unwrap();
        assert_eq!(exact_entry_pair(p, 3).unwrap() / &flux, rational(4, 27));
    }

    #[test]
    fn exact_theta_at_minimal_window() {
        assert_eq!(exact_theta(params(2, 2)).unwrap(), rational(1, 4));
    }
}
