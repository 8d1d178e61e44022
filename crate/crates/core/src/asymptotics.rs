//! Regime descriptors and closed-form asymptotic quantities.
//!
//! For proportional windows `M = floor(a n)`, `a > 1`, the exponential decay
//! rate of the flux per coupon type is
//!
//! ```text
//! I(a) = a log(tau/a) + a - log(e^tau - 1),
//! ```
//!
//! where `tau = tau(a)` solves the saddle equation `tau / (1 - e^-tau) = a`.
//! The same solver drives the zero-truncated Poisson family and the
//! last-occurrence scale functions.

use crate::combinatorics::missing_mean;
use crate::error::{Error, Result};
use crate::logspace::{ln_expm1, ln_one_minus_inv};
use crate::params::ModelParams;

/// Window-scale diagnostics for a parameter pair.
///
/// `lambda` is the expected number of missing types in a stationary window;
/// `alpha = M / (n log n)`, `a = M / n`, and `c = (M - n log n) / n` locate
/// the pair on the logarithmic, linear, and critical scales.
#[derive(Debug, Clone, Copy)]
pub struct RegimeDescriptor {
    pub n: u64,
    pub window: u64,
    pub lambda: f64,
    pub alpha: f64,
    pub a: f64,
    pub c: f64,
}

impl RegimeDescriptor {
    pub fn new(params: ModelParams) -> Result<Self> {
        let n = params.n();
        if n < 2 {
            return Err(Error::Domain("regime diagnostics need n >= 2".into()));
        }
        let window = params.window();
        let nf = n as f64;
        let nlogn = nf * nf.ln();
        Ok(Self {
            n,
            window,
            lambda: lambda(params),
            alpha: window as f64 / nlogn,
            a: window as f64 / nf,
            c: (window as f64 - nlogn) / nf,
        })
    }
}

/// Expected missing-type count `lambda(n, M) = n (1 - 1/n)^M`, evaluated in
/// log space before exponentiating.
pub fn lambda(params: ModelParams) -> f64 {
    assert!(params.n() >= 2, "lambda needs n >= 2");
    missing_mean(params.n(), params.window())
}

/// Solve `tau / (1 - e^-tau) = a` for `a > 1`.
///
/// Bracketing bisection down to an interval of width `1e-6`, then Newton
/// polish to `|f(tau) - a| <= 1e-12 a`. The left-hand side is strictly
/// increasing with limit 1 at `tau = 0`, so the root is unique.
pub fn tau_solve(a: f64) -> Result<f64> {
    if !a.is_finite() || a <= 1.0 {
        return Err(Error::Domain(format!(
            "saddle parameter requires a > 1 (tau tends to 0 as a tends to 1), got {a}"
        )));
    }
    let f = |t: f64| t / (-(-t).exp_m1());
    let tol = 1e-12 * a;

    let mut lo = 0.0f64; // f -> 1 as tau -> 0
    let mut hi = a.max(50.0); // f(t) > t, so f(hi) > a
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < a {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Newton polish with bracket maintenance; when a Newton step leaves the
    // bracket (tau within rounding of 0 for a near 1), bisect instead
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = f(t) - a;
        if g.abs() <= tol {
            return Ok(t);
        }
        if g > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let em = (-t).exp();
        let den = -(-t).exp_m1();
        let slope = (den - t * em) / (den * den);
        let newton = t - g / slope;
        t = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::Internal(format!("tau solver failed to converge at a = {a}")))
}

/// Rate function `I(a)` for proportional windows, `a > 1`.
pub fn rate_function(a: f64) -> Result<f64> {
    let tau = tau_solve(a)?;
    Ok(a * (tau / a).ln() + a - ln_expm1(tau))
}

/// Leading-order predictions for logarithmic windows `M = floor(alpha n log n)`.
#[derive(Debug, Clone, Copy)]
pub struct FixedAlphaPrediction {
    pub n: u64,
    pub alpha: f64,
    pub window: u64,
    /// Leading log-flux scale `-n^(1-alpha)`.
    pub leading_log: f64,
    /// Log of the sharp flux normalization `n^-alpha exp(-n^(1-alpha))`,
    /// present only for `alpha > 1/2` where the ratio form is valid.
    pub sharp_flux_log: Option<f64>,
}

impl FixedAlphaPrediction {
    pub fn sharp_flux(&self) -> Option<f64> {
        self.sharp_flux_log.map(f64::exp)
    }
}

pub fn fixed_alpha_prediction(n: u64, alpha: f64) -> Result<FixedAlphaPrediction> {
    if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let nf = n as f64;
    let window = (alpha * nf * nf.ln()).floor() as u64;
    if window < n {
        return Err(Error::Domain(format!(
            "floor(alpha n log n) = {window} falls below n = {n}; the window scale is vacuous here"
        )));
    }
    let scale = ((1.0 - alpha) * nf.ln()).exp(); // n^(1-alpha)
    let sharp_flux_log = (alpha > 0.5).then(|| -alpha * nf.ln() - scale);
    Ok(FixedAlphaPrediction {
        n,
        alpha,
        window,
        leading_log: -scale,
        sharp_flux_log,
    })
}

/// Limits on the critical scale `M = n log n + c n + o(n)`.
#[derive(Debug, Clone, Copy)]
pub struct CriticalLimits {
    /// Limit of the onto-window mass: `exp(-e^-c)`.
    pub pi_limit: f64,
    /// Limit of `n` times the entry flux: `e^-c exp(-e^-c)`.
    pub n_flux_limit: f64,
}

pub fn critical_limits(c: f64) -> CriticalLimits {
    let ec = (-c).exp();
    CriticalLimits {
        pi_limit: (-ec).exp(),
        n_flux_limit: (-c - ec).exp(),
    }
}

/// Scale functions for the last-occurrence occupancy analysis at offset `u`.
///
/// With `N = n-1`, `m = M-1`, and `tau` the saddle parameter for `m/N`:
/// `q_u = (1 - 1/N)^(u-1)`, `y_u = 1 - e^(-u/n)`,
/// `Lambda_u = N e^(-tau (m-u)/m) (1 - e^(-tau u/m)) / (1 - e^-tau)`,
/// `eta_u = q_u Lambda_u`.
#[derive(Debug, Clone, Copy)]
pub struct ScaleFunctions {
    pub u: u64,
    pub q_u: f64,
    pub y_u: f64,
    pub lambda_u: f64,
    pub eta_u: f64,
}

pub fn last_occurrence_scales(params: ModelParams, u: u64) -> Result<ScaleFunctions> {
    let n = params.n();
    let window = params.window();
    if n < 2 {
        return Err(Error::Domain("last-occurrence scales need n >= 2".into()));
    }
    if window == n {
        return Err(Error::Domain(
            "M = n is the degenerate permutation endpoint; the saddle parameter is undefined there"
                .into(),
        ));
    }
    if u < 1 || u > window - 2 {
        return Err(Error::Domain(format!(
            "offset u = {u} outside the valid range 1..={}",
            window - 2
        )));
    }
    let reduced_n = n - 1;
    let reduced_m = window - 1;
    let tau = tau_solve(reduced_m as f64 / reduced_n as f64)?;

    let q_u = if u == 1 {
        1.0
    } else {
        ((u - 1) as f64 * ln_one_minus_inv(reduced_n)).exp()
    };
    let y_u = -(-(u as f64) / n as f64).exp_m1();
    let frac = u as f64 / reduced_m as f64;
    let lambda_u =
        reduced_n as f64 * (-tau * (1.0 - frac)).exp() * (-(-tau * frac).exp_m1())
            / (-(-tau).exp_m1());
    Ok(ScaleFunctions {
        u,
        q_u,
        y_u,
        lambda_u,
        eta_u: q_u * lambda_u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::bigint::BigInt;
    use num::rational::Ratio;
    use num::traits::Pow;
    use num::ToPrimitive;

    fn params(n: u64, m: u64) -> ModelParams {
        ModelParams::new(n, m).unwrap()
    }

    #[test]
    fn lambda_small_cases() {
        assert!((lambda(params(2, 2)) - 0.5).abs() < 1e-15);

        // 12 * (11/12)^12, recomputed in exact rational arithmetic
        let exact = Ratio::new(BigInt::from(11).pow(12u32) * 12, BigInt::from(12).pow(12u32));
        let expected = exact.to_f64().unwrap();
        let got = lambda(params(12, 12));
        assert!((got - expected).abs() <= 1e-12 * expected, "{got} vs {expected}");
    }

    #[test]
    fn lambda_matches_power_scale_for_log_windows() {
        let n = 10_000u64;
        let window = (0.7 * n as f64 * (n as f64).ln()).floor() as u64;
        let lam = lambda(params(n, window));
        let target = (n as f64).powf(0.3);
        assert!(lam / target > 0.9 && lam / target < 1.1, "lam={lam} target={target}");
    }

    #[test]
    fn tau_solver_meets_tolerance() {
        let f = |t: f64| t / (-(-t).exp_m1());
        for a in [1.0 + 1e-9, 1.0001, 1.5, 2.0, 5.0, 20.0, 100.0] {
            let t = tau_solve(a).unwrap();
            assert!((f(t) - a).abs() <= 1e-12 * a, "a={a}");
        }
        // tau -> 0 as a -> 1+
        assert!(tau_solve(1.0 + 1e-9).unwrap() < 1e-4);
        // solved independently by 30-digit bisection of tau/(1-e^-tau) = 2
        assert!((tau_solve(2.0).unwrap() - 1.593_624_260_040_04).abs() < 1e-12);
        // round trip at (N, m) = (50, 100)
        let t = tau_solve(100.0 / 50.0).unwrap();
        assert!((f(t) - 2.0).abs() <= 2e-12);
        assert!(tau_solve(1.0).is_err());
        assert!(tau_solve(0.5).is_err());
    }

    #[test]
    fn rate_function_values() {
        // I(a) -> 1 as a -> 1+
        let near_one = rate_function(1.0 + 1e-6).unwrap();
        assert!((0.99..=1.01).contains(&near_one), "{near_one}");
        // independently evaluated at 30 digits with the defining formula
        assert!((rate_function(2.0).unwrap() - 0.179_239_390_551_036).abs() < 1e-12);
        // I(a) ~ e^-a for large a
        let tail = rate_function(20.0).unwrap() * 20f64.exp();
        assert!((0.5..=2.0).contains(&tail), "{tail}");
    }

    #[test]
    fn rate_function_monotone_decreasing() {
        let mut prev = f64::INFINITY;
        let mut a = 1.1;
        while a <= 10.0 + 1e-9 {
            let v = rate_function(a).unwrap();
            assert!(v < prev, "I not decreasing at a={a}");
            prev = v;
            a += 0.1;
        }
    }

    #[test]
    fn tau_strictly_increasing() {
        let mut prev = 0.0;
        let mut a = 1.1;
        while a <= 10.0 + 1e-9 {
            let t = tau_solve(a).unwrap();
            assert!(t > prev, "tau not increasing at a={a}");
            prev = t;
            a += 0.1;
        }
    }

    #[test]
    fn fixed_alpha_cases() {
        let p = fixed_alpha_prediction(10_000, 0.7).unwrap();
        assert!((p.leading_log + 10f64.powf(1.2)).abs() < 1e-9);
        let sharp = p.sharp_flux_log.unwrap();
        assert!((sharp - (-0.7 * (10_000f64).ln() - 10f64.powf(1.2))).abs() < 1e-9);

        let p = fixed_alpha_prediction(10_000, 0.3).unwrap();
        assert!(p.sharp_flux_log.is_none());

        // window falls below n for tiny n
        assert!(fixed_alpha_prediction(3, 0.1).is_err());
        assert!(fixed_alpha_prediction(100, 1.0).is_err());
    }

    #[test]
    fn critical_limit_values() {
        let l = critical_limits(0.0);
        assert!((l.pi_limit - (-1f64).exp()).abs() < 1e-15);
        assert!((l.n_flux_limit - (-1f64).exp()).abs() < 1e-15);

        let far = critical_limits(40.0);
        assert!(far.pi_limit > 1.0 - 1e-12);
        assert!(far.n_flux_limit < 1e-12);
        assert!(critical_limits(-40.0).pi_limit < 1e-12);
    }

    #[test]
    fn scale_functions_cases() {
        // Lambda_u is a sub-probability mass times N
        let p = params(100, 300);
        for u in [1u64, 50, 150, 298] {
            let s = last_occurrence_scales(p, u).unwrap();
            assert!(s.lambda_u <= 99.0 + 1e-9, "u={u}");
            assert!(s.q_u > 0.0 && s.q_u <= 1.0);
            assert!((0.0..1.0).contains(&s.y_u));
            assert_eq!(s.eta_u, s.q_u * s.lambda_u);
        }

        let s = last_occurrence_scales(p, 50).unwrap();
        let lam = lambda(p);
        let ratio = s.eta_u / (lam * s.y_u);
        assert!((0.125..=8.0).contains(&ratio), "ratio={ratio}");

        // lambda * y_u is nondecreasing in u (y_u is)
        let mut prev = 0.0;
        for u in 1..=298u64 {
            let s = last_occurrence_scales(p, u).unwrap();
            assert!(lam * s.y_u >= prev);
            prev = lam * s.y_u;
        }

        assert!(last_occurrence_scales(params(100, 100), 1).is_err());
        assert!(last_occurrence_scales(p, 0).is_err());
        assert!(last_occurrence_scales(p, 299).is_err());
    }

    #[test]
    fn eta_comparable_to_lambda_y_on_grid() {
        // two-sided comparison with frozen constants [1/16, 16]
        for n in [50u64, 100, 200] {
            let nf = n as f64;
            for window in [2 * n, 3 * n, (0.5 * nf * nf.ln()).floor() as u64] {
                let p = params(n, window);
                let lam = lambda(p);
                for u in 1..=(window - 2) {
                    let s = last_occurrence_scales(p, u).unwrap();
                    let ratio = s.eta_u / (lam * s.y_u);
                    assert!(
                        (1.0 / 16.0..=16.0).contains(&ratio),
                        "n={n} M={window} u={u} ratio={ratio}"
                    );
                }
            }
        }
    }
}
