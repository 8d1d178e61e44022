//! Zero-truncated Poisson local-limit numerics.
//!
//! A uniform onto word of length `m` over `N` letters has per-letter counts
//! distributed, after Poissonization at the saddle parameter `tau` solving
//! `tau / (1 - e^-tau) = m/N`, as iid zero-truncated Poisson variables
//! conditioned on their total. This module evaluates that family exactly:
//! the pmf, the exact convolution `P(D_1 + ... + D_N = m)`, the Gaussian
//! local value `(2 pi B)^(-1/2)`, the bounded-variance lower-bound
//! construction, the split-conditioning probability, and the characteristic
//! function modulus.

use crate::asymptotics::tau_solve;
use crate::error::{Error, Result};
use crate::logspace::{ln_choose, ln_expm1, LOG_ZERO};
use statrs::function::gamma::ln_gamma;

/// Multiply-add budget for the exact convolution.
pub const DEFAULT_CONVOLUTION_BUDGET: u64 = 100_000_000;

/// Per-variable pmf tail mass at which the convolution support is truncated.
const PMF_TAIL_EPS: f64 = 1e-15;

/// Zero-truncated Poisson family fitted to `N` colors carrying `m` total
/// counts: `P(D = k) = tau^k / (k! (e^tau - 1))`, `k >= 1`.
///
/// `m = N` is the degenerate `tau = 0` limit (unit point mass, zero
/// variance).
#[derive(Debug, Clone, Copy)]
pub struct ZtpModel {
    colors: u64,
    total: u64,
    tau: f64,
    mu_tau: f64,
    sigma2: f64,
    b: f64,
}

impl ZtpModel {
    pub fn new(colors: u64, total: u64) -> Result<Self> {
        if colors < 1 {
            return Err(Error::Domain("need at least one color".into()));
        }
        if total < colors {
            return Err(Error::Domain(format!(
                "total count {total} cannot cover {colors} colors with positive counts"
            )));
        }
        if total == colors {
            return Ok(Self {
                colors,
                total,
                tau: 0.0,
                mu_tau: 1.0,
                sigma2: 0.0,
                b: 0.0,
            });
        }
        let tau = tau_solve(total as f64 / colors as f64)?;
        let denom = -(-tau).exp_m1();
        let mu_tau = tau / denom;
        let sigma2 = (tau * tau + tau) / denom - mu_tau * mu_tau;
        Ok(Self {
            colors,
            total,
            tau,
            mu_tau,
            sigma2,
            b: colors as f64 * sigma2,
        })
    }

    pub fn colors(&self) -> u64 {
        self.colors
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn mu_tau(&self) -> f64 {
        self.mu_tau
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Variance of the total: `B = N sigma^2`.
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn log_pmf(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(Error::Domain("the family is zero-truncated; k >= 1".into()));
        }
        if self.tau == 0.0 {
            return Ok(if k == 1 { 0.0 } else { LOG_ZERO });
        }
        Ok(k as f64 * self.tau.ln() - ln_gamma(k as f64 + 1.0) - ln_expm1(self.tau))
    }

    pub fn pmf(&self, k: u64) -> Result<f64> {
        Ok(self.log_pmf(k)?.exp())
    }
}

/// Exact (to rounding) convolution value with its truncation accounting.
#[derive(Debug, Clone, Copy)]
pub struct ZtpSumExact {
    /// `P(D_1 + ... + D_N = m)`.
    pub prob: f64,
    /// Upper bound on the probability mass discarded by truncating each
    /// variable's support (union bound over colors).
    pub truncated_mass: f64,
    /// Per-variable support cap used by the convolution.
    pub support_cap: u64,
}

/// `P(D_1 + ... + D_N = m)` by iterated convolution of the per-variable pmf
/// truncated at tail mass `1e-15`.
pub fn ztp_sum_exact(model: &ZtpModel) -> Result<ZtpSumExact> {
    ztp_sum_exact_with_budget(model, DEFAULT_CONVOLUTION_BUDGET)
}

pub fn ztp_sum_exact_with_budget(model: &ZtpModel, budget: u64) -> Result<ZtpSumExact> {
    let n = model.colors;
    let m = model.total;
    if model.tau == 0.0 {
        return Ok(ZtpSumExact {
            prob: 1.0,
            truncated_mass: 0.0,
            support_cap: 1,
        });
    }

    // truncate the per-variable support once its tail is negligible
    let mut pmf: Vec<f64> = Vec::new();
    let mut cum = 0.0;
    let mut k = 1u64;
    let cap = loop {
        let p = model.pmf(k)?;
        pmf.push(p);
        cum += p;
        if 1.0 - cum <= PMF_TAIL_EPS || k >= m {
            break k;
        }
        k += 1;
    };
    let tail = (1.0 - cum).max(0.0);

    // per variable the inner loops touch at most cap * (support width)
    // cells, and the pruned support is never wider than m - N + cap
    let width = m - n + cap;
    let ops = n
        .checked_mul(cap)
        .and_then(|x| x.checked_mul(width))
        .filter(|&x| x <= budget)
        .ok_or_else(|| {
            Error::Budget(format!(
                "convolution needs about {n} * {cap} * {width} multiply-adds (budget {budget})"
            ))
        })?;
    let _ = ops;

    let msize = m as usize;
    let mut dist = vec![0.0f64; msize + 1];
    dist[0] = 1.0;
    // support bounds of the partial sum; values above m - (remaining
    // variables) can never reach m and are pruned
    let mut hi_prev = 0usize;
    for j in 1..=n {
        let lo = (j - 1) as usize;
        let reach = msize - (n - j) as usize;
        let hi = (hi_prev + cap as usize).min(reach);
        let mut next = vec![0.0f64; msize + 1];
        for (step, &p) in pmf.iter().enumerate() {
            let k = step + 1;
            if lo + k > hi {
                break;
            }
            for s in (lo + k)..=hi {
                next[s] += dist[s - k] * p;
            }
        }
        dist = next;
        hi_prev = hi;
    }
    Ok(ZtpSumExact {
        prob: dist[msize],
        truncated_mass: n as f64 * tail,
        support_cap: cap,
    })
}

/// Gaussian local value `(2 pi B)^(-1/2)` for the sum's point mass at its
/// mean.
pub fn gaussian_local(model: &ZtpModel) -> f64 {
    gaussian_local_value(model.b())
}

pub fn gaussian_local_value(b: f64) -> f64 {
    1.0 / (2.0 * std::f64::consts::PI * b).sqrt()
}

/// Lower bound on the sum's point mass from the configuration with exactly
/// `k = m - N` twos and the rest ones: `C(N,k) p_2^k p_1^(N-k)`.
pub fn bounded_b_construction(model: &ZtpModel) -> Result<f64> {
    let n = model.colors;
    let k = model.total - model.colors;
    if k > n {
        // needs a value >= 3 somewhere; the two-point construction is void
        return Ok(0.0);
    }
    if model.tau == 0.0 {
        return Ok(1.0); // k = 0 and p_1 = 1
    }
    let log = ln_choose(n, k)
        + k as f64 * model.log_pmf(2)?
        + (n - k) as f64 * model.log_pmf(1)?;
    Ok(log.exp())
}

/// Split-conditioning probability
/// `P_*(C_u) = P_*(S_N = m) * P(Bin(m, u/m) = u)`.
pub fn conditioning_prob(colors: u64, total: u64, u: u64) -> Result<f64> {
    if colors < 2 || total <= colors {
        return Err(Error::Domain(format!(
            "split conditioning needs m > N >= 2, got N={colors}, m={total}"
        )));
    }
    if u < 1 || u > total - 1 {
        return Err(Error::Domain(format!(
            "split point u = {u} outside 1..={}",
            total - 1
        )));
    }
    let model = ZtpModel::new(colors, total)?;
    let sum = ztp_sum_exact(&model)?;
    let mf = total as f64;
    let uf = u as f64;
    let log_binom =
        ln_choose(total, u) + uf * (uf / mf).ln() + (mf - uf) * ((mf - uf) / mf).ln();
    Ok(sum.prob * log_binom.exp())
}

/// Modulus of the characteristic function
/// `phi(t) = (e^(tau e^(it)) - 1) / (e^tau - 1)` at a frequency `|t| <= pi`.
pub fn cf_modulus(model: &ZtpModel, t: f64) -> Result<f64> {
    if t.abs() > std::f64::consts::PI {
        return Err(Error::Domain(format!("|t| must be at most pi, got {t}")));
    }
    if model.tau == 0.0 {
        return Ok(1.0); // point mass at 1
    }
    let tau = model.tau;
    let scale = (tau * t.cos()).exp();
    let angle = tau * t.sin();
    let re = scale * angle.cos() - 1.0;
    let im = scale * angle.sin();
    Ok(re.hypot(im) / tau.exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_moment_identities() {
        let m = ZtpModel::new(200, 400).unwrap();
        // the saddle equation pins the mean at m/N
        assert!((m.mu_tau() - 2.0).abs() <= 1e-10 * 2.0);
        assert!((m.tau() - 1.593_624_260_040_04).abs() < 1e-12);
        assert!(m.sigma2() > 0.0);
        assert!((m.b() - 200.0 * m.sigma2()).abs() < 1e-12);
        assert!(ZtpModel::new(10, 9).is_err());
    }

    #[test]
    fn pmf_normalizes_and_matches_mean() {
        let model = ZtpModel::new(100, 300).unwrap(); // tau ~ 2.82
        assert!(model.tau() <= 5.0);
        let mut total = 0.0;
        let mut mean = 0.0;
        for k in 1..=50 {
            let p = model.pmf(k).unwrap();
            total += p;
            mean += k as f64 * p;
        }
        assert!((1.0 - total).abs() < 1e-12);
        assert!((mean - model.mu_tau()).abs() < 1e-9);
        assert!(model.pmf(0).is_err());
    }

    #[test]
    fn pmf_degenerates_to_point_mass() {
        // tau -> 0: all mass at k = 1
        let nearly = ZtpModel::new(1000, 1001).unwrap();
        assert!(nearly.pmf(1).unwrap() > 0.99);
        let exact = ZtpModel::new(5, 5).unwrap();
        assert_eq!(exact.pmf(1).unwrap(), 1.0);
        assert_eq!(exact.pmf(2).unwrap(), 0.0);
    }

    #[test]
    fn sum_exact_small_cases() {
        // N = 1: the sum is the variable itself
        let m = ZtpModel::new(1, 4).unwrap();
        let s = ztp_sum_exact(&m).unwrap();
        assert!((s.prob - m.pmf(4).unwrap()).abs() < 1e-14);

        // N = 2, m = 3: compositions 1+2 and 2+1
        let m = ZtpModel::new(2, 3).unwrap();
        let s = ztp_sum_exact(&m).unwrap();
        let expect = 2.0 * m.pmf(1).unwrap() * m.pmf(2).unwrap();
        assert!((s.prob - expect).abs() < 1e-12, "{} vs {expect}", s.prob);

        // degenerate m = N
        let m = ZtpModel::new(2, 2).unwrap();
        assert_eq!(ztp_sum_exact(&m).unwrap().prob, 1.0);
    }

    #[test]
    fn sum_matches_gaussian_local_value() {
        let model = ZtpModel::new(200, 400).unwrap();
        let s = ztp_sum_exact(&model).unwrap();
        let g = gaussian_local(&model);
        assert!((s.prob / g - 1.0).abs() < 0.1, "{} vs {g}", s.prob);
        assert!(s.truncated_mass < 1e-10);
        // independently recomputed scale at (200, 400)
        assert!((model.sigma2() - 1.1873).abs() < 1e-3);
        assert!((g - 0.0259).abs() < 1e-4);
    }

    #[test]
    fn gaussian_local_analytic_points() {
        assert!((gaussian_local_value(1.0 / (2.0 * std::f64::consts::PI)) - 1.0).abs() < 1e-12);
        assert!(gaussian_local_value(10.0) < gaussian_local_value(5.0));
    }

    #[test]
    fn bounded_b_construction_is_a_lower_bound() {
        let model = ZtpModel::new(10, 12).unwrap();
        let lb = bounded_b_construction(&model).unwrap();
        let s = ztp_sum_exact(&model).unwrap();
        assert!(lb <= s.prob + 1e-15, "{lb} vs {}", s.prob);

        let model = ZtpModel::new(5, 5).unwrap();
        assert_eq!(bounded_b_construction(&model).unwrap(), 1.0);

        // small tau, polynomial floor
        let model = ZtpModel::new(1000, 1002).unwrap();
        let lb = bounded_b_construction(&model).unwrap();
        assert!(lb >= (1002f64).powi(-5), "{lb}");
    }

    #[test]
    fn conditioning_prob_properties() {
        // symmetric under u <-> m - u
        let a = conditioning_prob(50, 100, 30).unwrap();
        let b = conditioning_prob(50, 100, 70).unwrap();
        assert_eq!(a, b);

        assert!(conditioning_prob(50, 100, 50).unwrap() >= 100f64.powi(-5));
        let edge = conditioning_prob(50, 100, 1).unwrap();
        assert!(edge > 0.0 && edge >= 100f64.powi(-8));

        assert!(conditioning_prob(50, 50, 10).is_err());
        assert!(conditioning_prob(50, 100, 0).is_err());
        assert!(conditioning_prob(50, 100, 100).is_err());
    }

    #[test]
    fn cf_modulus_damping() {
        let model = ZtpModel::new(100, 250).unwrap();
        assert_eq!(cf_modulus(&model, 0.0).unwrap(), 1.0);
        assert!(cf_modulus(&model, 3.5).is_err());

        // strictly inside the unit disc away from t = 0 (span one), for a
        // spread of tau values up to 12
        for ratio in [1.05f64, 1.5, 2.8, 7.0, 12.0] {
            let n = 1000u64;
            let m = (ratio * n as f64).round() as u64;
            let model = ZtpModel::new(n, m).unwrap();
            let mut t = 0.05;
            while t <= std::f64::consts::PI {
                let v = cf_modulus(&model, t).unwrap();
                assert!(v < 1.0, "tau={} t={t} v={v}", model.tau());
                t += 0.05;
            }
        }

        // quadratic damping near the origin with the frozen constant 0.05
        let m = ZtpModel::new(1000, 1931).unwrap(); // tau ~ 1.5
        let tau = m.tau();
        assert!((tau - 1.5).abs() < 0.01);
        let v = cf_modulus(&m, 0.3).unwrap();
        assert!(v <= (-0.05 * tau * 0.09).exp(), "{v}");
    }
}
