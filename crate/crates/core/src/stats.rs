//! Goodness-of-fit checks against Exp(1).
//!
//! The caller owns the normalization: these functions consume samples that
//! have already been scaled (completion times multiplied by the exact entry
//! flux) and compare them with the standard exponential law.

use crate::error::{Error, Result};

/// Confidence level backing the DKW band width.
pub const DKW_CONFIDENCE: f64 = 0.99;

/// Distributional report for a scaled sample.
#[derive(Debug, Clone)]
pub struct GofReport {
    pub sample_count: usize,
    /// Sup-distance between the empirical CDF and `1 - e^-x`.
    pub ks_stat: f64,
    /// Empirical moments of order 1..=4.
    pub moments: Vec<f64>,
    /// DKW band half-width at confidence [`DKW_CONFIDENCE`].
    pub dkw_epsilon: f64,
}

pub fn dkw_epsilon(sample_count: usize) -> f64 {
    ((2.0 / (1.0 - DKW_CONFIDENCE)).ln() / (2.0 * sample_count as f64)).sqrt()
}

fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

/// Exact Kolmogorov-Smirnov distance to Exp(1) via the sorted-sample formula
/// `max_i max(i/N - F(x_(i)), F(x_(i)) - (i-1)/N)`.
pub fn ks_exp1(scaled: &[f64]) -> Result<GofReport> {
    if scaled.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = scaled.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("samples must not be NaN"));
    let n = xs.len() as f64;
    let mut ks: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = exp1_cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        ks = ks.max(above).max(below);
    }
    let moments = (1..=4)
        .map(|r| xs.iter().map(|x| x.powi(r)).sum::<f64>() / n)
        .collect();
    Ok(GofReport {
        sample_count: xs.len(),
        ks_stat: ks,
        moments,
        dkw_epsilon: dkw_epsilon(xs.len()),
    })
}

/// An empirical moment with its jackknife standard error.
#[derive(Debug, Clone, Copy)]
pub struct MomentEstimate {
    pub order: u32,
    pub value: f64,
    /// Jackknife standard error; `None` for a single observation.
    pub stderr: Option<f64>,
}

/// Empirical moments of order `1..=r_max` (at most 4; higher moments are
/// too noisy to be worth reporting at desk scale).
pub fn empirical_moments(scaled: &[f64], r_max: u32) -> Result<Vec<MomentEstimate>> {
    if scaled.is_empty() {
        return Err(Error::EmptySample);
    }
    if r_max == 0 || r_max > 4 {
        return Err(Error::Domain(format!("moment order must lie in 1..=4, got {r_max}")));
    }
    let n = scaled.len();
    let mut out = Vec::with_capacity(r_max as usize);
    for r in 1..=r_max {
        let ys: Vec<f64> = scaled.iter().map(|x| x.powi(r as i32)).collect();
        let mean = ys.iter().sum::<f64>() / n as f64;
        // leave-one-out jackknife; for a plain mean the replicates collapse
        // to (S - y_i)/(n-1)
        let stderr = (n >= 2).then(|| {
            let dev_sq: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
            (dev_sq / (n as f64 * (n - 1) as f64)).sqrt()
        });
        out.push(MomentEstimate {
            order: r,
            value: mean,
            stderr,
        });
    }
    Ok(out)
}
