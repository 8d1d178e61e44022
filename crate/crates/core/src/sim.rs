//! Sliding-window process simulation.
//!
//! The window state supports O(1) shift-and-append steps via a ring buffer
//! with per-type counts and a running distinct-type counter. Trial batches
//! run on independent ChaCha substreams (`seed_from_u64(master_seed)` plus
//! `set_stream(trial index)`), so results are reproducible and independent
//! of thread count or trial ordering.
//!
//! Entries into the onto-window set are exponentially rare in the regimes of
//! interest, so conditioned post-entry traces are built by direct sampling of
//! the entry characterization (missing color, onto middle block, fresh
//! append) rather than by waiting for live entries.

use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::combinatorics::coverage_dp;
use crate::error::{Error, Result};
use crate::logspace::{log_add, LOG_ZERO};
use crate::params::ModelParams;

/// Default per-trial step cap; truncated trials are counted, never silently
/// folded into the sample.
pub const DEFAULT_STEP_CAP: u64 = 1_000_000_000;

/// Acceptance probability below which onto-word sampling switches from
/// rejection to sequential conditional sampling.
pub const REJECTION_THRESHOLD: f64 = 0.01;

/// Cell budget for the sequential sampler's covering-probability table.
pub const SEQUENTIAL_TABLE_CELL_BUDGET: u64 = 100_000_000;

const BOOTSTRAP_RESAMPLES: u64 = 200;

/// Ring of the last `min(t, M)` draws with per-type counts.
#[derive(Debug, Clone)]
pub struct WindowState {
    n: u32,
    window: usize,
    ring: Vec<u32>,
    head: usize,
    counts: Vec<u32>,
    distinct: u32,
    t: u64,
}

/// What a single shift did to membership in the onto-window set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub entered: bool,
    pub exited: bool,
}

impl WindowState {
    pub fn new(params: ModelParams) -> Self {
        let n = u32::try_from(params.n()).expect("type count fits u32");
        let window = usize::try_from(params.window()).expect("window fits usize");
        Self {
            n,
            window,
            ring: vec![0; window],
            head: 0,
            counts: vec![0; n as usize],
            distinct: 0,
            t: 0,
        }
    }

    /// Start from a known full window (symbols in draw order, oldest first),
    /// as if `M` draws had already been made.
    pub fn from_full_window(params: ModelParams, contents: &[u32]) -> Self {
        let mut state = Self::new(params);
        assert_eq!(contents.len(), state.window, "window contents must have length M");
        for &s in contents {
            state.step(s);
        }
        state
    }

    /// Shift the window by one symbol. Amortized O(1).
    ///
    /// `entered` fires when the distinct count reaches `n` on this step,
    /// `exited` when it leaves `n`.
    pub fn step(&mut self, symbol: u32) -> StepOutcome {
        debug_assert!(symbol >= 1 && symbol <= self.n, "symbol out of range");
        let was_onto = self.distinct == self.n;
        if self.t >= self.window as u64 {
            let old = self.ring[self.head] as usize - 1;
            self.counts[old] -= 1;
            if self.counts[old] == 0 {
                self.distinct -= 1;
            }
        }
        self.ring[self.head] = symbol;
        let c = &mut self.counts[symbol as usize - 1];
        if *c == 0 {
            self.distinct += 1;
        }
        *c += 1;
        self.head += 1;
        if self.head == self.window {
            self.head = 0;
        }
        self.t += 1;
        let is_onto = self.distinct == self.n;
        StepOutcome {
            entered: is_onto && !was_onto,
            exited: was_onto && !is_onto,
        }
    }

    /// Draws made so far.
    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn distinct(&self) -> u32 {
        self.distinct
    }

    /// Whether every type appears in the current (possibly partial) window.
    pub fn is_onto(&self) -> bool {
        self.distinct == self.n
    }
}

/// Completion times from a reproducible batch of independent trials.
#[derive(Debug, Clone)]
pub struct TrialBatch {
    pub params: ModelParams,
    pub master_seed: u64,
    /// First completion time of each non-truncated trial, in trial order.
    pub samples: Vec<u64>,
    pub truncated_count: u64,
}

impl TrialBatch {
    pub fn mean(&self) -> f64 {
        self.samples.iter().map(|&t| t as f64).sum::<f64>() / self.samples.len() as f64
    }
}

fn substream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Run `trials` independent completion-time trials.
///
/// Trials whose completion has not occurred after `step_cap` draws are
/// excluded from `samples` and counted in `truncated_count`.
pub fn sample_completion_times(
    params: ModelParams,
    trials: u64,
    master_seed: u64,
    step_cap: u64,
) -> Result<TrialBatch> {
    if step_cap < params.window() {
        return Err(Error::Domain(format!(
            "step cap {step_cap} is below the window length {}",
            params.window()
        )));
    }
    let n = u32::try_from(params.n()).expect("type count fits u32");
    let outcomes: Vec<Option<u64>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(master_seed, i);
            let dist = Uniform::new_inclusive(1u32, n).expect("nonempty symbol range");
            let mut state = WindowState::new(params);
            for _ in 0..step_cap {
                if state.step(dist.sample(&mut rng)).entered {
                    return Some(state.time());
                }
            }
            None
        })
        .collect();

    let mut samples = Vec::with_capacity(outcomes.len());
    let mut truncated_count = 0;
    for o in outcomes {
        match o {
            Some(t) => samples.push(t),
            None => truncated_count += 1,
        }
    }
    if samples.is_empty() && trials > 0 {
        return Err(Error::AllTrialsTruncated {
            trials,
            step_cap,
        });
    }
    Ok(TrialBatch {
        params,
        master_seed,
        samples,
        truncated_count,
    })
}

/// Result of a stationary entry scan.
#[derive(Debug, Clone)]
pub struct ScanReport {
    pub params: ModelParams,
    pub master_seed: u64,
    pub horizon: u64,
    pub entries: u64,
    pub flux_estimate: f64,
    /// Block-bootstrap standard error (block length `4M`); `None` when the
    /// horizon holds fewer than two full blocks.
    pub stderr: Option<f64>,
}

/// Warm-start a window with `M` iid draws (the stationary law is exactly the
/// iid uniform law), then scan `horizon` further shifts counting entries.
pub fn stationary_entry_scan(params: ModelParams, horizon: u64, master_seed: u64) -> ScanReport {
    let n = u32::try_from(params.n()).expect("type count fits u32");
    let mut rng = substream(master_seed, 0);
    let dist = Uniform::new_inclusive(1u32, n).expect("nonempty symbol range");
    let mut state = WindowState::new(params);
    for _ in 0..params.window() {
        state.step(dist.sample(&mut rng));
    }

    let block_len = 4 * params.window();
    let full_blocks = horizon / block_len;
    let mut block_counts = vec![0u64; full_blocks as usize];
    let mut entries = 0u64;
    for step in 0..horizon {
        if state.step(dist.sample(&mut rng)).entered {
            entries += 1;
            let b = step / block_len;
            if b < full_blocks {
                block_counts[b as usize] += 1;
            }
        }
    }

    let flux_estimate = if horizon == 0 {
        0.0
    } else {
        entries as f64 / horizon as f64
    };

    let stderr = (full_blocks >= 2).then(|| {
        let mut boot = substream(master_seed, 1);
        let idx = Uniform::new(0usize, full_blocks as usize).expect("nonempty block range");
        let denom = (full_blocks * block_len) as f64;
        let mut estimates = Vec::with_capacity(BOOTSTRAP_RESAMPLES as usize);
        for _ in 0..BOOTSTRAP_RESAMPLES {
            let total: u64 = (0..full_blocks)
                .map(|_| block_counts[idx.sample(&mut boot)])
                .sum();
            estimates.push(total as f64 / denom);
        }
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / estimates.len() as f64)
            .sqrt()
    });

    ScanReport {
        params,
        master_seed,
        horizon,
        entries,
        flux_estimate,
        stderr,
    }
}

/// Exact uniform sampler for onto words over `0..alphabet`.
///
/// When the onto probability is at least [`REJECTION_THRESHOLD`] the sampler
/// rejects iid words; otherwise it samples each position from its exact
/// conditional law using covering probabilities.
#[derive(Debug, Clone)]
pub struct OntoWordSampler {
    alphabet: u32,
    length: usize,
    route: Route,
}

#[derive(Debug, Clone)]
enum Route {
    Rejection,
    /// `log_cover[r * (N+1) + k]` = log-probability that `r` iid draws cover
    /// `k` specified types.
    Sequential { log_cover: Vec<f64> },
}

impl OntoWordSampler {
    pub fn new(alphabet: u64, length: u64) -> Result<Self> {
        let log_onto = coverage_dp(alphabet, length).log_prob(alphabet);
        if log_onto >= REJECTION_THRESHOLD.ln() {
            Self::rejection(alphabet, length)
        } else {
            Self::sequential(alphabet, length)
        }
    }

    /// Force the rejection route (exported for sampler cross-validation).
    pub fn rejection(alphabet: u64, length: u64) -> Result<Self> {
        let (alphabet, length) = Self::check(alphabet, length)?;
        Ok(Self {
            alphabet,
            length,
            route: Route::Rejection,
        })
    }

    /// Force the sequential conditional route.
    pub fn sequential(alphabet: u64, length: u64) -> Result<Self> {
        let cells = (length + 1)
            .checked_mul(alphabet + 1)
            .filter(|&c| c <= SEQUENTIAL_TABLE_CELL_BUDGET)
            .ok_or_else(|| {
                Error::Budget(format!(
                    "sequential onto-word table needs {}*{} cells (cap {})",
                    length + 1,
                    alphabet + 1,
                    SEQUENTIAL_TABLE_CELL_BUDGET
                ))
            })?;
        let _ = cells;
        let (alphabet, length) = Self::check(alphabet, length)?;
        let n = alphabet as usize;
        let nf = alphabet as f64;
        let width = n + 1;
        let mut log_cover = vec![LOG_ZERO; (length + 1) * width];
        // r = 0 row: only k = 0 is covered
        for r in 0..=length {
            log_cover[r * width] = 0.0;
        }
        for r in 1..=length {
            for k in 1..=n.min(r) {
                let hit = (k as f64 / nf).ln() + log_cover[(r - 1) * width + k - 1];
                let miss = if k < n {
                    (((n - k) as f64) / nf).ln() + log_cover[(r - 1) * width + k]
                } else {
                    LOG_ZERO
                };
                log_cover[r * width + k] = log_add(hit, miss);
            }
        }
        Ok(Self {
            alphabet,
            length,
            route: Route::Sequential { log_cover },
        })
    }

    fn check(alphabet: u64, length: u64) -> Result<(u32, usize)> {
        if alphabet < 1 {
            return Err(Error::Domain("onto words need a nonempty alphabet".into()));
        }
        if length < alphabet {
            return Err(Error::Domain(format!(
                "no onto word of length {length} over {alphabet} letters"
            )));
        }
        Ok((
            u32::try_from(alphabet).expect("alphabet fits u32"),
            usize::try_from(length).expect("length fits usize"),
        ))
    }

    /// Draw one uniform onto word; letters are `0..alphabet`.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<u32> {
        match &self.route {
            Route::Rejection => self.sample_rejection(rng),
            Route::Sequential { log_cover } => self.sample_sequential(rng, log_cover),
        }
    }

    fn sample_rejection(&self, rng: &mut impl Rng) -> Vec<u32> {
        let dist = Uniform::new(0u32, self.alphabet).expect("nonempty alphabet");
        let mut word = vec![0u32; self.length];
        let mut seen = vec![false; self.alphabet as usize];
        loop {
            let mut distinct = 0u32;
            for slot in word.iter_mut() {
                let s = dist.sample(rng);
                *slot = s;
                if !seen[s as usize] {
                    seen[s as usize] = true;
                    distinct += 1;
                }
            }
            if distinct == self.alphabet {
                return word;
            }
            seen.fill(false);
        }
    }

    fn sample_sequential(&self, rng: &mut impl Rng, log_cover: &[f64]) -> Vec<u32> {
        let n = self.alphabet as usize;
        let width = n + 1;
        let mut missing: Vec<u32> = (0..self.alphabet).collect();
        let mut covered: Vec<u32> = Vec::with_capacity(n);
        let mut word = Vec::with_capacity(self.length);
        for pos in 0..self.length {
            let r = self.length - pos;
            let k = missing.len();
            let take_missing = if k == r {
                true
            } else if k == 0 {
                false
            } else {
                // P(emit a missing letter | word ends onto)
                //   = (k/N) cover(k-1, r-1) / cover(k, r)
                let lp = (k as f64 / n as f64).ln() + log_cover[(r - 1) * width + k - 1]
                    - log_cover[r * width + k];
                rng.random::<f64>() < lp.exp()
            };
            if take_missing {
                let j = rng.random_range(0..missing.len());
                let c = missing.swap_remove(j);
                covered.push(c);
                word.push(c);
            } else {
                let j = rng.random_range(0..covered.len());
                word.push(covered[j]);
            }
        }
        debug_assert!(missing.is_empty());
        word
    }
}

/// Draw one uniform onto word over `0..alphabet` of the given length.
pub fn sample_onto_word(alphabet: u64, length: u64, master_seed: u64) -> Result<Vec<u32>> {
    let sampler = OntoWordSampler::new(alphabet, length)?;
    Ok(sampler.sample(&mut substream(master_seed, 0)))
}

/// Number of letters whose last occurrence in `word` lies in positions
/// `1..=u` (positions are 1-based).
pub fn last_occurrence_count(word: &[u32], u: usize) -> u32 {
    assert!(u >= 1 && u <= word.len(), "offset out of range");
    last_occurrence_profile(word)[u - 1]
}

/// All counts `R_1..R_len` at once, in O(len).
pub fn last_occurrence_profile(word: &[u32]) -> Vec<u32> {
    use std::collections::HashMap;
    let mut last: HashMap<u32, usize> = HashMap::new();
    for (i, &c) in word.iter().enumerate() {
        last.insert(c, i);
    }
    let mut hist = vec![0u32; word.len()];
    for &i in last.values() {
        hist[i] += 1;
    }
    let mut acc = 0;
    hist.iter_mut().for_each(|h| {
        acc += *h;
        *h = acc;
    });
    hist
}

/// Post-entry record from one conditioned trial: the window is onto at time
/// 0 by construction, then evolves `M` fresh steps.
#[derive(Debug, Clone)]
pub struct EntryTrace {
    /// Number of recorded steps (`M`).
    pub horizon: usize,
    /// Entry indicators at offsets `1..=M` after the conditioned entry.
    pub e_indicators: Vec<bool>,
    /// Last-occurrence counts `R_1..R_(M-2)` of the conditioned middle block.
    pub r_counts: Vec<u32>,
}

impl EntryTrace {
    /// Number of further entries within the trace.
    pub fn entry_count(&self) -> u32 {
        self.e_indicators.iter().map(|&b| b as u32).sum()
    }
}

fn conditioned_entry_trace(
    params: ModelParams,
    sampler: &OntoWordSampler,
    rng: &mut impl Rng,
) -> EntryTrace {
    let n = params.n() as u32;
    let window = params.window() as usize;

    // the entry characterization: a missing color, an onto middle block over
    // the other colors, a fresh append of the missing color, and a departing
    // symbol different from it
    let missing_color = rng.random_range(1..=n);
    let reduced = sampler.sample(rng); // letters 0..n-2
    let remap = |idx: u32| {
        let candidate = idx + 1;
        if candidate >= missing_color {
            candidate + 1
        } else {
            candidate
        }
    };
    let middle: Vec<u32> = reduced.iter().map(|&i| remap(i)).collect();
    let _departing = remap(rng.random_range(0..n - 1));

    let mut contents = middle.clone();
    contents.push(missing_color);
    let mut state = WindowState::from_full_window(params, &contents);
    assert!(state.is_onto(), "conditioned window must be onto at time 0");

    let dist = Uniform::new_inclusive(1u32, n).expect("nonempty symbol range");
    let mut e_indicators = Vec::with_capacity(window);
    for _ in 0..window {
        e_indicators.push(state.step(dist.sample(rng)).entered);
    }

    let mut r_counts = last_occurrence_profile(&middle);
    r_counts.truncate(window.saturating_sub(2));

    EntryTrace {
        horizon: window,
        e_indicators,
        r_counts,
    }
}

/// One conditioned post-entry trial.
pub fn conditional_entry_trial(params: ModelParams, master_seed: u64) -> Result<EntryTrace> {
    let batch = conditional_entry_batch(params, 1, master_seed)?;
    Ok(batch.into_iter().next().expect("one trial requested"))
}

/// A reproducible batch of conditioned post-entry trials (one substream per
/// trial, merged in trial order).
pub fn conditional_entry_batch(
    params: ModelParams,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<EntryTrace>> {
    if params.n() < 2 {
        return Err(Error::Domain(
            "conditioned entries need n >= 2: with one type every window is onto".into(),
        ));
    }
    let sampler = OntoWordSampler::new(params.n() - 1, params.window() - 1)?;
    Ok((0..trials)
        .into_par_iter()
        .map(|i| conditioned_entry_trace(params, &sampler, &mut substream(master_seed, i)))
        .collect())
}

/// Monte Carlo estimate of the expected number of further entries within
/// the dependence range of a conditioned entry.
#[derive(Debug, Clone, Copy)]
pub struct ThetaEstimate {
    pub theta_hat: f64,
    /// Sample standard deviation over trials divided by sqrt(trials);
    /// `None` for a single trial.
    pub stderr: Option<f64>,
    pub trials: u64,
}

pub fn theta_estimate(params: ModelParams, trials: u64, master_seed: u64) -> Result<ThetaEstimate> {
    if trials == 0 {
        return Err(Error::Domain("theta estimation needs at least one trial".into()));
    }
    let traces = conditional_entry_batch(params, trials, master_seed)?;
    let xs: Vec<f64> = traces.iter().map(|t| t.entry_count() as f64).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let stderr = (trials >= 2).then(|| {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        (var / xs.len() as f64).sqrt()
    });
    Ok(ThetaEstimate {
        theta_hat: mean,
        stderr,
        trials,
    })
}

/// The declumping weight bounding `P(E_u = 1 | U, E_0 = 1)` given that `r`
/// letters of the middle block have fully shifted out by offset `u`:
/// `(r/n) (1-1/n)^(u-1) exp(-(r-1)_+ (1-1/(n-1))^(u-1))`.
pub fn entry_pair_weight(params: ModelParams, u: u64, r: u32) -> f64 {
    let n = params.n() as f64;
    let shift = (u - 1) as f64;
    // at u = 1 both geometric factors are empty products (n = 2 would
    // otherwise hit 0 * ln 0)
    let (avoid, repair) = if u == 1 {
        (1.0, 1.0)
    } else {
        (
            (shift * (-1.0 / n).ln_1p()).exp(),
            (shift * (-1.0 / (n - 1.0)).ln_1p()).exp(),
        )
    };
    let excess = (r.saturating_sub(1)) as f64;
    (r as f64 / n) * avoid * (-excess * repair).exp()
}

/// Sum of the declumping weights over offsets `1..=M-1` for one trace,
/// using the deterministic endpoint `R_(M-1) = n-1`.
pub fn entry_pair_bound_sum(params: ModelParams, trace: &EntryTrace) -> f64 {
    let window = params.window();
    let reduced_n = (params.n() - 1) as u32;
    let mut total = 0.0;
    for u in 1..window {
        let r = if (u as usize) <= trace.r_counts.len() {
            trace.r_counts[u as usize - 1]
        } else {
            reduced_n
        };
        total += entry_pair_weight(params, u, r);
    }
    total
}
