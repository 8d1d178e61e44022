//! Sliding-window ("expiring") coupon collector toolkit.
//!
//! One coupon is drawn uniformly from `n` types at each step and stays active
//! for exactly `M` draws, so the active set is the set of types in the last
//! `M` draws. Completion means that window contains every type.
//!
//! The crate provides:
//!
//! - exact window combinatorics: the stationary onto-window mass
//!   `n! S(M,n) / n^M` and the entry flux `(n-1)(n-1)! S(M-1,n-1) / n^M`,
//!   carried in dual exact-rational / log-space form ([`combinatorics`]);
//! - closed-form regime quantities: the missing-type mean, the saddle
//!   parameter `tau(a)` and rate `I(a)` for proportional windows, critical
//!   window limits, and last-occurrence scale functions ([`asymptotics`]);
//! - a high-throughput window simulator with reproducible parallel trial
//!   batches, stationary entry scans, and conditioned post-entry traces
//!   ([`sim`]);
//! - tiny-scale ground truth by exhaustive enumeration and exact rational
//!   hitting-time solves ([`oracle`]);
//! - zero-truncated Poisson local-limit numerics ([`ztp`]);
//! - Kolmogorov-Smirnov and moment checks against Exp(1) ([`stats`]).

pub mod asymptotics;
pub mod combinatorics;
pub mod error;
pub mod logspace;
pub mod oracle;
pub mod params;
pub mod prob;
pub mod sim;
pub mod stats;
pub mod ztp;

pub use error::{Error, Result};
pub use params::ModelParams;
pub use prob::DualProb;
