//! Model parameters for the expiring collector.

use crate::error::{Error, Result};

/// The pair `(n, M)`: number of coupon types and window length in draws.
///
/// Completion is impossible for `M < n`, so the constructor rejects it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelParams {
    n: u64,
    window: u64,
}

impl ModelParams {
    pub fn new(n: u64, window: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("need at least one coupon type".into()));
        }
        if window < n {
            return Err(Error::Domain(format!(
                "window length {window} is shorter than the {n} types it must hold"
            )));
        }
        Ok(Self { n, window })
    }

    /// Number of coupon types.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Window length `M` in draws.
    pub fn window(&self) -> u64 {
        self.window
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_windows() {
        assert!(ModelParams::new(3, 2).is_err());
        assert!(ModelParams::new(0, 5).is_err());
        assert!(ModelParams::new(3, 3).is_ok());
    }
}
