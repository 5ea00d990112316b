use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::odd_ceil;

/// Repetition constants of the noisy algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgoConstants {
    /// Per-level multiplier of the one-round top-k repetitions.
    pub c: f64,
    /// Item-vs-pivot repetitions in the first round of two-round top-k.
    pub c1: f64,
    /// Per-level multiplier of the second round of two-round top-k.
    pub c2: f64,
    /// Budget multiplier of `n^(4/3)` for two-round top-k.
    pub c0: f64,
    /// Applied to every repetition count and to `c0`.
    pub constant_scale: f64,
}

impl Default for AlgoConstants {
    fn default() -> Self {
        Self {
            c: 864.0,
            c1: 2304.0,
            c2: 864.0,
            c0: 2304.0 + 20000.0 * 864.0 + 1.0,
            constant_scale: 1.0,
        }
    }
}

impl AlgoConstants {
    pub fn scaled(scale: f64) -> Self {
        Self {
            constant_scale: scale,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c", self.c),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c0", self.c0),
            ("constant_scale", self.constant_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Odd repetition count for a base of `x` comparisons.
    pub fn reps(&self, x: f64) -> u32 {
        odd_ceil(x * self.constant_scale)
    }

    /// Halting budget `c0 n^(4/3)` after scaling.
    pub fn budget(&self, n: usize) -> u64 {
        (self.c0 * self.constant_scale * (n as f64).powf(4.0 / 3.0)).ceil() as u64
    }
}

/// `D(1/2 || q)` in nats, the exponent of a majority vote's error with
/// per-comparison error `q`.
pub fn majority_rate(q: f64) -> f64 {
    0.5 * (0.5 / q).ln() + 0.5 * (0.5 / (1.0 - q)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = AlgoConstants::default();
        assert_eq!(c.c0, 17_282_305.0);
        assert_eq!(c.reps(c.c), 865);
        assert_eq!(c.reps(c.c1), 2305);
        assert!(c.validate().is_ok());
        assert!(AlgoConstants::scaled(0.0).validate().is_err());
    }

    #[test]
    fn rate_at_one_third() {
        assert!((majority_rate(1.0 / 3.0) - 0.058_891_5).abs() < 1e-6);
    }
}
