//! Shared fixed-point machinery.
//!
//! Every quantity the crate predicts is the *largest* fixed point of a
//! monotone map, reached by iterating downward from an upper bound. The
//! iterates are the finite-depth probabilities, so stopping early still yields
//! an upper bound on the answer.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ratio of successive step sizes above which a run is flagged near-critical.
pub const NEAR_CRITICAL_RATE: f64 = 1.0 - 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointConfig {
    /// Stop once successive iterates differ by at most this much.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Limits below this value are reported as exactly zero.
    pub positivity_cutoff: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 1_000_000,
            positivity_cutoff: 1e-9,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.positivity_cutoff > self.tolerance) || !self.positivity_cutoff.is_finite() {
            return Err(Error::config(format!(
                "positivity cutoff {} must exceed tolerance {}",
                self.positivity_cutoff, self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations must be at least 1"));
        }
        Ok(())
    }
}

/// Outcome of a fixed-point solve.
///
/// `residual` is `|value - F(value)|` (the sup norm for vectors) for the map
/// that was solved, evaluated at the returned value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult<T = f64> {
    pub value: T,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Convergence was slower than `1 - 1e-4` per step at the end of the run,
    /// which happens only next to a threshold.
    pub near_critical: bool,
}

impl<T> SolveResult<T> {
    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> SolveResult<U> {
        SolveResult {
            value: f(self.value),
            residual: self.residual,
            iterations: self.iterations,
            converged: self.converged,
            near_critical: self.near_critical,
        }
    }
}

/// Minimum-degree parameter `k ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct CoreOrder(u32);

impl CoreOrder {
    pub fn new(k: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::domain(format!("core order must be at least 2, got {k}")));
        }
        Ok(Self(k))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub(crate) fn as_u64(self) -> u64 {
        self.0 as u64
    }

    /// Rejects `k = 2` for operations whose closed forms need `k ≥ 3`.
    pub fn require_at_least_3(self) -> Result<Self> {
        if self.0 < 3 {
            return Err(Error::domain("this operation requires k ≥ 3"));
        }
        Ok(self)
    }
}

impl From<CoreOrder> for u32 {
    fn from(k: CoreOrder) -> u32 {
        k.0
    }
}

impl TryFrom<u32> for CoreOrder {
    type Error = Error;

    fn try_from(k: u32) -> Result<Self> {
        Self::new(k)
    }
}

/// Iterates the nonincreasing scalar map `map` from `start` down to its
/// largest fixed point.
///
/// A run that drops below the positivity cutoff is reported as the zero fixed
/// point (`map(0)` must be `0` for such maps).
pub(crate) fn iterate_down<F: Fn(f64) -> f64>(
    map: F,
    start: f64,
    cfg: &FixedPointConfig,
) -> SolveResult<f64> {
    let mut x = start;
    let mut prev_step = f64::NAN;
    let mut rate = 0.0;
    for it in 1..=cfg.max_iterations {
        let next = map(x);
        let step = (x - next).abs();
        if step > 0.0 && prev_step > 0.0 {
            rate = step / prev_step;
        }
        prev_step = step;
        if next < cfg.positivity_cutoff {
            let residual = map(0.0).abs();
            return SolveResult {
                value: 0.0,
                residual,
                iterations: it,
                converged: residual <= cfg.tolerance,
                near_critical: rate > NEAR_CRITICAL_RATE,
            };
        }
        x = next;
        if step <= cfg.tolerance {
            let residual = (x - map(x)).abs();
            return SolveResult {
                value: x,
                residual,
                iterations: it,
                converged: residual <= cfg.tolerance,
                near_critical: rate > NEAR_CRITICAL_RATE,
            };
        }
    }
    SolveResult {
        value: x,
        residual: (x - map(x)).abs(),
        iterations: cfg.max_iterations,
        converged: false,
        near_critical: rate > NEAR_CRITICAL_RATE,
    }
}
