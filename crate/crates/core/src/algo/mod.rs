//! Online water-filling algorithms and their shared plumbing.

pub mod ab;
pub mod concave;
pub mod fd;
pub mod step_fn;
pub mod sub;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sample_assignment, Realization, RngStream};

/// Default water-filling step.
pub const DEFAULT_ETA: f64 = 1e-3;

/// An allocation row ends once its mass is within this of 1.
pub(crate) const FULL: f64 = 1e-12;

/// How g is evaluated on the unrealized indicator of the vertex in progress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GHatMode {
    /// Conditional expectation y g(1) + (1 - y) g(0) of g at the indicator.
    Expect,
    /// g at the fractional level y.
    #[default]
    Level,
}

/// What happens to an offline ledger once the vertex in progress is rounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LedgerPolicy {
    /// Keep the in-progress contribution at its expected value.
    Keep,
    /// Reset the ledger to its potential at the realized state.
    #[default]
    Resync,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub eta: f64,
    pub ghat: GHatMode,
    pub policy: LedgerPolicy,
    /// Record one [`StepRecord`] per water-filling step.
    pub trace: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            ghat: GHatMode::default(),
            policy: LedgerPolicy::default(),
            trace: false,
        }
    }
}

impl LoopConfig {
    pub fn with_eta(eta: f64) -> Self {
        Self {
            eta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 0.1) {
            return Err(Error::Config(format!(
                "step eta = {} must lie in (0, 0.1]",
                self.eta
            )));
        }
        Ok(())
    }
}

/// One water-filling step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Online index.
    pub j: usize,
    /// Offline index that received the mass.
    pub i: usize,
    pub x: f64,
    /// Offline-side ledger after the step (b_i, or beta for the sub-additive model).
    pub b: f64,
    pub a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    /// Increase of the expected primal.
    pub d_primal: f64,
    /// Increase of the dual objective.
    pub d_dual: f64,
}

impl StepRecord {
    pub fn rate(&self) -> Option<f64> {
        (self.d_primal > 0.0).then(|| self.d_dual / self.d_primal)
    }
}

/// An online algorithm whose randomness is one categorical draw per arrival.
pub trait OnlineAlgorithm: Clone {
    /// Fractional phase for arrival `j`: (offline index, probability) pairs.
    fn allocate(&mut self, j: usize) -> Result<Vec<(usize, f64)>>;
    /// Records the rounding outcome of arrival `j`.
    fn commit(&mut self, j: usize, choice: Option<usize>);
    /// Realized reward so far.
    fn primal(&self) -> f64;
    /// Dual objective so far.
    fn dual(&self) -> f64;
    fn n_online(&self) -> usize;
}

/// Runs every arrival with categorical rounding and returns the realization.
pub fn simulate<A: OnlineAlgorithm>(alg: &mut A, rng: &mut RngStream) -> Result<Realization> {
    let n = alg.n_online();
    let mut real = Realization::empty(n);
    for j in 0..n {
        let row = alg.allocate(j)?;
        let choice = sample_assignment(&row, rng)?;
        alg.commit(j, choice);
        real.assign[j] = choice;
    }
    Ok(real)
}

/// Integral over [0, s] of a ledger increment t -> f(t), with f(0) = 0, by Simpson's rule.
pub(crate) fn simpson_increment(f: impl Fn(f64) -> f64, s: f64) -> f64 {
    s / 6.0 * (4.0 * f(0.5 * s) + f(s))
}

/// Lowest index maximizing `key` among candidates that pass `eligible`.
pub(crate) fn argmax_by<T>(
    items: &[T],
    eligible: impl Fn(&T) -> bool,
    key: impl Fn(&T) -> f64,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, it) in items.iter().enumerate() {
        if !eligible(it) {
            continue;
        }
        let v = key(it);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_to_first() {
        let v = [1.0, 3.0, 3.0, 2.0];
        assert_eq!(argmax_by(&v, |_| true, |&x| x), Some(1));
        assert_eq!(argmax_by(&v, |&x| x < 3.0, |&x| x), Some(3));
        assert_eq!(argmax_by(&v, |_| false, |&x| x), None);
    }

    #[test]
    fn simpson_exact_on_quadratics() {
        let f = |t: f64| 2.0 * t + 3.0 * t * t;
        assert!((simpson_increment(f, 0.7) - (0.49 + 0.343)).abs() < 1e-15);
    }

    #[test]
    fn eta_range() {
        assert!(LoopConfig::with_eta(0.0).validate().is_err());
        assert!(LoopConfig::with_eta(0.2).validate().is_err());
        assert!(LoopConfig::with_eta(0.1).validate().is_ok());
    }
}
