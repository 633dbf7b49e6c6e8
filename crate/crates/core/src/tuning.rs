//! Stochastic-approximation tuning of the initial length scale μ.
//!
//! `μ ← 2μ · N_e / (N_e + N_c)` drives the expansion fraction to 1/2. The
//! factor is clamped to `[0.1, 2]` and the update is skipped when an
//! iteration produced no expansions or contractions. Adaptation freezes once
//! the fraction lands within `tolerance` of 1/2 or after
//! `max_adapt_iterations`, and never restarts.

use serde::{Deserialize, Serialize};

use crate::error::{EssError, Result};

pub const DEFAULT_TOLERANCE: f64 = 0.05;
pub const DEFAULT_MAX_ADAPT: u64 = 100;
pub const MIN_FACTOR: f64 = 0.1;
pub const MAX_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningState {
    pub mu: f64,
    /// Completed tuning iterations.
    pub iteration: u64,
    pub max_adapt_iterations: u64,
    pub tolerance: f64,
    pub frozen: bool,
    /// Expansion fraction of the iteration that froze adaptation.
    pub fraction_at_freeze: Option<f64>,
}

impl TuningState {
    pub fn new(mu: f64, max_adapt_iterations: u64, tolerance: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(EssError::InvalidArgument(format!("mu must be positive, got {mu}")));
        }
        if !(tolerance > 0.0 && tolerance < 0.5) {
            return Err(EssError::InvalidArgument(format!(
                "tolerance must lie in (0, 0.5), got {tolerance}"
            )));
        }
        Ok(Self {
            mu,
            iteration: 0,
            max_adapt_iterations,
            tolerance,
            frozen: max_adapt_iterations == 0,
            fraction_at_freeze: None,
        })
    }

    pub fn with_defaults(mu: f64) -> Result<Self> {
        Self::new(mu, DEFAULT_MAX_ADAPT, DEFAULT_TOLERANCE)
    }

    /// A state that never adapts.
    pub fn fixed(mu: f64) -> Result<Self> {
        let mut s = Self::with_defaults(mu)?;
        s.frozen = true;
        Ok(s)
    }
}

/// Applies one tuning step with the iteration's summed counts.
pub fn tune_length_scale(state: TuningState, n_expansions: i64, n_contractions: i64) -> Result<TuningState> {
    if n_expansions < 0 || n_contractions < 0 {
        return Err(EssError::InvalidArgument(format!(
            "negative counts: expansions {n_expansions}, contractions {n_contractions}"
        )));
    }
    if state.frozen {
        return Ok(state);
    }
    let mut next = state;
    next.iteration += 1;
    let total = n_expansions + n_contractions;
    if total > 0 {
        let fraction = n_expansions as f64 / total as f64;
        let factor = (2.0 * fraction).clamp(MIN_FACTOR, MAX_FACTOR);
        next.mu = state.mu * factor;
        if (fraction - 0.5).abs() <= state.tolerance {
            next.frozen = true;
            next.fraction_at_freeze = Some(fraction);
        }
    }
    if next.iteration >= next.max_adapt_iterations && !next.frozen {
        next.frozen = true;
        if total > 0 {
            next.fraction_at_freeze = Some(n_expansions as f64 / total as f64);
        }
    }
    Ok(next)
}
