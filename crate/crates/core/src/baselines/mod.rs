//! Comparison samplers: random-walk Metropolis, standard slice sampling, the
//! affine-invariant stretch move and differential-evolution MC.

use serde::{Deserialize, Serialize};

use crate::error::{EssError, Result};
use crate::targets::LogDensity;

mod demc;
mod metropolis;
mod slice;
mod stretch;

pub use demc::{default_demc_gamma, Demc, DemcOptions, DEMC_EPSILON};
pub use metropolis::{metropolis_autotune, metropolis_step, AutotuneResult, Metropolis};
pub use slice::{standard_slice_step, AxisPolicy, StandardSlice};
pub use stretch::{stretch_factor, Stretch, DEFAULT_STRETCH_A};

/// Stream tag for tuning probes.
pub(crate) const TUNE_STREAM: u64 = u64::MAX - 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BaselineConfig {
    Metropolis {
        /// `None` runs the auto-tuner.
        proposal_scale: Option<f64>,
    },
    StandardSlice {
        axis_policy: AxisPolicy,
    },
    Stretch {
        a: f64,
    },
    Demc {
        gamma: Option<f64>,
        snooker_probability: f64,
    },
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BaselineConfig::Metropolis { proposal_scale: Some(s) } if !(s > 0.0) => Err(
                EssError::InvalidArgument(format!("proposal scale must be positive, got {s}")),
            ),
            BaselineConfig::Stretch { a } if !(a > 1.0) => {
                Err(EssError::InvalidArgument(format!("stretch a must exceed 1, got {a}")))
            }
            BaselineConfig::Demc { snooker_probability: p, .. } if !(0.0..=1.0).contains(&p) => Err(
                EssError::InvalidArgument(format!("snooker probability must lie in [0, 1], got {p}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Log-densities of starting points; every one must be finite.
pub(crate) fn evaluate_start<T: LogDensity + ?Sized>(target: &T, positions: &[Vec<f64>]) -> Result<Vec<f64>> {
    if positions.is_empty() {
        return Err(EssError::InvalidArgument("no starting positions".into()));
    }
    positions
        .iter()
        .enumerate()
        .map(|(walker, p)| {
            if p.len() != target.dim() {
                return Err(EssError::DimensionMismatch {
                    expected: target.dim(),
                    found: p.len(),
                });
            }
            let l = target.log_density(p);
            if l == f64::NEG_INFINITY || l.is_nan() {
                Err(EssError::WalkerOutsideSupport { walker })
            } else {
                Ok(l)
            }
        })
        .collect()
}

/// Ensemble baselines split walkers into two halves like the slice sampler.
pub(crate) fn check_even_ensemble(n: usize) -> Result<()> {
    if n < 4 || n % 2 != 0 {
        return Err(EssError::InvalidArgument(format!(
            "ensemble baselines need an even number of at least 4 walkers, got {n}"
        )));
    }
    Ok(())
}

/// Metropolis acceptance on a log ratio, using one uniform draw.
pub(crate) fn accept(log_ratio: f64, u: f64) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    log_ratio >= 0.0 || u.ln() < log_ratio
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(BaselineConfig::Stretch { a: 1.0 }.validate().is_err());
        assert!(BaselineConfig::Stretch { a: 2.0 }.validate().is_ok());
        assert!(BaselineConfig::Demc { gamma: None, snooker_probability: 1.5 }.validate().is_err());
        assert!(BaselineConfig::Metropolis { proposal_scale: Some(0.0) }.validate().is_err());
    }

    #[test]
    fn acceptance_rule() {
        assert!(accept(0.0, 0.999_999));
        assert!(!accept(f64::NEG_INFINITY, 1e-300));
        assert!(!accept(f64::NAN, 0.5));
        assert!(accept(-1.0, 0.3));
        assert!(!accept(-1.0, 0.4));
    }
}
