//! Ensemble slice sampling.
//!
//! Walkers are updated by univariate slice sampling along directions built
//! from the rest of the ensemble. The crate also ships comparison samplers,
//! benchmark targets and autocorrelation diagnostics.

pub mod baselines;
pub mod chain_io;
pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod mixture;
pub mod moves;
pub mod numerics;
pub mod run;
pub mod slice;
pub mod targets;
pub mod tuning;

pub use ensemble::{EnsembleSlice, EnsembleState, InitStrategy};
pub use error::{EssError, Result};
pub use moves::{GlobalOptions, Move};
pub use run::{run, ChainStore, RunOptions, Sampler};
pub use targets::LogDensity;
pub use tuning::TuningState;
