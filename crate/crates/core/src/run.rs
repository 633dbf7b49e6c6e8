//! Sampler-agnostic run loop and chain storage.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{build_report, RunReport};
use crate::error::{EssError, Result};
use crate::targets::LogDensity;

/// Counts from one sampler iteration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub n_evaluations: u64,
    pub n_expansions: u64,
    pub n_contractions: u64,
    pub n_proposals: u64,
    pub n_accepted: u64,
    pub mu: Option<f64>,
}

/// Common interface of the ensemble slice sampler and the baselines.
pub trait Sampler {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Current state of every chain or walker.
    fn positions(&self) -> &[Vec<f64>];

    fn n_walkers(&self) -> usize {
        self.positions().len()
    }

    /// Density evaluations spent before the first step.
    fn initial_evaluations(&self) -> u64;

    fn mu(&self) -> Option<f64> {
        None
    }

    fn move_name(&self) -> &str {
        ""
    }

    fn step(&mut self, target: &dyn LogDensity) -> Result<StepStats>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub n_iterations: usize,
    /// Fraction of recorded iterations discarded before computing the report.
    pub burn_in: f64,
    /// Record every `thin`-th iteration.
    pub thin: usize,
    /// Stop once this many density evaluations have been spent.
    pub max_evaluations: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            n_iterations: 1000,
            burn_in: 0.5,
            thin: 1,
            max_evaluations: None,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(EssError::InvalidArgument(format!(
                "burn_in must lie in [0, 1), got {}",
                self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(EssError::InvalidArgument("thin must be at least 1".into()));
        }
        Ok(())
    }
}

/// Recorded positions, iteration-major, then walker, then dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainStore {
    pub dim: usize,
    pub n_walkers: usize,
    pub samples: Vec<f64>,
    pub n_density_evaluations: u64,
    pub mu_trajectory: Vec<f64>,
    /// Evaluations spent in each iteration, recorded or not.
    pub evaluations_per_iteration: Vec<u64>,
    pub n_accepted: u64,
    pub n_proposals: u64,
}

impl ChainStore {
    pub fn new(dim: usize, n_walkers: usize) -> Self {
        Self {
            dim,
            n_walkers,
            ..Default::default()
        }
    }

    pub fn n_recorded(&self) -> usize {
        if self.dim == 0 || self.n_walkers == 0 {
            0
        } else {
            self.samples.len() / (self.dim * self.n_walkers)
        }
    }

    pub fn push(&mut self, positions: &[Vec<f64>]) {
        for p in positions {
            self.samples.extend_from_slice(p);
        }
    }

    pub fn sample(&self, iteration: usize, walker: usize) -> &[f64] {
        let start = (iteration * self.n_walkers + walker) * self.dim;
        &self.samples[start..start + self.dim]
    }

    /// Per-walker series of one parameter over recorded iterations `from..`.
    pub fn walker_series(&self, param: usize, from: usize) -> Vec<Vec<f64>> {
        (0..self.n_walkers)
            .map(|w| {
                (from..self.n_recorded())
                    .map(|it| self.sample(it, w)[param])
                    .collect()
            })
            .collect()
    }

    pub fn mu_final(&self) -> Option<f64> {
        self.mu_trajectory.last().copied()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub chain: ChainStore,
    pub report: RunReport,
}

/// A run that stopped on an error; `chain` holds everything recorded before it.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub chain: ChainStore,
    pub error: EssError,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "run failed after {} recorded iterations: {}",
            self.chain.n_recorded(),
            self.error
        )
    }
}

impl std::error::Error for RunFailure {}

/// Steps `sampler` and records its positions.
pub fn run<T: LogDensity + ?Sized>(
    target: &T,
    sampler: &mut dyn Sampler,
    options: &RunOptions,
) -> std::result::Result<RunOutput, RunFailure> {
    let mut chain = ChainStore::new(sampler.dim(), sampler.n_walkers());
    chain.n_density_evaluations = sampler.initial_evaluations();
    if let Err(error) = options.validate() {
        return Err(RunFailure { chain, error });
    }
    let dyn_target: &dyn LogDensity = &DynRef(target);
    for it in 0..options.n_iterations {
        if let Some(budget) = options.max_evaluations {
            if chain.n_density_evaluations >= budget {
                break;
            }
        }
        let stats = match sampler.step(dyn_target) {
            Ok(s) => s,
            Err(error) => return Err(RunFailure { chain, error }),
        };
        chain.n_density_evaluations += stats.n_evaluations;
        chain.evaluations_per_iteration.push(stats.n_evaluations);
        chain.n_accepted += stats.n_accepted;
        chain.n_proposals += stats.n_proposals;
        if let Some(mu) = stats.mu {
            chain.mu_trajectory.push(mu);
        }
        if it % options.thin == 0 {
            chain.push(sampler.positions());
        }
    }
    let report = build_report(&chain, options.burn_in, target, sampler);
    Ok(RunOutput { chain, report })
}

struct DynRef<'a, T: ?Sized>(&'a T);

impl<T: LogDensity + ?Sized> LogDensity for DynRef<'_, T> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        self.0.log_density(x)
    }
    fn id(&self) -> &str {
        self.0.id()
    }
}
