//! Ensemble slice sampler: walker state, initialization and the split-ensemble
//! iteration.
//!
//! Each iteration updates the first half of the walkers using directions
//! built from the second half, then the reverse. Updates within a half are
//! independent and run on a worker pool. Every walker update draws from its
//! own stream keyed by `(seed, iteration, walker, half)`, so results do not
//! depend on the number of workers.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EssError, Result};
use crate::moves::{ComplementaryEnsemble, Move, PreparedMove};
use crate::numerics::{sample_covariance, RngStream, StreamKey};
use crate::run::{Sampler, StepStats};
use crate::slice::{slice_along, SliceUpdate, DEFAULT_MAX_EXPANSIONS};
use crate::targets::LogDensity;
use crate::tuning::{tune_length_scale, TuningState};

/// Stream tag for per-phase mixture fits.
const FIT_STREAM: u64 = u64::MAX;
/// Stream tag for initialization draws.
const INIT_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitStrategy {
    /// `center + radius · N(0, I)` per walker.
    Ball { center: Vec<f64>, radius: f64 },
    /// Draws from the target's prior sampler.
    Prior,
    /// Positions given verbatim.
    Explicit { positions: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    pub positions: Vec<Vec<f64>>,
    pub log_densities: Vec<f64>,
    pub iteration: u64,
    pub tuning: TuningState,
    /// Initial displacements did not span the parameter space.
    pub rank_deficient: bool,
}

impl EnsembleState {
    pub fn n_walkers(&self) -> usize {
        self.positions.len()
    }

    pub fn dim(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }
}

/// Checks the walker count: even, at least `2·D`, and at least 4 so each half
/// can supply a pair.
pub fn validate_walker_count(n_walkers: usize, dim: usize) -> Result<()> {
    if n_walkers % 2 != 0 || n_walkers < 2 * dim || n_walkers < 4 {
        return Err(EssError::InvalidArgument(format!(
            "n_walkers must be even and at least max(2 x D, 4) = {} for D = {dim}, got {n_walkers}",
            (2 * dim).max(4)
        )));
    }
    Ok(())
}

/// True when walker displacements from their mean do not span `dim` dimensions.
pub fn is_rank_deficient(positions: &[Vec<f64>]) -> bool {
    let Ok(cov) = sample_covariance(positions) else {
        return true;
    };
    let scale = cov.trace() / cov.dim() as f64;
    if !(scale > 0.0) {
        return true;
    }
    match cov.cholesky() {
        Ok(l) => (0..l.dim()).any(|i| l.get(i, i).powi(2) < 1e-12 * scale),
        Err(_) => true,
    }
}

/// Draws initial positions and evaluates them.
pub fn initialize<T: LogDensity + ?Sized>(
    target: &T,
    n_walkers: usize,
    strategy: &InitStrategy,
    seed: u64,
    tuning: TuningState,
) -> Result<EnsembleState> {
    let dim = target.dim();
    validate_walker_count(n_walkers, dim)?;
    let walker_rng = |k: usize| RngStream::new(seed, StreamKey::new(0, INIT_STREAM, k as u64));
    let positions: Vec<Vec<f64>> = match strategy {
        InitStrategy::Ball { center, radius } => {
            if center.len() != dim {
                return Err(EssError::DimensionMismatch {
                    expected: dim,
                    found: center.len(),
                });
            }
            (0..n_walkers)
                .map(|k| {
                    let mut rng = walker_rng(k);
                    center
                        .iter()
                        .map(|c| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            c + radius * z
                        })
                        .collect()
                })
                .collect()
        }
        InitStrategy::Prior => (0..n_walkers)
            .map(|k| {
                let mut rng = walker_rng(k);
                target.sample_prior(&mut rng as &mut dyn RngCore).ok_or_else(|| {
                    EssError::InvalidArgument(format!("target '{}' has no prior sampler", target.id()))
                })
            })
            .collect::<Result<_>>()?,
        InitStrategy::Explicit { positions } => {
            if positions.len() != n_walkers {
                return Err(EssError::InvalidArgument(format!(
                    "explicit initialization has {} rows for {n_walkers} walkers",
                    positions.len()
                )));
            }
            positions.clone()
        }
    };
    if let Some(p) = positions.iter().find(|p| p.len() != dim) {
        return Err(EssError::DimensionMismatch {
            expected: dim,
            found: p.len(),
        });
    }
    let log_densities: Vec<f64> = positions.iter().map(|p| target.log_density(p)).collect();
    if let Some(walker) = log_densities
        .iter()
        .position(|l| *l == f64::NEG_INFINITY || l.is_nan())
    {
        return Err(EssError::WalkerOutsideSupport { walker });
    }
    let rank_deficient = is_rank_deficient(&positions);
    if rank_deficient {
        log::warn!("initial walker displacements do not span the {dim}-dimensional parameter space");
    }
    Ok(EnsembleState {
        positions,
        log_densities,
        iteration: 0,
        tuning,
        rank_deficient,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub half: usize,
    pub effective_components: usize,
    pub weights: Vec<f64>,
    pub converged: bool,
}

/// Counts gathered over one full iteration (both halves).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationCounts {
    pub n_expansions: u64,
    pub n_contractions: u64,
    pub n_evaluations: u64,
    /// Per-walker evaluation counts, in walker order.
    pub per_walker_evaluations: Vec<u64>,
    pub fits: Vec<FitSummary>,
}

/// Ensemble slice sampler.
pub struct EnsembleSlice {
    state: EnsembleState,
    mv: Move,
    seed: u64,
    workers: usize,
    pool: Option<rayon::ThreadPool>,
    max_expansions: usize,
    initial_evaluations: u64,
    last_counts: IterationCounts,
}

impl std::fmt::Debug for EnsembleSlice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnsembleSlice")
            .field("mv", &self.mv)
            .field("seed", &self.seed)
            .field("workers", &self.workers)
            .field("iteration", &self.state.iteration)
            .field("mu", &self.state.tuning.mu)
            .finish()
    }
}

impl EnsembleSlice {
    pub fn new<T: LogDensity + ?Sized>(
        target: &T,
        n_walkers: usize,
        init: &InitStrategy,
        mv: Move,
        tuning: TuningState,
        seed: u64,
    ) -> Result<Self> {
        let state = initialize(target, n_walkers, init, seed, tuning)?;
        Ok(Self::from_state(state, mv, seed))
    }

    pub fn from_state(state: EnsembleState, mv: Move, seed: u64) -> Self {
        let initial_evaluations = state.n_walkers() as u64;
        Self {
            state,
            mv,
            seed,
            workers: 1,
            pool: None,
            max_expansions: DEFAULT_MAX_EXPANSIONS,
            initial_evaluations,
            last_counts: IterationCounts::default(),
        }
    }

    /// Sets the worker-pool size for within-phase updates.
    pub fn with_workers(mut self, workers: usize) -> Result<Self> {
        let workers = workers.max(1);
        self.pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| EssError::InvalidArgument(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        self.workers = workers;
        Ok(self)
    }

    pub fn with_max_expansions(mut self, max_expansions: usize) -> Self {
        self.max_expansions = max_expansions.max(1);
        self
    }

    pub fn state(&self) -> &EnsembleState {
        &self.state
    }

    pub fn move_kind(&self) -> &Move {
        &self.mv
    }

    pub fn last_counts(&self) -> &IterationCounts {
        &self.last_counts
    }

    /// One full iteration: both half-set phases, then tuning.
    pub fn step_ensemble<T: LogDensity + ?Sized>(&mut self, target: &T) -> Result<IterationCounts> {
        let n = self.state.n_walkers();
        let half = n / 2;
        let iteration = self.state.iteration;
        let mu = self.state.tuning.mu;
        let mut counts = IterationCounts {
            per_walker_evaluations: vec![0; n],
            ..Default::default()
        };

        for set in 0..2usize {
            let (first, second) = self.state.positions.split_at_mut(half);
            let (active, comp) = if set == 0 { (first, &*second) } else { (second, &*first) };
            let comp = ComplementaryEnsemble::new(comp)?;
            let mut fit_rng = RngStream::new(self.seed, StreamKey::new(iteration, FIT_STREAM, set as u64));
            let prepared = PreparedMove::prepare(&self.mv, comp, &mut fit_rng)
                .map_err(|e| e.at_walker(iteration, set * half))?;
            if let Some(fit) = prepared.fit() {
                log::debug!(
                    "iteration {iteration} half {set}: {} effective components, weights {:?}",
                    fit.effective_components,
                    fit.weights
                );
                counts.fits.push(FitSummary {
                    half: set,
                    effective_components: fit.effective_components,
                    weights: fit.weights.clone(),
                    converged: fit.converged,
                });
            }

            let offset = set * half;
            let log_densities = &self.state.log_densities[offset..offset + half];
            let seed = self.seed;
            let max_expansions = self.max_expansions;
            let update = |j: usize| -> Result<SliceUpdate> {
                let k = offset + j;
                let mut rng = RngStream::new(seed, StreamKey::new(iteration, k as u64, set as u64));
                let eta = prepared.direction(mu, &mut rng)?;
                slice_along(target, &active[j], log_densities[j], &eta, &mut rng, max_expansions)
            };
            let results: Vec<Result<SliceUpdate>> = match &self.pool {
                Some(pool) => pool.install(|| (0..half).into_par_iter().map(update).collect()),
                None => (0..half).map(update).collect(),
            };

            let mut updates = Vec::with_capacity(half);
            for (j, r) in results.into_iter().enumerate() {
                updates.push(r.map_err(|e| e.at_walker(iteration, offset + j))?);
            }
            for (j, u) in updates.into_iter().enumerate() {
                counts.n_expansions += u.n_expansions as u64;
                counts.n_contractions += u.n_contractions as u64;
                counts.n_evaluations += u.n_evaluations as u64;
                counts.per_walker_evaluations[offset + j] = u.n_evaluations as u64;
                active[j] = u.new_point;
                self.state.log_densities[offset + j] = u.log_density;
            }
        }

        self.state.tuning = tune_length_scale(
            self.state.tuning,
            counts.n_expansions as i64,
            counts.n_contractions as i64,
        )?;
        self.state.iteration += 1;
        self.last_counts = counts.clone();
        Ok(counts)
    }
}

impl Sampler for EnsembleSlice {
    fn name(&self) -> &str {
        "ess"
    }

    fn dim(&self) -> usize {
        self.state.dim()
    }

    fn positions(&self) -> &[Vec<f64>] {
        &self.state.positions
    }

    fn initial_evaluations(&self) -> u64 {
        self.initial_evaluations
    }

    fn mu(&self) -> Option<f64> {
        Some(self.state.tuning.mu)
    }

    fn move_name(&self) -> &str {
        self.mv.name()
    }

    fn step(&mut self, target: &dyn LogDensity) -> Result<StepStats> {
        let c = self.step_ensemble(target)?;
        Ok(StepStats {
            n_evaluations: c.n_evaluations,
            n_expansions: c.n_expansions,
            n_contractions: c.n_contractions,
            n_proposals: self.state.n_walkers() as u64,
            n_accepted: self.state.n_walkers() as u64,
            mu: Some(self.state.tuning.mu),
        })
    }
}
