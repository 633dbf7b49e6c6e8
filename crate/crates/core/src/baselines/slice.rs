use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::evaluate_start;
use crate::error::{EssError, Result};
use crate::moves::DirectionVector;
use crate::numerics::{RngStream, StreamKey};
use crate::run::{Sampler, StepStats};
use crate::slice::{slice_along, SliceUpdate, DEFAULT_MAX_EXPANSIONS};
use crate::targets::LogDensity;
use crate::tuning::{tune_length_scale, TuningState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AxisPolicy {
    /// Coordinate axes in round-robin order.
    #[default]
    ComponentCycle,
    /// Uniformly random unit vectors.
    RandomDirection,
}

/// Unit vector for a standard slice update.
pub(crate) fn axis_direction<R: Rng + ?Sized>(dim: usize, policy: AxisPolicy, axis: usize, rng: &mut R) -> Vec<f64> {
    match policy {
        AxisPolicy::ComponentCycle => {
            let mut e = vec![0.0; dim];
            e[axis % dim] = 1.0;
            e
        }
        AxisPolicy::RandomDirection => loop {
            let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                break z.into_iter().map(|v| v / norm).collect();
            }
        },
    }
}

/// One univariate slice update along `μ · e`, where `e` is the policy's unit vector.
pub fn standard_slice_step<T, R>(
    target: &T,
    x: &[f64],
    logf: f64,
    mu: f64,
    policy: AxisPolicy,
    axis: usize,
    rng: &mut R,
) -> Result<SliceUpdate>
where
    T: LogDensity + ?Sized,
    R: Rng + ?Sized,
{
    if !(mu > 0.0) {
        return Err(EssError::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    let e = axis_direction(x.len(), policy, axis, rng);
    let eta = DirectionVector::new(e.into_iter().map(|v| mu * v).collect(), true);
    slice_along(target, x, logf, &eta, rng, DEFAULT_MAX_EXPANSIONS)
}

/// Independent standard slice chains with a shared, tuned `μ`.
/// Every chain makes one univariate update per iteration.
#[derive(Debug, Clone)]
pub struct StandardSlice {
    positions: Vec<Vec<f64>>,
    log_densities: Vec<f64>,
    tuning: TuningState,
    policy: AxisPolicy,
    seed: u64,
    iteration: u64,
    initial_evaluations: u64,
}

impl StandardSlice {
    pub fn new<T: LogDensity + ?Sized>(
        target: &T,
        positions: Vec<Vec<f64>>,
        tuning: TuningState,
        policy: AxisPolicy,
        seed: u64,
    ) -> Result<Self> {
        let log_densities = evaluate_start(target, &positions)?;
        Ok(Self {
            initial_evaluations: positions.len() as u64,
            positions,
            log_densities,
            tuning,
            policy,
            seed,
            iteration: 0,
        })
    }

    pub fn tuning(&self) -> &TuningState {
        &self.tuning
    }
}

impl Sampler for StandardSlice {
    fn name(&self) -> &str {
        "slice"
    }

    fn dim(&self) -> usize {
        self.positions[0].len()
    }

    fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    fn initial_evaluations(&self) -> u64 {
        self.initial_evaluations
    }

    fn mu(&self) -> Option<f64> {
        Some(self.tuning.mu)
    }

    fn move_name(&self) -> &str {
        match self.policy {
            AxisPolicy::ComponentCycle => "component_cycle",
            AxisPolicy::RandomDirection => "random_direction",
        }
    }

    fn step(&mut self, target: &dyn LogDensity) -> Result<StepStats> {
        let axis = self.iteration as usize;
        let mut stats = StepStats::default();
        for (k, (x, l)) in self.positions.iter_mut().zip(&mut self.log_densities).enumerate() {
            let mut rng = RngStream::new(self.seed, StreamKey::new(self.iteration, k as u64, 0));
            let u = standard_slice_step(target, x, *l, self.tuning.mu, self.policy, axis, &mut rng)
                .map_err(|e| e.at_walker(self.iteration, k))?;
            stats.n_evaluations += u.n_evaluations as u64;
            stats.n_expansions += u.n_expansions as u64;
            stats.n_contractions += u.n_contractions as u64;
            *x = u.new_point;
            *l = u.log_density;
        }
        self.tuning = tune_length_scale(self.tuning, stats.n_expansions as i64, stats.n_contractions as i64)?;
        self.iteration += 1;
        stats.mu = Some(self.tuning.mu);
        Ok(stats)
    }
}
