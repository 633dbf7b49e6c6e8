use rand::Rng;
use rand_distr::{Open01, StandardNormal};

use super::{accept, check_even_ensemble, evaluate_start};
use crate::error::{EssError, Result};
use crate::numerics::{RngStream, StreamKey};
use crate::run::{Sampler, StepStats};
use crate::targets::LogDensity;

/// Scale of the Gaussian jitter added to differential proposals.
pub const DEMC_EPSILON: f64 = 1e-6;
pub const DEFAULT_SNOOKER_PROBABILITY: f64 = 0.1;
/// Snooker step sizes are drawn uniformly from this range.
pub const SNOOKER_GAMMA_RANGE: (f64, f64) = (1.2, 2.2);

pub fn default_demc_gamma(dim: usize) -> f64 {
    2.38 / (2.0 * dim as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemcOptions {
    pub gamma: f64,
    pub epsilon: f64,
    pub snooker_probability: f64,
}

impl DemcOptions {
    pub fn defaults(dim: usize) -> Self {
        Self {
            gamma: default_demc_gamma(dim),
            epsilon: DEMC_EPSILON,
            snooker_probability: DEFAULT_SNOOKER_PROBABILITY,
        }
    }
}

fn pick_distinct<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let i = rng.random_range(0..n);
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Differential-evolution MC over two halves, with snooker updates.
#[derive(Debug, Clone)]
pub struct Demc {
    positions: Vec<Vec<f64>>,
    log_densities: Vec<f64>,
    options: DemcOptions,
    seed: u64,
    iteration: u64,
    initial_evaluations: u64,
}

impl Demc {
    pub fn new<T: LogDensity + ?Sized>(
        target: &T,
        positions: Vec<Vec<f64>>,
        options: DemcOptions,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&options.snooker_probability) {
            return Err(EssError::InvalidArgument("snooker probability must lie in [0, 1]".into()));
        }
        check_even_ensemble(positions.len())?;
        let log_densities = evaluate_start(target, &positions)?;
        Ok(Self {
            initial_evaluations: positions.len() as u64,
            positions,
            log_densities,
            options,
            seed,
            iteration: 0,
        })
    }
}

/// Proposal for one walker and the log of its acceptance correction.
fn propose<R: Rng + ?Sized>(x: &[f64], comp: &[Vec<f64>], opts: &DemcOptions, rng: &mut R) -> (Vec<f64>, f64) {
    let snooker = comp.len() >= 3 && rng.sample::<f64, _>(Open01) < opts.snooker_probability;
    if !snooker {
        let idx = pick_distinct(comp.len(), 2, rng);
        let (l, m) = (&comp[idx[0]], &comp[idx[1]]);
        let y = x
            .iter()
            .zip(l.iter().zip(m))
            .map(|(xi, (li, mi))| {
                let e = if opts.epsilon > 0.0 {
                    opts.epsilon * rng.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                };
                xi + opts.gamma * (li - mi) + e
            })
            .collect();
        return (y, 0.0);
    }
    let idx = pick_distinct(comp.len(), 3, rng);
    let (anchor, l, m) = (&comp[idx[0]], &comp[idx[1]], &comp[idx[2]]);
    let diff: Vec<f64> = x.iter().zip(anchor).map(|(a, b)| a - b).collect();
    let norm = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (x.to_vec(), 0.0);
    }
    let u: Vec<f64> = diff.iter().map(|v| v / norm).collect();
    let proj: f64 = l.iter().zip(m).zip(&u).map(|((a, b), c)| (a - b) * c).sum();
    let (glo, ghi) = SNOOKER_GAMMA_RANGE;
    let g = rng.random_range(glo..ghi);
    let y: Vec<f64> = x.iter().zip(&u).map(|(xi, ui)| xi + g * proj * ui).collect();
    let d = (x.len() as f64 - 1.0) * (distance(&y, anchor).ln() - norm.ln());
    (y, d)
}

impl Sampler for Demc {
    fn name(&self) -> &str {
        "demc"
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

    fn step(&mut self, target: &dyn LogDensity) -> Result<StepStats> {
        let n = self.positions.len();
        let half = n / 2;
        let mut accepted = 0;
        for set in 0..2usize {
            let (first, second) = self.positions.split_at_mut(half);
            let (active, comp) = if set == 0 { (first, &*second) } else { (second, &*first) };
            for (j, x) in active.iter_mut().enumerate() {
                let k = set * half + j;
                let mut rng = RngStream::new(self.seed, StreamKey::new(self.iteration, k as u64, set as u64));
                let (y, correction) = propose(x, comp, &self.options, &mut rng);
                let logp = target.log_density(&y);
                if accept(logp - self.log_densities[k] + correction, rng.sample(Open01)) {
                    *x = y;
                    self.log_densities[k] = logp;
                    accepted += 1;
                }
            }
        }
        self.iteration += 1;
        Ok(StepStats {
            n_evaluations: n as u64,
            n_proposals: n as u64,
            n_accepted: accepted,
            ..Default::default()
        })
    }
}
