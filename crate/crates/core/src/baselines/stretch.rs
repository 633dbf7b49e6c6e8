use rand::Rng;
use rand_distr::Open01;

use super::{accept, check_even_ensemble, evaluate_start};
use crate::error::{EssError, Result};
use crate::numerics::{RngStream, StreamKey};
use crate::run::{Sampler, StepStats};
use crate::targets::LogDensity;

pub const DEFAULT_STRETCH_A: f64 = 2.0;

/// Draw from `g(z) ∝ 1/√z` on `[1/a, a]` by inversion of `u`.
pub fn stretch_factor(a: f64, u: f64) -> f64 {
    let s = a.sqrt();
    (u * (s - 1.0 / s) + 1.0 / s).powi(2)
}

/// Affine-invariant ensemble sampler with the stretch move, updated in two halves.
#[derive(Debug, Clone)]
pub struct Stretch {
    positions: Vec<Vec<f64>>,
    log_densities: Vec<f64>,
    a: f64,
    seed: u64,
    iteration: u64,
    initial_evaluations: u64,
}

impl Stretch {
    pub fn new<T: LogDensity + ?Sized>(target: &T, positions: Vec<Vec<f64>>, a: f64, seed: u64) -> Result<Self> {
        if !(a > 1.0) {
            return Err(EssError::InvalidArgument(format!("stretch a must exceed 1, got {a}")));
        }
        check_even_ensemble(positions.len())?;
        let log_densities = evaluate_start(target, &positions)?;
        Ok(Self {
            initial_evaluations: positions.len() as u64,
            positions,
            log_densities,
            a,
            seed,
            iteration: 0,
        })
    }
}

impl Sampler for Stretch {
    fn name(&self) -> &str {
        "stretch"
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
        let dim = self.dim() as f64;
        let mut accepted = 0;
        for set in 0..2usize {
            let (first, second) = self.positions.split_at_mut(half);
            let (active, comp) = if set == 0 { (first, &*second) } else { (second, &*first) };
            for (j, x) in active.iter_mut().enumerate() {
                let k = set * half + j;
                let mut rng = RngStream::new(self.seed, StreamKey::new(self.iteration, k as u64, set as u64));
                let partner = &comp[rng.random_range(0..comp.len())];
                let z = stretch_factor(self.a, rng.sample(Open01));
                let proposal: Vec<f64> = x.iter().zip(partner).map(|(xk, xj)| xj + z * (xk - xj)).collect();
                let logp = target.log_density(&proposal);
                let log_ratio = (dim - 1.0) * z.ln() + logp - self.log_densities[k];
                if accept(log_ratio, rng.sample(Open01)) {
                    *x = proposal;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{initialize, InitStrategy};
    use crate::targets::Gaussian;
    use crate::tuning::TuningState;

    #[test]
    fn factor_range() {
        for i in 0..=1000 {
            let z = stretch_factor(2.0, i as f64 / 1000.0);
            assert!((0.5 - 1e-12..=2.0 + 1e-12).contains(&z));
        }
        assert!((stretch_factor(2.0, 0.0) - 0.5).abs() < 1e-12);
        assert!((stretch_factor(2.0, 1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn acceptance_on_ten_dimensional_normal() {
        let t = Gaussian::standard(10);
        let init = initialize(
            &t,
            20,
            &InitStrategy::Ball { center: vec![0.0; 10], radius: 1.0 },
            1,
            TuningState::fixed(1.0).unwrap(),
        )
        .unwrap();
        let mut s = Stretch::new(&t, init.positions, 2.0, 1).unwrap();
        let (mut acc, mut prop) = (0, 0);
        for i in 0..3000 {
            let st = s.step(&t).unwrap();
            if i >= 1000 {
                acc += st.n_accepted;
                prop += st.n_proposals;
            }
        }
        let rate = acc as f64 / prop as f64;
        assert!((0.2..=0.5).contains(&rate), "{rate}");
    }
}
