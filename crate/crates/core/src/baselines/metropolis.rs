use rand::Rng;
use rand_distr::{Open01, StandardNormal};

use super::{accept, evaluate_start, TUNE_STREAM};
use crate::error::{EssError, Result};
use crate::numerics::{RngStream, StreamKey};
use crate::run::{Sampler, StepStats};
use crate::targets::LogDensity;

pub const TUNE_PROBE_STEPS: usize = 2000;
pub const TUNE_MAX_PROBES: usize = 40;
pub const TUNE_BAND: (f64, f64) = (0.2, 0.3);

/// One isotropic random-walk Metropolis step. Returns the new state, its
/// log-density and whether the proposal was accepted.
pub fn metropolis_step<T, R>(target: &T, x: &[f64], logf: f64, scale: f64, rng: &mut R) -> (Vec<f64>, f64, bool)
where
    T: LogDensity + ?Sized,
    R: Rng + ?Sized,
{
    let proposal: Vec<f64> = x
        .iter()
        .map(|v| v + scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let logp = target.log_density(&proposal);
    if accept(logp - logf, rng.sample(Open01)) {
        (proposal, logp, true)
    } else {
        (x.to_vec(), logf, false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutotuneResult {
    pub scale: f64,
    pub acceptance: f64,
    pub probes: usize,
    pub evaluations: u64,
}

/// Searches for a proposal scale with acceptance in `[0.2, 0.3]`: doubling or
/// halving until the band is bracketed, then geometric bisection. Each probe
/// runs 2000 steps continuing from the previous probe's end point.
pub fn metropolis_autotune<T: LogDensity + ?Sized>(target: &T, x0: &[f64], seed: u64) -> Result<AutotuneResult> {
    let mut x = x0.to_vec();
    let mut logf = target.log_density(&x);
    if logf == f64::NEG_INFINITY || logf.is_nan() {
        return Err(EssError::InvalidCurrentState(logf));
    }
    let mut evaluations = 1u64;
    let mut scale = 2.38 / (x.len() as f64).sqrt();
    let mut too_small: Option<f64> = None;
    let mut too_large: Option<f64> = None;
    let (lo, hi) = TUNE_BAND;
    for probe in 0..TUNE_MAX_PROBES {
        let mut rng = RngStream::new(seed, StreamKey::new(probe as u64, TUNE_STREAM, 0));
        let mut accepted = 0usize;
        for _ in 0..TUNE_PROBE_STEPS {
            let (nx, nl, a) = metropolis_step(target, &x, logf, scale, &mut rng);
            x = nx;
            logf = nl;
            accepted += usize::from(a);
        }
        evaluations += TUNE_PROBE_STEPS as u64;
        let rate = accepted as f64 / TUNE_PROBE_STEPS as f64;
        log::debug!("metropolis probe {probe}: scale {scale:.4e}, acceptance {rate:.3}");
        if (lo..=hi).contains(&rate) {
            return Ok(AutotuneResult {
                scale,
                acceptance: rate,
                probes: probe + 1,
                evaluations,
            });
        }
        if rate > hi {
            too_small = Some(scale);
        } else {
            too_large = Some(scale);
        }
        scale = match (too_small, too_large) {
            (Some(a), Some(b)) => (a * b).sqrt(),
            (Some(a), None) => 2.0 * a,
            (None, Some(b)) => 0.5 * b,
            (None, None) => unreachable!(),
        };
    }
    Err(EssError::InvalidArgument(format!(
        "metropolis tuning did not reach acceptance in [{lo}, {hi}] after {TUNE_MAX_PROBES} probes"
    )))
}

/// Independent random-walk Metropolis chains sharing one proposal scale.
#[derive(Debug, Clone)]
pub struct Metropolis {
    positions: Vec<Vec<f64>>,
    log_densities: Vec<f64>,
    scale: f64,
    seed: u64,
    iteration: u64,
    initial_evaluations: u64,
    tuning: Option<AutotuneResult>,
}

impl Metropolis {
    pub fn new<T: LogDensity + ?Sized>(target: &T, positions: Vec<Vec<f64>>, scale: f64, seed: u64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(EssError::InvalidArgument(format!("scale must be positive, got {scale}")));
        }
        let log_densities = evaluate_start(target, &positions)?;
        Ok(Self {
            initial_evaluations: positions.len() as u64,
            positions,
            log_densities,
            scale,
            seed,
            iteration: 0,
            tuning: None,
        })
    }

    /// Tunes the scale from the first starting point, then starts every
    /// chain from its own position. Tuning evaluations are not counted.
    pub fn autotuned<T: LogDensity + ?Sized>(target: &T, positions: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let first = positions
            .first()
            .ok_or_else(|| EssError::InvalidArgument("no starting positions".into()))?;
        let tuning = metropolis_autotune(target, first, seed)?;
        let mut s = Self::new(target, positions, tuning.scale, seed)?;
        s.tuning = Some(tuning);
        Ok(s)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn tuning(&self) -> Option<&AutotuneResult> {
        self.tuning.as_ref()
    }
}

impl Sampler for Metropolis {
    fn name(&self) -> &str {
        "metropolis"
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
        let mut accepted = 0;
        for (k, (x, l)) in self.positions.iter_mut().zip(&mut self.log_densities).enumerate() {
            let mut rng = RngStream::new(self.seed, StreamKey::new(self.iteration, k as u64, 0));
            let (nx, nl, a) = metropolis_step(target, x, *l, self.scale, &mut rng);
            *x = nx;
            *l = nl;
            accepted += u64::from(a);
        }
        self.iteration += 1;
        let n = self.positions.len() as u64;
        Ok(StepStats {
            n_evaluations: n,
            n_proposals: n,
            n_accepted: accepted,
            ..Default::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{Gaussian, UniformBox};

    #[test]
    fn equal_density_always_accepted() {
        let t = UniformBox::new(vec![-1e6], vec![1e6]).unwrap();
        let mut rng = RngStream::new(1, StreamKey::new(0, 0, 0));
        for _ in 0..1000 {
            let (_, _, a) = metropolis_step(&t, &[0.0], t.log_density(&[0.0]), 1.0, &mut rng);
            assert!(a);
        }
    }

    #[test]
    fn outside_support_always_rejected() {
        let t = UniformBox::new(vec![0.0], vec![1.0]).unwrap();
        let mut rng = RngStream::new(1, StreamKey::new(0, 0, 0));
        for _ in 0..1000 {
            let (x, _, a) = metropolis_step(&t, &[0.5], 0.0, 1e6, &mut rng);
            assert!(!a);
            assert_eq!(x, vec![0.5]);
        }
    }

    #[test]
    fn one_dimensional_acceptance_band() {
        let t = Gaussian::standard(1);
        let mut rng = RngStream::new(2, StreamKey::new(0, 0, 0));
        let (mut x, mut l) = (vec![0.0], t.log_density(&[0.0]));
        let n = 100_000;
        let mut acc = 0;
        for _ in 0..n {
            let r = metropolis_step(&t, &x, l, 2.4, &mut rng);
            x = r.0;
            l = r.1;
            acc += usize::from(r.2);
        }
        let rate = acc as f64 / n as f64;
        assert!((0.35..=0.50).contains(&rate), "{rate}");
    }

    #[test]
    fn autotune_hits_band_in_ten_dimensions() {
        let t = Gaussian::standard(10);
        let r = metropolis_autotune(&t, &[0.0; 10], 3).unwrap();
        assert!((0.2..=0.3).contains(&r.acceptance));
        // independent check of the tuned scale
        let mut rng = RngStream::new(99, StreamKey::new(0, 0, 0));
        let (mut x, mut l) = (vec![0.0; 10], t.log_density(&[0.0; 10]));
        let mut acc = 0;
        for _ in 0..20_000 {
            let s = metropolis_step(&t, &x, l, r.scale, &mut rng);
            x = s.0;
            l = s.1;
            acc += usize::from(s.2);
        }
        let rate = acc as f64 / 20_000.0;
        assert!((0.17..=0.33).contains(&rate), "{rate}");
    }

    #[test]
    fn smaller_scale_raises_acceptance() {
        let t = Gaussian::standard(5);
        let rate = |scale: f64| {
            let mut rng = RngStream::new(4, StreamKey::new(0, 0, 0));
            let (mut x, mut l) = (vec![0.0; 5], t.log_density(&[0.0; 5]));
            let mut acc = 0;
            for _ in 0..20_000 {
                let s = metropolis_step(&t, &x, l, scale, &mut rng);
                x = s.0;
                l = s.1;
                acc += usize::from(s.2);
            }
            acc as f64 / 20_000.0
        };
        assert!(rate(0.5) > rate(1.0));
        assert!(rate(1.0) > rate(2.0));
    }

    #[test]
    fn tiny_variance_target_drives_scale_down() {
        let cov = crate::numerics::SymmetricMatrix::from_diagonal(&[1e-8, 1e-8]);
        let t = Gaussian::new(vec![0.0, 0.0], cov).unwrap();
        let r = metropolis_autotune(&t, &[0.0, 0.0], 5).unwrap();
        assert!(r.scale < 1e-3);
    }
}
