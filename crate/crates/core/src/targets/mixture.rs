use rand::{Rng, RngCore};

use super::{GroundTruth, LogDensity, LN_2PI};
use crate::numerics::log_add_exp;

pub const MIXTURE_CENTER: f64 = 0.5;
pub const MIXTURE_SD: f64 = 0.1;
pub const MIXTURE_WEIGHTS: [f64; 2] = [1.0 / 3.0, 2.0 / 3.0];

/// Two isotropic normals at `−0.5·1` and `+0.5·1` with masses 1/3 and 2/3.
/// The prior box is `[−1, 1]^D`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    dim: usize,
}

impl GaussianMixture {
    pub fn new(dim: usize) -> Self {
        Self { dim: dim.max(1) }
    }

    fn log_component(&self, x: &[f64], center: f64) -> f64 {
        let q: f64 = x.iter().map(|v| (v - center).powi(2)).sum();
        let d = self.dim as f64;
        -0.5 * d * LN_2PI - d * MIXTURE_SD.ln() - 0.5 * q / (MIXTURE_SD * MIXTURE_SD)
    }
}

impl LogDensity for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        log_add_exp(
            MIXTURE_WEIGHTS[0].ln() + self.log_component(x, -MIXTURE_CENTER),
            MIXTURE_WEIGHTS[1].ln() + self.log_component(x, MIXTURE_CENTER),
        )
    }

    fn id(&self) -> &str {
        "mixture"
    }

    fn sample_prior(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        Some((0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    fn ground_truth(&self) -> Option<GroundTruth> {
        let [w0, w1] = MIXTURE_WEIGHTS;
        let mean = (w1 - w0) * MIXTURE_CENTER;
        let var = MIXTURE_SD * MIXTURE_SD + MIXTURE_CENTER * MIXTURE_CENTER - mean * mean;
        Some(GroundTruth {
            means: Some(vec![mean; self.dim]),
            variances: Some(vec![var; self.dim]),
            mode_masses: Some(MIXTURE_WEIGHTS.to_vec()),
        })
    }

    /// Nearest component centre.
    fn mode_of(&self, x: &[f64]) -> Option<usize> {
        Some(usize::from(x.iter().sum::<f64>() >= 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heavier_mode_ratio_is_two() {
        let m = GaussianMixture::new(10);
        let r = m.log_density(&[0.5; 10]) - m.log_density(&[-0.5; 10]);
        assert!((r - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn separation_in_standard_deviations() {
        for (d, expect) in [(10usize, 31.6), (50, 70.7)] {
            let sep = (d as f64).sqrt() * 2.0 * MIXTURE_CENTER / MIXTURE_SD;
            assert!((sep - expect).abs() < 0.05);
        }
    }

    #[test]
    fn naive_formula() {
        let m = GaussianMixture::new(2);
        let x = [0.1, 0.3];
        let n = |c: f64| {
            let q = (x[0] - c).powi(2) + (x[1] - c).powi(2);
            (-q / 0.02).exp() / (2.0 * std::f64::consts::PI * 0.01)
        };
        let expect = (n(-0.5) / 3.0 + 2.0 * n(0.5) / 3.0).ln();
        assert!((m.log_density(&x) - expect).abs() < 1e-10);
    }
}
