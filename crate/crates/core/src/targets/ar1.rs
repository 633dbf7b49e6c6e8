use rand::Rng;
use rand_distr::StandardNormal;

use super::{GroundTruth, LogDensity, LN_2PI};
use crate::error::{EssError, Result};

/// Stationary AR(1) process `x_{i+1} = α x_i + β ε_i` with `β² = 1 − α²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ar1 {
    dim: usize,
    alpha: f64,
    beta2: f64,
    norm: f64,
}

impl Ar1 {
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        if !(alpha.abs() < 1.0) {
            return Err(EssError::InvalidArgument(format!("|alpha| must be below 1, got {alpha}")));
        }
        if dim == 0 {
            return Err(EssError::InvalidArgument("dimension must be positive".into()));
        }
        let beta2 = 1.0 - alpha * alpha;
        let norm = -0.5 * dim as f64 * LN_2PI - 0.5 * (dim - 1) as f64 * beta2.ln();
        Ok(Self { dim, alpha, beta2, norm })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Exact draw from the process.
    pub fn sample_exact<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let beta = self.beta2.sqrt();
        let mut x = Vec::with_capacity(self.dim);
        x.push(rng.sample::<f64, _>(StandardNormal));
        for i in 1..self.dim {
            let e: f64 = rng.sample(StandardNormal);
            x.push(self.alpha * x[i - 1] + beta * e);
        }
        x
    }
}

impl LogDensity for Ar1 {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let mut q = 0.0;
        for w in x.windows(2) {
            let r = w[1] - self.alpha * w[0];
            q += r * r;
        }
        self.norm - 0.5 * x[0] * x[0] - 0.5 * q / self.beta2
    }

    fn id(&self) -> &str {
        "ar1"
    }

    fn ground_truth(&self) -> Option<GroundTruth> {
        Some(GroundTruth {
            means: Some(vec![0.0; self.dim]),
            variances: Some(vec![1.0; self.dim]),
            mode_masses: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{RngStream, StreamKey};
    use crate::targets::Gaussian;

    #[test]
    fn rejects_unit_alpha() {
        assert!(Ar1::new(5, 1.0).is_err());
        assert!(Ar1::new(5, -1.2).is_err());
    }

    #[test]
    fn zero_alpha_is_standard_normal() {
        let t = Ar1::new(4, 0.0).unwrap();
        let g = Gaussian::standard(4);
        let x = [0.3, -1.0, 2.0, 0.1];
        assert!((t.log_density(&x) - g.log_density(&x)).abs() < 1e-12);
    }

    #[test]
    fn maximum_at_origin() {
        let t = Ar1::new(6, 0.95).unwrap();
        let at0 = t.log_density(&[0.0; 6]);
        assert!(at0 > t.log_density(&[0.01, 0.0, 0.0, 0.0, 0.0, 0.0]));
        assert!(at0 > t.log_density(&[0.0, 0.0, 0.0, -0.01, 0.0, 0.0]));
    }

    #[test]
    fn matches_dense_gaussian() {
        // covariance of the stationary process is α^|i-j|
        let alpha: f64 = 0.8;
        let d = 5;
        let mut cov = crate::numerics::SymmetricMatrix::zeros(d);
        for i in 0..d {
            for j in 0..=i {
                cov.set(i, j, alpha.powi((i - j) as i32));
            }
        }
        let g = Gaussian::new(vec![0.0; d], cov).unwrap();
        let t = Ar1::new(d, alpha).unwrap();
        let mut rng = RngStream::new(5, StreamKey::new(0, 0, 0));
        for _ in 0..100 {
            let x: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal) * 2.0).collect();
            assert!((t.log_density(&x) - g.log_density(&x)).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_draws_have_lag_one_correlation_alpha() {
        let t = Ar1::new(2, 0.95).unwrap();
        let mut rng = RngStream::new(2, StreamKey::new(0, 0, 0));
        let n = 200_000;
        let mut s = 0.0;
        for _ in 0..n {
            let x = t.sample_exact(&mut rng);
            s += x[0] * x[1];
        }
        assert!((s / n as f64 - 0.95).abs() < 0.01);
    }
}
