use super::{GroundTruth, LogDensity, LN_2PI};
use crate::error::{EssError, Result};
use crate::numerics::{Cholesky, SymmetricMatrix};

/// Multivariate normal `N(mean, cov)`.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: Vec<f64>,
    cov: SymmetricMatrix,
    factor: Cholesky,
    norm: f64,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, cov: SymmetricMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(EssError::DimensionMismatch {
                expected: cov.dim(),
                found: mean.len(),
            });
        }
        if mean.is_empty() {
            return Err(EssError::InvalidArgument("dimension must be positive".into()));
        }
        let factor = cov.cholesky()?;
        let norm = -0.5 * (mean.len() as f64 * LN_2PI + factor.log_det());
        Ok(Self { mean, cov, factor, norm })
    }

    pub fn standard(dim: usize) -> Self {
        Self::new(vec![0.0; dim], SymmetricMatrix::identity(dim)).expect("identity covariance")
    }

    /// Zero mean, unit variances and common correlation `rho`.
    pub fn equicorrelated(dim: usize, rho: f64) -> Result<Self> {
        let mut cov = SymmetricMatrix::identity(dim);
        for i in 0..dim {
            for j in 0..i {
                cov.set(i, j, rho);
            }
        }
        Self::new(vec![0.0; dim], cov)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &SymmetricMatrix {
        &self.cov
    }
}

impl LogDensity for Gaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        self.norm - 0.5 * self.factor.inv_quad_form(&d)
    }

    fn id(&self) -> &str {
        "gaussian"
    }

    fn ground_truth(&self) -> Option<GroundTruth> {
        Some(GroundTruth {
            means: Some(self.mean.clone()),
            variances: Some((0..self.dim()).map(|i| self.cov.get(i, i)).collect()),
            mode_masses: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_values() {
        let g = Gaussian::standard(3);
        assert!((g.log_density(&[0.0; 3]) + 1.5 * LN_2PI).abs() < 1e-12);
        assert!((g.log_density(&[1.0, 2.0, 0.0]) + 1.5 * LN_2PI + 2.5).abs() < 1e-12);
    }

    #[test]
    fn correlated_matches_direct_formula() {
        let g = Gaussian::equicorrelated(2, 0.5).unwrap();
        let x = [0.7, -1.1];
        // inverse of [[1, .5], [.5, 1]] is (4/3)[[1, -.5], [-.5, 1]]
        let q = 4.0 / 3.0 * (x[0] * x[0] - x[0] * x[1] + x[1] * x[1]);
        let det: f64 = 0.75;
        let expect = -LN_2PI - 0.5 * det.ln() - 0.5 * q;
        assert!((g.log_density(&x) - expect).abs() < 1e-12);
    }

    #[test]
    fn indefinite_covariance_rejected() {
        assert!(Gaussian::equicorrelated(3, -0.9).is_err());
    }
}
