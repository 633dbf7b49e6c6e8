use super::{GroundTruth, LogDensity, LN_2PI};
use crate::error::{EssError, Result};

/// `x₁ ~ N(0, 1)` and `x_{2:D} | x₁ ~ N(0, e^{x₁} [(1−γ) I + γ J])`.
///
/// The conditional precision and determinant use the eigenstructure of
/// `(1−γ) I + γ J`, so evaluation is linear in `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedFunnel {
    dim: usize,
    gamma: f64,
    base: f64,
    along_ones: f64,
    log_det_unit: f64,
}

impl CorrelatedFunnel {
    pub fn new(dim: usize, gamma: f64) -> Result<Self> {
        if dim < 2 {
            return Err(EssError::InvalidArgument("funnel needs at least 2 dimensions".into()));
        }
        let m = (dim - 1) as f64;
        let lower = if dim > 2 { -1.0 / (m - 1.0) } else { f64::NEG_INFINITY };
        if !(gamma < 1.0 && gamma > lower) {
            return Err(EssError::InvalidArgument(format!(
                "gamma must lie in ({lower}, 1) for D = {dim}, got {gamma}"
            )));
        }
        let base = 1.0 - gamma;
        let along_ones = base + m * gamma;
        let log_det_unit = (m - 1.0) * base.ln() + along_ones.ln();
        Ok(Self {
            dim,
            gamma,
            base,
            along_ones,
            log_det_unit,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl LogDensity for CorrelatedFunnel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let m = (self.dim - 1) as f64;
        let y = &x[1..];
        let sum: f64 = y.iter().sum();
        let sq: f64 = y.iter().map(|v| v * v).sum();
        let proj = sum * sum / m;
        let quad = if self.dim > 2 {
            (sq - proj) / self.base + proj / self.along_ones
        } else {
            sq / self.along_ones
        };
        let s = x[0];
        let log_det = self.log_det_unit + m * s;
        -0.5 * (LN_2PI + s * s) - 0.5 * (m * LN_2PI + log_det + quad * (-s).exp())
    }

    fn id(&self) -> &str {
        "funnel"
    }

    fn ground_truth(&self) -> Option<GroundTruth> {
        let mut variances = vec![0.5f64.exp(); self.dim];
        variances[0] = 1.0;
        Some(GroundTruth {
            means: Some(vec![0.0; self.dim]),
            variances: Some(variances),
            mode_masses: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{RngStream, StreamKey, SymmetricMatrix};
    use crate::targets::Gaussian;
    use rand::Rng;

    fn dense(x: &[f64], gamma: f64) -> f64 {
        let d = x.len();
        let s = x[0];
        let mut cov = SymmetricMatrix::zeros(d - 1);
        for i in 0..d - 1 {
            for j in 0..=i {
                let v = if i == j { 1.0 } else { gamma };
                cov.set(i, j, v * s.exp());
            }
        }
        let cond = Gaussian::new(vec![0.0; d - 1], cov).unwrap();
        Gaussian::standard(1).log_density(&x[..1]) + cond.log_density(&x[1..])
    }

    #[test]
    fn closed_form_matches_dense_solve() {
        let f = CorrelatedFunnel::new(5, 0.5).unwrap();
        let mut rng = RngStream::new(9, StreamKey::new(0, 0, 0));
        for _ in 0..100 {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            assert!((f.log_density(&x) - dense(&x, 0.5)).abs() < 1e-10);
        }
    }

    #[test]
    fn uncorrelated_limit() {
        let f = CorrelatedFunnel::new(4, 0.0).unwrap();
        let x = [0.4, 1.0, -0.5, 0.2];
        let sd = (0.4f64).exp().sqrt();
        let mut expect = Gaussian::standard(1).log_density(&[0.4]);
        for v in &x[1..] {
            expect += Gaussian::standard(1).log_density(&[v / sd]) - sd.ln();
        }
        assert!((f.log_density(&x) - expect).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_case_ignores_gamma() {
        let x = [0.3, -0.8];
        let a = CorrelatedFunnel::new(2, 0.9).unwrap().log_density(&x);
        let b = CorrelatedFunnel::new(2, -5.0).unwrap().log_density(&x);
        assert_eq!(a, b);
        assert!((a - dense(&x, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn positive_definiteness_boundary() {
        assert!(CorrelatedFunnel::new(10, 1.0).is_err());
        assert!(CorrelatedFunnel::new(10, -1.0 / 8.0).is_err());
        assert!(CorrelatedFunnel::new(10, -1.0 / 8.0 + 1e-6).is_ok());
        assert!(CorrelatedFunnel::new(1, 0.5).is_err());
    }
}
