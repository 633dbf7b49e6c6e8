use super::LogDensity;
use crate::error::{EssError, Result};

/// Ring density `log L = −Σ_cyclic [(x_i² + x_{i+1}² − a)² / b]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    dim: usize,
    a: f64,
    b: f64,
}

impl Ring {
    pub fn new(dim: usize, a: f64, b: f64) -> Result<Self> {
        if dim < 2 {
            return Err(EssError::InvalidArgument("ring needs at least 2 dimensions".into()));
        }
        if !(b > 0.0) {
            return Err(EssError::InvalidArgument(format!("b must be positive, got {b}")));
        }
        Ok(Self { dim, a, b })
    }
}

impl LogDensity for Ring {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let n = self.dim;
        let term = |u: f64, v: f64| {
            let r = u * u + v * v - self.a;
            let s = r * r / self.b;
            s * s
        };
        let mut total = term(x[n - 1], x[0]);
        for w in x.windows(2) {
            total += term(w[0], w[1]);
        }
        -total
    }

    fn id(&self) -> &str {
        "ring"
    }
}
