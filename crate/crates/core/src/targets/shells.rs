use rand::{Rng, RngCore};

use super::{LogDensity, LN_2PI};
use crate::numerics::log_add_exp;

pub const SHELL_OFFSET: f64 = 3.5;
pub const SHELL_RADIUS: f64 = 2.0;
pub const SHELL_WIDTH: f64 = 0.1;
/// Half-width of the prior box used for initialization.
pub const SHELL_PRIOR_HALF_WIDTH: f64 = 6.0;

/// Two Gaussian shells centred at `∓3.5` along the first axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianShells {
    dim: usize,
}

impl GaussianShells {
    pub fn new(dim: usize) -> Self {
        Self { dim: dim.max(1) }
    }

    fn log_circ(&self, x: &[f64], center: f64) -> f64 {
        let mut r2 = (x[0] - center).powi(2);
        for v in &x[1..] {
            r2 += v * v;
        }
        let d = r2.sqrt() - SHELL_RADIUS;
        -0.5 * LN_2PI - SHELL_WIDTH.ln() - d * d / (2.0 * SHELL_WIDTH * SHELL_WIDTH)
    }
}

impl LogDensity for GaussianShells {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        log_add_exp(self.log_circ(x, -SHELL_OFFSET), self.log_circ(x, SHELL_OFFSET))
    }

    fn id(&self) -> &str {
        "shells"
    }

    fn sample_prior(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        let h = SHELL_PRIOR_HALF_WIDTH;
        Some((0..self.dim).map(|_| rng.random_range(-h..h)).collect())
    }

    fn mode_of(&self, x: &[f64]) -> Option<usize> {
        Some(usize::from(x[0] >= 0.0))
    }
}
