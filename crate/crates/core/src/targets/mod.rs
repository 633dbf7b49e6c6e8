//! Benchmark log-densities.
//!
//! Every target is a pure function of the position; `-inf` marks points
//! outside the support.

use rand::RngCore;

mod ar1;
mod funnel;
mod gaussian;
mod mixture;
mod object_detection;
mod ring;
mod shells;
mod wrappers;

pub use ar1::Ar1;
pub use funnel::CorrelatedFunnel;
pub use gaussian::Gaussian;
pub use mixture::GaussianMixture;
pub use object_detection::{simulate_image, Image, ObjectDetection, ObjectParams, IMAGE_SIZE, NOISE_SD, N_OBJECTS};
pub use ring::Ring;
pub use shells::GaussianShells;
pub use wrappers::{AffineMapped, Counted, Padded, PiecewiseConstant, UniformBox};

/// Analytic reference values for a target.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub means: Option<Vec<f64>>,
    pub variances: Option<Vec<f64>>,
    /// Probability mass per mode, paired with [`LogDensity::mode_of`].
    pub mode_masses: Option<Vec<f64>>,
}

/// Dimension plus log-density evaluation; optionally a prior sampler and
/// analytic ground truth.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    fn log_density(&self, x: &[f64]) -> f64;

    /// Short identifier used in reports and chain headers.
    fn id(&self) -> &str {
        "custom"
    }

    /// Draw from the prior, when the target has one.
    fn sample_prior(&self, _rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        None
    }

    fn ground_truth(&self) -> Option<GroundTruth> {
        None
    }

    /// Index of the mode a point belongs to, for targets with discrete modes.
    fn mode_of(&self, _x: &[f64]) -> Option<usize> {
        None
    }
}

impl<T: LogDensity + ?Sized> LogDensity for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
    fn id(&self) -> &str {
        (**self).id()
    }
    fn sample_prior(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        (**self).sample_prior(rng)
    }
    fn ground_truth(&self) -> Option<GroundTruth> {
        (**self).ground_truth()
    }
    fn mode_of(&self, x: &[f64]) -> Option<usize> {
        (**self).mode_of(x)
    }
}

impl<T: LogDensity + ?Sized> LogDensity for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
    fn id(&self) -> &str {
        (**self).id()
    }
    fn sample_prior(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        (**self).sample_prior(rng)
    }
    fn ground_truth(&self) -> Option<GroundTruth> {
        (**self).ground_truth()
    }
    fn mode_of(&self, x: &[f64]) -> Option<usize> {
        (**self).mode_of(x)
    }
}

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_3;
