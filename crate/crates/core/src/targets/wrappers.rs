use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use rand::{Rng, RngCore};

use super::{GroundTruth, LogDensity};
use crate::error::{EssError, Result};

/// Counts every density evaluation of the wrapped target.
#[derive(Debug)]
pub struct Counted<T> {
    inner: T,
    count: AtomicU64,
}

impl<T: LogDensity> Counted<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }
}

impl<T: LogDensity> LogDensity for Counted<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.log_density(x)
    }
    fn id(&self) -> &str {
        self.inner.id()
    }
    fn sample_prior(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        self.inner.sample_prior(rng)
    }
    fn ground_truth(&self) -> Option<GroundTruth> {
        self.inner.ground_truth()
    }
    fn mode_of(&self, x: &[f64]) -> Option<usize> {
        self.inner.mode_of(x)
    }
}

/// Sleeps for a fixed time before each evaluation, emulating an expensive model.
#[derive(Debug, Clone)]
pub struct Padded<T> {
    inner: T,
    delay: Duration,
}

impl<T: LogDensity> Padded<T> {
    pub fn new(inner: T, delay: Duration) -> Self {
        Self { inner, delay }
    }
}

impl<T: LogDensity> LogDensity for Padded<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        std::thread::sleep(self.delay);
        self.inner.log_density(x)
    }
    fn id(&self) -> &str {
        self.inner.id()
    }
    fn sample_prior(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        self.inner.sample_prior(rng)
    }
    fn ground_truth(&self) -> Option<GroundTruth> {
        self.inner.ground_truth()
    }
}

/// Uniform density on the closed box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
    log_volume: f64,
}

impl UniformBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(EssError::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.is_empty() || lo.iter().zip(&hi).any(|(l, h)| !(h > l)) {
            return Err(EssError::InvalidArgument("box bounds must satisfy lo < hi".into()));
        }
        let log_volume = lo.iter().zip(&hi).map(|(l, h)| (h - l).ln()).sum();
        Ok(Self { lo, hi, log_volume })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| v >= l && v <= h)
    }

    pub fn lower(&self) -> &[f64] {
        &self.lo
    }

    pub fn upper(&self) -> &[f64] {
        &self.hi
    }
}

impl LogDensity for UniformBox {
    fn dim(&self) -> usize {
        self.lo.len()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        if self.contains(x) {
            -self.log_volume
        } else {
            f64::NEG_INFINITY
        }
    }
    fn id(&self) -> &str {
        "uniform"
    }
    fn sample_prior(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        Some(
            self.lo
                .iter()
                .zip(&self.hi)
                .map(|(l, h)| rng.random_range(*l..*h))
                .collect(),
        )
    }
    fn ground_truth(&self) -> Option<GroundTruth> {
        Some(GroundTruth {
            means: Some(self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()),
            variances: Some(self.lo.iter().zip(&self.hi).map(|(l, h)| (h - l).powi(2) / 12.0).collect()),
            mode_masses: None,
        })
    }
}

/// One-dimensional density constant on each cell `[edges[i], edges[i+1])`,
/// with cell masses proportional to `weights`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    edges: Vec<f64>,
    masses: Vec<f64>,
    log_heights: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn new(edges: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if edges.len() != weights.len() + 1 || weights.is_empty() {
            return Err(EssError::InvalidArgument("need one more edge than weights".into()));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(EssError::InvalidArgument("edges must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(EssError::InvalidArgument("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        let masses: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let log_heights = masses
            .iter()
            .zip(edges.windows(2))
            .map(|(m, e)| (m / (e[1] - e[0])).ln())
            .collect();
        Ok(Self { edges, masses, log_heights })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.edges[0]) || !(x < *self.edges.last().unwrap()) {
            return None;
        }
        Some(self.edges.partition_point(|e| *e <= x) - 1)
    }
}

impl LogDensity for PiecewiseConstant {
    fn dim(&self) -> usize {
        1
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        self.cell_of(x[0]).map_or(f64::NEG_INFINITY, |i| self.log_heights[i])
    }
    fn id(&self) -> &str {
        "piecewise"
    }
    /// Exact draw from the density itself.
    fn sample_prior(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut cell = self.masses.len() - 1;
        for (i, m) in self.masses.iter().enumerate() {
            acc += m;
            if u < acc {
                cell = i;
                break;
            }
        }
        let (a, b) = (self.edges[cell], self.edges[cell + 1]);
        Some(vec![a + rng.random::<f64>() * (b - a)])
    }
    fn ground_truth(&self) -> Option<GroundTruth> {
        Some(GroundTruth {
            mode_masses: Some(self.masses.clone()),
            ..Default::default()
        })
    }
    fn mode_of(&self, x: &[f64]) -> Option<usize> {
        self.cell_of(x[0])
    }
}

/// Target pushed forward through `z = A x + b`.
///
/// The density of `z` is `p(A⁻¹(z − b)) / |det A|`.
#[derive(Debug, Clone)]
pub struct AffineMapped<T> {
    inner: T,
    a: Vec<f64>,
    b: Vec<f64>,
    lu: Vec<f64>,
    pivots: Vec<usize>,
    log_abs_det: f64,
}

impl<T: LogDensity> AffineMapped<T> {
    /// `a` is row-major `D × D`.
    pub fn new(inner: T, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let d = inner.dim();
        if a.len() != d * d || b.len() != d {
            return Err(EssError::DimensionMismatch {
                expected: d,
                found: b.len(),
            });
        }
        let mut lu = a.clone();
        let mut pivots = vec![0; d];
        let mut log_abs_det = 0.0;
        for k in 0..d {
            let p = (k..d)
                .max_by(|&i, &j| lu[i * d + k].abs().total_cmp(&lu[j * d + k].abs()))
                .unwrap();
            if lu[p * d + k] == 0.0 {
                return Err(EssError::InvalidArgument("affine map is singular".into()));
            }
            pivots[k] = p;
            if p != k {
                for c in 0..d {
                    lu.swap(k * d + c, p * d + c);
                }
            }
            let piv = lu[k * d + k];
            log_abs_det += piv.abs().ln();
            for i in k + 1..d {
                let f = lu[i * d + k] / piv;
                lu[i * d + k] = f;
                for c in k + 1..d {
                    lu[i * d + c] -= f * lu[k * d + c];
                }
            }
        }
        Ok(Self { inner, a, b, lu, pivots, log_abs_det })
    }

    /// `A x + b`.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let d = self.b.len();
        (0..d)
            .map(|i| {
                let row = &self.a[i * d..(i + 1) * d];
                row.iter().zip(x).map(|(r, v)| r * v).sum::<f64>() + self.b[i]
            })
            .collect()
    }

    /// `A⁻¹ (z − b)`.
    pub fn inverse(&self, z: &[f64]) -> Vec<f64> {
        let d = self.b.len();
        let mut y: Vec<f64> = z.iter().zip(&self.b).map(|(v, b)| v - b).collect();
        for k in 0..d {
            y.swap(k, self.pivots[k]);
        }
        for i in 0..d {
            for k in 0..i {
                y[i] -= self.lu[i * d + k] * y[k];
            }
        }
        for i in (0..d).rev() {
            for k in i + 1..d {
                y[i] -= self.lu[i * d + k] * y[k];
            }
            y[i] /= self.lu[i * d + i];
        }
        y
    }
}

impl<T: LogDensity> LogDensity for AffineMapped<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn log_density(&self, z: &[f64]) -> f64 {
        self.inner.log_density(&self.inverse(z)) - self.log_abs_det
    }
    fn id(&self) -> &str {
        "affine"
    }
}
