use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::LogDensity;
use crate::error::{EssError, Result};

pub const IMAGE_SIZE: usize = 200;
pub const N_OBJECTS: usize = 8;
pub const NOISE_SD: f64 = 2.0;
/// Prior box for `(X, Y, A, R)`.
pub const PRIOR_LOW: [f64; 4] = [0.0, 0.0, 1.0, 2.0];
pub const PRIOR_HIGH: [f64; 4] = [200.0, 200.0, 2.0, 9.0];
/// Profile terms beyond this many radii from the centre are below 1e-21.
const WINDOW_RADII: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectParams {
    pub x: f64,
    pub y: f64,
    pub amplitude: f64,
    pub radius: f64,
}

impl ObjectParams {
    pub fn from_slice(theta: &[f64]) -> Self {
        Self {
            x: theta[0],
            y: theta[1],
            amplitude: theta[2],
            radius: theta[3],
        }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.x, self.y, self.amplitude, self.radius]
    }
}

/// Gaussian profile `A exp(−[(x−X)² + (y−Y)²] / (2R²))`.
pub fn profile(px: f64, py: f64, p: &ObjectParams) -> f64 {
    let r2 = (px - p.x).powi(2) + (py - p.y).powi(2);
    p.amplitude * (-r2 / (2.0 * p.radius * p.radius)).exp()
}

/// Square grid of pixel values; pixel `(x, y)` is stored at `y * size + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub size: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            pixels: vec![0.0; size * size],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.size + x]
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_le_bytes(size: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != size * size * 8 {
            return Err(EssError::InvalidArgument(format!(
                "expected {} bytes for a {size}x{size} image, got {}",
                size * size * 8,
                bytes.len()
            )));
        }
        let pixels = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { size, pixels })
    }
}

/// Simulates the benchmark image: 8 objects with `X, Y ~ U(0, 200)`,
/// `A ~ U(1, 2)`, `R ~ U(3, 7)`, plus `N(0, 4)` pixel noise.
pub fn simulate_image<R: Rng + ?Sized>(rng: &mut R) -> (Image, Vec<ObjectParams>) {
    let n = IMAGE_SIZE as f64;
    let objects: Vec<ObjectParams> = (0..N_OBJECTS)
        .map(|_| ObjectParams {
            x: rng.random_range(0.0..n),
            y: rng.random_range(0.0..n),
            amplitude: rng.random_range(1.0..2.0),
            radius: rng.random_range(3.0..7.0),
        })
        .collect();
    let noise = Normal::new(0.0, NOISE_SD).unwrap();
    let mut image = Image::zeros(IMAGE_SIZE);
    for y in 0..IMAGE_SIZE {
        for x in 0..IMAGE_SIZE {
            let signal: f64 = objects.iter().map(|o| profile(x as f64, y as f64, o)).sum();
            image.pixels[y * IMAGE_SIZE + x] = signal + noise.sample(rng);
        }
    }
    (image, objects)
}

/// Posterior over a single object's `(X, Y, A, R)` given an image:
/// `−Σ (G − D)² / (2σ²)` plus a uniform prior box.
#[derive(Debug, Clone)]
pub struct ObjectDetection {
    image: Image,
    sigma: f64,
    sum_sq_data: f64,
    log_prior: f64,
}

impl ObjectDetection {
    pub fn new(image: Image, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(EssError::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        let sum_sq_data = image.pixels.iter().map(|v| v * v).sum();
        let log_prior = -PRIOR_LOW
            .iter()
            .zip(&PRIOR_HIGH)
            .map(|(l, h)| (h - l).ln())
            .sum::<f64>();
        Ok(Self {
            image,
            sigma,
            sum_sq_data,
            log_prior,
        })
    }

    pub fn image(&self) -> &Image {
        &self.image
    }

    pub fn in_prior(theta: &[f64]) -> bool {
        theta
            .iter()
            .zip(PRIOR_LOW.iter().zip(&PRIOR_HIGH))
            .all(|(v, (l, h))| v > l && v < h)
    }

    /// `Σ (G − D)²` over all pixels.
    pub fn residual_sum(&self, p: &ObjectParams) -> f64 {
        let size = self.image.size;
        let axis = |c: f64| -> Vec<f64> {
            (0..size)
                .map(|i| (-(i as f64 - c).powi(2) / (2.0 * p.radius * p.radius)).exp())
                .collect()
        };
        let gx = axis(p.x);
        let gy = axis(p.y);
        let sq = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>();
        let model_sq = p.amplitude * p.amplitude * sq(&gx) * sq(&gy);

        let window = |c: f64| {
            let lo = (c - WINDOW_RADII * p.radius).floor().max(0.0) as usize;
            let hi = ((c + WINDOW_RADII * p.radius).ceil().max(0.0) as usize).min(size - 1);
            lo..=hi
        };
        let mut cross = 0.0;
        for y in window(p.y) {
            let row = &self.image.pixels[y * size..(y + 1) * size];
            let mut acc = 0.0;
            for x in window(p.x) {
                acc += gx[x] * row[x];
            }
            cross += gy[y] * acc;
        }
        model_sq - 2.0 * p.amplitude * cross + self.sum_sq_data
    }
}

impl LogDensity for ObjectDetection {
    fn dim(&self) -> usize {
        4
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        if !Self::in_prior(theta) {
            return f64::NEG_INFINITY;
        }
        let p = ObjectParams::from_slice(theta);
        self.log_prior - self.residual_sum(&p) / (2.0 * self.sigma * self.sigma)
    }

    fn id(&self) -> &str {
        "object_detection"
    }

    fn sample_prior(&self, rng: &mut dyn rand::RngCore) -> Option<Vec<f64>> {
        Some(
            PRIOR_LOW
                .iter()
                .zip(&PRIOR_HIGH)
                .map(|(l, h)| rng.random_range(*l..*h))
                .collect(),
        )
    }
}
