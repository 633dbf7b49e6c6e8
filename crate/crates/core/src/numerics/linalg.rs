use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{EssError, Result};

/// Relative diagonal jitter applied before factorizing ensemble covariances.
pub const DEFAULT_JITTER: f64 = 1e-9;

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *d;
        }
        m
    }

    /// Builds from rows; fails unless the rows form an exactly symmetric square matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(EssError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        let m = Self { dim, data };
        for i in 0..dim {
            for j in 0..i {
                if m.get(i, j) != m.get(j, i) {
                    return Err(EssError::InvalidArgument(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += value;
        }
    }

    /// `self += factor * v vᵗ`
    pub fn add_outer(&mut self, v: &[f64], factor: f64) {
        debug_assert_eq!(v.len(), self.dim);
        for i in 0..self.dim {
            let fi = factor * v[i];
            let row = &mut self.data[i * self.dim..(i + 1) * self.dim];
            for (r, vj) in row.iter_mut().zip(v) {
                *r += fi * vj;
            }
        }
    }

    pub fn add_assign(&mut self, other: &SymmetricMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Max absolute entry.
    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        let n = self.dim;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(EssError::NotPositiveDefinite { pivot: j, value: d });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Cholesky { dim: n, l })
    }
}

/// Lower-triangular factor `L` with `L Lᵗ = M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    dim: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// All-zero factor; represents the zero-covariance limit.
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            l: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.dim + j]
    }

    /// `L z`
    pub fn mul_vec(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                self.l[i * n..i * n + i + 1]
                    .iter()
                    .zip(z)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Solves `L y = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `Lᵗ x = b` in place.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// `xᵗ M⁻¹ x`
    pub fn inv_quad_form(&self, x: &[f64]) -> f64 {
        let mut y = x.to_vec();
        self.solve_lower_in_place(&mut y);
        y.iter().map(|v| v * v).sum()
    }

    /// `log det M`
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.get(i, i).ln()).sum::<f64>()
    }

    /// `M⁻¹`
    pub fn inverse(&self) -> SymmetricMatrix {
        let n = self.dim;
        let mut inv = SymmetricMatrix::zeros(n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|c| *c = 0.0);
            col[j] = 1.0;
            self.solve_lower_in_place(&mut col);
            self.solve_upper_in_place(&mut col);
            for i in j..n {
                inv.set(i, j, col[i]);
            }
        }
        inv
    }

    /// `L Lᵗ`
    pub fn reconstruct(&self) -> SymmetricMatrix {
        let n = self.dim;
        let mut m = SymmetricMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| self.get(i, k) * self.get(j, k)).sum();
                m.set(i, j, s);
            }
        }
        m
    }
}

/// Covariance with `1/|S|` normalization: `(1/|S|) Σ (x − x̄)(x − x̄)ᵗ`.
pub fn sample_covariance(points: &[Vec<f64>]) -> Result<SymmetricMatrix> {
    if points.len() < 2 {
        return Err(EssError::DegenerateEnsemble(format!(
            "covariance needs at least 2 points, got {}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(EssError::DimensionMismatch {
            expected: dim,
            found: p.len(),
        });
    }
    let n = points.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut cov = SymmetricMatrix::zeros(dim);
    let mut dev = vec![0.0; dim];
    for p in points {
        for ((d, v), m) in dev.iter_mut().zip(p).zip(&mean) {
            *d = v - m;
        }
        cov.add_outer(&dev, 1.0 / n);
    }
    // keep exact symmetry regardless of accumulation order
    for i in 0..dim {
        for j in 0..i {
            let v = cov.get(i, j);
            cov.set(j, i, v);
        }
    }
    Ok(cov)
}

/// Adds `relative · trace/D` to the diagonal.
pub fn jittered(cov: &SymmetricMatrix, relative: f64) -> SymmetricMatrix {
    let mut out = cov.clone();
    let scale = cov.trace() / cov.dim().max(1) as f64;
    out.add_diagonal(relative * scale);
    out
}

/// `mean + L z` with `z` standard normal from `rng`.
pub fn sample_mvn<R: Rng + ?Sized>(
    mean: &[f64],
    cov: &SymmetricMatrix,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let factor = cov.cholesky()?;
    Ok(sample_mvn_factored(mean, &factor, rng))
}

pub fn sample_mvn_factored<R: Rng + ?Sized>(
    mean: &[f64],
    factor: &Cholesky,
    rng: &mut R,
) -> Vec<f64> {
    let z: Vec<f64> = (0..factor.dim())
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    factor
        .mul_vec(&z)
        .into_iter()
        .zip(mean)
        .map(|(a, m)| a + m)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{RngStream, StreamKey};
    use proptest::prelude::*;

    #[test]
    fn covariance_of_square_corners_is_identity() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 2.0],
            vec![2.0, 2.0],
        ];
        assert_eq!(sample_covariance(&pts).unwrap(), SymmetricMatrix::identity(2));
    }

    #[test]
    fn covariance_of_identical_points_is_zero() {
        let pts = vec![vec![3.0, 3.0]; 5];
        assert_eq!(sample_covariance(&pts).unwrap(), SymmetricMatrix::zeros(2));
    }

    #[test]
    fn covariance_one_dimensional() {
        let c = sample_covariance(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(c.rows(), vec![vec![1.0]]);
    }

    #[test]
    fn covariance_needs_two_points() {
        assert!(matches!(
            sample_covariance(&[vec![1.0]]),
            Err(EssError::DegenerateEnsemble(_))
        ));
    }

    #[test]
    fn cholesky_examples() {
        let id = SymmetricMatrix::identity(3).cholesky().unwrap();
        assert_eq!(id.reconstruct(), SymmetricMatrix::identity(3));
        assert_eq!(id.get(1, 1), 1.0);

        let d = SymmetricMatrix::from_diagonal(&[4.0, 9.0]).cholesky().unwrap();
        assert_eq!((d.get(0, 0), d.get(1, 0), d.get(1, 1)), (2.0, 0.0, 3.0));

        let m = SymmetricMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let l = m.cholesky().unwrap();
        let back = l.reconstruct();
        for i in 0..2 {
            for j in 0..2 {
                assert!((back.get(i, j) - m.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = SymmetricMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            m.cholesky(),
            Err(EssError::NotPositiveDefinite { pivot: 1, .. })
        ));
        assert!(SymmetricMatrix::zeros(2).cholesky().is_err());
    }

    #[test]
    fn inverse_and_log_det() {
        let m = SymmetricMatrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap();
        let l = m.cholesky().unwrap();
        let inv = l.inverse();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| m.get(i, k) * inv.get(k, j)).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-12);
            }
        }
        // det by cofactor expansion
        let det: f64 = 4.0 * (3.0 * 2.0 - 0.2 * 0.2) - 1.0 * (1.0 * 2.0 - 0.2 * 0.5)
            + 0.5 * (1.0 * 0.2 - 3.0 * 0.5);
        assert!((l.log_det() - det.ln()).abs() < 1e-12);
        let x = [1.0, -2.0, 0.5];
        let direct: f64 = (0..3)
            .map(|i| (0..3).map(|j| x[i] * inv.get(i, j) * x[j]).sum::<f64>())
            .sum();
        assert!((l.inv_quad_form(&x) - direct).abs() < 1e-12);
    }

    #[test]
    fn mvn_zero_factor_returns_mean() {
        let mut rng = RngStream::new(1, StreamKey::new(0, 0, 0));
        let mean = [1.5, -2.0, 0.25];
        assert_eq!(
            sample_mvn_factored(&mean, &Cholesky::zeros(3), &mut rng),
            mean.to_vec()
        );
    }

    #[test]
    fn mvn_is_deterministic_per_stream() {
        let cov = SymmetricMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let key = StreamKey::new(4, 2, 0);
        let a = sample_mvn(&[0.0, 1.0], &cov, &mut RngStream::new(11, key)).unwrap();
        let b = sample_mvn(&[0.0, 1.0], &cov, &mut RngStream::new(11, key)).unwrap();
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn mvn_identity_empirical_covariance() {
        let mut rng = RngStream::new(2024, StreamKey::new(0, 0, 0));
        let id = SymmetricMatrix::identity(2);
        let draws: Vec<Vec<f64>> = (0..100_000)
            .map(|_| sample_mvn(&[0.0, 0.0], &id, &mut rng).unwrap())
            .collect();
        let c = sample_covariance(&draws).unwrap();
        assert!((c.get(0, 0) - 1.0).abs() < 0.05);
        assert!((c.get(1, 1) - 1.0).abs() < 0.05);
        assert!(c.get(0, 1).abs() < 0.05);
    }

    fn matrix_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, n * n)
    }

    proptest! {
        #[test]
        fn cholesky_round_trip(a in (1usize..8).prop_flat_map(matrix_strategy)) {
            let n = (a.len() as f64).sqrt() as usize;
            // M = A Aᵗ + I
            let mut m = SymmetricMatrix::identity(n);
            for i in 0..n {
                for j in 0..=i {
                    let s: f64 = (0..n).map(|k| a[i * n + k] * a[j * n + k]).sum();
                    let v = m.get(i, j) + s;
                    m.set(i, j, v);
                }
            }
            let back = m.cholesky().unwrap().reconstruct();
            let mut err: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    err = err.max((back.get(i, j) - m.get(i, j)).abs());
                }
            }
            prop_assert!(err / m.norm_inf() <= 1e-10);
        }

        #[test]
        fn covariance_translation_invariant(
            pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 2..20),
            shift in prop::collection::vec(-10.0f64..10.0, 3),
        ) {
            let moved: Vec<Vec<f64>> = pts
                .iter()
                .map(|p| p.iter().zip(&shift).map(|(a, b)| a + b).collect())
                .collect();
            let c0 = sample_covariance(&pts).unwrap();
            let c1 = sample_covariance(&moved).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let scale = 1.0f64.max(c0.get(i, j).abs());
                    prop_assert!((c0.get(i, j) - c1.get(i, j)).abs() <= 1e-12 * scale);
                }
            }
        }
    }
}
