//! Univariate slice update along a direction vector: stepping-out followed by
//! shrinking, with the interval measured in units of the direction.

use rand::Rng;
use rand_distr::Open01;

use crate::error::{EssError, Result};
use crate::moves::DirectionVector;
use crate::targets::LogDensity;

pub const DEFAULT_MAX_EXPANSIONS: usize = 10_000;
pub const MAX_CONTRACTIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SliceUpdate {
    pub new_point: Vec<f64>,
    pub log_density: f64,
    pub n_expansions: usize,
    pub n_contractions: usize,
    /// Exact number of target evaluations made by this update.
    pub n_evaluations: usize,
}

/// One slice-sampling update of `x0` along `eta`.
///
/// Never rejects: the returned point always lies strictly inside the slice.
pub fn slice_along<T, R>(
    target: &T,
    x0: &[f64],
    logf_x0: f64,
    eta: &DirectionVector,
    rng: &mut R,
    max_expansions: usize,
) -> Result<SliceUpdate>
where
    T: LogDensity + ?Sized,
    R: Rng + ?Sized,
{
    slice_along_with(target, x0, logf_x0, eta.components(), max_expansions, || {
        rng.sample(Open01)
    })
}

/// Same as [`slice_along`] but with uniform `(0, 1)` draws supplied by `uniform`,
/// consumed in order: slice height, interval offset, then one per shrinking proposal.
pub(crate) fn slice_along_with<T, U>(
    target: &T,
    x0: &[f64],
    logf_x0: f64,
    eta: &[f64],
    max_expansions: usize,
    mut uniform: U,
) -> Result<SliceUpdate>
where
    T: LogDensity + ?Sized,
    U: FnMut() -> f64,
{
    if logf_x0 == f64::NEG_INFINITY || logf_x0.is_nan() {
        return Err(EssError::InvalidCurrentState(logf_x0));
    }
    if eta.len() != x0.len() {
        return Err(EssError::DimensionMismatch {
            expected: x0.len(),
            found: eta.len(),
        });
    }
    if eta.iter().all(|v| *v == 0.0) {
        return Err(EssError::DegenerateEnsemble("zero direction vector".into()));
    }

    let mut point = vec![0.0; x0.len()];
    let mut n_evaluations = 0usize;
    let eval_at = |t: f64, point: &mut Vec<f64>, n: &mut usize| {
        for ((p, x), e) in point.iter_mut().zip(x0).zip(eta) {
            *p = x + t * e;
        }
        *n += 1;
        target.log_density(point)
    };

    let height = logf_x0 + uniform().ln();

    let mut left = -uniform();
    let mut right = left + 1.0;
    let mut n_expansions = 0usize;

    while height < eval_at(left, &mut point, &mut n_evaluations) {
        if n_expansions >= max_expansions {
            return Err(EssError::UnboundedSlice { max_expansions });
        }
        left -= 1.0;
        n_expansions += 1;
    }
    while height < eval_at(right, &mut point, &mut n_evaluations) {
        if n_expansions >= max_expansions {
            return Err(EssError::UnboundedSlice { max_expansions });
        }
        right += 1.0;
        n_expansions += 1;
    }

    let mut n_contractions = 0usize;
    loop {
        let t = left + uniform() * (right - left);
        let logf = eval_at(t, &mut point, &mut n_evaluations);
        if height < logf {
            return Ok(SliceUpdate {
                new_point: point,
                log_density: logf,
                n_expansions,
                n_contractions,
                n_evaluations,
            });
        }
        if n_contractions >= MAX_CONTRACTIONS {
            return Err(EssError::ShrinkingLimit {
                max_contractions: MAX_CONTRACTIONS,
            });
        }
        if t < 0.0 {
            left = t;
        } else {
            right = t;
        }
        n_contractions += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{RngStream, StreamKey};
    use crate::targets::{Counted, Gaussian, UniformBox};

    fn scripted(values: Vec<f64>) -> impl FnMut() -> f64 {
        let mut it = values.into_iter();
        move || it.next().expect("script exhausted")
    }

    #[test]
    fn uniform_target_steps_out_twice() {
        let target = UniformBox::new(vec![0.0], vec![1.0]).unwrap();
        // height draw, U = 0.5, then one shrinking draw landing at t = 0.1
        let draws = vec![0.5, 0.5, 1.6 / 3.0];
        let r = slice_along_with(&target, &[0.5], 0.0, &[1.0], 100, scripted(draws)).unwrap();
        assert_eq!(r.n_expansions, 2);
        assert_eq!(r.n_contractions, 0);
        // L and R, two expansions, one accepted draw
        assert_eq!(r.n_evaluations, 5);
        assert!((r.new_point[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn shrinking_moves_the_correct_end() {
        let target = UniformBox::new(vec![0.0], vec![1.0]).unwrap();
        // interval after stepping out is [-1.5, 1.5]; first draw t = 1.2 is
        // outside (x = 1.7) and must shrink R, second draw inside.
        let draws = vec![0.5, 0.5, 0.9, 0.6];
        let r = slice_along_with(&target, &[0.5], 0.0, &[1.0], 100, scripted(draws)).unwrap();
        assert_eq!(r.n_contractions, 1);
        // second draw on [-1.5, 1.2]
        let t = -1.5 + 0.6 * 2.7;
        assert!((r.new_point[0] - (0.5 + t)).abs() < 1e-12);
        assert_eq!(r.n_evaluations, 2 + 2 + 2);
    }

    #[test]
    fn returned_point_is_inside_slice_and_counts_match() {
        let target = Counted::new(Gaussian::standard(3));
        let mut rng = RngStream::new(3, StreamKey::new(0, 0, 0));
        let mut x = vec![0.3, -0.2, 1.0];
        let mut logf = target.log_density(&x);
        target.reset();
        for _ in 0..2000 {
            let eta = DirectionVector::new(vec![0.7, -0.1, 0.4], true);
            let mut probe = rng.clone();
            let height = logf + probe.sample::<f64, _>(Open01).ln();
            let r = slice_along(&target, &x, logf, &eta, &mut rng, 100).unwrap();
            assert!(r.log_density > height);
            assert_eq!(r.log_density, target.log_density(&r.new_point));
            assert_eq!(r.n_evaluations, 3 + r.n_expansions + r.n_contractions);
            x = r.new_point;
            logf = r.log_density;
        }
    }

    #[test]
    fn evaluation_counter_matches_target_calls() {
        let target = Counted::new(Gaussian::standard(2));
        let mut rng = RngStream::new(8, StreamKey::new(0, 0, 0));
        let eta = DirectionVector::new(vec![0.01, 0.02], true);
        let r = slice_along(&target, &[0.0, 0.0], target.log_density(&[0.0, 0.0]), &eta, &mut rng, 10_000)
            .unwrap();
        assert_eq!(target.count(), 1 + r.n_evaluations as u64);
    }

    #[test]
    fn oversized_direction_needs_shrinking() {
        // brute force over scripted runs: large eta covers the slice, so
        // stepping out is rare and shrinking almost always happens
        let target = Gaussian::standard(1);
        let eta = DirectionVector::new(vec![1e3], true);
        let runs = 10_000;
        let mut shrunk = 0;
        for i in 0..runs {
            let mut rng = RngStream::new(77, StreamKey::new(i, 0, 0));
            let r = slice_along(&target, &[0.0], 0.0 - 0.5 * crate::targets::LN_2PI, &eta, &mut rng, 100)
                .unwrap();
            assert!(r.n_expansions <= 2);
            if r.n_contractions >= 1 {
                shrunk += 1;
            }
        }
        assert!(shrunk as f64 / runs as f64 > 0.99, "shrunk {shrunk}/{runs}");
    }

    #[test]
    fn flat_improper_target_is_unbounded() {
        struct Flat;
        impl LogDensity for Flat {
            fn dim(&self) -> usize {
                1
            }
            fn log_density(&self, _x: &[f64]) -> f64 {
                0.0
            }
        }
        let mut rng = RngStream::new(1, StreamKey::new(0, 0, 0));
        let eta = DirectionVector::new(vec![1.0], true);
        let err = slice_along(&Flat, &[0.0], 0.0, &eta, &mut rng, 50).unwrap_err();
        assert_eq!(err, EssError::UnboundedSlice { max_expansions: 50 });
    }

    #[test]
    fn rejects_state_outside_support() {
        let target = UniformBox::new(vec![0.0], vec![1.0]).unwrap();
        let mut rng = RngStream::new(1, StreamKey::new(0, 0, 0));
        let eta = DirectionVector::new(vec![1.0], true);
        let err = slice_along(&target, &[2.0], f64::NEG_INFINITY, &eta, &mut rng, 50).unwrap_err();
        assert!(matches!(err, EssError::InvalidCurrentState(_)));
    }

    #[test]
    fn zero_direction_is_rejected() {
        let target = Gaussian::standard(2);
        let mut rng = RngStream::new(1, StreamKey::new(0, 0, 0));
        let eta = DirectionVector::new(vec![0.0, 0.0], true);
        assert!(slice_along(&target, &[0.0, 0.0], 0.0, &eta, &mut rng, 50).is_err());
    }
}
