//! Autocorrelation, integrated autocorrelation time (IAT), effective sample
//! size and efficiency.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{EssError, Result};
use crate::run::{ChainStore, Sampler};
use crate::targets::LogDensity;

/// Window constant: the summation stops at the first `M ≥ c · τ(M)`.
pub const WINDOW_CONSTANT: f64 = 5.0;
/// A series shorter than this many IATs is too short for a reliable estimate.
pub const MIN_LENGTH_IN_IATS: f64 = 1000.0;
pub const MIN_SERIES_LENGTH: usize = 100;

/// `ρ̂(k) = ĉ(k) / ĉ(0)` for `k = 0..n`, with `ĉ(k)` normalized by `1/(n − k)`.
pub fn autocorrelation(series: &[f64]) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 2 {
        return Err(EssError::InvalidArgument("autocorrelation needs at least 2 values".into()));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    if centered.iter().all(|v| *v == 0.0) {
        return Err(EssError::ZeroVariance);
    }
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = centered
        .iter()
        .map(|v| Complex::new(*v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re / n as f64;
    if !(c0 > 0.0) {
        return Err(EssError::ZeroVariance);
    }
    let mut rho: Vec<f64> = (0..n)
        .map(|k| buf[k].re / (n - k) as f64 / c0)
        .collect();
    rho[0] = 1.0;
    Ok(rho)
}

/// IAT estimate with its summation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IatEstimate {
    pub iat: f64,
    pub window: usize,
    /// The series is long enough for the estimate to be trusted.
    pub reliable: bool,
}

/// Windowed IAT; never fails on length, but flags short series.
pub fn iat_estimate(series: &[f64]) -> Result<IatEstimate> {
    let n = series.len();
    if n < MIN_SERIES_LENGTH {
        return Err(EssError::InvalidArgument(format!(
            "IAT needs at least {MIN_SERIES_LENGTH} values, got {n}"
        )));
    }
    let rho = autocorrelation(series)?;
    let mut tau = 1.0;
    let mut window = None;
    for (m, r) in rho.iter().enumerate().skip(1) {
        tau += 2.0 * r;
        if m as f64 >= WINDOW_CONSTANT * tau {
            window = Some(m);
            break;
        }
    }
    let reliable = window.is_some() && n as f64 >= MIN_LENGTH_IN_IATS * tau;
    Ok(IatEstimate {
        iat: tau,
        window: window.unwrap_or(n - 1),
        reliable,
    })
}

/// `1 + 2 Σ_{k=1}^{M} ρ̂(k)` with the adaptive window.
pub fn integrated_autocorrelation_time(series: &[f64]) -> Result<f64> {
    let est = iat_estimate(series)?;
    if !est.reliable {
        return Err(EssError::ChainTooShort {
            estimate: est.iat,
            n: series.len(),
        });
    }
    Ok(est.iat)
}

/// Concatenates walker chains in index order and estimates the IAT.
pub fn ensemble_iat_estimate(walker_series: &[Vec<f64>]) -> Result<IatEstimate> {
    if walker_series.is_empty() {
        return Err(EssError::InvalidArgument("no walkers".into()));
    }
    if let Some(short) = walker_series.iter().find(|s| s.len() < MIN_SERIES_LENGTH) {
        return Err(EssError::InvalidArgument(format!(
            "each walker needs at least {MIN_SERIES_LENGTH} samples, got {}",
            short.len()
        )));
    }
    let joined: Vec<f64> = walker_series.concat();
    iat_estimate(&joined)
}

pub fn ensemble_iat(walker_series: &[Vec<f64>]) -> Result<f64> {
    let est = ensemble_iat_estimate(walker_series)?;
    if !est.reliable {
        return Err(EssError::ChainTooShort {
            estimate: est.iat,
            n: walker_series.iter().map(Vec::len).sum(),
        });
    }
    Ok(est.iat)
}

pub fn efficiency(n_eff: f64, n_density_evaluations: u64) -> f64 {
    n_eff / n_density_evaluations.max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub status: String,
    pub sampler: String,
    #[serde(rename = "move")]
    pub move_kind: String,
    pub target_id: String,
    pub dim: usize,
    pub n_walkers: usize,
    pub n_recorded: usize,
    pub burn_in_iterations: usize,
    pub n_samples: usize,
    pub iat: Vec<f64>,
    pub mean_iat: f64,
    /// Every per-parameter IAT came from a long enough chain.
    pub iat_reliable: bool,
    pub n_eff: f64,
    pub efficiency: f64,
    pub n_density_evaluations: u64,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub mode_masses: Option<Vec<f64>>,
    pub mu_final: Option<f64>,
    pub acceptance_rate: Option<f64>,
}

/// Report over recorded iterations after discarding `burn_in` of them.
pub fn build_report<T: LogDensity + ?Sized>(
    chain: &ChainStore,
    burn_in: f64,
    target: &T,
    sampler: &dyn Sampler,
) -> RunReport {
    let n_rec = chain.n_recorded();
    let start = (burn_in * n_rec as f64).floor() as usize;
    let kept = n_rec - start.min(n_rec);
    let n_samples = kept * chain.n_walkers;
    let mut report = RunReport {
        status: "ok".into(),
        sampler: sampler.name().to_string(),
        move_kind: sampler.move_name().to_string(),
        target_id: target.id().to_string(),
        dim: chain.dim,
        n_walkers: chain.n_walkers,
        n_recorded: n_rec,
        burn_in_iterations: start.min(n_rec),
        n_samples,
        iat: Vec::new(),
        mean_iat: f64::NAN,
        iat_reliable: false,
        n_eff: 0.0,
        efficiency: 0.0,
        n_density_evaluations: chain.n_density_evaluations,
        means: Vec::new(),
        variances: Vec::new(),
        mode_masses: None,
        mu_final: chain.mu_final(),
        acceptance_rate: (chain.n_proposals > 0 && sampler.name() != "ess")
            .then(|| chain.n_accepted as f64 / chain.n_proposals as f64),
    };
    if n_samples == 0 {
        report.status = "no samples".into();
        return report;
    }

    let mut reliable = true;
    for param in 0..chain.dim {
        let series = chain.walker_series(param, start);
        let all: Vec<f64> = series.concat();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / all.len() as f64;
        report.means.push(mean);
        report.variances.push(var);
        match ensemble_iat_estimate(&series) {
            Ok(est) => {
                reliable &= est.reliable;
                report.iat.push(est.iat);
            }
            Err(_) => {
                reliable = false;
                report.iat.push(f64::NAN);
            }
        }
    }
    let finite: Vec<f64> = report.iat.iter().copied().filter(|v| v.is_finite()).collect();
    if !finite.is_empty() {
        report.mean_iat = finite.iter().sum::<f64>() / finite.len() as f64;
        report.n_eff = n_samples as f64 / report.mean_iat;
        report.efficiency = efficiency(report.n_eff, chain.n_density_evaluations);
    }
    report.iat_reliable = reliable && finite.len() == chain.dim;

    if let Some(k) = target.ground_truth().and_then(|g| g.mode_masses).map(|m| m.len()) {
        let mut counts = vec![0usize; k];
        let mut total = 0usize;
        for it in start..n_rec {
            for w in 0..chain.n_walkers {
                if let Some(mode) = target.mode_of(chain.sample(it, w)) {
                    if mode < k {
                        counts[mode] += 1;
                        total += 1;
                    }
                }
            }
        }
        if total > 0 {
            report.mode_masses = Some(counts.iter().map(|c| *c as f64 / total as f64).collect());
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// Fraction of values per bin; sums to 1 over values inside the range.
    pub probabilities: Vec<f64>,
}

/// Histogram normalized to unit total. With no range, the data span is used
/// (widened to unit width when all values coincide).
pub fn histogram(values: &[f64], n_bins: usize, range: Option<(f64, f64)>) -> Result<Histogram> {
    if n_bins == 0 {
        return Err(EssError::InvalidArgument("need at least one bin".into()));
    }
    if values.is_empty() {
        return Err(EssError::InvalidArgument("no values".into()));
    }
    let (lo, hi) = match range {
        Some((lo, hi)) if hi > lo => (lo, hi),
        Some((lo, hi)) => {
            return Err(EssError::InvalidArgument(format!("empty range [{lo}, {hi}]")));
        }
        None => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, lo + 0.5)
            }
        }
    };
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0usize; n_bins];
    let mut total = 0usize;
    for v in values {
        if *v < lo || *v > hi {
            continue;
        }
        let i = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[i] += 1;
        total += 1;
    }
    let probabilities = counts
        .iter()
        .map(|c| if total > 0 { *c as f64 / total as f64 } else { 0.0 })
        .collect();
    Ok(Histogram { edges, probabilities })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{RngStream, StreamKey};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn direct_autocorrelation(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let c = |k: usize| (0..n - k).map(|m| (x[m + k] - mean) * (x[m] - mean)).sum::<f64>() / (n - k) as f64;
        let c0 = c(0);
        (0..n).map(|k| c(k) / c0).collect()
    }

    fn ar1_series(alpha: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed, StreamKey::new(0, 0, 0));
        let beta = (1.0 - alpha * alpha).sqrt();
        let mut x = rng.sample::<f64, _>(StandardNormal);
        (0..n)
            .map(|_| {
                x = alpha * x + beta * rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect()
    }

    #[test]
    fn alternating_series() {
        let x: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let rho = autocorrelation(&x).unwrap();
        assert_eq!(rho[0], 1.0);
        assert!((rho[1] + 1.0).abs() <= 2.0 / 100.0);
    }

    #[test]
    fn constant_series_has_zero_variance() {
        assert_eq!(autocorrelation(&[3.0; 10]).unwrap_err(), EssError::ZeroVariance);
    }

    #[test]
    fn iid_lag_one_is_small() {
        let x = ar1_series(0.0, 100_000, 1);
        assert!(autocorrelation(&x).unwrap()[1].abs() < 0.02);
    }

    #[test]
    fn iid_iat_is_one() {
        let x = ar1_series(0.0, 1_000_000, 2);
        let t = integrated_autocorrelation_time(&x).unwrap();
        assert!((t - 1.0).abs() < 0.05, "{t}");
    }

    #[test]
    fn geometric_iat() {
        let x = ar1_series(0.9, 1_000_000, 3);
        let t = integrated_autocorrelation_time(&x).unwrap();
        assert!((t / 19.0 - 1.0).abs() < 0.1, "{t}");
    }

    #[test]
    fn slow_chain_is_too_short() {
        let x = ar1_series(0.99, 100_000, 4);
        match integrated_autocorrelation_time(&x).unwrap_err() {
            EssError::ChainTooShort { estimate, n } => {
                assert_eq!(n, 100_000);
                assert!(estimate > 100.0 && estimate < 300.0, "{estimate}");
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn identical_copies_match_single_chain() {
        let x = ar1_series(0.5, 20_000, 5);
        let single = iat_estimate(&x).unwrap().iat;
        let copies = ensemble_iat_estimate(&vec![x.clone(); 4]).unwrap().iat;
        assert!((copies / single - 1.0).abs() < 0.1, "{copies} vs {single}");
        assert_eq!(ensemble_iat_estimate(&[x.clone()]).unwrap(), iat_estimate(&x).unwrap());
    }

    #[test]
    fn iid_walkers() {
        let walkers: Vec<Vec<f64>> = (0..8).map(|s| ar1_series(0.0, 10_000, 10 + s)).collect();
        let t = ensemble_iat(&walkers).unwrap();
        assert!((t - 1.0).abs() < 0.1, "{t}");
    }

    #[test]
    fn thinning_divides_iat() {
        let x = ar1_series(0.95, 1_000_000, 6);
        let full = iat_estimate(&x).unwrap().iat;
        for t in [2usize, 4] {
            let thinned: Vec<f64> = x.iter().step_by(t).copied().collect();
            let th = iat_estimate(&thinned).unwrap().iat;
            let expect = (full / t as f64).max(1.0);
            assert!((th / expect - 1.0).abs() < 0.15, "thin {t}: {th} vs {expect}");
        }
    }

    #[test]
    fn efficiency_examples() {
        assert_eq!(efficiency(100.0, 10_000), 0.01);
        assert_eq!(efficiency(0.0, 10), 0.0);
    }

    #[test]
    fn histogram_examples() {
        let h = histogram(&[2.5; 50], 10, None).unwrap();
        assert_eq!(h.probabilities.iter().filter(|p| **p > 0.0).count(), 1);
        assert!((h.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(h.edges.len(), 11);
    }

    #[test]
    fn histogram_of_normal_draws() {
        let x = ar1_series(0.0, 100_000, 7);
        let h = histogram(&x, 50, Some((-4.0, 4.0))).unwrap();
        let phi = |z: f64| 0.5 * (1.0 + statrs::function::erf::erf(z / std::f64::consts::SQRT_2));
        let inside = phi(4.0) - phi(-4.0);
        let tv: f64 = h
            .probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| (p - (phi(h.edges[i + 1]) - phi(h.edges[i])) / inside).abs())
            .sum::<f64>()
            * 0.5;
        assert!(tv < 0.02, "{tv}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn fft_matches_direct(xs in proptest::collection::vec(-10.0f64..10.0, 2..1000)) {
            prop_assume!(xs.iter().any(|v| *v != xs[0]));
            let fast = autocorrelation(&xs).unwrap();
            let slow = direct_autocorrelation(&xs);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }
}
