//! Variational Bayesian Gaussian mixture with a truncated stick-breaking
//! (Dirichlet process) prior on the weights and Normal–Wishart component
//! priors, fitted by coordinate ascent.

use rand::Rng;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{EssError, Result};
use crate::numerics::{log_sum_exp, sample_covariance, Cholesky, RngStream, SymmetricMatrix};
use crate::targets::LN_2PI;

pub const MEAN_PRECISION_PRIOR: f64 = 1.0;
pub const MAX_SWEEPS: usize = 200;
pub const TOLERANCE: f64 = 1e-4;
const KMEANS_ITERATIONS: usize = 25;
/// Relative regularization of component scatter and of the prior covariance.
const REG_COVAR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFit {
    pub n_components_max: usize,
    /// Posterior-mean stick-breaking weights, normalized.
    pub weights: Vec<f64>,
    /// Posterior means of the component locations.
    pub means: Vec<Vec<f64>>,
    /// Posterior-mean component covariances `W⁻¹ / ν`.
    pub covariances: Vec<SymmetricMatrix>,
    /// Responsibility argmax per input point.
    pub assignments: Vec<usize>,
    /// Components with weight above `2 / n_points`.
    pub effective_components: usize,
    /// False when the sweep cap was hit before the bound settled.
    pub converged: bool,
    pub n_sweeps: usize,
    pub lower_bound: f64,
}

impl MixtureFit {
    /// Indices of the components counted as effective.
    pub fn effective_indices(&self) -> Vec<usize> {
        let threshold = 2.0 / self.assignments.len() as f64;
        (0..self.weights.len())
            .filter(|&k| self.weights[k] > threshold)
            .collect()
    }
}

struct Prior {
    mean: Vec<f64>,
    precision: f64,
    dof: f64,
    /// `W₀⁻¹`
    scale_inv: SymmetricMatrix,
    reg: f64,
}

struct Posterior {
    /// Stick-breaking Beta parameters per component.
    conc: Vec<(f64, f64)>,
    beta: Vec<f64>,
    means: Vec<Vec<f64>>,
    dof: Vec<f64>,
    /// Factor of `W_k⁻¹`.
    scale_inv_chol: Vec<Cholesky>,
    scale_inv: Vec<SymmetricMatrix>,
}

/// Fits the mixture to `points` with at most `max_components` components.
///
/// Coordinate ascent is started from k-means partitions with `k`, `k/2` and 2
/// clusters; the start reaching the highest bound is kept. Non-convergence is
/// reported through [`MixtureFit::converged`], not as an error.
pub fn fit_dpgm(points: &[Vec<f64>], max_components: usize, rng: &mut RngStream) -> Result<MixtureFit> {
    if points.len() < 2 {
        return Err(EssError::DegenerateEnsemble(format!(
            "mixture fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    if max_components == 0 {
        return Err(EssError::InvalidArgument("max_components must be >= 1".into()));
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(EssError::DimensionMismatch {
            expected: dim,
            found: p.len(),
        });
    }
    let n = points.len();
    let k = max_components.min(n);

    let data_cov = sample_covariance(points)?;
    let spread = data_cov.trace() / dim as f64;
    let scale = if spread > 0.0 { spread } else { 1.0 };
    let mut scale_inv = data_cov.clone();
    scale_inv.add_diagonal(REG_COVAR * scale);
    let prior = Prior {
        mean: mean_of(points),
        precision: MEAN_PRECISION_PRIOR,
        dof: dim as f64 + 2.0,
        scale_inv,
        reg: REG_COVAR * scale,
    };

    let concentration = 1.0 / k as f64;
    let mut best: Option<Sweeps> = None;
    for clusters in initial_cluster_counts(k) {
        let run = coordinate_ascent(points, k, clusters, &prior, concentration, rng)?;
        if best.as_ref().is_none_or(|b| run.lower_bound > b.lower_bound) {
            best = Some(run);
        }
    }
    let Sweeps {
        post,
        lower_bound,
        converged,
        n_sweeps,
    } = best.expect("at least one initialization");
    if !converged {
        log::debug!("mixture fit stopped at the sweep cap ({MAX_SWEEPS}) without converging");
    }

    let log_resp = e_step(points, &post);
    let assignments: Vec<usize> = log_resp
        .iter()
        .map(|lr| {
            lr.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (j, &v)| if v > best.1 { (j, v) } else { best })
                .0
        })
        .collect();

    let weights = stick_weights(&post.conc);
    let threshold = 2.0 / n as f64;
    let effective_components = weights.iter().filter(|&&w| w > threshold).count();
    let covariances = post
        .scale_inv
        .iter()
        .zip(&post.dof)
        .map(|(s, nu)| s.scaled(1.0 / nu))
        .collect();

    Ok(MixtureFit {
        n_components_max: k,
        weights,
        means: post.means,
        covariances,
        assignments,
        effective_components,
        converged,
        n_sweeps,
        lower_bound,
    })
}

struct Sweeps {
    post: Posterior,
    lower_bound: f64,
    converged: bool,
    n_sweeps: usize,
}

/// k-means cluster counts used to start the restarts: `k`, `k/2` and 2.
fn initial_cluster_counts(k: usize) -> Vec<usize> {
    let mut counts = vec![k, k.div_ceil(2), 2.min(k)];
    counts.dedup();
    counts
}

fn coordinate_ascent(
    points: &[Vec<f64>],
    k: usize,
    clusters: usize,
    prior: &Prior,
    concentration: f64,
    rng: &mut RngStream,
) -> Result<Sweeps> {
    let dim = points[0].len();
    let labels = kmeans_pp(points, clusters, rng);
    let mut resp = vec![vec![0.0; k]; points.len()];
    for (r, &l) in resp.iter_mut().zip(&labels) {
        r[l] = 1.0;
    }
    sort_by_mass(&mut resp);
    let mut post = m_step(points, &resp, prior, concentration)?;
    let mut lower_bound = f64::NEG_INFINITY;
    let mut converged = false;
    let mut n_sweeps = 0;
    for sweep in 1..=MAX_SWEEPS {
        n_sweeps = sweep;
        let log_resp = e_step(points, &post);
        for (r, lr) in resp.iter_mut().zip(&log_resp) {
            for (a, b) in r.iter_mut().zip(lr) {
                *a = b.exp();
            }
        }
        sort_by_mass(&mut resp);
        post = m_step(points, &resp, prior, concentration)?;
        let lb = elbo(&log_resp, &post, dim);
        let change = lb - lower_bound;
        lower_bound = lb;
        if change.abs() < TOLERANCE {
            converged = true;
            break;
        }
    }
    Ok(Sweeps {
        post,
        lower_bound,
        converged,
        n_sweeps,
    })
}

fn mean_of(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len() as f64;
    let mut m = vec![0.0; points[0].len()];
    for p in points {
        for (a, b) in m.iter_mut().zip(p) {
            *a += b / n;
        }
    }
    m
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding followed by Lloyd iterations; returns hard labels.
fn kmeans_pp(points: &[Vec<f64>], k: usize, rng: &mut RngStream) -> Vec<usize> {
    let n = points.len();
    let mut centers: Vec<Vec<f64>> = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    chosen = i;
                    break;
                }
                u -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[idx].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[idx]));
        }
    }

    let nearest = |p: &[f64], centers: &[Vec<f64>]| -> usize {
        centers
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (j, c)| {
                let d = sq_dist(p, c);
                if d < best.1 {
                    (j, d)
                } else {
                    best
                }
            })
            .0
    };
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
    for _ in 0..KMEANS_ITERATIONS {
        for (j, c) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == j)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                continue;
            }
            c.iter_mut().for_each(|v| *v = 0.0);
            for m in &members {
                for (a, b) in c.iter_mut().zip(m.iter()) {
                    *a += b / members.len() as f64;
                }
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    labels
}

/// Reorders components by decreasing responsibility mass so that the
/// stick-breaking order puts the largest components first.
fn sort_by_mass(resp: &mut [Vec<f64>]) {
    let k = resp[0].len();
    let mass: Vec<f64> = (0..k).map(|j| resp.iter().map(|r| r[j]).sum()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));
    if order.iter().enumerate().all(|(i, &j)| i == j) {
        return;
    }
    for r in resp.iter_mut() {
        let old = r.clone();
        for (i, &j) in order.iter().enumerate() {
            r[i] = old[j];
        }
    }
}

fn m_step(points: &[Vec<f64>], resp: &[Vec<f64>], prior: &Prior, concentration: f64) -> Result<Posterior> {
    let k = resp[0].len();
    let dim = points[0].len();
    let nk: Vec<f64> = (0..k)
        .map(|j| resp.iter().map(|r| r[j]).sum::<f64>() + 10.0 * f64::EPSILON)
        .collect();

    let mut conc = Vec::with_capacity(k);
    let mut tail: f64 = nk.iter().sum();
    for &c in &nk {
        tail -= c;
        conc.push((1.0 + c, concentration + tail.max(0.0)));
    }

    let mut beta = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    let mut dof = Vec::with_capacity(k);
    let mut scale_inv = Vec::with_capacity(k);
    let mut scale_inv_chol = Vec::with_capacity(k);
    let mut dev = vec![0.0; dim];
    for j in 0..k {
        let mut xbar = vec![0.0; dim];
        for (p, r) in points.iter().zip(resp) {
            for (a, b) in xbar.iter_mut().zip(p) {
                *a += r[j] * b;
            }
        }
        xbar.iter_mut().for_each(|v| *v /= nk[j]);

        let mut scatter = SymmetricMatrix::zeros(dim);
        for (p, r) in points.iter().zip(resp) {
            if r[j] == 0.0 {
                continue;
            }
            for ((d, x), m) in dev.iter_mut().zip(p).zip(&xbar) {
                *d = x - m;
            }
            scatter.add_outer(&dev, r[j]);
        }
        // N_k S_k with S_k regularized
        scatter.add_diagonal(nk[j] * prior.reg);

        let b = prior.precision + nk[j];
        let m: Vec<f64> = prior
            .mean
            .iter()
            .zip(&xbar)
            .map(|(m0, x)| (prior.precision * m0 + nk[j] * x) / b)
            .collect();
        for ((d, x), m0) in dev.iter_mut().zip(&xbar).zip(&prior.mean) {
            *d = x - m0;
        }
        let mut winv = prior.scale_inv.clone();
        winv.add_assign(&scatter);
        winv.add_outer(&dev, prior.precision * nk[j] / b);
        symmetrize(&mut winv);
        let chol = winv.cholesky()?;

        beta.push(b);
        means.push(m);
        dof.push(prior.dof + nk[j]);
        scale_inv.push(winv);
        scale_inv_chol.push(chol);
    }
    Ok(Posterior {
        conc,
        beta,
        means,
        dof,
        scale_inv_chol,
        scale_inv,
    })
}

fn symmetrize(m: &mut SymmetricMatrix) {
    for i in 0..m.dim() {
        for j in 0..i {
            let v = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, v);
        }
    }
}

fn expected_log_weights(conc: &[(f64, f64)]) -> Vec<f64> {
    let mut out = Vec::with_capacity(conc.len());
    let mut acc = 0.0;
    for &(a, b) in conc {
        let d = digamma(a + b);
        out.push(digamma(a) - d + acc);
        acc += digamma(b) - d;
    }
    out
}

fn e_step(points: &[Vec<f64>], post: &Posterior) -> Vec<Vec<f64>> {
    let dim = points[0].len() as f64;
    let log_pi = expected_log_weights(&post.conc);
    let k = post.means.len();
    let consts: Vec<f64> = (0..k)
        .map(|j| {
            let nu = post.dof[j];
            let e_log_det: f64 = (1..=points[0].len())
                .map(|i| digamma(0.5 * (nu + 1.0 - i as f64)))
                .sum::<f64>()
                + dim * std::f64::consts::LN_2
                - post.scale_inv_chol[j].log_det();
            log_pi[j] + 0.5 * e_log_det - 0.5 * dim * LN_2PI - 0.5 * dim / post.beta[j]
        })
        .collect();
    let mut dev = vec![0.0; points[0].len()];
    points
        .iter()
        .map(|p| {
            let mut lr: Vec<f64> = (0..k)
                .map(|j| {
                    for ((d, x), m) in dev.iter_mut().zip(p).zip(&post.means[j]) {
                        *d = x - m;
                    }
                    consts[j] - 0.5 * post.dof[j] * post.scale_inv_chol[j].inv_quad_form(&dev)
                })
                .collect();
            let norm = log_sum_exp(&lr);
            lr.iter_mut().for_each(|v| *v -= norm);
            lr
        })
        .collect()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Evidence lower bound up to an additive constant, valid right after the M-step.
fn elbo(log_resp: &[Vec<f64>], post: &Posterior, dim: usize) -> f64 {
    let entropy: f64 = log_resp
        .iter()
        .flatten()
        .map(|&lr| if lr > f64::NEG_INFINITY { -lr.exp() * lr } else { 0.0 })
        .sum();
    let d = dim as f64;
    let log_wishart: f64 = (0..post.means.len())
        .map(|j| {
            let nu = post.dof[j];
            let half_log_det_w = -0.5 * post.scale_inv_chol[j].log_det();
            -(nu * half_log_det_w
                + 0.5 * nu * d * std::f64::consts::LN_2
                + (0..dim).map(|i| ln_gamma(0.5 * (nu - i as f64))).sum::<f64>())
        })
        .sum();
    let log_norm_weight: f64 = post.conc.iter().map(|&(a, b)| ln_beta(a, b)).sum();
    let log_beta: f64 = post.beta.iter().map(|b| b.ln()).sum();
    entropy - log_wishart + log_norm_weight - 0.5 * d * log_beta
}

fn stick_weights(conc: &[(f64, f64)]) -> Vec<f64> {
    let mut remaining = 1.0;
    let mut w: Vec<f64> = conc
        .iter()
        .map(|&(a, b)| {
            let v = a / (a + b);
            let out = v * remaining;
            remaining *= 1.0 - v;
            out
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}
