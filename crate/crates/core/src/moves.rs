//! Direction-vector generators.
//!
//! Every move sees only the complementary ensemble: the walker being updated
//! is never passed in, which is what keeps the split-ensemble update in
//! detailed balance.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EssError, Result};
use crate::mixture::{fit_dpgm, MixtureFit};
use crate::numerics::{
    jittered, sample_covariance, sample_mvn_factored, Cholesky, RngStream, DEFAULT_JITTER,
};

/// Default covariance rescaling for inter-mode jumps of the global move.
pub const DEFAULT_GLOBAL_GAMMA: f64 = 0.001;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionVector {
    components: Vec<f64>,
    includes_mu: bool,
}

impl DirectionVector {
    pub fn new(components: Vec<f64>, includes_mu: bool) -> Self {
        Self {
            components,
            includes_mu,
        }
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    /// False only for the mode-jumping branch of the global move.
    pub fn includes_mu(&self) -> bool {
        self.includes_mu
    }

    pub fn norm_squared(&self) -> f64 {
        self.components.iter().map(|v| v * v).sum()
    }

    pub fn into_components(self) -> Vec<f64> {
        self.components
    }
}

/// The walkers a move may read: never the one being updated.
#[derive(Debug, Clone, Copy)]
pub struct ComplementaryEnsemble<'a> {
    walkers: &'a [Vec<f64>],
}

impl<'a> ComplementaryEnsemble<'a> {
    pub fn new(walkers: &'a [Vec<f64>]) -> Result<Self> {
        if walkers.len() < 2 {
            return Err(EssError::DegenerateEnsemble(format!(
                "complementary ensemble needs at least 2 walkers, got {}",
                walkers.len()
            )));
        }
        Ok(Self { walkers })
    }

    pub fn walkers(&self) -> &'a [Vec<f64>] {
        self.walkers
    }

    pub fn len(&self) -> usize {
        self.walkers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walkers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.walkers[0].len()
    }
}

/// How the global move handles a pair drawn from the same component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SameComponentRule {
    /// `μ (X_a − X_b)` for two walkers of the component.
    #[default]
    PairDifference,
    /// `2μ z` with `z ~ N(0, C_i)`.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalOptions {
    pub gamma: f64,
    /// Truncation level; `None` uses `min(10, n_walkers / 4)`.
    pub max_components: Option<usize>,
    pub same_component: SameComponentRule,
}

impl Default for GlobalOptions {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GLOBAL_GAMMA,
            max_components: None,
            same_component: SameComponentRule::PairDifference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Move {
    #[default]
    Differential,
    Gaussian,
    Global(GlobalOptions),
}

impl Move {
    pub fn name(&self) -> &'static str {
        match self {
            Move::Differential => "differential",
            Move::Gaussian => "gaussian",
            Move::Global(_) => "global",
        }
    }
}

fn pick_two<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

fn scaled_difference(a: &[f64], b: &[f64], scale: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| scale * (x - y)).collect()
}

fn nonzero(eta: DirectionVector) -> Result<DirectionVector> {
    if eta.components.iter().all(|v| *v == 0.0) {
        Err(EssError::DegenerateEnsemble(
            "zero direction vector (coincident walkers)".into(),
        ))
    } else {
        Ok(eta)
    }
}

/// `μ (X_l − X_m)` for two distinct walkers drawn uniformly.
pub fn differential_move<R: Rng + ?Sized>(
    mu: f64,
    comp: ComplementaryEnsemble<'_>,
    rng: &mut R,
) -> Result<DirectionVector> {
    let (l, m) = pick_two(comp.len(), rng);
    let w = comp.walkers();
    nonzero(DirectionVector::new(scaled_difference(&w[l], &w[m], mu), true))
}

/// Cholesky factor of the jittered `1/|S|` covariance of the ensemble.
pub fn ensemble_covariance_factor(comp: ComplementaryEnsemble<'_>, jitter: f64) -> Result<Cholesky> {
    let cov = sample_covariance(comp.walkers())?;
    jittered(&cov, jitter)
        .cholesky()
        .map_err(|e| EssError::DegenerateEnsemble(format!("ensemble covariance: {e}")))
}

/// `2μ z`, `z ~ N(0, C_S)`.
pub fn gaussian_move<R: Rng + ?Sized>(
    mu: f64,
    comp: ComplementaryEnsemble<'_>,
    jitter: f64,
    rng: &mut R,
) -> Result<DirectionVector> {
    let factor = ensemble_covariance_factor(comp, jitter)?;
    Ok(gaussian_direction(mu, &factor, rng))
}

fn gaussian_direction<R: Rng + ?Sized>(mu: f64, factor: &Cholesky, rng: &mut R) -> DirectionVector {
    let zero = vec![0.0; factor.dim()];
    let z = sample_mvn_factored(&zero, factor, rng);
    DirectionVector::new(z.into_iter().map(|v| 2.0 * mu * v).collect(), true)
}

/// Global move given a fit of `comp`.
pub fn global_move<R: Rng + ?Sized>(
    mu: f64,
    comp: ComplementaryEnsemble<'_>,
    fit: &MixtureFit,
    gamma: f64,
    rule: SameComponentRule,
    rng: &mut R,
) -> Result<DirectionVector> {
    let prepared = PreparedGlobal::new(comp, fit.clone(), gamma)?;
    prepared.direction(mu, rule, rng)
}

/// Per-phase state for the global move: the fit, component membership lists
/// and covariance factors, shared read-only by every update in the phase.
#[derive(Debug, Clone)]
pub struct PreparedGlobal<'a> {
    comp: ComplementaryEnsemble<'a>,
    fit: MixtureFit,
    members: Vec<Vec<usize>>,
    factors: Vec<Cholesky>,
    sqrt_gamma: f64,
}

impl<'a> PreparedGlobal<'a> {
    pub fn new(comp: ComplementaryEnsemble<'a>, fit: MixtureFit, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(EssError::InvalidArgument(format!("gamma must be >= 0, got {gamma}")));
        }
        if fit.effective_components == 0 || fit.weights.is_empty() {
            return Err(EssError::DegenerateEnsemble(
                "mixture fit has no effective components".into(),
            ));
        }
        if fit.assignments.len() != comp.len() {
            return Err(EssError::DimensionMismatch {
                expected: comp.len(),
                found: fit.assignments.len(),
            });
        }
        let mut members = vec![Vec::new(); fit.weights.len()];
        for (walker, &c) in fit.assignments.iter().enumerate() {
            members[c].push(walker);
        }
        let factors = fit
            .covariances
            .iter()
            .map(|c| c.cholesky())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            comp,
            fit,
            members,
            factors,
            sqrt_gamma: gamma.sqrt(),
        })
    }

    pub fn fit(&self) -> &MixtureFit {
        &self.fit
    }

    pub fn direction<R: Rng + ?Sized>(
        &self,
        mu: f64,
        rule: SameComponentRule,
        rng: &mut R,
    ) -> Result<DirectionVector> {
        let walkers = self.comp.walkers();
        let (a, b) = pick_two(walkers.len(), rng);
        let (i, j) = (self.fit.assignments[a], self.fit.assignments[b]);
        if i == j {
            let members = &self.members[i];
            let eta = match rule {
                SameComponentRule::PairDifference if members.len() >= 2 => {
                    let (p, q) = pick_two(members.len(), rng);
                    DirectionVector::new(
                        scaled_difference(&walkers[members[p]], &walkers[members[q]], mu),
                        true,
                    )
                }
                _ => gaussian_direction(mu, &self.factors[i], rng),
            };
            return nonzero(eta);
        }
        let draw = |c: usize, rng: &mut R| -> Vec<f64> {
            let z: Vec<f64> = sample_mvn_factored(&vec![0.0; self.comp.dim()], &self.factors[c], rng);
            z.iter()
                .zip(&self.fit.means[c])
                .map(|(v, m)| m + self.sqrt_gamma * v)
                .collect()
        };
        let eta_i = draw(i, rng);
        let eta_j = draw(j, rng);
        nonzero(DirectionVector::new(scaled_difference(&eta_i, &eta_j, 2.0), false))
    }
}

/// A move with its per-phase precomputation done.
#[derive(Debug, Clone)]
pub enum PreparedMove<'a> {
    Differential(ComplementaryEnsemble<'a>),
    Gaussian(Cholesky),
    Global(Box<PreparedGlobal<'a>>, SameComponentRule),
}

impl<'a> PreparedMove<'a> {
    /// Prepares `mv` on `comp`; `fit_rng` is consumed only by the global move.
    pub fn prepare(mv: &Move, comp: ComplementaryEnsemble<'a>, fit_rng: &mut RngStream) -> Result<Self> {
        Ok(match mv {
            Move::Differential => PreparedMove::Differential(comp),
            Move::Gaussian => PreparedMove::Gaussian(ensemble_covariance_factor(comp, DEFAULT_JITTER)?),
            Move::Global(opts) => {
                let k = opts
                    .max_components
                    .unwrap_or_else(|| default_truncation(2 * comp.len()));
                let fit = fit_dpgm(comp.walkers(), k, fit_rng)?;
                PreparedMove::Global(
                    Box::new(PreparedGlobal::new(comp, fit, opts.gamma)?),
                    opts.same_component,
                )
            }
        })
    }

    pub fn direction<R: Rng + ?Sized>(&self, mu: f64, rng: &mut R) -> Result<DirectionVector> {
        match self {
            PreparedMove::Differential(comp) => differential_move(mu, *comp, rng),
            PreparedMove::Gaussian(factor) => Ok(gaussian_direction(mu, factor, rng)),
            PreparedMove::Global(g, rule) => g.direction(mu, *rule, rng),
        }
    }

    pub fn fit(&self) -> Option<&MixtureFit> {
        match self {
            PreparedMove::Global(g, _) => Some(g.fit()),
            _ => None,
        }
    }
}

/// `min(10, ⌊n_walkers / 4⌋)`, at least 1.
pub fn default_truncation(n_walkers: usize) -> usize {
    (n_walkers / 4).clamp(1, 10)
}
