//! Run configuration: JSON document plus command-line overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use ensemble_slice::baselines::{
    default_demc_gamma, AxisPolicy, BaselineConfig, Demc, DemcOptions, Metropolis, StandardSlice, Stretch,
};
use ensemble_slice::ensemble::{initialize, validate_walker_count};
use ensemble_slice::targets::{
    Ar1, CorrelatedFunnel, Gaussian, GaussianMixture, GaussianShells, Image, LogDensity, ObjectDetection, Ring,
    IMAGE_SIZE,
};
use ensemble_slice::{EnsembleSlice, EssError, GlobalOptions, InitStrategy, Move, RunOptions, Sampler, TuningState};

use crate::error::CliError;
use crate::image::{load_image, simulated_image};

pub const TARGETS: &[&str] = &[
    "gaussian",
    "ar1",
    "funnel",
    "ring",
    "shells",
    "mixture",
    "object_detection",
];
pub const SAMPLERS: &[&str] = &["ess", "metropolis", "slice", "stretch", "demc"];
pub const MOVES: &[&str] = &["differential", "gaussian", "global"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub target: String,
    pub dim: usize,
    /// Equicorrelation of the `gaussian` target.
    pub rho: f64,
    pub alpha: f64,
    pub funnel_gamma: f64,
    pub ring_a: f64,
    pub ring_b: f64,
    /// Image grid for `object_detection`; simulated from `image_seed` when absent.
    pub image: Option<PathBuf>,
    pub image_seed: u64,

    pub sampler: String,
    #[serde(rename = "move")]
    pub move_kind: String,
    /// Defaults to the smallest valid ensemble, `max(2D, 4)`.
    pub walkers: Option<usize>,
    pub iterations: usize,
    pub burn_in: f64,
    pub thin: usize,
    pub seed: u64,
    pub workers: usize,
    pub max_evaluations: Option<u64>,

    pub mu0: f64,
    pub adapt_max: u64,
    pub adapt_tol: f64,
    pub gamma: f64,
    pub max_components: Option<usize>,

    /// `auto` (prior when the target has one, else ball), `ball` or `prior`.
    pub init: String,
    pub init_center: f64,
    pub init_radius: f64,

    pub proposal_scale: Option<f64>,
    pub axis_policy: AxisPolicy,
    pub stretch_a: f64,
    pub demc_gamma: Option<f64>,
    pub snooker_probability: f64,

    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            target: "gaussian".into(),
            dim: 2,
            rho: 0.0,
            alpha: 0.95,
            funnel_gamma: 0.95,
            ring_a: 2.0,
            ring_b: 1.0,
            image: None,
            image_seed: 0,
            sampler: "ess".into(),
            move_kind: "differential".into(),
            walkers: None,
            iterations: 1000,
            burn_in: 0.5,
            thin: 1,
            seed: 0,
            workers: 1,
            max_evaluations: None,
            mu0: 1.0,
            adapt_max: ensemble_slice::tuning::DEFAULT_MAX_ADAPT,
            adapt_tol: ensemble_slice::tuning::DEFAULT_TOLERANCE,
            gamma: ensemble_slice::moves::DEFAULT_GLOBAL_GAMMA,
            max_components: None,
            init: "auto".into(),
            init_center: 0.0,
            init_radius: 0.1,
            proposal_scale: None,
            axis_policy: AxisPolicy::default(),
            stretch_a: ensemble_slice::baselines::DEFAULT_STRETCH_A,
            demc_gamma: None,
            snooker_probability: 0.1,
            out: PathBuf::from("ess-out"),
        }
    }
}

/// Command-line twins of the JSON fields; a flag that is given wins.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub funnel_gamma: Option<f64>,
    #[arg(long)]
    pub ring_a: Option<f64>,
    #[arg(long)]
    pub ring_b: Option<f64>,
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub image_seed: Option<u64>,
    #[arg(long)]
    pub sampler: Option<String>,
    #[arg(long = "move")]
    pub move_kind: Option<String>,
    #[arg(long)]
    pub walkers: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<f64>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub max_evaluations: Option<u64>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub adapt_max: Option<u64>,
    #[arg(long)]
    pub adapt_tol: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub max_components: Option<usize>,
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub init_center: Option<f64>,
    #[arg(long)]
    pub init_radius: Option<f64>,
    #[arg(long)]
    pub proposal_scale: Option<f64>,
    #[arg(long)]
    pub stretch_a: Option<f64>,
    #[arg(long)]
    pub demc_gamma: Option<f64>,
    #[arg(long)]
    pub snooker_probability: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! apply {
    ($cfg:ident, $ov:ident, $($field:ident),*) => {
        $(if let Some(v) = &$ov.$field { $cfg.$field = v.clone(); })*
    };
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let ov = self;
        apply!(
            cfg,
            ov,
            target,
            dim,
            rho,
            alpha,
            funnel_gamma,
            ring_a,
            ring_b,
            image_seed,
            sampler,
            move_kind,
            iterations,
            burn_in,
            thin,
            seed,
            workers,
            mu0,
            adapt_max,
            adapt_tol,
            gamma,
            init,
            init_center,
            init_radius,
            stretch_a,
            snooker_probability,
            out
        );
        if self.image.is_some() {
            cfg.image = self.image.clone();
        }
        if self.walkers.is_some() {
            cfg.walkers = self.walkers;
        }
        if self.max_evaluations.is_some() {
            cfg.max_evaluations = self.max_evaluations;
        }
        if self.max_components.is_some() {
            cfg.max_components = self.max_components;
        }
        if self.proposal_scale.is_some() {
            cfg.proposal_scale = self.proposal_scale;
        }
        if self.demc_gamma.is_some() {
            cfg.demc_gamma = self.demc_gamma;
        }
    }
}

fn read_json(path: &Path) -> Result<serde_json::Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn from_value(value: serde_json::Value) -> Result<RunConfig, CliError> {
    serde_json::from_value(value).map_err(|e| CliError::config(format!("bad run config: {e}")))
}

/// Single run: file values (if any) with flags on top.
pub fn load_run_config(ov: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = match &ov.config {
        Some(path) => from_value(read_json(path)?)?,
        None => RunConfig::default(),
    };
    ov.apply(&mut cfg);
    Ok(cfg)
}

/// Comparison list: a JSON array of run configs or `{"runs": [...]}`.
/// Flags override every entry.
pub fn load_compare_configs(ov: &Overrides) -> Result<Vec<RunConfig>, CliError> {
    let Some(path) = &ov.config else {
        return Err(CliError::config("compare needs --config with a list of runs"));
    };
    let runs = match read_json(path)? {
        serde_json::Value::Array(items) => items,
        serde_json::Value::Object(mut map) => match map.remove("runs") {
            Some(serde_json::Value::Array(items)) => items,
            _ => {
                return Err(CliError::config(
                    "expected an array of runs or an object with a \"runs\" array",
                ))
            }
        },
        _ => {
            return Err(CliError::config(
                "expected an array of runs or an object with a \"runs\" array",
            ))
        }
    };
    runs.into_iter()
        .map(|v| {
            let mut cfg = from_value(v)?;
            ov.apply(&mut cfg);
            Ok(cfg)
        })
        .collect()
}

fn invalid(e: EssError) -> CliError {
    CliError::config(e.to_string())
}

/// Setup errors from bad parameters are configuration errors; anything
/// raised while evaluating the target belongs to the sampler.
fn classify(e: EssError) -> CliError {
    match e.root() {
        EssError::InvalidArgument(_) | EssError::DimensionMismatch { .. } => CliError::config(e.to_string()),
        _ => CliError::sampler(e.to_string()),
    }
}

impl RunConfig {
    pub fn n_walkers(&self) -> usize {
        self.walkers.unwrap_or_else(|| (2 * self.dim).max(4))
    }

    pub fn is_ess(&self) -> bool {
        self.sampler == "ess"
    }

    /// Checks everything that does not need the target itself.
    pub fn validate(&self) -> Result<(), CliError> {
        if !TARGETS.contains(&self.target.as_str()) {
            return Err(CliError::config(format!(
                "unknown target '{}' (expected one of {})",
                self.target,
                TARGETS.join(", ")
            )));
        }
        if !SAMPLERS.contains(&self.sampler.as_str()) {
            return Err(CliError::config(format!(
                "unknown sampler '{}' (expected one of {})",
                self.sampler,
                SAMPLERS.join(", ")
            )));
        }
        if !MOVES.contains(&self.move_kind.as_str()) {
            return Err(CliError::config(format!(
                "unknown move '{}' (expected one of {})",
                self.move_kind,
                MOVES.join(", ")
            )));
        }
        if !["auto", "ball", "prior"].contains(&self.init.as_str()) {
            return Err(CliError::config(format!(
                "unknown init '{}' (expected auto, ball or prior)",
                self.init
            )));
        }
        if self.dim == 0 {
            return Err(CliError::config("dim must be at least 1"));
        }
        if self.target == "object_detection" && self.dim != 4 {
            return Err(CliError::config(format!(
                "object_detection has dim 4, got {}",
                self.dim
            )));
        }
        validate_walker_count(self.n_walkers(), self.dim).map_err(invalid)?;
        if self.iterations == 0 {
            return Err(CliError::config("iterations must be at least 1"));
        }
        self.run_options().validate().map_err(invalid)?;
        if self.workers == 0 {
            return Err(CliError::config("workers must be at least 1"));
        }
        TuningState::new(self.mu0, self.adapt_max, self.adapt_tol).map_err(invalid)?;
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(CliError::config(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.init_radius > 0.0 && self.init_radius.is_finite()) || !self.init_center.is_finite() {
            return Err(CliError::config("init_radius must be positive and init_center finite"));
        }
        if let Some(c) = self.max_components {
            if c == 0 {
                return Err(CliError::config("max_components must be at least 1"));
            }
        }
        if let Some(b) = self.baseline() {
            b.validate().map_err(invalid)?;
        }
        Ok(())
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            n_iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            max_evaluations: self.max_evaluations,
        }
    }

    pub fn baseline(&self) -> Option<BaselineConfig> {
        match self.sampler.as_str() {
            "metropolis" => Some(BaselineConfig::Metropolis {
                proposal_scale: self.proposal_scale,
            }),
            "slice" => Some(BaselineConfig::StandardSlice {
                axis_policy: self.axis_policy,
            }),
            "stretch" => Some(BaselineConfig::Stretch { a: self.stretch_a }),
            "demc" => Some(BaselineConfig::Demc {
                gamma: self.demc_gamma,
                snooker_probability: self.snooker_probability,
            }),
            _ => None,
        }
    }

    pub fn move_spec(&self) -> Move {
        match self.move_kind.as_str() {
            "gaussian" => Move::Gaussian,
            "global" => Move::Global(GlobalOptions {
                gamma: self.gamma,
                max_components: self.max_components,
                ..GlobalOptions::default()
            }),
            _ => Move::Differential,
        }
    }

    pub fn build_target(&self) -> Result<Box<dyn LogDensity>, CliError> {
        let d = self.dim;
        Ok(match self.target.as_str() {
            "gaussian" if self.rho == 0.0 => Box::new(Gaussian::standard(d)),
            "gaussian" => Box::new(Gaussian::equicorrelated(d, self.rho).map_err(invalid)?),
            "ar1" => Box::new(Ar1::new(d, self.alpha).map_err(invalid)?),
            "funnel" => Box::new(CorrelatedFunnel::new(d, self.funnel_gamma).map_err(invalid)?),
            "ring" => Box::new(Ring::new(d, self.ring_a, self.ring_b).map_err(invalid)?),
            "shells" => Box::new(GaussianShells::new(d)),
            "mixture" => Box::new(GaussianMixture::new(d)),
            "object_detection" => {
                let image: Image = match &self.image {
                    Some(path) => load_image(path)?,
                    None => simulated_image(self.image_seed).0,
                };
                if image.size != IMAGE_SIZE {
                    return Err(CliError::config(format!(
                        "object_detection needs a {IMAGE_SIZE}x{IMAGE_SIZE} image, got {}",
                        image.size
                    )));
                }
                Box::new(ObjectDetection::new(image, ensemble_slice::targets::NOISE_SD).map_err(invalid)?)
            }
            other => return Err(CliError::config(format!("unknown target '{other}'"))),
        })
    }

    fn init_strategy(&self, target: &dyn LogDensity) -> InitStrategy {
        let ball = InitStrategy::Ball {
            center: vec![self.init_center; self.dim],
            radius: self.init_radius,
        };
        match self.init.as_str() {
            "prior" => InitStrategy::Prior,
            "ball" => ball,
            _ => {
                let mut probe =
                    ensemble_slice::numerics::RngStream::new(0, ensemble_slice::numerics::StreamKey::new(0, 0, 0));
                if target.sample_prior(&mut probe).is_some() {
                    InitStrategy::Prior
                } else {
                    ball
                }
            }
        }
    }

    pub fn build_sampler(&self, target: &dyn LogDensity) -> Result<Box<dyn Sampler>, CliError> {
        let n = self.n_walkers();
        let tuning = TuningState::new(self.mu0, self.adapt_max, self.adapt_tol).map_err(invalid)?;
        let init = self.init_strategy(target);
        if self.is_ess() {
            let sampler = EnsembleSlice::new(target, n, &init, self.move_spec(), tuning, self.seed)
                .and_then(|s| s.with_workers(self.workers))
                .map_err(classify)?;
            return Ok(Box::new(sampler));
        }
        let positions = initialize(target, n, &init, self.seed, tuning)
            .map_err(classify)?
            .positions;
        let sampler: Box<dyn Sampler> = match self.baseline() {
            Some(BaselineConfig::Metropolis {
                proposal_scale: Some(s),
            }) => Box::new(Metropolis::new(target, positions, s, self.seed).map_err(classify)?),
            Some(BaselineConfig::Metropolis { proposal_scale: None }) => {
                Box::new(Metropolis::autotuned(target, positions, self.seed).map_err(classify)?)
            }
            Some(BaselineConfig::StandardSlice { axis_policy }) => {
                Box::new(StandardSlice::new(target, positions, tuning, axis_policy, self.seed).map_err(classify)?)
            }
            Some(BaselineConfig::Stretch { a }) => {
                Box::new(Stretch::new(target, positions, a, self.seed).map_err(classify)?)
            }
            Some(BaselineConfig::Demc {
                gamma,
                snooker_probability,
            }) => {
                let opts = DemcOptions {
                    gamma: gamma.unwrap_or_else(|| default_demc_gamma(self.dim)),
                    snooker_probability,
                    ..DemcOptions::defaults(self.dim)
                };
                Box::new(Demc::new(target, positions, opts, self.seed).map_err(classify)?)
            }
            None => return Err(CliError::config(format!("unknown sampler '{}'", self.sampler))),
        };
        Ok(sampler)
    }
}
