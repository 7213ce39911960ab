//! JSON experiment configuration. Unknown fields are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sgld_core::constants::{ConstantsOptions, DriftVariant, DEFAULT_CBAR, DEFAULT_R1_FACTOR};
use sgld_core::coupling::{CouplingConfig, CouplingMode};
use sgld_core::dynamics::Schedule;
use sgld_core::targets::BatchSpec;

use crate::coupled::PairInit;
use crate::ensemble::InitSpec;
use crate::model::TargetSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Constants,
    Simulate,
    Couple,
    Bias,
    #[serde(alias = "verify-assumptions", alias = "verify_assumptions")]
    Verify,
    Tails,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Constants => "constants",
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Couple => "couple",
            ExperimentKind::Bias => "bias",
            ExperimentKind::Verify => "verify",
            ExperimentKind::Tails => "tails",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Constant(f64),
    Steps(Vec<f64>),
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<Schedule> {
        Ok(match self {
            ScheduleSpec::Constant(eta) => Schedule::constant(*eta)?,
            ScheduleSpec::Steps(s) => Schedule::from_steps(s.clone())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchConfig {
    pub batch_size: usize,
    #[serde(default)]
    pub replacement: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingSpec {
    pub mode: CouplingMode,
    pub substeps: usize,
    /// `None`: `10⁻³ sqrt(Δ0/β)`.
    pub merge_threshold: Option<f64>,
    pub crossing_detection: bool,
}

impl Default for CouplingSpec {
    fn default() -> Self {
        CouplingSpec {
            mode: CouplingMode::Reflection,
            substeps: 4,
            merge_threshold: None,
            crossing_detection: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n_chains: usize,
    pub n_pairs: usize,
    pub n_blocks: usize,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            n_chains: 1000,
            n_pairs: 1000,
            n_blocks: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsSpec {
    pub cbar: f64,
    pub cprime: Option<f64>,
    pub r1_factor: f64,
    pub r1: Option<f64>,
}

impl Default for ConstantsSpec {
    fn default() -> Self {
        ConstantsSpec {
            cbar: DEFAULT_CBAR,
            cprime: None,
            r1_factor: DEFAULT_R1_FACTOR,
            r1: None,
        }
    }
}

impl ConstantsSpec {
    pub fn options(&self, variant: DriftVariant) -> ConstantsOptions {
        ConstantsOptions {
            cbar: self.cbar,
            cprime: self.cprime,
            r1_factor: self.r1_factor,
            r1: self.r1,
            variant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSpec {
    pub moments: Vec<f64>,
    /// One-sided level of the positive-trend test.
    pub trend_level: f64,
    /// Leading fraction of the recorded series excluded from the trend test.
    pub burn_in_fraction: f64,
    pub max_divergence_fraction: f64,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        SimulateSpec {
            moments: vec![2.0, 4.0],
            trend_level: 0.05,
            burn_in_fraction: 0.5,
            max_divergence_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoupleSpec {
    pub min_r_squared: f64,
    /// Required merged fraction at the horizon (`None`: not checked).
    pub min_merged_fraction: Option<f64>,
    /// Relative tolerance of the exact synchronous rate.
    pub synchronous_rate_tolerance: f64,
    /// Fit window in recorded points (`None`: automatic).
    pub fit_window: Option<[usize; 2]>,
    /// Energy-distance test between the final X and Y ensembles.
    pub equal_marginals: bool,
    pub n_permutations: usize,
    pub marginal_level: f64,
    pub max_divergence_fraction: f64,
}

impl Default for CoupleSpec {
    fn default() -> Self {
        CoupleSpec {
            min_r_squared: 0.9,
            min_merged_fraction: None,
            synchronous_rate_tolerance: 0.05,
            fit_window: None,
            equal_marginals: false,
            n_permutations: 199,
            marginal_level: 0.01,
            max_divergence_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasSpec {
    pub etas: Vec<f64>,
    pub burn_in_time: f64,
    pub n_snapshots: usize,
    pub snapshot_spacing: f64,
    pub ratio_range: [f64; 2],
    /// Oracle agreement in standard errors.
    pub oracle_sigmas: f64,
}

impl Default for BiasSpec {
    fn default() -> Self {
        BiasSpec {
            etas: vec![0.02, 0.01, 0.005],
            burn_in_time: 10.0,
            n_snapshots: 50,
            snapshot_spacing: 1.0,
            ratio_range: [1.5, 2.8],
            oracle_sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    /// `None`: `max(2(R0 + 1), 5)`.
    pub region_radius: Option<f64>,
    pub n_samples: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            region_radius: None,
            n_samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailsSpec {
    /// `None`: the schedule's first step size.
    pub eta: Option<f64>,
    pub substeps: usize,
    pub n_samples: usize,
    pub separation: f64,
    pub levels: Vec<f64>,
    pub min_exceedances: usize,
    pub ks_level: f64,
    /// Allowed relative deviation of the slope ratio from 2 when η is halved.
    pub ratio_tolerance: f64,
}

impl Default for TailsSpec {
    fn default() -> Self {
        TailsSpec {
            eta: None,
            substeps: 16_384,
            n_samples: 10_000,
            separation: 10.0,
            levels: vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98, 0.99],
            min_exceedances: 20,
            ks_level: 0.01,
            ratio_tolerance: 0.15,
        }
    }
}

fn default_schedule() -> ScheduleSpec {
    ScheduleSpec::Constant(0.01)
}

fn default_horizon() -> u64 {
    1000
}

fn default_record_every() -> u64 {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// When present, must match the subcommand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    pub target: TargetSpec,
    #[serde(default = "default_schedule")]
    pub schedule: ScheduleSpec,
    /// `None`: full batch.
    #[serde(default)]
    pub batch: Option<BatchConfig>,
    #[serde(default)]
    pub coupling: CouplingSpec,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    /// Number of steps.
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// `None`: `N(0, I)` for single chains; point masses at `±2 e_1` for pairs.
    #[serde(default)]
    pub init: Option<PairInit>,
    #[serde(default)]
    pub constants: ConstantsSpec,
    #[serde(default)]
    pub simulate: SimulateSpec,
    #[serde(default)]
    pub couple: CoupleSpec,
    #[serde(default)]
    pub bias: BiasSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub tails: TailsSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Field-level checks that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("{field}: {why}")));
        let dim = self.target.dim();
        if dim == 0 {
            return bad("target.dim", "must be positive");
        }
        if !(self.target.beta() > 0.0 && self.target.beta().is_finite()) {
            return bad("target.beta", "must be finite and positive");
        }
        self.schedule.build().map_err(|e| Error::Config(format!("schedule: {e}")))?;
        if self.horizon == 0 {
            return bad("horizon", "must be positive");
        }
        if let Some(init) = &self.init {
            if init.x.dim() != dim || init.y.dim() != dim {
                return bad("init", "dimension differs from target.dim");
            }
        }
        if let Some(b) = &self.batch {
            let n = match &self.target {
                TargetSpec::SplitGaussian { offsets, .. } => offsets.len(),
                _ => 1,
            };
            if b.batch_size == 0 || (!b.replacement && b.batch_size > n) {
                return bad("batch.batch_size", "must lie in [1, number of components]");
            }
        }
        if self.coupling.substeps == 0 {
            return bad("coupling.substeps", "must be at least 1");
        }
        if self.ensemble.n_chains == 0 || self.ensemble.n_pairs == 0 || self.ensemble.n_blocks == 0 {
            return bad("ensemble", "sizes must be positive");
        }
        Ok(())
    }

    pub fn check_kind(&self, kind: ExperimentKind) -> Result<()> {
        match self.experiment {
            Some(k) if k != kind => Err(Error::Config(format!(
                "experiment: config is for `{}` but `{}` was requested",
                k.name(),
                kind.name()
            ))),
            _ => Ok(()),
        }
    }

    pub fn batch_spec(&self, n_components: usize) -> BatchSpec {
        match self.batch {
            Some(b) => BatchSpec {
                batch_size: b.batch_size,
                replacement: b.replacement,
            },
            None => BatchSpec::full(n_components),
        }
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule.build().expect("validated")
    }

    pub fn coupling_config(&self) -> CouplingConfig {
        let delta0 = self.schedule().max_step();
        CouplingConfig {
            substeps: self.coupling.substeps,
            merge_threshold: self
                .coupling
                .merge_threshold
                .unwrap_or_else(|| 1e-3 * (delta0 / self.target.beta()).sqrt()),
            mode: self.coupling.mode,
            crossing_detection: self.coupling.crossing_detection,
        }
    }

    pub fn chain_init(&self) -> InitSpec {
        match &self.init {
            Some(init) => init.x.clone(),
            None => InitSpec::Gaussian {
                mean: vec![0.0; self.target.dim()],
                std: 1.0,
            },
        }
    }

    pub fn pair_init(&self) -> PairInit {
        match &self.init {
            Some(init) => init.clone(),
            None => {
                let d = self.target.dim();
                let mut x = vec![0.0; d];
                x[0] = 2.0;
                let y = x.iter().map(|v| -v).collect();
                PairInit {
                    x: InitSpec::Point(x),
                    y: InitSpec::Point(y),
                    coupled: false,
                }
            }
        }
    }
}
