//! Built-in targets selectable by name.

use serde::{Deserialize, Serialize};
use sgld_core::constants::DriftVariant;
use sgld_core::targets::{
    make_bump_target, make_quadratic_target, make_rotational_drift, make_split_gaussian_target, AssumptionParams,
    DriftField, DriftModel, TargetModel,
};

use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// `U(x) = |x|²/2`.
    Gaussian { dim: usize, beta: f64 },
    /// `U(x) = s|x|²/2`.
    Quadratic { dim: usize, beta: f64, stiffness: f64 },
    /// `U(x) = |x|²/2 + a exp(−|x|²/2)`.
    Bump {
        dim: usize,
        beta: f64,
        #[serde(default = "default_bump_height")]
        a: f64,
    },
    /// `b(x) = −x + γ J x` (general drift).
    Rotational {
        dim: usize,
        beta: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    /// `ℓ_i(x) = |x − m_i|²/2`, one component per offset.
    SplitGaussian { beta: f64, offsets: Vec<Vec<f64>> },
}

fn default_bump_height() -> f64 {
    2.0
}

fn default_gamma() -> f64 {
    1.0
}

impl TargetSpec {
    pub fn dim(&self) -> usize {
        match self {
            TargetSpec::Gaussian { dim, .. }
            | TargetSpec::Quadratic { dim, .. }
            | TargetSpec::Bump { dim, .. }
            | TargetSpec::Rotational { dim, .. } => *dim,
            TargetSpec::SplitGaussian { offsets, .. } => offsets.first().map_or(0, Vec::len),
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            TargetSpec::Gaussian { beta, .. }
            | TargetSpec::Quadratic { beta, .. }
            | TargetSpec::Bump { beta, .. }
            | TargetSpec::Rotational { beta, .. }
            | TargetSpec::SplitGaussian { beta, .. } => *beta,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TargetSpec::Gaussian { .. } => "gaussian",
            TargetSpec::Quadratic { .. } => "quadratic",
            TargetSpec::Bump { .. } => "bump",
            TargetSpec::Rotational { .. } => "rotational",
            TargetSpec::SplitGaussian { .. } => "split_gaussian",
        }
    }

    pub fn build(&self) -> Result<Model> {
        Ok(match self {
            TargetSpec::Gaussian { dim, beta } => Model::Target(make_quadratic_target(*dim, *beta, 1.0)?),
            TargetSpec::Quadratic { dim, beta, stiffness } => {
                Model::Target(make_quadratic_target(*dim, *beta, *stiffness)?)
            }
            TargetSpec::Bump { dim, beta, a } => Model::Target(make_bump_target(*dim, *beta, *a)?),
            TargetSpec::Rotational { dim, beta, gamma } => Model::Drift(make_rotational_drift(*dim, *beta, *gamma)?),
            TargetSpec::SplitGaussian { beta, offsets } => {
                Model::Target(make_split_gaussian_target(self.dim(), *beta, offsets.clone())?)
            }
        })
    }

    /// Center and stiffness `(c, s)` when the full-batch potential is
    /// `s|x − c|²/2`, which makes the target law Gaussian.
    pub fn gaussian_law(&self) -> Option<(Vec<f64>, f64)> {
        match self {
            TargetSpec::Gaussian { dim, .. } => Some((vec![0.0; *dim], 1.0)),
            TargetSpec::Quadratic { dim, stiffness, .. } => Some((vec![0.0; *dim], *stiffness)),
            TargetSpec::SplitGaussian { offsets, .. } => {
                let n = offsets.len() as f64;
                let center = (0..self.dim())
                    .map(|j| offsets.iter().map(|m| m[j]).sum::<f64>() / n)
                    .collect();
                Some((center, 1.0))
            }
            _ => None,
        }
    }

    /// Per-coordinate population variance of the component gradients around
    /// the full gradient (zero unless components differ).
    pub fn component_spread(&self) -> Vec<f64> {
        match self {
            TargetSpec::SplitGaussian { offsets, .. } => {
                let n = offsets.len() as f64;
                (0..self.dim())
                    .map(|j| {
                        let mean = offsets.iter().map(|m| m[j]).sum::<f64>() / n;
                        offsets.iter().map(|m| (m[j] - mean).powi(2)).sum::<f64>() / n
                    })
                    .collect()
            }
            _ => vec![0.0; self.dim()],
        }
    }
}

/// A built target: gradient model or general drift.
pub enum Model {
    Target(TargetModel),
    Drift(DriftModel),
}

impl Model {
    pub fn variant(&self) -> DriftVariant {
        match self {
            Model::Target(_) => DriftVariant::Gradient,
            Model::Drift(_) => DriftVariant::GeneralDrift,
        }
    }

    fn inner(&self) -> &dyn DriftField {
        match self {
            Model::Target(m) => m,
            Model::Drift(m) => m,
        }
    }
}

impl DriftField for Model {
    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn beta(&self) -> f64 {
        self.inner().beta()
    }

    fn n_components(&self) -> usize {
        self.inner().n_components()
    }

    fn params(&self) -> &AssumptionParams {
        self.inner().params()
    }

    fn drift_batch(&self, x: &[f64], batch: &[usize], out: &mut [f64]) -> sgld_core::Result<()> {
        match self {
            Model::Target(m) => m.drift_batch(x, batch, out),
            Model::Drift(m) => m.drift_batch(x, batch, out),
        }
    }

    fn drift_full(&self, x: &[f64], out: &mut [f64]) -> sgld_core::Result<()> {
        match self {
            Model::Target(m) => m.drift_full(x, out),
            Model::Drift(m) => m.drift_full(x, out),
        }
    }

    fn is_gradient(&self) -> bool {
        matches!(self, Model::Target(_))
    }
}
