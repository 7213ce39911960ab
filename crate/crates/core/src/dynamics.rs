//! The SGLD step `x' = x + η D^ξ(x) + sqrt(2η/β) g` and its frozen-drift
//! substep refinement.
//!
//! `D^ξ` is the minibatch drift of a [`DriftField`]: `−∇U^ξ` for gradient
//! targets (SGLD) and `b^ξ` for general drifts (random-batch Euler–Maruyama).
//! The Gaussian vector `g` is passed in raw, so a coupled partner can reuse or
//! reflect the same draws.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{all_finite, dot};
use crate::targets::{DriftField, DriftModel, TargetModel};
use crate::{Error, Result};

/// Positions with `|x|` above this are treated as divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Step sizes `η_k` and the clock `T_k = Σ_{i<k} η_i`. A listed schedule
/// repeats its last entry once exhausted.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Schedule {
    Constant(f64),
    Steps(Vec<f64>),
}

impl Schedule {
    pub fn constant(eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(Schedule::Constant(eta))
    }

    pub fn from_steps(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Empty);
        }
        for &eta in &steps {
            check_eta(eta)?;
        }
        Ok(Schedule::Steps(steps))
    }

    pub fn eta(&self, k: u64) -> f64 {
        match self {
            Schedule::Constant(eta) => *eta,
            Schedule::Steps(s) => s[(k as usize).min(s.len() - 1)],
        }
    }

    /// `T_k`.
    pub fn time(&self, k: u64) -> f64 {
        match self {
            Schedule::Constant(eta) => eta * k as f64,
            Schedule::Steps(s) => {
                let n = s.len() as u64;
                let head: f64 = s.iter().take(k.min(n) as usize).sum();
                head + k.saturating_sub(n) as f64 * s[s.len() - 1]
            }
        }
    }

    /// `Δ0 = sup_k η_k`.
    pub fn max_step(&self) -> f64 {
        match self {
            Schedule::Constant(eta) => *eta,
            Schedule::Steps(s) => s.iter().copied().fold(0.0, f64::max),
        }
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::invalid("eta", "must be finite and positive"));
    }
    Ok(())
}

/// `X̄_{T_k}` together with `k` and `T_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub position: Vec<f64>,
    pub step_index: u64,
    pub clock: f64,
}

impl ChainState {
    pub fn new(position: Vec<f64>) -> Self {
        ChainState {
            position,
            step_index: 0,
            clock: 0.0,
        }
    }
}

/// Reusable buffers for repeated steps of one chain.
#[derive(Debug, Clone)]
pub struct Stepper {
    drift: Vec<f64>,
}

impl Stepper {
    pub fn new(dim: usize) -> Self {
        Stepper { drift: vec![0.0; dim] }
    }

    /// One step `x' = x + η D^ξ(x) + sqrt(2η/β) g`.
    pub fn step<D: DriftField + ?Sized>(
        &mut self,
        state: &mut ChainState,
        model: &D,
        batch: &[usize],
        eta: f64,
        gauss: &[f64],
    ) -> Result<()> {
        check_eta(eta)?;
        let d = model.dim();
        if gauss.len() != d || state.position.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: if gauss.len() != d { gauss.len() } else { state.position.len() },
            });
        }
        self.drift.resize(d, 0.0);
        model.drift_batch(&state.position, batch, &mut self.drift)?;
        let sigma = libm::sqrt(2.0 * eta / model.beta());
        for ((x, b), g) in state.position.iter_mut().zip(&self.drift).zip(gauss) {
            *x += eta * b + sigma * g;
        }
        state.step_index += 1;
        state.clock += eta;
        check_divergence(&state.position, state.step_index)
    }
}

/// Flags non-finite positions and positions beyond [`DIVERGENCE_NORM`].
pub fn check_divergence(x: &[f64], step: u64) -> Result<()> {
    if !all_finite(x) || dot(x, x) > DIVERGENCE_NORM * DIVERGENCE_NORM {
        return Err(Error::Divergence { step });
    }
    Ok(())
}

/// SGLD step on a gradient target.
pub fn sgld_step(state: &ChainState, model: &TargetModel, batch: &[usize], eta: f64, gauss: &[f64]) -> Result<ChainState> {
    let mut next = state.clone();
    Stepper::new(model.dim()).step(&mut next, model, batch, eta, gauss)?;
    Ok(next)
}

/// Random-batch Euler–Maruyama step on a general drift.
pub fn em_drift_step(state: &ChainState, model: &DriftModel, batch: &[usize], eta: f64, gauss: &[f64]) -> Result<ChainState> {
    let mut next = state.clone();
    Stepper::new(model.dim()).step(&mut next, model, batch, eta, gauss)?;
    Ok(next)
}

/// The continuous interpolation on `[T_k, T_{k+1})` sampled at `m` equal
/// substeps: the drift stays frozen at `D^ξ(X̄_{T_k})` while the Brownian path
/// is refined. `gauss` holds `m` consecutive standard normal `d`-vectors.
/// Returns the `m` intermediate positions, the last one at `T_{k+1}`.
pub fn interpolate_substeps<D: DriftField + ?Sized>(
    state: &ChainState,
    model: &D,
    batch: &[usize],
    eta: f64,
    m: usize,
    gauss: &[f64],
) -> Result<Vec<Vec<f64>>> {
    check_eta(eta)?;
    if m == 0 {
        return Err(Error::invalid("m", "need at least one substep"));
    }
    let d = model.dim();
    if gauss.len() != m * d {
        return Err(Error::LengthMismatch(gauss.len(), m * d));
    }
    let mut drift = vec![0.0; d];
    model.drift_batch(&state.position, batch, &mut drift)?;
    let h = eta / m as f64;
    let sigma = libm::sqrt(2.0 * h / model.beta());
    let mut x = state.position.clone();
    let mut path = Vec::with_capacity(m);
    for (j, g) in gauss.chunks_exact(d).enumerate() {
        for ((xi, b), gi) in x.iter_mut().zip(&drift).zip(g) {
            *xi += h * b + sigma * gi;
        }
        check_divergence(&x, state.step_index)
            .map_err(|_| Error::Divergence { step: state.step_index + (j == m - 1) as u64 })?;
        path.push(x.clone());
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{make_gaussian_target, make_rotational_drift, AssumptionParams, ComponentFn};
    use alloc::boxed::Box;

    fn zero_model(dim: usize, beta: f64) -> TargetModel {
        let f: ComponentFn = Box::new(|_, out| out.iter_mut().for_each(|v| *v = 0.0));
        TargetModel::new(dim, beta, vec![f], AssumptionParams::new(0.0, 1.0, 1.0, 0.0).unwrap()).unwrap()
    }

    #[test]
    fn noiseless_gradient_step() {
        let m = make_gaussian_target(2, 1.0).unwrap();
        let s = sgld_step(&ChainState::new(vec![1.0, 0.0]), &m, &[0], 0.1, &[0.0, 0.0]).unwrap();
        assert_eq!(s.position, vec![0.9, 0.0]);
        assert_eq!(s.step_index, 1);
        assert_eq!(s.clock, 0.1);
    }

    #[test]
    fn pure_diffusion_step() {
        let m = zero_model(3, 2.0);
        let g = [0.3, -1.2, 2.5];
        let s = sgld_step(&ChainState::new(vec![0.0; 3]), &m, &[0], 1.0, &g).unwrap();
        assert_eq!(s.position, g.to_vec());
    }

    #[test]
    fn zero_step_rejected() {
        let m = make_gaussian_target(1, 1.0).unwrap();
        assert!(sgld_step(&ChainState::new(vec![1.0]), &m, &[0], 0.0, &[0.0]).is_err());
    }

    #[test]
    fn rotational_drift_step() {
        let m = make_rotational_drift(2, 1.0, 1.0).unwrap();
        let s = em_drift_step(&ChainState::new(vec![1.0, 0.0]), &m, &[0], 0.1, &[0.0, 0.0]).unwrap();
        assert_eq!(s.position, vec![0.9, 0.1]);
    }

    #[test]
    fn zero_rotation_matches_gaussian_sgld() {
        let drift = make_rotational_drift(2, 1.5, 0.0).unwrap();
        let grad = make_gaussian_target(2, 1.5).unwrap();
        let g = [0.4, -0.9];
        let a = em_drift_step(&ChainState::new(vec![0.3, 2.0]), &drift, &[0], 0.05, &g).unwrap();
        let b = sgld_step(&ChainState::new(vec![0.3, 2.0]), &grad, &[0], 0.05, &g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_is_flagged() {
        let m = make_gaussian_target(1, 1.0).unwrap();
        let r = sgld_step(&ChainState::new(vec![1e12]), &m, &[0], 0.01, &[0.0]);
        assert!(r.is_ok());
        let r = sgld_step(&ChainState::new(vec![-1e12]), &m, &[0], 3.5, &[0.0]);
        assert_eq!(r, Err(Error::Divergence { step: 1 }));
    }

    #[test]
    fn single_substep_is_one_step() {
        let m = make_gaussian_target(2, 2.0).unwrap();
        let g = [0.5, -0.25];
        let start = ChainState::new(vec![1.0, 2.0]);
        let path = interpolate_substeps(&start, &m, &[0], 0.2, 1, &g).unwrap();
        let step = sgld_step(&start, &m, &[0], 0.2, &g).unwrap();
        assert_eq!(path[0], step.position);
    }

    #[test]
    fn noiseless_substeps_reach_step_endpoint() {
        let m = make_gaussian_target(2, 2.0).unwrap();
        let start = ChainState::new(vec![1.0, -3.0]);
        let path = interpolate_substeps(&start, &m, &[0], 0.25, 4, &[0.0; 8]).unwrap();
        let step = sgld_step(&start, &m, &[0], 0.25, &[0.0, 0.0]).unwrap();
        assert_eq!(path[3], step.position);
        assert!(interpolate_substeps(&start, &m, &[0], 0.25, 0, &[]).is_err());
    }

    #[test]
    fn schedule_clock() {
        let s = Schedule::from_steps(vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(s.time(0), 0.0);
        assert!((s.time(3) - 0.6).abs() < 1e-15);
        assert!((s.time(5) - 1.2).abs() < 1e-15);
        assert_eq!(s.eta(10), 0.3);
        assert_eq!(s.max_step(), 0.3);
        assert!(Schedule::constant(-1.0).is_err());
    }
}
