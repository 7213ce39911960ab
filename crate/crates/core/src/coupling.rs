//! Reflection and synchronous couplings of two SGLD chains.
//!
//! Both chains share the minibatch `ξ_k` and the raw Gaussian draws of every
//! substep. In reflection mode the partner receives `(I − 2eeᵀ) g`, with
//! `e = (x − y)/|x − y|` recomputed at the start of each substep; in
//! synchronous mode it receives `g` itself. Drifts stay frozen at the step's
//! start positions.
//!
//! Merging is absorbing: once merged, `y` is overwritten by `x` after every
//! substep so the pair is bit-for-bit identical forever. A pair merges when
//!
//! - `|x − y| ≤ merge_threshold` after a substep, or
//! - (reflection mode, `crossing_detection` on) the scalar difference along
//!   `e`, which is a Brownian motion with drift inside a substep, hits zero:
//!   either its endpoint changes sign, or the Brownian-bridge crossing event
//!   `u < exp(−2 r0 r1 / (4σ² h))` fires for a uniform `u`.

use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::check_divergence;
use crate::linalg::{dot, norm};
use crate::noise::NoiseStream;
use crate::targets::DriftField;
use crate::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-12;

/// `v − 2(e·v)e`. `e` must be a unit vector.
pub fn reflect(e: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    if e.len() != v.len() {
        return Err(Error::LengthMismatch(e.len(), v.len()));
    }
    let n = norm(e);
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::NonUnitDirection { norm: n });
    }
    let mut out = v.to_vec();
    reflect_into(e, v, &mut out);
    Ok(out)
}

fn reflect_into(e: &[f64], v: &[f64], out: &mut [f64]) {
    let p = 2.0 * dot(e, v);
    for ((o, vi), ei) in out.iter_mut().zip(v).zip(e) {
        *o = vi - p * ei;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CouplingMode {
    #[default]
    Reflection,
    Synchronous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CouplingConfig {
    pub substeps: usize,
    pub merge_threshold: f64,
    pub mode: CouplingMode,
    pub crossing_detection: bool,
}

impl CouplingConfig {
    /// `m = 4`, `δ = 10⁻³ sqrt(η/β)`, crossing detection on.
    pub fn reflection(eta: f64, beta: f64) -> Self {
        CouplingConfig {
            substeps: 4,
            merge_threshold: 1e-3 * libm::sqrt(eta / beta),
            mode: CouplingMode::Reflection,
            crossing_detection: true,
        }
    }

    pub fn synchronous(eta: f64, beta: f64) -> Self {
        CouplingConfig {
            mode: CouplingMode::Synchronous,
            ..Self::reflection(eta, beta)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.substeps == 0 {
            return Err(Error::invalid("substeps", "need at least one substep"));
        }
        if !(self.merge_threshold >= 0.0) {
            return Err(Error::invalid("merge_threshold", "must be nonnegative"));
        }
        Ok(())
    }

    fn uses_uniforms(&self) -> bool {
        self.crossing_detection && self.mode == CouplingMode::Reflection
    }
}

/// `(X̄, Ȳ)` with merge status. `Z = x − y` is derived on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub merged: bool,
    pub merge_time: Option<f64>,
    pub step_index: u64,
    pub clock: f64,
}

impl CoupledState {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        CoupledState {
            x,
            y,
            merged: false,
            merge_time: None,
            step_index: 0,
            clock: 0.0,
        }
    }

    /// A pair started from the same point: merged at time zero.
    pub fn merged_at_start(x: Vec<f64>) -> Self {
        CoupledState {
            y: x.clone(),
            x,
            merged: true,
            merge_time: Some(0.0),
            step_index: 0,
            clock: 0.0,
        }
    }

    pub fn difference(&self) -> Vec<f64> {
        self.x.iter().zip(&self.y).map(|(a, b)| a - b).collect()
    }

    pub fn distance(&self) -> f64 {
        crate::linalg::distance(&self.x, &self.y)
    }

    fn merge(&mut self, at: f64) {
        self.y.copy_from_slice(&self.x);
        self.merged = true;
        if self.merge_time.is_none() {
            self.merge_time = Some(at);
        }
    }
}

/// Per-step record of the reflected-noise martingale
/// `ζ = Σ_j e_j (e_j · ΔW_j)` accumulated over the substeps.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepTrace {
    /// `sup_j |ζ_j|` over the substeps (0 included).
    pub zeta_sup_norm: f64,
    /// `sup_j ζ_j · e_0` along the step's initial direction (0 included).
    pub zeta_sup_along_start: f64,
    /// True if the pair merged during this step.
    pub merged_now: bool,
}

/// Buffers for repeated coupled steps of one pair.
#[derive(Debug, Clone)]
pub struct CoupledStepper {
    dx: Vec<f64>,
    dy: Vec<f64>,
    e: Vec<f64>,
    e0: Vec<f64>,
    gy: Vec<f64>,
    zeta: Vec<f64>,
    gauss: Vec<f64>,
    uniforms: Vec<f64>,
}

impl CoupledStepper {
    pub fn new(dim: usize) -> Self {
        CoupledStepper {
            dx: vec![0.0; dim],
            dy: vec![0.0; dim],
            e: vec![0.0; dim],
            e0: vec![0.0; dim],
            gy: vec![0.0; dim],
            zeta: vec![0.0; dim],
            gauss: Vec::new(),
            uniforms: Vec::new(),
        }
    }

    /// Draws `m·d` normals and, if crossing detection is active, `m` uniforms
    /// from `noise`, then advances the pair by one step.
    pub fn step<D: DriftField + ?Sized>(
        &mut self,
        state: &mut CoupledState,
        model: &D,
        batch: &[usize],
        eta: f64,
        config: &CouplingConfig,
        noise: &mut NoiseStream,
    ) -> Result<StepTrace> {
        let d = model.dim();
        let m = config.substeps;
        let mut gauss = core::mem::take(&mut self.gauss);
        let mut uniforms = core::mem::take(&mut self.uniforms);
        gauss.resize(m * d, 0.0);
        noise.fill_standard_normal(&mut gauss);
        uniforms.clear();
        if config.uses_uniforms() {
            uniforms.extend((0..m).map(|_| noise.uniform()));
        }
        let out = self.step_with(state, model, batch, eta, config, &gauss, &uniforms);
        self.gauss = gauss;
        self.uniforms = uniforms;
        out
    }

    /// One coupled step driven by explicit draws: `gauss` holds `m`
    /// standard normal `d`-vectors; `uniforms` holds `m` values in `[0, 1)`
    /// for the bridge crossing test (ignored when empty).
    #[allow(clippy::too_many_arguments)]
    pub fn step_with<D: DriftField + ?Sized>(
        &mut self,
        state: &mut CoupledState,
        model: &D,
        batch: &[usize],
        eta: f64,
        config: &CouplingConfig,
        gauss: &[f64],
        uniforms: &[f64],
    ) -> Result<StepTrace> {
        config.validate()?;
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::invalid("eta", "must be finite and positive"));
        }
        let d = model.dim();
        let m = config.substeps;
        if gauss.len() != m * d {
            return Err(Error::LengthMismatch(gauss.len(), m * d));
        }
        if state.x.len() != d || state.y.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: state.y.len().min(state.x.len()),
            });
        }
        for buf in [&mut self.dx, &mut self.dy, &mut self.e, &mut self.e0, &mut self.gy, &mut self.zeta] {
            buf.resize(d, 0.0);
        }

        let h = eta / m as f64;
        let sigma = libm::sqrt(2.0 / model.beta());
        let noise_scale = sigma * libm::sqrt(h);
        let sqrt_h = libm::sqrt(h);
        let reflecting = config.mode == CouplingMode::Reflection;

        let was_merged = state.merged;
        if !state.merged && state.distance() <= config.merge_threshold {
            state.merge(state.clock);
        }
        let mut trace = StepTrace::default();

        model.drift_batch(&state.x, batch, &mut self.dx)?;
        if state.merged {
            self.dy.copy_from_slice(&self.dx);
        } else {
            model.drift_batch(&state.y, batch, &mut self.dy)?;
        }

        self.zeta.iter_mut().for_each(|v| *v = 0.0);
        let mut have_e0 = false;
        for (j, g) in gauss.chunks_exact(d).enumerate() {
            let t_end = state.clock + (j + 1) as f64 * h;
            if state.merged {
                for ((x, b), gi) in state.x.iter_mut().zip(&self.dx).zip(g) {
                    *x += h * b + noise_scale * gi;
                }
                state.y.copy_from_slice(&state.x);
                continue;
            }

            let r0 = state.distance();
            for i in 0..d {
                self.e[i] = (state.x[i] - state.y[i]) / r0;
            }
            if !have_e0 {
                self.e0.copy_from_slice(&self.e);
                have_e0 = true;
            }
            if reflecting {
                reflect_into(&self.e, g, &mut self.gy);
                let proj = dot(&self.e, g) * sqrt_h;
                for (z, ei) in self.zeta.iter_mut().zip(&self.e) {
                    *z += proj * ei;
                }
                trace.zeta_sup_norm = trace.zeta_sup_norm.max(norm(&self.zeta));
                trace.zeta_sup_along_start = trace.zeta_sup_along_start.max(dot(&self.zeta, &self.e0));
            } else {
                self.gy.copy_from_slice(g);
            }
            for (i, gi) in g.iter().enumerate() {
                state.x[i] += h * self.dx[i] + noise_scale * gi;
                state.y[i] += h * self.dy[i] + noise_scale * self.gy[i];
            }

            let r1_along = (0..d).map(|i| (state.x[i] - state.y[i]) * self.e[i]).sum::<f64>();
            let mut hit = state.distance() <= config.merge_threshold;
            if !hit && reflecting && config.crossing_detection {
                if r1_along <= 0.0 {
                    hit = true;
                } else if let Some(&u) = uniforms.get(j) {
                    // The difference along e diffuses with coefficient 2σ.
                    let var = 4.0 * sigma * sigma * h;
                    hit = u < libm::exp(-2.0 * r0 * r1_along / var);
                }
            }
            if hit {
                state.merge(t_end);
            }
        }

        state.step_index += 1;
        state.clock += eta;
        trace.merged_now = state.merged && !was_merged;
        check_divergence(&state.x, state.step_index)?;
        check_divergence(&state.y, state.step_index)?;
        Ok(trace)
    }
}

/// One coupled step with explicit draws, returning the new state.
#[allow(clippy::too_many_arguments)]
pub fn coupled_step<D: DriftField + ?Sized>(
    state: &CoupledState,
    model: &D,
    batch: &[usize],
    eta: f64,
    config: &CouplingConfig,
    gauss: &[f64],
    uniforms: &[f64],
) -> Result<(CoupledState, StepTrace)> {
    let mut next = state.clone();
    let trace = CoupledStepper::new(model.dim()).step_with(&mut next, model, batch, eta, config, gauss, uniforms)?;
    Ok((next, trace))
}

/// One synchronous-coupling step (shared noise, no reflection, a single
/// substep). `gauss` is one standard normal `d`-vector.
pub fn synchronous_step<D: DriftField + ?Sized>(
    state: &CoupledState,
    model: &D,
    batch: &[usize],
    eta: f64,
    merge_threshold: f64,
    gauss: &[f64],
) -> Result<CoupledState> {
    let config = CouplingConfig {
        substeps: 1,
        merge_threshold,
        mode: CouplingMode::Synchronous,
        crossing_detection: false,
    };
    coupled_step(state, model, batch, eta, &config, gauss, &[]).map(|(s, _)| s)
}
