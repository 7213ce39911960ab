//! Tail profile of the within-step supremum of the reflected-noise integral.

use rayon::prelude::*;
use serde::Serialize;
use sgld_core::coupling::{CoupledState, CoupledStepper, CouplingConfig, CouplingMode};
use sgld_core::diagnostics::stats::{ks_p_value, ks_statistic};
use sgld_core::diagnostics::{brownian_sup_cdf, quantile_thresholds, tail_profile, TailProfile};
use sgld_core::noise::NoiseStream;
use sgld_core::targets::DriftField;

use crate::ensemble::{block_ranges, stream_id, StreamRole};
use crate::Result;

#[derive(Debug, Clone)]
pub struct TailOptions {
    pub eta: f64,
    pub substeps: usize,
    pub n_samples: usize,
    /// Initial `|x − y|`, along the first axis.
    pub separation: f64,
    /// Quantile levels that become thresholds.
    pub levels: Vec<f64>,
    pub min_exceedances: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailRun {
    pub eta: f64,
    pub substeps: usize,
    pub samples: Vec<f64>,
    pub profile: TailProfile,
    /// KS distance to `P(sup_{s≤η} W_s ≤ a)`; exact in one dimension.
    pub ks_statistic: f64,
    pub ks_p_value: f64,
}

/// One coupled step per sample from a fixed separated pair; returns
/// `sup_s ζ_s·e_0` over the substeps.
pub fn within_step_sups<D: DriftField + ?Sized>(
    model: &D,
    eta: f64,
    substeps: usize,
    n_samples: usize,
    separation: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let d = model.dim();
    let config = CouplingConfig {
        substeps,
        merge_threshold: 0.0,
        mode: CouplingMode::Reflection,
        crossing_detection: false,
    };
    config.validate()?;
    if !(separation > 0.0) {
        return Err(sgld_core::Error::invalid("separation", "must be positive").into());
    }
    let batch: Vec<usize> = (0..model.n_components()).collect();
    let mut x0 = vec![0.0; d];
    x0[0] = 0.5 * separation;
    let y0: Vec<f64> = x0.iter().map(|v| -v).collect();
    let blocks = block_ranges(n_samples, 64);
    let out: Vec<Vec<f64>> = blocks
        .par_iter()
        .map(|range| -> Result<Vec<f64>> {
            let mut stepper = CoupledStepper::new(d);
            let mut v = Vec::with_capacity(range.len());
            for i in range.clone() {
                let mut noise = NoiseStream::new(seed, stream_id(i, StreamRole::Dynamics));
                let mut state = CoupledState::new(x0.clone(), y0.clone());
                let trace = stepper.step(&mut state, model, &batch, eta, &config, &mut noise)?;
                v.push(trace.zeta_sup_along_start);
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    Ok(out.concat())
}

pub fn tail_experiment<D: DriftField + ?Sized>(model: &D, opts: &TailOptions, seed: u64) -> Result<TailRun> {
    let samples = within_step_sups(model, opts.eta, opts.substeps, opts.n_samples, opts.separation, seed)?;
    let thresholds = quantile_thresholds(&samples, &opts.levels);
    let profile = tail_profile(&samples, &thresholds, opts.eta, opts.min_exceedances)?;
    let ks = ks_statistic(&samples, |a| brownian_sup_cdf(a, opts.eta))?;
    Ok(TailRun {
        eta: opts.eta,
        substeps: opts.substeps,
        ks_statistic: ks,
        ks_p_value: ks_p_value(ks, samples.len()),
        samples,
        profile,
    })
}
