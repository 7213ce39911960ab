//! Ensembles of coupled pairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sgld_core::constants::DistanceFunction;
use sgld_core::coupling::{CoupledState, CoupledStepper, CouplingConfig};
use sgld_core::diagnostics::{BlockMeans, ExperimentSeries, Z_95};
use sgld_core::dynamics::Schedule;
use sgld_core::noise::NoiseStream;
use sgld_core::targets::{BatchSpec, DriftField};

use crate::ensemble::{block_ranges, record_steps, stream_id, InitSpec, StreamRole};
use crate::Result;

/// Initial laws `(μ0, ν0)`. With `coupled`, `Ȳ0 = X̄0` is drawn once from `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairInit {
    pub x: InitSpec,
    pub y: InitSpec,
    #[serde(default)]
    pub coupled: bool,
}

#[derive(Debug, Clone)]
pub struct CoupledOptions {
    pub n_pairs: usize,
    pub n_steps: u64,
    pub record_every: u64,
    pub n_blocks: usize,
    pub batch: BatchSpec,
    pub keep_final: bool,
}

#[derive(Debug, Clone)]
pub struct CouplingSeries {
    pub steps: Vec<u64>,
    /// `E f(|Z_{T_k}|)`.
    pub f_abs_z: ExperimentSeries,
    /// `E|Z_{T_k}|`.
    pub abs_z: ExperimentSeries,
    pub merged_fraction: Vec<f64>,
    pub merge_times: Vec<Option<f64>>,
    pub diverged: Vec<(usize, u64)>,
    pub final_x: Vec<Vec<f64>>,
    pub final_y: Vec<Vec<f64>>,
}

impl CouplingSeries {
    pub fn divergence_fraction(&self) -> f64 {
        self.diverged.len() as f64 / self.merge_times.len().max(1) as f64
    }
}

struct BlockPartial {
    f_sums: Vec<f64>,
    z_sums: Vec<f64>,
    merged: Vec<u64>,
    counts: Vec<u64>,
    merge_times: Vec<Option<f64>>,
    diverged: Vec<(usize, u64)>,
    final_x: Vec<Vec<f64>>,
    final_y: Vec<Vec<f64>>,
}

/// Runs `n_pairs` coupled pairs sharing minibatches and reduces
/// `E f(|Z|)`, `E|Z|` and the merged fraction at the recorded steps.
pub fn run_coupled_ensemble<D: DriftField + ?Sized>(
    model: &D,
    schedule: &Schedule,
    config: &CouplingConfig,
    init: &PairInit,
    dist: &DistanceFunction,
    opts: &CoupledOptions,
    seed: u64,
) -> Result<CouplingSeries> {
    if opts.n_pairs == 0 {
        return Err(sgld_core::Error::invalid("n_pairs", "must be positive").into());
    }
    config.validate()?;
    let d = model.dim();
    init.x.check_dim(d)?;
    init.y.check_dim(d)?;
    opts.batch.validate(model.n_components())?;
    let steps = record_steps(opts.n_steps, opts.record_every);
    let ranges = block_ranges(opts.n_pairs, opts.n_blocks);

    let partials: Vec<BlockPartial> = ranges
        .par_iter()
        .map(|range| -> Result<BlockPartial> {
            let r = steps.len();
            let mut part = BlockPartial {
                f_sums: vec![0.0; r],
                z_sums: vec![0.0; r],
                merged: vec![0; r],
                counts: vec![0; r],
                merge_times: Vec::with_capacity(range.len()),
                diverged: Vec::new(),
                final_x: Vec::new(),
                final_y: Vec::new(),
            };
            let mut stepper = CoupledStepper::new(d);
            let mut batch = Vec::new();
            for pair in range.clone() {
                let mut noise = NoiseStream::new(seed, stream_id(pair, StreamRole::Dynamics));
                let mut batch_noise = NoiseStream::new(seed, stream_id(pair, StreamRole::Batch));
                let x0 = init.x.sample(&mut NoiseStream::new(seed, stream_id(pair, StreamRole::InitX)));
                let y0 = if init.coupled {
                    x0.clone()
                } else {
                    init.y.sample(&mut NoiseStream::new(seed, stream_id(pair, StreamRole::InitY)))
                };
                let mut state = CoupledState::new(x0, y0);
                if state.x == state.y {
                    state = CoupledState::merged_at_start(state.x);
                }
                let mut rec = 0;
                for k in 0..=opts.n_steps {
                    if k > 0 {
                        opts.batch.sample_into(model.n_components(), batch_noise.rng_mut(), &mut batch);
                        let eta = schedule.eta(k - 1);
                        match stepper.step(&mut state, model, &batch, eta, config, &mut noise) {
                            Ok(_) => {}
                            Err(sgld_core::Error::Divergence { step }) => {
                                part.diverged.push((pair, step));
                                break;
                            }
                            Err(e) => return Err(e.into()),
                        }
                    }
                    if rec < r && steps[rec] == k {
                        let z = state.distance();
                        part.f_sums[rec] += dist.eval(z);
                        part.z_sums[rec] += z;
                        part.merged[rec] += state.merged as u64;
                        part.counts[rec] += 1;
                        rec += 1;
                    }
                }
                part.merge_times.push(state.merge_time);
                if opts.keep_final {
                    part.final_x.push(state.x);
                    part.final_y.push(state.y);
                }
            }
            Ok(part)
        })
        .collect::<Result<_>>()?;

    let times: Vec<f64> = steps.iter().map(|&k| schedule.time(k)).collect();
    let n_blocks = partials.len();
    let mut f_vals = Vec::new();
    let mut f_cis = Vec::new();
    let mut z_vals = Vec::new();
    let mut z_cis = Vec::new();
    let mut merged_fraction = Vec::new();
    for rec in 0..steps.len() {
        let mut f = BlockMeans::new(n_blocks);
        let mut z = BlockMeans::new(n_blocks);
        let mut merged = 0;
        for (b, part) in partials.iter().enumerate() {
            f.push_sum(b, part.f_sums[rec], part.counts[rec]);
            z.push_sum(b, part.z_sums[rec], part.counts[rec]);
            merged += part.merged[rec];
        }
        f_vals.push(f.mean());
        f_cis.push(f.ci_half_width(Z_95));
        z_vals.push(z.mean());
        z_cis.push(z.ci_half_width(Z_95));
        merged_fraction.push(merged as f64 / opts.n_pairs as f64);
    }
    let mut out = CouplingSeries {
        steps,
        f_abs_z: ExperimentSeries::new(times.clone(), f_vals, f_cis, opts.n_pairs)?,
        abs_z: ExperimentSeries::new(times, z_vals, z_cis, opts.n_pairs)?,
        merged_fraction,
        merge_times: Vec::with_capacity(opts.n_pairs),
        diverged: Vec::new(),
        final_x: Vec::new(),
        final_y: Vec::new(),
    };
    for part in partials {
        out.merge_times.extend(part.merge_times);
        out.diverged.extend(part.diverged);
        out.final_x.extend(part.final_x);
        out.final_y.extend(part.final_y);
    }
    Ok(out)
}
