//! Independent SGLD chains run in parallel blocks.
//!
//! Chain `i` owns the noise streams `4i + role`, so results do not depend on
//! how blocks are scheduled across threads; block partials are reduced in
//! block order.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sgld_core::diagnostics::{block_of, BlockMeans, ExperimentSeries, MomentSeries, Z_95};
use sgld_core::dynamics::{ChainState, Schedule, Stepper};
use sgld_core::noise::NoiseStream;
use sgld_core::targets::{BatchSpec, DriftField};

use crate::Result;

/// Role of a noise stream attached to one chain or pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Dynamics = 0,
    InitX = 1,
    InitY = 2,
    Batch = 3,
}

pub fn stream_id(index: usize, role: StreamRole) -> u64 {
    index as u64 * 4 + role as u64
}

/// Initial law of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    Point(Vec<f64>),
    /// Isotropic Gaussian `N(mean, std² I)`.
    Gaussian { mean: Vec<f64>, std: f64 },
}

impl InitSpec {
    pub fn dim(&self) -> usize {
        match self {
            InitSpec::Point(x) => x.len(),
            InitSpec::Gaussian { mean, .. } => mean.len(),
        }
    }

    pub fn sample(&self, noise: &mut NoiseStream) -> Vec<f64> {
        match self {
            InitSpec::Point(x) => x.clone(),
            InitSpec::Gaussian { mean, std } => mean.iter().map(|m| m + std * noise.standard_normal()).collect(),
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(sgld_core::Error::DimensionMismatch {
                expected: dim,
                got: self.dim(),
            }
            .into());
        }
        Ok(())
    }
}

/// Recorded step indices: every `every` steps from 0, plus the last step.
pub fn record_steps(n_steps: u64, every: u64) -> Vec<u64> {
    let every = every.max(1);
    let mut steps: Vec<u64> = (0..=n_steps).step_by(every as usize).collect();
    if steps.last() != Some(&n_steps) {
        steps.push(n_steps);
    }
    steps
}

/// Contiguous index ranges of the `n_blocks` batch-means blocks.
pub fn block_ranges(n: usize, n_blocks: usize) -> Vec<Range<usize>> {
    let n_blocks = n_blocks.clamp(1, n.max(1));
    let mut ranges = vec![0..0; n_blocks];
    let mut start = 0;
    for (b, r) in ranges.iter_mut().enumerate() {
        let mut end = start;
        while end < n && block_of(end, n, n_blocks) == b {
            end += 1;
        }
        *r = start..end;
        start = end;
    }
    ranges
}

#[derive(Debug, Clone)]
pub struct EnsembleOptions {
    pub n_chains: usize,
    pub n_steps: u64,
    pub record_every: u64,
    /// Moment orders `p` to track.
    pub moments: Vec<f64>,
    pub n_blocks: usize,
    pub batch: BatchSpec,
    /// Keep every chain's final position.
    pub keep_final: bool,
}

#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub steps: Vec<u64>,
    pub moments: Vec<MomentSeries>,
    /// `(chain, step)` for every chain that left the finite region.
    pub diverged: Vec<(usize, u64)>,
    /// Final positions (empty unless requested). Diverged chains keep their
    /// last finite position.
    pub final_positions: Vec<Vec<f64>>,
}

impl EnsembleRun {
    pub fn divergence_fraction(&self, n_chains: usize) -> f64 {
        self.diverged.len() as f64 / n_chains.max(1) as f64
    }
}

struct BlockPartial {
    moment_sums: Vec<f64>,
    sup_sums: Vec<f64>,
    counts: Vec<u64>,
    diverged: Vec<(usize, u64)>,
    finals: Vec<Vec<f64>>,
}

/// Runs `n_chains` independent chains from `init` for `n_steps` steps and
/// reduces `E|X|^p` and `E[sup_{s≤t} |X_s|^p]` at the recorded steps.
pub fn simulate_ensemble<D: DriftField + ?Sized>(
    model: &D,
    schedule: &Schedule,
    init: &InitSpec,
    opts: &EnsembleOptions,
    seed: u64,
) -> Result<EnsembleRun> {
    if opts.n_chains == 0 {
        return Err(sgld_core::Error::invalid("n_chains", "must be positive").into());
    }
    let d = model.dim();
    init.check_dim(d)?;
    opts.batch.validate(model.n_components())?;
    for &p in &opts.moments {
        if !(p >= 1.0) {
            return Err(sgld_core::Error::invalid("p", "must be at least 1").into());
        }
    }
    let steps = record_steps(opts.n_steps, opts.record_every);
    let np = opts.moments.len();
    let ranges = block_ranges(opts.n_chains, opts.n_blocks);

    let partials: Vec<BlockPartial> = ranges
        .par_iter()
        .map(|range| -> Result<BlockPartial> {
            let mut part = BlockPartial {
                moment_sums: vec![0.0; steps.len() * np],
                sup_sums: vec![0.0; steps.len() * np],
                counts: vec![0; steps.len()],
                diverged: Vec::new(),
                finals: Vec::new(),
            };
            let mut stepper = Stepper::new(d);
            let mut gauss = vec![0.0; d];
            let mut batch = Vec::new();
            for chain in range.clone() {
                let mut noise = NoiseStream::new(seed, stream_id(chain, StreamRole::Dynamics));
                let mut init_noise = NoiseStream::new(seed, stream_id(chain, StreamRole::InitX));
                let mut batch_noise = NoiseStream::new(seed, stream_id(chain, StreamRole::Batch));
                let mut state = ChainState::new(init.sample(&mut init_noise));
                let mut last_finite = state.position.clone();
                let mut sup_r2: f64 = 0.0;
                let mut rec = 0;
                let mut alive = true;
                for k in 0..=opts.n_steps {
                    if k > 0 {
                        noise.fill_standard_normal(&mut gauss);
                        opts.batch.sample_into(model.n_components(), batch_noise.rng_mut(), &mut batch);
                        last_finite.copy_from_slice(&state.position);
                        match stepper.step(&mut state, model, &batch, schedule.eta(k - 1), &gauss) {
                            Ok(()) => {}
                            Err(sgld_core::Error::Divergence { step }) => {
                                part.diverged.push((chain, step));
                                alive = false;
                                break;
                            }
                            Err(e) => return Err(e.into()),
                        }
                    }
                    let r2: f64 = state.position.iter().map(|v| v * v).sum();
                    sup_r2 = sup_r2.max(r2);
                    if rec < steps.len() && steps[rec] == k {
                        for (j, &p) in opts.moments.iter().enumerate() {
                            part.moment_sums[rec * np + j] += r2.powf(0.5 * p);
                            part.sup_sums[rec * np + j] += sup_r2.powf(0.5 * p);
                        }
                        part.counts[rec] += 1;
                        rec += 1;
                    }
                }
                if opts.keep_final {
                    part.finals.push(if alive { state.position } else { last_finite });
                }
            }
            Ok(part)
        })
        .collect::<Result<_>>()?;

    let times: Vec<f64> = steps.iter().map(|&k| schedule.time(k)).collect();
    let mut moments = Vec::with_capacity(np);
    for (j, &p) in opts.moments.iter().enumerate() {
        let mut values = Vec::with_capacity(steps.len());
        let mut cis = Vec::with_capacity(steps.len());
        let mut sup_values = Vec::with_capacity(steps.len());
        let mut sup_cis = Vec::with_capacity(steps.len());
        for rec in 0..steps.len() {
            let mut now = BlockMeans::new(partials.len());
            let mut sup = BlockMeans::new(partials.len());
            for (b, part) in partials.iter().enumerate() {
                now.push_sum(b, part.moment_sums[rec * np + j], part.counts[rec]);
                sup.push_sum(b, part.sup_sums[rec * np + j], part.counts[rec]);
            }
            values.push(now.mean());
            cis.push(now.ci_half_width(Z_95));
            sup_values.push(sup.mean());
            sup_cis.push(sup.ci_half_width(Z_95));
        }
        moments.push(MomentSeries {
            p,
            moment: ExperimentSeries::new(times.clone(), values, cis, opts.n_chains)?,
            running_sup: ExperimentSeries::new(times.clone(), sup_values, sup_cis, opts.n_chains)?,
        });
    }
    let mut diverged = Vec::new();
    let mut final_positions = Vec::new();
    for part in partials {
        diverged.extend(part.diverged);
        final_positions.extend(part.finals);
    }
    Ok(EnsembleRun {
        steps,
        moments,
        diverged,
        final_positions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_cover_everything_in_order() {
        for (n, b) in [(10, 3), (5, 20), (20, 20), (1, 1), (1000, 7)] {
            let r = block_ranges(n, b);
            assert_eq!(r.first().unwrap().start, 0);
            assert_eq!(r.last().unwrap().end, n);
            for w in r.windows(2) {
                assert_eq!(w[0].end, w[1].start);
            }
            assert!(r.iter().all(|x| !x.is_empty()));
        }
    }

    #[test]
    fn record_steps_include_ends() {
        assert_eq!(record_steps(10, 4), vec![0, 4, 8, 10]);
        assert_eq!(record_steps(8, 4), vec![0, 4, 8]);
        assert_eq!(record_steps(3, 0), vec![0, 1, 2, 3]);
    }
}
