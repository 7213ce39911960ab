//! Invariant-measure bias `W1(π̃_η, π)` against an exact Gaussian reference.
//!
//! Each SGLD chain is paired with an exact Ornstein–Uhlenbeck chain for the
//! full-batch potential `s|x − c|²/2`, started at the same draw from `π` and
//! driven by the same Gaussian increments. Both chains keep their own law,
//! so the pooled snapshots estimate `W1` between the two stationary laws with
//! far less variance than independent samples would.

use rayon::prelude::*;
use serde::Serialize;
use sgld_core::diagnostics::{linear_regression, w1_empirical_1d, LinearFit, Z_95};
use sgld_core::dynamics::{ChainState, Stepper};
use sgld_core::noise::NoiseStream;
use sgld_core::targets::{BatchSpec, DriftField};

use crate::ensemble::{block_ranges, stream_id, StreamRole};
use crate::stats::trend_test;
use crate::Result;

/// `π = N(c, (βs)^{-1} I)` with its exact OU transition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianReference {
    pub center: Vec<f64>,
    pub stiffness: f64,
    pub beta: f64,
}

impl GaussianReference {
    pub fn std(&self) -> f64 {
        (1.0 / (self.beta * self.stiffness)).sqrt()
    }

    pub fn sample(&self, noise: &mut NoiseStream) -> Vec<f64> {
        let s = self.std();
        self.center.iter().map(|c| c + s * noise.standard_normal()).collect()
    }

    /// Exact transition over time `eta` driven by the standard normal `g`.
    pub fn step(&self, y: &mut [f64], eta: f64, g: &[f64]) {
        let decay = (-self.stiffness * eta).exp();
        let scale = ((1.0 - decay * decay) / (self.beta * self.stiffness)).sqrt();
        for ((yi, ci), gi) in y.iter_mut().zip(&self.center).zip(g) {
            *yi = ci + decay * (*yi - ci) + scale * gi;
        }
    }
}

/// Closed-form per-coordinate `W1` gap for the linear chain
/// `x' = x − ηs(x − c) − η ε + sqrt(2η/β) g` with batch noise `ε` of variance
/// `v_b`: its stationary variance is `(2η/β + η² v_b) / (1 − (1 − sη)²)`, and
/// between centred Gaussians `W1 = |σ_η − σ| sqrt(2/π)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceGapOracle {
    pub stiffness: f64,
    pub beta: f64,
    /// Per-coordinate batch-gradient noise variance.
    pub batch_noise_var: Vec<f64>,
}

impl VarianceGapOracle {
    pub fn stationary_std(&self, eta: f64, coord: usize) -> f64 {
        let s = self.stiffness;
        let v = (2.0 * eta / self.beta + eta * eta * self.batch_noise_var[coord]) / (1.0 - (1.0 - s * eta).powi(2));
        v.sqrt()
    }

    pub fn w1(&self, eta: f64) -> f64 {
        let sigma = (1.0 / (self.beta * self.stiffness)).sqrt();
        let d = self.batch_noise_var.len();
        (0..d)
            .map(|j| (self.stationary_std(eta, j) - sigma).abs())
            .sum::<f64>()
            / d as f64
            * (2.0 / std::f64::consts::PI).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct BiasOptions {
    pub etas: Vec<f64>,
    pub n_chains: usize,
    pub burn_in_time: f64,
    pub n_snapshots: usize,
    pub snapshot_spacing: f64,
    pub n_blocks: usize,
    pub batch: BatchSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasRow {
    pub eta: f64,
    pub w1: f64,
    pub ci_half_width: f64,
    pub oracle: Option<f64>,
    pub n_samples: usize,
    pub burn_in_steps: u64,
    /// Two-sided p-value of a linear trend in `E|X|²` over the later half of
    /// the burn-in.
    pub burn_in_trend_p: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasReport {
    pub rows: Vec<BiasRow>,
    /// Least squares of `log W1` on `log η`.
    pub slope: Option<LinearFit>,
    /// `W1(η_i) / W1(η_{i+1})` for consecutive grid points.
    pub ratios: Vec<f64>,
}

const TREND_POINTS: usize = 20;

/// Per-coordinate SGLD samples, reference samples, and `|X|²` sums at the
/// trend probes.
type BlockSamples = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>);

pub fn bias_experiment<D: DriftField + ?Sized>(
    model: &D,
    reference: &GaussianReference,
    oracle: Option<&VarianceGapOracle>,
    opts: &BiasOptions,
    seed: u64,
) -> Result<BiasReport> {
    let d = model.dim();
    if reference.center.len() != d {
        return Err(sgld_core::Error::DimensionMismatch {
            expected: d,
            got: reference.center.len(),
        }
        .into());
    }
    if opts.etas.is_empty() || opts.n_chains == 0 || opts.n_snapshots == 0 {
        return Err(sgld_core::Error::invalid("bias", "need step sizes, chains and snapshots").into());
    }
    opts.batch.validate(model.n_components())?;
    let mut rows = Vec::with_capacity(opts.etas.len());
    for (e_idx, &eta) in opts.etas.iter().enumerate() {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(sgld_core::Error::invalid("eta", "must be finite and positive").into());
        }
        let burn = (opts.burn_in_time / eta).ceil() as u64;
        let spacing = ((opts.snapshot_spacing / eta).ceil() as u64).max(1);
        let trend_every = (burn / TREND_POINTS as u64).max(1);
        let ranges = block_ranges(opts.n_chains, opts.n_blocks);
        let blocks: Vec<BlockSamples> = ranges
            .par_iter()
            .map(|range| -> Result<_> {
                let mut xs = vec![Vec::with_capacity(range.len() * opts.n_snapshots); d];
                let mut ys = vec![Vec::with_capacity(range.len() * opts.n_snapshots); d];
                let mut r2_sums = vec![0.0; TREND_POINTS + 1];
                let mut stepper = Stepper::new(d);
                let mut g = vec![0.0; d];
                let mut batch = Vec::new();
                for chain in range.clone() {
                    let stream = |role| stream_id(chain, role) + (e_idx as u64) * (opts.n_chains as u64 * 4);
                    let mut noise = NoiseStream::new(seed, stream(StreamRole::Dynamics));
                    let mut batch_noise = NoiseStream::new(seed, stream(StreamRole::Batch));
                    let y0 = reference.sample(&mut NoiseStream::new(seed, stream(StreamRole::InitX)));
                    let mut x = ChainState::new(y0.clone());
                    let mut y = y0;
                    let total = burn + spacing * opts.n_snapshots as u64;
                    for k in 1..=total {
                        noise.fill_standard_normal(&mut g);
                        opts.batch.sample_into(model.n_components(), batch_noise.rng_mut(), &mut batch);
                        stepper.step(&mut x, model, &batch, eta, &g)?;
                        reference.step(&mut y, eta, &g);
                        if k <= burn && k % trend_every == 0 {
                            let slot = (k / trend_every) as usize;
                            if slot <= TREND_POINTS {
                                r2_sums[slot] += x.position.iter().map(|v| v * v).sum::<f64>();
                            }
                        }
                        if k > burn && (k - burn).is_multiple_of(spacing) {
                            for j in 0..d {
                                xs[j].push(x.position[j]);
                                ys[j].push(y[j]);
                            }
                        }
                    }
                }
                Ok((xs, ys, r2_sums))
            })
            .collect::<Result<_>>()?;

        let w1_of = |xs: &[Vec<f64>], ys: &[Vec<f64>]| -> Result<f64> {
            let mut acc = 0.0;
            for j in 0..d {
                acc += w1_empirical_1d(&xs[j], &ys[j])?;
            }
            Ok(acc / d as f64)
        };
        let mut block_w1 = Vec::with_capacity(blocks.len());
        let mut all_x = vec![Vec::new(); d];
        let mut all_y = vec![Vec::new(); d];
        let mut r2 = [0.0; TREND_POINTS + 1];
        for (xs, ys, sums) in &blocks {
            block_w1.push(w1_of(xs, ys)?);
            for j in 0..d {
                all_x[j].extend_from_slice(&xs[j]);
                all_y[j].extend_from_slice(&ys[j]);
            }
            for (a, b) in r2.iter_mut().zip(sums) {
                *a += b;
            }
        }
        let w1 = w1_of(&all_x, &all_y)?;
        let b = block_w1.len() as f64;
        let ci_half_width = if block_w1.len() > 1 {
            let m = block_w1.iter().sum::<f64>() / b;
            let var = block_w1.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (b - 1.0);
            Z_95 * (var / b).sqrt()
        } else {
            0.0
        };

        let points: Vec<(f64, f64)> = (1..=TREND_POINTS)
            .filter(|&s| s as u64 * trend_every <= burn)
            .map(|s| ((s as u64 * trend_every) as f64 * eta, r2[s] / opts.n_chains as f64))
            .collect();
        let half = &points[points.len() / 2..];
        let (t, v): (Vec<f64>, Vec<f64>) = half.iter().copied().unzip();
        let burn_in_trend_p = trend_test(&t, &v).map(|tt| 2.0 * tt.p_value.min(1.0 - tt.p_value)).unwrap_or(1.0);
        let mut warnings = Vec::new();
        if opts.burn_in_time * reference.stiffness < 5.0 {
            warnings.push("burn-in shorter than 5 relaxation times");
        }
        if burn_in_trend_p < 0.01 {
            warnings.push("E|X|^2 still trending over the later half of the burn-in");
        }
        rows.push(BiasRow {
            eta,
            w1,
            ci_half_width,
            oracle: oracle.map(|o| o.w1(eta)),
            n_samples: all_x[0].len(),
            burn_in_steps: burn,
            burn_in_trend_p,
            warning: (!warnings.is_empty()).then(|| warnings.join("; ")),
        });
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.w1 > 0.0)
        .map(|r| (r.eta.ln(), r.w1.ln()))
        .unzip();
    let slope = linear_regression(&lx, &ly).ok();
    let ratios = rows.windows(2).map(|w| w[0].w1 / w[1].w1).collect();
    Ok(BiasReport { rows, slope, ratios })
}
