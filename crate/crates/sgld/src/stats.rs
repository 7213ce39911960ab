//! Hypothesis tests used by the experiment verdicts.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use sgld_core::diagnostics::linear_regression;
use sgld_core::diagnostics::stats::mann_kendall;
use sgld_core::noise::NoiseStream;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyTest {
    pub statistic: f64,
    pub p_value: f64,
    pub n_permutations: usize,
}

const ROW_TILE: usize = 64;
const COL_TILE: usize = 512;

/// Two-sample energy-distance permutation test on flat row-major point sets.
///
/// The pooled distance matrix is never stored. With labels `s_i = ±1`, the
/// within-group sums follow from the signed quadratic form
/// `q = Σ_{i<j} D_ij s_i s_j` and the row sums of `D`, so every permutation
/// only needs `q`; all of them are accumulated in one tiled pass over `D`.
pub fn energy_test(a: &[f64], b: &[f64], dim: usize, n_permutations: usize, seed: u64) -> Result<EnergyTest> {
    if dim == 0 || !a.len().is_multiple_of(dim) || !b.len().is_multiple_of(dim) {
        return Err(sgld_core::Error::invalid("dim", "point sets must be multiples of dim").into());
    }
    let (n, m) = (a.len() / dim, b.len() / dim);
    if n < 2 || m < 2 {
        return Err(sgld_core::Error::TooFewPoints {
            needed: 2,
            found: n.min(m),
        }
        .into());
    }
    let total = n + m;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n_labels = n_permutations + 1;

    // labels[j * n_labels + p] = ±1; column 0 is the observed split.
    let mut labels = vec![0.0f64; total * n_labels];
    let mut perm: Vec<usize> = (0..total).collect();
    let mut rng = NoiseStream::new(seed, u64::MAX);
    for p in 0..n_labels {
        if p > 0 {
            perm.shuffle(rng.rng_mut());
        }
        for (pos, &j) in perm.iter().enumerate() {
            labels[j * n_labels + p] = if pos < n { 1.0 } else { -1.0 };
        }
    }

    let row_tiles: Vec<usize> = (0..total).step_by(ROW_TILE).collect();
    let partials: Vec<(Vec<f64>, Vec<f64>)> = row_tiles
        .par_iter()
        .map(|&r0| {
            let r1 = (r0 + ROW_TILE).min(total);
            let mut q = vec![0.0; n_labels];
            let mut row_sums = vec![0.0; r1 - r0];
            let mut acc = vec![0.0; (r1 - r0) * n_labels];
            let mut tile = vec![0.0; (r1 - r0) * COL_TILE];
            let mut c0 = r0;
            while c0 < total {
                let c1 = (c0 + COL_TILE).min(total);
                let w = c1 - c0;
                for i in r0..r1 {
                    let xi = &pooled[i * dim..(i + 1) * dim];
                    let row = &mut tile[(i - r0) * COL_TILE..(i - r0) * COL_TILE + w];
                    for (jj, slot) in row.iter_mut().enumerate() {
                        let j = c0 + jj;
                        *slot = if j > i {
                            let xj = &pooled[j * dim..(j + 1) * dim];
                            xi.iter().zip(xj).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
                        } else {
                            0.0
                        };
                    }
                    row_sums[i - r0] += row.iter().sum::<f64>();
                    let out = &mut acc[(i - r0) * n_labels..(i - r0 + 1) * n_labels];
                    for (jj, &dij) in row.iter().enumerate() {
                        if dij == 0.0 {
                            continue;
                        }
                        let lj = &labels[(c0 + jj) * n_labels..(c0 + jj + 1) * n_labels];
                        for (o, l) in out.iter_mut().zip(lj) {
                            *o += dij * l;
                        }
                    }
                }
                c0 = c1;
            }
            for i in r0..r1 {
                let li = &labels[i * n_labels..(i + 1) * n_labels];
                let out = &acc[(i - r0) * n_labels..(i - r0 + 1) * n_labels];
                for p in 0..n_labels {
                    q[p] += li[p] * out[p];
                }
            }
            (q, row_sums)
        })
        .collect();

    // Upper-triangle row sums; the full symmetric row sum needs the column part too.
    let mut q = vec![0.0; n_labels];
    let mut upper_rows = vec![0.0; total];
    for (t, (qp, rs)) in partials.into_iter().enumerate() {
        for p in 0..n_labels {
            q[p] += qp[p];
        }
        upper_rows[row_tiles[t]..row_tiles[t] + rs.len()].copy_from_slice(&rs);
    }
    let t_sum: f64 = upper_rows.iter().sum();
    let full_rows = symmetric_row_sums(&pooled, dim, &upper_rows);

    let (nf, mf) = (n as f64, m as f64);
    let stat = |p: usize| {
        // u_i = 1 for the first group: W_a − W_b = Σ_i u_i rs_i − T and
        // W_a + W_b = (T + q)/2.
        let sum_a_rows: f64 = (0..total)
            .filter(|&i| labels[i * n_labels + p] > 0.0)
            .map(|i| full_rows[i])
            .sum();
        let diff = sum_a_rows - t_sum;
        let within = 0.5 * (t_sum + q[p]);
        let wa = 0.5 * (within + diff);
        let wb = 0.5 * (within - diff);
        let cross = t_sum - within;
        2.0 * cross / (nf * mf) - 2.0 * wa / (nf * nf) - 2.0 * wb / (mf * mf)
    };
    let observed = stat(0);
    let tol = 1e-12 * observed.abs().max(t_sum / (nf * mf));
    let exceed = (1..n_labels).filter(|&p| stat(p) >= observed - tol).count();
    Ok(EnergyTest {
        statistic: observed,
        p_value: (1 + exceed) as f64 / n_labels as f64,
        n_permutations,
    })
}

/// Full row sums `Σ_{j≠i} D_ij` from the upper-triangle ones: adds the
/// column contributions `Σ_{j<i} D_ji` in a second tiled pass.
fn symmetric_row_sums(pooled: &[f64], dim: usize, upper: &[f64]) -> Vec<f64> {
    let total = upper.len();
    let lower: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| {
            let xi = &pooled[i * dim..(i + 1) * dim];
            (0..i)
                .map(|j| {
                    let xj = &pooled[j * dim..(j + 1) * dim];
                    xi.iter().zip(xj).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
                })
                .sum::<f64>()
        })
        .collect();
    upper.iter().zip(&lower).map(|(u, l)| u + l).collect()
}

/// One-sided test for an increasing linear trend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendTest {
    pub slope: f64,
    pub slope_se: f64,
    pub t_statistic: f64,
    /// `P(T_{n−2} ≥ t)` under a zero slope.
    pub p_value: f64,
    pub mann_kendall_z: f64,
    pub n: usize,
}

pub fn trend_test(times: &[f64], values: &[f64]) -> Result<TrendTest> {
    let fit = linear_regression(times, values)?;
    let n = fit.n;
    if n < 3 {
        return Err(sgld_core::Error::TooFewPoints { needed: 3, found: n }.into());
    }
    let (t, p) = if fit.slope_se > 0.0 {
        let t = fit.slope / fit.slope_se;
        let dist = StudentsT::new(0.0, 1.0, (n - 2) as f64).expect("positive degrees of freedom");
        (t, 1.0 - dist.cdf(t))
    } else if fit.slope > 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        (0.0, 1.0)
    };
    let (_, z) = mann_kendall(values)?;
    Ok(TrendTest {
        slope: fit.slope,
        slope_se: fit.slope_se,
        t_statistic: t,
        p_value: p,
        mann_kendall_z: z,
        n,
    })
}
