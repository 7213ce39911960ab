use alloc::vec;
use alloc::vec::Vec;

use super::series::{block_of, BlockMeans, ExperimentSeries, Z_95};
use crate::linalg::norm;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentSeries {
    pub p: f64,
    /// `E|X_t|^p` at the recorded times.
    pub moment: ExperimentSeries,
    /// `E[sup_{s≤t} |X_s|^p]` over the recorded times.
    pub running_sup: ExperimentSeries,
}

/// Per-time empirical `E|X|^p` of an ensemble, with batch-means intervals.
///
/// Each snapshot lists the positions of the same chains in the same order,
/// which is what lets the pathwise running supremum be tracked.
pub fn moment_series<'a, I>(snapshots: I, p: f64, n_blocks: usize) -> Result<MomentSeries>
where
    I: IntoIterator<Item = (f64, &'a [Vec<f64>])>,
{
    if !(p >= 1.0) {
        return Err(Error::invalid("p", "must be at least 1"));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut cis = Vec::new();
    let mut sup_values = Vec::new();
    let mut sup_cis = Vec::new();
    let mut running: Vec<f64> = Vec::new();
    let mut n_chains = 0;
    for (t, ensemble) in snapshots {
        let n = ensemble.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        if running.is_empty() {
            running = vec![0.0; n];
            n_chains = n;
        } else if n != n_chains {
            return Err(Error::LengthMismatch(n_chains, n));
        }
        let mut now = BlockMeans::new(n_blocks);
        let mut sup = BlockMeans::new(n_blocks);
        for (i, x) in ensemble.iter().enumerate() {
            let v = libm::pow(norm(x), p);
            running[i] = running[i].max(v);
            let b = block_of(i, n, now.n_blocks());
            now.push(b, v);
            sup.push(b, running[i]);
        }
        times.push(t);
        values.push(now.mean());
        cis.push(now.ci_half_width(Z_95));
        sup_values.push(sup.mean());
        sup_cis.push(sup.ci_half_width(Z_95));
    }
    Ok(MomentSeries {
        p,
        moment: ExperimentSeries::new(times.clone(), values, cis, n_chains)?,
        running_sup: ExperimentSeries::new(times, sup_values, sup_cis, n_chains)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jensen_between_orders() {
        let snaps: Vec<(f64, Vec<Vec<f64>>)> = (0..5)
            .map(|k| {
                let e = (0..50).map(|i| vec![(i as f64 * 0.37 + k as f64).sin() * 3.0, 1.0]).collect();
                (k as f64, e)
            })
            .collect();
        let one = moment_series(snaps.iter().map(|(t, e)| (*t, e.as_slice())), 1.0, 5).unwrap();
        let two = moment_series(snaps.iter().map(|(t, e)| (*t, e.as_slice())), 2.0, 5).unwrap();
        for (a, b) in one.moment.values.iter().zip(&two.moment.values) {
            assert!(*a <= b.sqrt() + 1e-12);
        }
        for w in one.running_sup.values.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn rejects_low_order() {
        let e = vec![vec![1.0]];
        assert!(moment_series([(0.0, e.as_slice())], 0.5, 2).is_err());
    }
}
