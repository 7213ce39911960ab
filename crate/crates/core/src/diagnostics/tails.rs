use alloc::vec::Vec;

use super::fit::linear_regression;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailPoint {
    pub threshold: f64,
    pub exceedances: usize,
    /// `−log P̂(stat > threshold)`; `None` when nothing exceeds.
    pub neg_log_prob: Option<f64>,
}

/// `−log P ≈ intercept + slope · a²`, with `ĉ = slope · η`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub cbar_hat: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailProfile {
    pub eta: f64,
    pub n_samples: usize,
    pub points: Vec<TailPoint>,
    /// Thresholds with fewer than `min_exceedances` hits (left out of the fit).
    pub sparse: Vec<f64>,
    pub fit: Option<TailFit>,
}

/// Empirical tail curve of a nonnegative statistic and its quadratic fit.
pub fn tail_profile(samples: &[f64], thresholds: &[f64], eta: f64, min_exceedances: usize) -> Result<TailProfile> {
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    if !(eta > 0.0) {
        return Err(Error::invalid("eta", "must be positive"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let mut points = Vec::with_capacity(thresholds.len());
    let mut sparse = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &a in thresholds {
        let below = sorted.partition_point(|&v| v <= a);
        let exceed = n - below;
        let neg_log_prob = (exceed > 0).then(|| -libm::log(exceed as f64 / n as f64));
        if exceed < min_exceedances.max(1) {
            sparse.push(a);
        } else if let Some(y) = neg_log_prob {
            xs.push(a * a);
            ys.push(y);
        }
        points.push(TailPoint {
            threshold: a,
            exceedances: exceed,
            neg_log_prob,
        });
    }
    let fit = linear_regression(&xs, &ys).ok().map(|f| TailFit {
        slope: f.slope,
        intercept: f.intercept,
        cbar_hat: f.slope * eta,
        r_squared: f.r_squared,
    });
    Ok(TailProfile {
        eta,
        n_samples: n,
        points,
        sparse,
        fit,
    })
}

/// Empirical quantiles at the given levels (nearest rank).
pub fn quantile_thresholds(samples: &[f64], levels: &[f64]) -> Vec<f64> {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    levels
        .iter()
        .map(|&q| {
            let idx = libm::ceil(q.clamp(0.0, 1.0) * n as f64) as usize;
            sorted[idx.clamp(1, n) - 1]
        })
        .collect()
}

/// `P(sup_{s≤η} W_s ≤ a) = 1 − 2 P(N(0, η) > a) = erf(a / sqrt(2η))` for a
/// standard one-dimensional Brownian motion.
pub fn brownian_sup_cdf(a: f64, eta: f64) -> f64 {
    if a <= 0.0 {
        0.0
    } else {
        libm::erf(a / libm::sqrt(2.0 * eta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn below_median_threshold() {
        let samples: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let p = tail_profile(&samples, &[10.0, 40.0], 1.0, 5).unwrap();
        for pt in &p.points {
            assert!(pt.neg_log_prob.unwrap() < 1.0);
        }
    }

    #[test]
    fn sparse_thresholds_reported() {
        let p = tail_profile(&[0.1, 0.2, 0.3], &[0.15, 0.25, 5.0], 1.0, 1).unwrap();
        assert_eq!(p.sparse, vec![5.0]);
        assert_eq!(p.points[2].neg_log_prob, None);
        assert!(p.fit.is_some());
    }

    #[test]
    fn nearest_rank_quantiles() {
        let s = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(quantile_thresholds(&s, &[0.0, 0.5, 1.0]), vec![1.0, 3.0, 5.0]);
    }

    #[test]
    fn sup_cdf_limits() {
        assert_eq!(brownian_sup_cdf(0.0, 1.0), 0.0);
        assert!((brownian_sup_cdf(50.0, 1.0) - 1.0).abs() < 1e-15);
    }
}
