use core::ops::Range;

use super::series::{ExperimentSeries, Z_95};
use crate::{Error, Result};

/// Ordinary least squares `y ≈ intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope (0 for two points or a perfect fit).
    pub slope_se: f64,
    pub n: usize,
}

pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, found: n });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::invalid("x", "needs at least two distinct values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum::<f64>();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let slope_se = if n > 2 { libm::sqrt(sse / (nf - 2.0) / sxx) } else { 0.0 };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        slope_se,
        n,
    })
}

/// Exponential decay fit `value ≈ exp(intercept − rate · t)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// 95% half-width of the fitted rate (normal approximation).
    pub rate_ci_half_width: f64,
    pub window: Range<usize>,
    /// Number of strictly positive points that entered the fit.
    pub n_points: usize,
}

/// Least-squares line through `(T_k, log value_k)` over the window; only
/// strictly positive values enter. `rate = −slope`.
pub fn fit_rate(series: &ExperimentSeries, window: Range<usize>) -> Result<RateFit> {
    let end = window.end.min(series.len());
    let start = window.start.min(end);
    let (t, logv): (alloc::vec::Vec<f64>, alloc::vec::Vec<f64>) = (start..end)
        .filter(|&i| series.values[i] > 0.0 && series.values[i].is_finite())
        .map(|i| (series.times[i], libm::log(series.values[i])))
        .unzip();
    if t.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, found: t.len() });
    }
    let fit = linear_regression(&t, &logv)?;
    Ok(RateFit {
        rate: -fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        rate_ci_half_width: Z_95 * fit.slope_se,
        window: start..end,
        n_points: t.len(),
    })
}
