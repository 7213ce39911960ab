//! Classical statistics that need nothing beyond `erf`.

use alloc::vec::Vec;

use crate::linalg::distance;
use crate::{Error, Result};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, found: x.len() });
    }
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    Ok(sxy / libm::sqrt(sxx * syy))
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F_n − F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    let mut s = samples.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Asymptotic p-value of the KS statistic with Stephens' small-sample
/// correction: `Q_KS((sqrt(n) + 0.12 + 0.11/sqrt(n)) d)`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = libm::sqrt(n as f64);
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    kolmogorov_q(lambda)
}

/// `Q_KS(λ) = 2 Σ_{j≥1} (−1)^{j−1} exp(−2j²λ²)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = libm::exp(-2.0 * jf * jf * lambda * lambda);
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample energy statistic
/// `2 E|X−Y| − E|X−X′| − E|Y−Y′|` over flat row-major point sets.
pub fn energy_statistic(a: &[f64], b: &[f64], dim: usize) -> Result<f64> {
    if dim == 0 || !a.len().is_multiple_of(dim) || !b.len().is_multiple_of(dim) {
        return Err(Error::invalid("dim", "point sets must be multiples of dim"));
    }
    let n = a.len() / dim;
    let m = b.len() / dim;
    if n == 0 || m == 0 {
        return Err(Error::Empty);
    }
    let mean_cross = pair_sum(a, b, dim) / (n * m) as f64;
    let within_a = 2.0 * triangle_sum(a, dim) / (n * n) as f64;
    let within_b = 2.0 * triangle_sum(b, dim) / (m * m) as f64;
    Ok(2.0 * mean_cross - within_a - within_b)
}

pub(crate) fn pair_sum(a: &[f64], b: &[f64], dim: usize) -> f64 {
    let mut s = 0.0;
    for x in a.chunks_exact(dim) {
        for y in b.chunks_exact(dim) {
            s += distance(x, y);
        }
    }
    s
}

pub(crate) fn triangle_sum(a: &[f64], dim: usize) -> f64 {
    let pts: Vec<&[f64]> = a.chunks_exact(dim).collect();
    let mut s = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            s += distance(pts[i], pts[j]);
        }
    }
    s
}

/// Mann–Kendall trend test. Returns `(S, z)` where `z` is the
/// continuity-corrected normal score (no tie correction); a large positive
/// `z` indicates an increasing trend.
pub fn mann_kendall(x: &[f64]) -> Result<(i64, f64)> {
    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, found: n });
    }
    let mut s: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            s += match x[j].partial_cmp(&x[i]) {
                Some(core::cmp::Ordering::Greater) => 1,
                Some(core::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let nf = n as f64;
    let var = nf * (nf - 1.0) * (2.0 * nf + 5.0) / 18.0;
    let z = match s {
        0 => 0.0,
        s if s > 0 => (s as f64 - 1.0) / libm::sqrt(var),
        s => (s as f64 + 1.0) / libm::sqrt(var),
    };
    Ok((s, z))
}
