use alloc::vec::Vec;

use super::assignment::solve_assignment;
use crate::constants::DistanceFunction;
use crate::linalg::distance;
use crate::{Error, Result};

/// Largest ensemble accepted by [`w1_empirical_assignment`].
pub const MAX_ASSIGNMENT_POINTS: usize = 256;

/// Exact W1 between two equal-size empirical measures on the line: the
/// sorted matching is optimal.
pub fn w1_empirical_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::Empty);
    }
    if !a.iter().chain(b).all(|v| v.is_finite()) {
        return Err(Error::invalid("samples", "must be finite"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let total: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / a.len() as f64)
}

/// Exact W1 between two equal-size empirical measures in `R^d` (Euclidean
/// ground cost) by optimal assignment. Meant as a validation oracle, so
/// limited to [`MAX_ASSIGNMENT_POINTS`] points.
pub fn w1_empirical_assignment(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    let n = a.len();
    if n != b.len() {
        return Err(Error::LengthMismatch(n, b.len()));
    }
    if n == 0 {
        return Err(Error::Empty);
    }
    if n > MAX_ASSIGNMENT_POINTS {
        return Err(Error::TooLarge {
            n,
            max: MAX_ASSIGNMENT_POINTS,
        });
    }
    let d = a[0].len();
    if let Some(p) = a.iter().chain(b).find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: p.len() });
    }
    let mut cost = Vec::with_capacity(n * n);
    for x in a {
        for y in b {
            cost.push(distance(x, y));
        }
    }
    let (_, total) = solve_assignment(&cost, n)?;
    Ok(total / n as f64)
}

/// Mean of `f(|x_i − y_i|)` over coupled pairs: an upper bound on `W_f`.
pub fn w_f_empirical<'a, I>(pairs: I, dist: &DistanceFunction) -> Result<f64>
where
    I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
{
    let mut sum = 0.0;
    let mut n = 0usize;
    for (x, y) in pairs {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(x.len(), y.len()));
        }
        sum += dist.eval(distance(x, y));
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty);
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn one_dimensional_examples() {
        assert_eq!(w1_empirical_1d(&[0.0, 1.0], &[0.0, 3.0]).unwrap(), 1.0);
        assert_eq!(w1_empirical_1d(&[0.5, -2.0], &[-2.0, 0.5]).unwrap(), 0.0);
        assert_eq!(w1_empirical_1d(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert!(w1_empirical_1d(&[0.0], &[0.0, 1.0]).is_err());
        assert!(w1_empirical_1d(&[], &[]).is_err());
    }

    #[test]
    fn permuted_copy_is_free() {
        let a = vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![3.0, 3.0]];
        let b = vec![a[2].clone(), a[0].clone(), a[1].clone()];
        assert_eq!(w1_empirical_assignment(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn assignment_size_limit() {
        let a = vec![vec![0.0]; MAX_ASSIGNMENT_POINTS + 1];
        assert!(matches!(w1_empirical_assignment(&a, &a), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn w_f_examples() {
        let f = DistanceFunction::new(1.0, 2.0).unwrap();
        let x = [1.0, 2.0];
        assert_eq!(w_f_empirical([(&x[..], &x[..])], &f).unwrap(), 0.0);
        let y = [1.0, 1.0];
        let v = w_f_empirical([(&x[..], &y[..])], &f).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }
}
