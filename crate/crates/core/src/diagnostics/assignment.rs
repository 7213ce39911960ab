use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Minimum-cost perfect matching for a row-major `n × n` cost matrix
/// (Hungarian algorithm with potentials, `O(n³)`).
///
/// Returns `assignment[row] = column` and the total cost summed in row order.
pub fn solve_assignment(cost: &[f64], n: usize) -> Result<(Vec<usize>, f64)> {
    if cost.len() != n * n {
        return Err(Error::LengthMismatch(cost.len(), n * n));
    }
    if n == 0 {
        return Err(Error::Empty);
    }
    if !cost.iter().all(|c| c.is_finite()) {
        return Err(Error::invalid("cost", "entries must be finite"));
    }
    let a = |i: usize, j: usize| cost[(i - 1) * n + (j - 1)];
    let inf = f64::INFINITY;
    // 1-based with a sentinel column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = a(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    let total = assignment.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    Ok((assignment, total))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_instance() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let (asg, total) = solve_assignment(&cost, 3).unwrap();
        assert_eq!(total, 5.0);
        assert_eq!(asg, vec![1, 0, 2]);
    }

    #[test]
    fn rejects_bad_shape() {
        assert!(solve_assignment(&[1.0, 2.0], 2).is_err());
        assert!(solve_assignment(&[], 0).is_err());
    }
}
