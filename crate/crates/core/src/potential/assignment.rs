//! Linear sum assignment with lexicographic tie-breaking.

use crate::cloud::{Cloud, Lattice};
use crate::error::Result;
use crate::perm::Perm;
use crate::scalar::{self, default_tol, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<T> {
    /// `σ` with particle `i` sent to lattice point `σ(i)`.
    pub perm: Perm,
    /// `Σ |x_i - a_{σ(i)}|²`.
    pub cost: T,
}

/// The permutation maximizing `X · A^σ`, equivalently minimizing
/// `Σ |x_i - a_{σ(i)}|²`. Among optimal permutations the lexicographically
/// smallest is returned.
pub fn optimal_assignment<T: Scalar>(x: &Cloud<T>, a: &Lattice<T>) -> Result<Assignment<T>> {
    a.check_cloud(x, "assignment")?;
    let n = x.n();
    let mut cost = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = scalar::dist_sq(x.point(i), a.cloud().point(j));
        }
    }
    let perm = solve_lexicographic(&cost, n);
    let total = (0..n).map(|i| cost[i * n + perm[i]]).sum();
    Ok(Assignment {
        perm: Perm::from_vec_unchecked(perm),
        cost: total,
    })
}

/// Minimum-cost perfect matching on a square cost matrix; lexicographically
/// smallest among the (tolerance-)optimal ones.
pub(crate) fn solve_lexicographic<T: Scalar>(cost: &[T], n: usize) -> Vec<usize> {
    let (mut row_to_col, u, v) = hungarian(cost, n);
    let scale = cost.iter().fold(T::zero(), |m, &c| m.max(c.abs()));
    let tol = default_tol::<T>() * (T::one() + scale);
    let tight: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| cost[i * n + j] - u[i] - v[j] <= tol)
                .collect()
        })
        .collect();
    let mut col_to_row = vec![usize::MAX; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    let mut col_fixed = vec![false; n];
    for i in 0..n {
        for &j in &tight[i] {
            if col_fixed[j] {
                continue;
            }
            if row_to_col[i] == j {
                col_fixed[j] = true;
                break;
            }
            // Reassign i -> j, then repair the displaced row along an
            // alternating path through unfixed tight edges.
            let saved = (row_to_col.clone(), col_to_row.clone());
            let displaced = col_to_row[j];
            let freed = row_to_col[i];
            row_to_col[i] = j;
            col_to_row[j] = i;
            col_to_row[freed] = usize::MAX;
            col_fixed[j] = true;
            let mut visited = vec![false; n];
            if augment(
                displaced,
                &tight,
                &col_fixed,
                &mut visited,
                &mut row_to_col,
                &mut col_to_row,
            ) {
                break;
            }
            col_fixed[j] = false;
            (row_to_col, col_to_row) = saved;
        }
        debug_assert!(col_fixed[row_to_col[i]]);
    }
    row_to_col
}

fn augment(
    row: usize,
    tight: &[Vec<usize>],
    col_fixed: &[bool],
    visited: &mut [bool],
    row_to_col: &mut [usize],
    col_to_row: &mut [usize],
) -> bool {
    for &c in &tight[row] {
        if col_fixed[c] || visited[c] {
            continue;
        }
        visited[c] = true;
        let owner = col_to_row[c];
        if owner == usize::MAX
            || augment(owner, tight, col_fixed, visited, row_to_col, col_to_row)
        {
            row_to_col[row] = c;
            col_to_row[c] = row;
            return true;
        }
    }
    false
}

/// Shortest augmenting path Hungarian method with dual potentials, O(n³).
/// Returns the row assignment and the duals `u`, `v` with
/// `cost[i][j] - u[i] - v[j] >= 0`, equality on matched pairs.
fn hungarian<T: Scalar>(cost: &[T], n: usize) -> (Vec<usize>, Vec<T>, Vec<T>) {
    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
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
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
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
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}
