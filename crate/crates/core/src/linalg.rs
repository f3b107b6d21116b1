//! Small dense and block-tridiagonal solvers.

use crate::scalar::Scalar;

/// Solves `a x = b` in place (row-major `n x n`) by Gaussian elimination with
/// partial pivoting. Returns `None` for a numerically singular matrix.
pub(crate) fn solve_dense<T: Scalar>(a: &mut [T], b: &mut [T], n: usize) -> Option<()> {
    let scale = a.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let tiny = scale * T::epsilon() * crate::scalar::count::<T>(n.max(1)) * crate::scalar::lit(16.0);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap())?;
        if !(a[piv * n + col].abs() > tiny) {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[r * n + k] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col * n + k] * b[k];
        }
        b[col] = s / a[col * n + col];
    }
    Some(())
}

/// Solves a symmetric block-tridiagonal system with `m` diagonal blocks of
/// size `p`: `diag[k]` and `upper[k]` (coupling k to k+1), all row-major.
/// `rhs` has length `m * p` and is overwritten with the solution.
pub(crate) fn solve_block_tridiagonal<T: Scalar>(
    diag: &[Vec<T>],
    upper: &[Vec<T>],
    rhs: &mut [T],
    p: usize,
) -> Option<()> {
    let m = diag.len();
    // Forward elimination: D'_k = D_k - U_{k-1}^T D'_{k-1}^{-1} U_{k-1}.
    let mut dprime: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut rprime: Vec<Vec<T>> = Vec::with_capacity(m);
    for k in 0..m {
        let mut d = diag[k].clone();
        let mut r = rhs[k * p..(k + 1) * p].to_vec();
        if k > 0 {
            let u = &upper[k - 1];
            // Solve D'_{k-1} [W | w] = [U_{k-1} | r'_{k-1}].
            let (w, wr) = solve_multi(&dprime[k - 1], u, &rprime[k - 1], p)?;
            // D_k -= U^T W, r_k -= U^T wr.
            for i in 0..p {
                for j in 0..p {
                    let mut s = T::zero();
                    for l in 0..p {
                        s += u[l * p + i] * w[l * p + j];
                    }
                    d[i * p + j] -= s;
                }
                let mut s = T::zero();
                for l in 0..p {
                    s += u[l * p + i] * wr[l];
                }
                r[i] -= s;
            }
        }
        dprime.push(d);
        rprime.push(r);
    }
    // Back substitution: x_k = D'_k^{-1} (r'_k - U_k x_{k+1}).
    let mut next: Vec<T> = Vec::new();
    for k in (0..m).rev() {
        let mut r = rprime[k].clone();
        if k + 1 < m {
            let u = &upper[k];
            for i in 0..p {
                let mut s = T::zero();
                for j in 0..p {
                    s += u[i * p + j] * next[j];
                }
                r[i] -= s;
            }
        }
        let mut a = dprime[k].clone();
        solve_dense(&mut a, &mut r, p)?;
        rhs[k * p..(k + 1) * p].copy_from_slice(&r);
        next = r;
    }
    Some(())
}

fn solve_multi<T: Scalar>(a: &[T], b: &[T], r: &[T], p: usize) -> Option<(Vec<T>, Vec<T>)> {
    let mut w = vec![T::zero(); p * p];
    for j in 0..p {
        let mut col: Vec<T> = (0..p).map(|i| b[i * p + j]).collect();
        let mut aa = a.to_vec();
        solve_dense(&mut aa, &mut col, p)?;
        for i in 0..p {
            w[i * p + j] = col[i];
        }
    }
    let mut wr = r.to_vec();
    let mut aa = a.to_vec();
    solve_dense(&mut aa, &mut wr, p)?;
    Some((w, wr))
}
