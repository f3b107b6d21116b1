//! Minimum-norm point of a polytope (Wolfe's method).

use crate::cloud::Cloud;
use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::scalar::{self, lit, Scalar};

/// Linear minimization oracle over the vertices of a polytope.
pub(crate) trait VertexOracle<T> {
    /// A vertex minimizing `dir · v`.
    fn argmin(&self, dir: &[T]) -> Vec<T>;
    /// Starting vertex.
    fn initial(&self) -> Vec<T>;
    /// Bound on vertex norms, used to scale tolerances.
    fn radius_sq(&self) -> T;
}

pub(crate) struct VertexList<'a, T>(pub &'a [Vec<T>]);

impl<T: Scalar> VertexOracle<T> for VertexList<'_, T> {
    fn argmin(&self, dir: &[T]) -> Vec<T> {
        self.0
            .iter()
            .min_by(|a, b| {
                scalar::dot(dir, a)
                    .partial_cmp(&scalar::dot(dir, b))
                    .unwrap()
            })
            .unwrap()
            .clone()
    }

    fn initial(&self) -> Vec<T> {
        self.0
            .iter()
            .min_by(|a, b| scalar::norm_sq(a).partial_cmp(&scalar::norm_sq(b)).unwrap())
            .unwrap()
            .clone()
    }

    fn radius_sq(&self) -> T {
        self.0
            .iter()
            .map(|v| scalar::norm_sq(v))
            .fold(T::zero(), T::max)
    }
}

const MAX_MAJOR: usize = 10_000;

/// Wolfe's minimum-norm-point algorithm.
pub(crate) fn wolfe<T: Scalar, O: VertexOracle<T>>(oracle: &O) -> Result<Vec<T>> {
    let scale = oracle.radius_sq().max(T::min_positive_value());
    let gap_tol = T::epsilon() * lit(64.0) * scale;
    let weight_tol = T::epsilon() * lit(64.0);
    let mut corral: Vec<Vec<T>> = vec![oracle.initial()];
    let mut lambda: Vec<T> = vec![T::one()];
    let mut x = corral[0].clone();
    for _ in 0..MAX_MAJOR {
        let p = oracle.argmin(&x);
        let gap = scalar::norm_sq(&x) - scalar::dot(&x, &p);
        if gap <= gap_tol {
            return Ok(x);
        }
        if corral.iter().any(|c| scalar::dist_sq(c, &p) <= gap_tol) {
            // The oracle returned a point already in the corral: no further progress possible.
            return Ok(x);
        }
        corral.push(p);
        lambda.push(T::zero());
        loop {
            let Some(mu) = affine_minimizer(&corral) else {
                // Numerically dependent corral: drop the oldest zero-weight or smallest point.
                let k = argmin_index(&lambda);
                corral.remove(k);
                lambda.remove(k);
                renormalize(&mut lambda);
                break;
            };
            if mu.iter().all(|&m| m > weight_tol) {
                lambda = mu;
                break;
            }
            let mut theta = T::one();
            for (&l, &m) in lambda.iter().zip(&mu) {
                if m <= weight_tol && l - m > T::zero() {
                    theta = theta.min(l / (l - m));
                }
            }
            for (l, &m) in lambda.iter_mut().zip(&mu) {
                *l = (T::one() - theta) * *l + theta * m;
            }
            let mut k = 0;
            let mut removed = false;
            while k < lambda.len() {
                if lambda[k] <= weight_tol {
                    lambda.remove(k);
                    corral.remove(k);
                    removed = true;
                } else {
                    k += 1;
                }
            }
            if !removed {
                let k = argmin_index(&lambda);
                lambda.remove(k);
                corral.remove(k);
            }
            renormalize(&mut lambda);
        }
        x = combine(&corral, &lambda);
    }
    let p = oracle.argmin(&x);
    Err(Error::NonConvergence {
        what: "minimum-norm point",
        iterations: MAX_MAJOR,
        residual: (scalar::norm_sq(&x) - scalar::dot(&x, &p)).to_f64().unwrap_or(f64::NAN),
    })
}

fn argmin_index<T: Scalar>(v: &[T]) -> usize {
    (0..v.len())
        .min_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap())
        .unwrap()
}

fn renormalize<T: Scalar>(lambda: &mut [T]) {
    let s: T = lambda.iter().copied().sum();
    for l in lambda {
        *l /= s;
    }
}

fn combine<T: Scalar>(corral: &[Vec<T>], lambda: &[T]) -> Vec<T> {
    let mut x = vec![T::zero(); corral[0].len()];
    for (c, &l) in corral.iter().zip(lambda) {
        for (xi, &ci) in x.iter_mut().zip(c) {
            *xi += l * ci;
        }
    }
    x
}

/// Weights of the point of minimal norm in the affine hull of `pts`:
/// `(G + 11ᵀ) α = 1`, normalized to sum one.
fn affine_minimizer<T: Scalar>(pts: &[Vec<T>]) -> Option<Vec<T>> {
    let k = pts.len();
    let mut g = vec![T::zero(); k * k];
    for i in 0..k {
        for j in 0..=i {
            let v = scalar::dot(&pts[i], &pts[j]) + T::one();
            g[i * k + j] = v;
            g[j * k + i] = v;
        }
    }
    let mut alpha = vec![T::one(); k];
    solve_dense(&mut g, &mut alpha, k)?;
    let s: T = alpha.iter().copied().sum();
    if !(s.abs() > T::epsilon()) {
        return None;
    }
    Some(alpha.into_iter().map(|a| a / s).collect())
}

/// The point of least Euclidean norm in the convex hull of `vertices`.
pub fn min_norm_point<T: Scalar>(vertices: &[Cloud<T>]) -> Result<Cloud<T>> {
    let first = vertices
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty vertex set".into()))?;
    for v in vertices {
        first.check_shape(v, "min-norm vertices")?;
    }
    let list: Vec<Vec<T>> = vertices.iter().map(|v| v.as_slice().to_vec()).collect();
    let x = wolfe(&VertexList(&list))?;
    Ok(Cloud::raw(first.dim(), x))
}
