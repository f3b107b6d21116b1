//! Smooth actions written as sums of squared residuals, one block per grid
//! interval. Gives exact gradients and the Gauss-Newton matrix used by the solver.

use super::{check_inputs, ActionKind, ActionSpec};
use crate::cloud::Cloud;
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::scalar::{lit, Scalar};
use crate::trajectory::Trajectory;

/// Residual `r` of one interval with Jacobians `b = ∂r/∂X_k` and
/// `c = ∂r/∂X_{k+1}`, both row-major `q x p`.
#[derive(Debug, Clone)]
pub(crate) struct ResidualBlock<T> {
    pub r: Vec<T>,
    pub b: Vec<T>,
    pub c: Vec<T>,
}

pub(crate) fn residual_blocks<T: Scalar>(
    traj: &Trajectory<T>,
    spec: &ActionSpec<T>,
    pot: &Potential<T>,
) -> Result<Vec<ResidualBlock<T>>> {
    check_inputs(traj, spec, pot)?;
    if !spec.kind.is_smooth() {
        return Err(Error::Unsupported(format!(
            "{} is not differentiable; gradients exist only for L_eps and K_eps",
            spec.kind.name()
        )));
    }
    let eps = spec.eps_checked()?;
    let h = traj.step();
    let half = lit::<T>(0.5);
    let p = traj.n() * traj.dim();
    let mut out = Vec::with_capacity(traj.steps());
    for k in 0..traj.steps() {
        let (x0, x1) = (traj.state(k), traj.state(k + 1));
        let xm = x0.lerp(x1, half);
        let s = traj.time(k) + half * h;
        let inv_h = T::one() / h;
        match spec.kind {
            ActionKind::LEps => {
                let w = (spec.weight.beta(s) * h).sqrt();
                let es = eps * s;
                let (hess, g) = pot.hess_h_dense(&xm.scale(T::one() / es))?;
                let quarter = T::one() / (lit::<T>(4.0) * s);
                let r = (0..p)
                    .map(|i| {
                        let v = (x1.as_slice()[i] - x0.as_slice()[i]) * inv_h;
                        w * (v - (xm.as_slice()[i] - g.as_slice()[i]) / (s + s))
                    })
                    .collect();
                let mut b = vec![T::zero(); p * p];
                let mut c = vec![T::zero(); p * p];
                for i in 0..p {
                    for j in 0..p {
                        let id = if i == j { T::one() } else { T::zero() };
                        let m = (id - hess[i * p + j] / es) * quarter;
                        b[i * p + j] = w * (-id * inv_h - m);
                        c[i * p + j] = w * (id * inv_h - m);
                    }
                }
                out.push(ResidualBlock { r, b, c });
            }
            ActionKind::KEps => {
                let w = (half * spec.weight.eta(s) * h).sqrt();
                let e = s.exp();
                let (hess, g) = pot.hess_h_dense(&xm.scale(T::one() / (eps * e)))?;
                let dscale = half * w / (eps * e * e);
                let mut r = Vec::with_capacity(2 * p);
                r.extend((0..p).map(|i| w * (x1.as_slice()[i] - x0.as_slice()[i]) * inv_h));
                r.extend(g.as_slice().iter().map(|&gi| w * gi / e));
                let mut b = vec![T::zero(); 2 * p * p];
                let mut c = vec![T::zero(); 2 * p * p];
                for i in 0..p {
                    b[i * p + i] = -w * inv_h;
                    c[i * p + i] = w * inv_h;
                    for j in 0..p {
                        let d = dscale * hess[i * p + j];
                        b[(p + i) * p + j] = d;
                        c[(p + i) * p + j] = d;
                    }
                }
                out.push(ResidualBlock { r, b, c });
            }
            _ => unreachable!("smooth kinds only"),
        }
    }
    Ok(out)
}

/// Gradient of the discretized action with respect to every grid state.
/// Endpoints are clamped, so their entries are zero. Only `L_eps` and
/// `K_eps` are supported.
pub fn grad_discretized_action<T: Scalar>(
    traj: &Trajectory<T>,
    spec: &ActionSpec<T>,
    pot: &Potential<T>,
) -> Result<Vec<Cloud<T>>> {
    let blocks = residual_blocks(traj, spec, pot)?;
    Ok(gradient_from_blocks(&blocks, traj))
}

pub(crate) fn gradient_from_blocks<T: Scalar>(blocks: &[ResidualBlock<T>], traj: &Trajectory<T>) -> Vec<Cloud<T>> {
    let m = traj.steps();
    let p = traj.n() * traj.dim();
    let mut grad = vec![vec![T::zero(); p]; m + 1];
    let two = lit::<T>(2.0);
    for (k, blk) in blocks.iter().enumerate() {
        let q = blk.r.len();
        for j in 0..p {
            let mut gb = T::zero();
            let mut gc = T::zero();
            for i in 0..q {
                gb += blk.b[i * p + j] * blk.r[i];
                gc += blk.c[i * p + j] * blk.r[i];
            }
            grad[k][j] += two * gb;
            grad[k + 1][j] += two * gc;
        }
    }
    for j in 0..p {
        grad[0][j] = T::zero();
        grad[m][j] = T::zero();
    }
    grad.into_iter().map(|g| Cloud::raw(traj.dim(), g)).collect()
}
