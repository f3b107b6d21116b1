use super::assignment::optimal_assignment;
use super::min_norm::{wolfe, VertexOracle};
use super::Potential;
use crate::cloud::{Cloud, Lattice};
use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::scalar::{self, count, lit, Scalar};

pub(super) fn resolvent<T: Scalar>(pot: &Potential<T>, x: &Cloud<T>, tau: T) -> Result<Cloud<T>> {
    pot.lattice.check_cloud(x, "resolvent")?;
    if !(tau > T::zero()) {
        return Err(Error::InvalidArgument(format!("resolvent step must be positive, got {tau}")));
    }
    if x.dim() == 1 {
        return Ok(scalar_resolvent(&pot.lattice.sorted_values()?, x, tau));
    }
    // J = X - τ P(X/τ), P the projection onto conv{A^σ}.
    let y = x.scale(T::one() / tau);
    let oracle = ShiftedPolytope {
        lattice: &pot.lattice,
        shift: y.as_slice(),
    };
    let w = wolfe(&oracle)?;
    Ok(Cloud::raw(
        x.dim(),
        x.as_slice()
            .iter()
            .zip(&w)
            .zip(y.as_slice())
            .map(|((&xi, &wi), &yi)| xi - tau * (wi + yi))
            .collect(),
    ))
}

/// For sorted X the minimizer is sorted, and on the sorted cone the problem
/// is an isotonic regression of `X - τA` (sorted A).
fn scalar_resolvent<T: Scalar>(a_sorted: &[T], x: &Cloud<T>, tau: T) -> Cloud<T> {
    let (sorted, sigma) = x.sort_ascending().expect("d = 1");
    let z: Vec<T> = sorted
        .as_slice()
        .iter()
        .zip(a_sorted)
        .map(|(&xi, &ai)| xi - tau * ai)
        .collect();
    let fit = isotonic_increasing(&z);
    let mut out = vec![T::zero(); fit.len()];
    for (k, v) in fit.into_iter().enumerate() {
        out[sigma.apply(k)] = v;
    }
    Cloud::raw(1, out)
}

/// Least-squares non-decreasing fit by pool-adjacent-violators.
pub(crate) fn isotonic_increasing<T: Scalar>(z: &[T]) -> Vec<T> {
    let mut blocks: Vec<(T, usize)> = Vec::with_capacity(z.len());
    for &v in z {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s2, n2) = blocks[blocks.len() - 1];
            let (s1, n1) = blocks[blocks.len() - 2];
            if s1 / count::<T>(n1) > s2 / count::<T>(n2) {
                blocks.pop();
                *blocks.last_mut().unwrap() = (s1 + s2, n1 + n2);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(z.len());
    for (s, n) in blocks {
        let mean = s / count::<T>(n);
        out.extend(std::iter::repeat_n(mean, n));
    }
    out
}

/// Vertices `A^σ - y`, minimized over by solving an assignment problem.
struct ShiftedPolytope<'a, T> {
    lattice: &'a Lattice<T>,
    shift: &'a [T],
}

impl<T: Scalar> ShiftedPolytope<'_, T> {
    fn vertex_for(&self, dir: &[T]) -> Vec<T> {
        let neg = Cloud::raw(self.lattice.dim(), dir.iter().map(|&d| -d).collect());
        let asg = optimal_assignment(&neg, self.lattice).expect("shapes checked");
        self.lattice
            .cloud()
            .permute_unchecked(asg.perm.as_slice())
            .as_slice()
            .iter()
            .zip(self.shift)
            .map(|(&a, &y)| a - y)
            .collect()
    }
}

impl<T: Scalar> VertexOracle<T> for ShiftedPolytope<'_, T> {
    fn argmin(&self, dir: &[T]) -> Vec<T> {
        self.vertex_for(dir)
    }

    fn initial(&self) -> Vec<T> {
        // Vertex nearest to the shift point.
        let neg: Vec<T> = self.shift.iter().map(|&y| -y).collect();
        self.vertex_for(&neg)
    }

    fn radius_sq(&self) -> T {
        let r = self.lattice.norm() + scalar::norm_sq(self.shift).sqrt();
        r * r
    }
}

pub(super) fn resolvent_eps<T: Scalar>(
    pot: &Potential<T>,
    x: &Cloud<T>,
    tau: T,
    t: T,
    eps: T,
) -> Result<Cloud<T>> {
    pot.lattice.check_cloud(x, "smoothed resolvent")?;
    if !(tau > T::zero()) || !(t > T::zero()) || !(eps > T::zero()) {
        return Err(Error::InvalidArgument(
            "smoothed resolvent needs positive tau, t and eps".into(),
        ));
    }
    let s = eps * t;
    let objective = |y: &Cloud<T>| -> Result<T> {
        Ok(pot.f_eps(t, y, eps)? + y.sub(x).norm_sq() / (lit::<T>(2.0) * tau))
    };
    let p = x.as_slice().len();
    let mut y = pot.resolvent(x, tau)?;
    let mut val = objective(&y)?;
    let scale = T::one() + x.norm() + pot.lattice.norm();
    let tol = T::epsilon().sqrt() * lit(1e-3) * scale;
    for _ in 0..200 {
        let (hess, grad_h) = pot.hess_h_dense(&y.scale(T::one() / s))?;
        let g: Vec<T> = grad_h
            .as_slice()
            .iter()
            .zip(y.as_slice().iter().zip(x.as_slice()))
            .map(|(&gh, (&yi, &xi))| gh + (yi - xi) / tau)
            .collect();
        let gnorm = scalar::norm_sq(&g).sqrt();
        if gnorm <= tol {
            return Ok(y);
        }
        let mut h: Vec<T> = hess.iter().map(|&v| v / s).collect();
        for i in 0..p {
            h[i * p + i] += T::one() / tau;
        }
        let mut step: Vec<T> = g.iter().map(|&v| -v).collect();
        solve_dense(&mut h, &mut step, p).ok_or(Error::NonFinite("smoothed resolvent Newton step"))?;
        let dir = Cloud::raw(x.dim(), step);
        let slope = scalar::dot(&g, dir.as_slice());
        let mut alpha = T::one();
        loop {
            let cand = y.axpy(alpha, &dir);
            let cv = objective(&cand)?;
            if cv <= val + lit::<T>(1e-4) * alpha * slope || alpha < lit(1e-12) {
                y = cand;
                val = cv;
                break;
            }
            alpha *= lit(0.5);
        }
    }
    Err(Error::NonConvergence {
        what: "smoothed resolvent",
        iterations: 200,
        residual: f64::NAN,
    })
}
