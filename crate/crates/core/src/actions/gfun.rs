//! The rescaled potentials `g_ε(θ, Y) = ε h(Y / (ε e^θ))` and `g(θ, Y) = f(Y) / e^θ`.

use crate::cloud::Cloud;
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::scalar::Scalar;

fn scaled_arg<T: Scalar>(theta: T, y: &Cloud<T>, eps: T) -> Result<(T, Cloud<T>)> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let e = theta.exp();
    Ok((e, y.scale(T::one() / (eps * e))))
}

pub fn g_eps<T: Scalar>(pot: &Potential<T>, theta: T, y: &Cloud<T>, eps: T) -> Result<T> {
    let (_, w) = scaled_arg(theta, y, eps)?;
    Ok(eps * pot.h_logsumexp(&w)?)
}

pub fn g<T: Scalar>(pot: &Potential<T>, theta: T, y: &Cloud<T>) -> Result<T> {
    Ok(pot.f_max(y)? / theta.exp())
}

/// `∇g_ε(θ, Y) = ⟨A^σ⟩_{Y/(εe^θ)} / e^θ`.
pub fn grad_g_eps<T: Scalar>(pot: &Potential<T>, theta: T, y: &Cloud<T>, eps: T) -> Result<Cloud<T>> {
    let (e, w) = scaled_arg(theta, y, eps)?;
    Ok(pot.grad_f_eps(T::one(), &w, T::one())?.scale(T::one() / e))
}

/// `∇̄g(θ, Y) = ∇̄f(Y) / e^θ`.
pub fn grad_g_bar<T: Scalar>(pot: &Potential<T>, theta: T, y: &Cloud<T>, tol: Option<T>) -> Result<Cloud<T>> {
    let tol = tol.filter(|_| y.dim() == 1);
    Ok(pot.extended_gradient(y, tol)?.scale(T::one() / theta.exp()))
}

/// `∂_θ ∇g_ε(θ, Y) = -e^{-θ} (∇h(W) + D²h(W) W)` with `W = Y / (ε e^θ)`.
pub fn dtheta_grad_g_eps<T: Scalar>(pot: &Potential<T>, theta: T, y: &Cloud<T>, eps: T) -> Result<Cloud<T>> {
    let (e, w) = scaled_arg(theta, y, eps)?;
    let grad = pot.grad_f_eps(T::one(), &w, T::one())?;
    let hw = pot.hess_h_apply(&w, &w)?;
    Ok(grad.add(&hw).scale(-T::one() / e))
}
