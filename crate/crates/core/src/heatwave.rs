//! Heat-wave density, the companion velocity field and its noised version.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cloud::Cloud;
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::scalar::{self, count, lit, Scalar};
use crate::trajectory::{Gauge, Trajectory};

/// Time profile of the noise amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseScale<T> {
    /// `α(t) = 1/√t`.
    InvSqrt,
    Constant(T),
}

impl<T: Scalar> NoiseScale<T> {
    pub fn eval(&self, t: T) -> T {
        match *self {
            NoiseScale::InvSqrt => T::one() / t.sqrt(),
            NoiseScale::Constant(c) => c,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseScale::InvSqrt => "inv_sqrt",
            NoiseScale::Constant(_) => "constant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec<T> {
    pub eta: T,
    pub alpha: NoiseScale<T>,
    pub seed: u64,
    pub steps: usize,
}

impl<T: Scalar> NoiseSpec<T> {
    pub fn new(eta: T, seed: u64, steps: usize) -> Result<Self> {
        if !(eta >= T::zero()) || !eta.is_finite() {
            return Err(Error::InvalidArgument(format!("noise level must be finite and >= 0, got {eta}")));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("noise spec needs at least one step".into()));
        }
        Ok(NoiseSpec {
            eta,
            alpha: NoiseScale::InvSqrt,
            seed,
            steps,
        })
    }

    pub fn with_alpha(mut self, alpha: NoiseScale<T>) -> Self {
        self.alpha = alpha;
        self
    }
}

fn check_time<T: Scalar>(t: T, eps: T) -> Result<()> {
    if !(t > T::zero()) {
        return Err(Error::InvalidArgument(format!("heat kernel requires t>0, got t={t}")));
    }
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
    }
    Ok(())
}

/// Log-weights `-|X - A^σ|² / (2εt)` over the permutation table.
fn gaussian_exponents<T: Scalar>(pot: &Potential<T>, t: T, x: &Cloud<T>, eps: T) -> Result<Vec<T>> {
    check_time(t, eps)?;
    pot.lattice().check_cloud(x, "heat-wave state")?;
    let s = lit::<T>(2.0) * eps * t;
    Ok(pot
        .vertex_rows()?
        .map(|v| -scalar::dist_sq(x.as_slice(), v) / s)
        .collect())
}

/// Logarithm of the symmetrized Gaussian mixture density.
pub fn log_rho_eps<T: Scalar>(pot: &Potential<T>, t: T, x: &Cloud<T>, eps: T) -> Result<T> {
    let e = gaussian_exponents(pot, t, x, eps)?;
    let (lse, _) = scalar::log_sum_exp(&e);
    let p = count::<T>(pot.n() * pot.dim());
    let two_pi = lit::<T>(2.0) * T::PI();
    let ln_count = scalar::ln_factorial::<T>(pot.n());
    Ok(lse - ln_count - lit::<T>(0.5) * p * (two_pi * eps * t).ln())
}

pub fn rho_eps<T: Scalar>(pot: &Potential<T>, t: T, x: &Cloud<T>, eps: T) -> Result<T> {
    Ok(log_rho_eps(pot, t, x, eps)?.exp())
}

/// Companion velocity `(X - ⟨A^σ⟩)/(2t)`, with the average taken under the
/// normalized Gaussian weights.
pub fn v_eps<T: Scalar>(pot: &Potential<T>, t: T, x: &Cloud<T>, eps: T) -> Result<Cloud<T>> {
    let e = gaussian_exponents(pot, t, x, eps)?;
    let (lse, _) = scalar::log_sum_exp(&e);
    if !lse.is_finite() {
        return Err(Error::NonFinite("companion velocity"));
    }
    let mut mean = vec![T::zero(); x.as_slice().len()];
    for (v, &ek) in pot.vertex_rows()?.zip(&e) {
        let w = (ek - lse).exp();
        for (m, &vi) in mean.iter_mut().zip(v) {
            *m += w * vi;
        }
    }
    let half_inv_t = T::one() / (lit::<T>(2.0) * t);
    Ok(x.zip_map(&Cloud::raw(x.dim(), mean), |xi, mi| (xi - mi) * half_inv_t))
}

fn check_state<T: Scalar>(x: &Cloud<T>) -> Result<()> {
    if x.as_slice().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("companion integration"))
    }
}

fn check_span<T: Scalar>(t0: T, t1: T, steps: usize) -> Result<()> {
    if !(t0 > T::zero()) {
        return Err(Error::InvalidArgument(format!("heat kernel requires t>0, got t0={t0}")));
    }
    if !(t1 > t0) || steps == 0 {
        return Err(Error::InvalidArgument("need t1 > t0 and at least one step".into()));
    }
    Ok(())
}

/// Classical RK4 for `Ẋ = v_ε(t, X)` on a uniform grid in `t`.
pub fn integrate_companion<T: Scalar>(
    pot: &Potential<T>,
    x0: &Cloud<T>,
    t0: T,
    t1: T,
    steps: usize,
    eps: T,
) -> Result<Trajectory<T>> {
    check_span(t0, t1, steps)?;
    let h = (t1 - t0) / count::<T>(steps);
    let half = lit::<T>(0.5);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    states.push(x.clone());
    for k in 0..steps {
        let t = t0 + h * count::<T>(k);
        let k1 = v_eps(pot, t, &x, eps)?;
        let k2 = v_eps(pot, t + half * h, &x.axpy(half * h, &k1), eps)?;
        let k3 = v_eps(pot, t + half * h, &x.axpy(half * h, &k2), eps)?;
        let k4 = v_eps(pot, t + h, &x.axpy(h, &k3), eps)?;
        let sixth = h / lit::<T>(6.0);
        let two = lit::<T>(2.0);
        x = x
            .axpy(sixth, &k1)
            .axpy(sixth * two, &k2)
            .axpy(sixth * two, &k3)
            .axpy(sixth, &k4);
        check_state(&x)?;
        states.push(x.clone());
    }
    Trajectory::new(Gauge::T, t0, t1, states)
}

/// Explicit Euler for the companion ODE.
pub fn euler_companion<T: Scalar>(
    pot: &Potential<T>,
    x0: &Cloud<T>,
    t0: T,
    t1: T,
    steps: usize,
    eps: T,
) -> Result<Trajectory<T>> {
    check_span(t0, t1, steps)?;
    let h = (t1 - t0) / count::<T>(steps);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    states.push(x.clone());
    for k in 0..steps {
        let t = t0 + h * count::<T>(k);
        x = x.axpy(h, &v_eps(pot, t, &x, eps)?);
        check_state(&x)?;
        states.push(x.clone());
    }
    Trajectory::new(Gauge::T, t0, t1, states)
}

/// Standard normals for step `step`: ChaCha8 keyed by `seed`, stream `step`,
/// one draw per coordinate in order.
fn step_noise<T: Scalar>(seed: u64, step: usize, len: usize) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step as u64);
    (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            lit::<T>(z)
        })
        .collect()
}

/// Euler–Maruyama for `dX = v_ε dt + √η α(t) dW`.
pub fn sample_sde<T: Scalar>(
    pot: &Potential<T>,
    x0: &Cloud<T>,
    t0: T,
    t1: T,
    noise: &NoiseSpec<T>,
    eps: T,
) -> Result<Trajectory<T>> {
    check_span(t0, t1, noise.steps)?;
    let steps = noise.steps;
    let h = (t1 - t0) / count::<T>(steps);
    let sqrt_h = h.sqrt();
    let sqrt_eta = noise.eta.sqrt();
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    states.push(x.clone());
    for k in 0..steps {
        let t = t0 + h * count::<T>(k);
        x = x.axpy(h, &v_eps(pot, t, &x, eps)?);
        if noise.eta > T::zero() {
            let amp = sqrt_eta * noise.alpha.eval(t) * sqrt_h;
            let xi = step_noise::<T>(noise.seed, k, x.as_slice().len());
            for (xi_c, z) in x.as_mut_slice().iter_mut().zip(xi) {
                *xi_c += amp * z;
            }
        }
        check_state(&x)?;
        states.push(x.clone());
    }
    Trajectory::new(Gauge::T, t0, t1, states)
}
