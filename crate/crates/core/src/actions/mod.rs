//! Action functionals on discretized trajectories.
//!
//! Quadrature: on each grid interval the velocity is the forward difference
//! and the potential term is evaluated at the averaged state and midpoint time.

mod gauge;
mod gfun;
mod lsq;

pub use gauge::{change_gauge, Scaling};
pub use gfun::{dtheta_grad_g_eps, g, g_eps, grad_g_bar, grad_g_eps};
pub use lsq::grad_discretized_action;
pub(crate) use lsq::{gradient_from_blocks as lsq_gradient, residual_blocks, ResidualBlock};

use crate::cloud::{Cloud, Lattice};
use crate::error::{Error, Result};
use crate::partition::partition_of;
use crate::potential::{internal_energy, optimal_assignment, Potential};
use crate::scalar::{default_tol, lit, Scalar};
use crate::trajectory::{Gauge, Trajectory};

/// Which functional to evaluate.
///
/// `LEps`/`L` act on t-gauge trajectories `X`; `KEps`/`K` on θ-gauge scaled
/// trajectories `Y = X / e^θ`; the `Lambda*` family on θ-gauge `Z_θ = X_{e^{2θ}}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionKind {
    /// `∫ |Ẋ - (X - ∇f_ε(t,X)) / (2t)|² β(t) dt`
    LEps,
    /// `∫ |Ẋ - (X - ∇̄f(X)) / (2t)|² β(t) dt`
    L,
    /// `½ ∫ (|Ẏ|² + |∇g_ε(θ,Y)|²) η(θ) dθ`
    KEps,
    /// `½ ∫ (|Ẏ|² + |∇̄g(θ,Y)|²) η(θ) dθ`
    K,
    /// `∫ |Ż - (Z - ∇̄f(Z))|² dθ`
    Lambda,
    /// `∫ |Ż|² + |Z - ∇̄f(Z)|² dθ`
    LambdaPrime,
    /// `∫ |Ż|² + |Z - A|² + h(π(Z)) dθ`
    LambdaDoublePrime,
    /// `∫ |Ż|² + |Z|² + |A|² - 2 f(Z) dθ`
    LambdaPlus,
}

impl ActionKind {
    pub fn gauge(self) -> Gauge {
        match self {
            ActionKind::LEps | ActionKind::L => Gauge::T,
            _ => Gauge::Theta,
        }
    }

    pub fn is_smooth(self) -> bool {
        matches!(self, ActionKind::LEps | ActionKind::KEps)
    }

    /// The limit functional of a smoothed kind.
    pub fn limit(self) -> ActionKind {
        match self {
            ActionKind::LEps => ActionKind::L,
            ActionKind::KEps => ActionKind::K,
            k => k,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::LEps => "L_eps",
            ActionKind::L => "L",
            ActionKind::KEps => "K_eps",
            ActionKind::K => "K",
            ActionKind::Lambda => "Lambda",
            ActionKind::LambdaPrime => "Lambda_prime",
            ActionKind::LambdaDoublePrime => "Lambda_double_prime",
            ActionKind::LambdaPlus => "Lambda_plus",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            ActionKind::LEps,
            ActionKind::L,
            ActionKind::KEps,
            ActionKind::K,
            ActionKind::Lambda,
            ActionKind::LambdaPrime,
            ActionKind::LambdaDoublePrime,
            ActionKind::LambdaPlus,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

/// Time weight `β(t) = c t^p`; in the θ-gauge `η(θ) = β(e^{2θ})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight<T> {
    pub coefficient: T,
    pub exponent: T,
}

impl<T: Scalar> Default for Weight<T> {
    fn default() -> Self {
        Weight {
            coefficient: T::one(),
            exponent: T::one(),
        }
    }
}

impl<T: Scalar> Weight<T> {
    pub fn beta(&self, t: T) -> T {
        self.coefficient * t.powf(self.exponent)
    }

    pub fn eta(&self, theta: T) -> T {
        self.beta((theta + theta).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointMode {
    Fixed,
    /// Endpoints match up to relabeling of the particles.
    UpToPermutation,
}

/// Functional, smoothing parameter and boundary data.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpec<T> {
    pub kind: ActionKind,
    pub eps: Option<T>,
    pub start: Cloud<T>,
    pub end: Cloud<T>,
    pub mode: EndpointMode,
    pub weight: Weight<T>,
    /// Distance below which particles count as one cluster.
    pub cluster_tol: T,
    /// Endpoint mismatch allowance; defaults to `1e-9 (1 + |P|)` per endpoint.
    pub endpoint_tol: Option<T>,
}

impl<T: Scalar> ActionSpec<T> {
    pub fn new(kind: ActionKind, start: Cloud<T>, end: Cloud<T>) -> Self {
        ActionSpec {
            kind,
            eps: None,
            start,
            end,
            mode: EndpointMode::Fixed,
            weight: Weight::default(),
            cluster_tol: default_tol(),
            endpoint_tol: None,
        }
    }

    pub fn with_eps(mut self, eps: T) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn with_kind(mut self, kind: ActionKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_mode(mut self, mode: EndpointMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_weight(mut self, weight: Weight<T>) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_cluster_tol(mut self, tol: T) -> Self {
        self.cluster_tol = tol;
        self
    }

    pub(crate) fn eps_checked(&self) -> Result<T> {
        match self.eps {
            Some(e) if e > T::zero() => Ok(e),
            Some(e) => Err(Error::InvalidArgument(format!("eps must be positive, got {e}"))),
            None => Err(Error::InvalidArgument(format!(
                "{} needs a smoothing parameter",
                self.kind.name()
            ))),
        }
    }
}

/// Which endpoint constraint failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EndpointViolation {
    Start,
    End,
    Both,
}

/// Action value; an endpoint mismatch gives `+∞` with the reason.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionValue<T> {
    Finite(T),
    Infinite(EndpointViolation),
}

impl<T: Scalar> ActionValue<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            ActionValue::Finite(v) => Some(v),
            ActionValue::Infinite(_) => None,
        }
    }

    /// The value, `+∞` for endpoint violations.
    pub fn value(self) -> T {
        self.finite().unwrap_or_else(T::infinity)
    }
}

pub(crate) fn check_inputs<T: Scalar>(
    traj: &Trajectory<T>,
    spec: &ActionSpec<T>,
    pot: &Potential<T>,
) -> Result<()> {
    if traj.gauge() != spec.kind.gauge() {
        return Err(Error::Gauge(format!(
            "{} is defined in the {}-gauge, trajectory is in the {}-gauge",
            spec.kind.name(),
            spec.kind.gauge().label(),
            traj.gauge().label()
        )));
    }
    pot.lattice().check_cloud(traj.first(), "trajectory vs lattice")?;
    pot.lattice().check_cloud(&spec.start, "start endpoint vs lattice")?;
    pot.lattice().check_cloud(&spec.end, "end endpoint vs lattice")?;
    if spec.kind.is_smooth() {
        spec.eps_checked()?;
    }
    Ok(())
}

fn endpoint_distance<T: Scalar>(x: &Cloud<T>, target: &Cloud<T>, mode: EndpointMode) -> Result<T> {
    Ok(match mode {
        EndpointMode::Fixed => x.dist(target),
        EndpointMode::UpToPermutation => {
            optimal_assignment(x, &Lattice::new(target.clone()))?.cost.sqrt()
        }
    })
}

/// Checks the boundary conditions of `spec` on `traj`.
pub fn endpoint_violation<T: Scalar>(
    traj: &Trajectory<T>,
    spec: &ActionSpec<T>,
) -> Result<Option<EndpointViolation>> {
    let tol_for = |p: &Cloud<T>| {
        spec.endpoint_tol
            .unwrap_or_else(|| default_tol::<T>() * (T::one() + p.norm()))
    };
    let bad_start = endpoint_distance(traj.first(), &spec.start, spec.mode)? > tol_for(&spec.start);
    let bad_end = endpoint_distance(traj.last(), &spec.end, spec.mode)? > tol_for(&spec.end);
    Ok(match (bad_start, bad_end) {
        (false, false) => None,
        (true, false) => Some(EndpointViolation::Start),
        (false, true) => Some(EndpointViolation::End),
        (true, true) => Some(EndpointViolation::Both),
    })
}

/// Minimal-norm subgradient with the cluster tolerance as coordinate tie
/// threshold on the line, default score tolerance otherwise.
pub(crate) fn grad_bar<T: Scalar>(pot: &Potential<T>, x: &Cloud<T>, cluster_tol: T) -> Result<Cloud<T>> {
    let tol = (x.dim() == 1).then_some(cluster_tol);
    pot.extended_gradient(x, tol)
}

/// Per-interval integrand values (already multiplied by the step).
pub fn action_density<T: Scalar>(
    traj: &Trajectory<T>,
    spec: &ActionSpec<T>,
    pot: &Potential<T>,
) -> Result<Vec<T>> {
    check_inputs(traj, spec, pot)?;
    let h = traj.step();
    let half = lit::<T>(0.5);
    let a = pot.lattice().cloud();
    let a_sq = pot.lattice().norm_sq();
    let mut out = Vec::with_capacity(traj.steps());
    for k in 0..traj.steps() {
        let (x0, x1) = (traj.state(k), traj.state(k + 1));
        let v = x1.sub(x0).scale(T::one() / h);
        let xm = x0.lerp(x1, half);
        let s = traj.time(k) + half * h;
        let val = match spec.kind {
            ActionKind::LEps | ActionKind::L => {
                let g = if spec.kind == ActionKind::LEps {
                    pot.grad_f_eps(s, &xm, spec.eps_checked()?)?
                } else {
                    grad_bar(pot, &xm, spec.cluster_tol)?
                };
                let drift = xm.sub(&g).scale(T::one() / (s + s));
                spec.weight.beta(s) * v.sub(&drift).norm_sq()
            }
            ActionKind::KEps | ActionKind::K => {
                let g = if spec.kind == ActionKind::KEps {
                    grad_g_eps(pot, s, &xm, spec.eps_checked()?)?
                } else {
                    grad_g_bar(pot, s, &xm, Some(spec.cluster_tol))?
                };
                half * spec.weight.eta(s) * (v.norm_sq() + g.norm_sq())
            }
            ActionKind::Lambda => {
                let g = grad_bar(pot, &xm, spec.cluster_tol)?;
                v.sub(&xm.sub(&g)).norm_sq()
            }
            ActionKind::LambdaPrime => {
                let g = grad_bar(pot, &xm, spec.cluster_tol)?;
                v.norm_sq() + xm.sub(&g).norm_sq()
            }
            ActionKind::LambdaDoublePrime => {
                let pi = partition_of(&xm, spec.cluster_tol);
                v.norm_sq() + xm.sub(a).norm_sq() + internal_energy(&pi, pot.lattice())?
            }
            ActionKind::LambdaPlus => {
                v.norm_sq() + xm.norm_sq() + a_sq - lit::<T>(2.0) * pot.f_max(&xm)?
            }
        };
        out.push(val * h);
    }
    Ok(out)
}

/// Discretized action of `traj`, or `+∞` with a reason when the endpoints
/// do not match `spec`.
pub fn eval_action<T: Scalar>(
    traj: &Trajectory<T>,
    spec: &ActionSpec<T>,
    pot: &Potential<T>,
) -> Result<ActionValue<T>> {
    check_inputs(traj, spec, pot)?;
    if let Some(v) = endpoint_violation(traj, spec)? {
        return Ok(ActionValue::Infinite(v));
    }
    let total: T = action_density(traj, spec, pot)?.into_iter().sum();
    if !total.is_finite() {
        return Err(Error::NonFinite("action"));
    }
    Ok(ActionValue::Finite(total))
}
