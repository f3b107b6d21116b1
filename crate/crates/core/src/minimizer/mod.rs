//! Minimization of the smoothed actions and the exact small-system oracle.

mod oracle;

pub use oracle::{evaluate_pattern, oracle_minimizer_1d, OracleOptions, OracleResult, PatternSolution, ShockPattern};

use crate::actions::{eval_action, lsq_gradient, residual_blocks, ActionSpec, ActionValue, EndpointMode};
use crate::cloud::Lattice;
use crate::error::{Error, Result};
use crate::linalg::solve_block_tridiagonal;
use crate::potential::{optimal_assignment, Potential};
use crate::scalar::{lit, Scalar};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T> {
    /// Stop when the largest gradient component is at most this.
    pub grad_tol: T,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: T,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            grad_tol: lit(1e-7),
            max_iter: 100_000,
            armijo: lit(1e-4),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T> {
    pub trajectory: Trajectory<T>,
    pub value: T,
    /// Max-norm of the gradient at the returned trajectory.
    pub grad_norm: T,
    pub iterations: usize,
    pub converged: bool,
    /// Action value after each accepted step, starting with the initial value.
    pub history: Vec<T>,
}

/// Fixes the endpoints of `init` to the boundary data of `spec`. With
/// permutation-free endpoints the end cloud is relabeled to match the start
/// (sorted on the line, optimal assignment otherwise).
fn clamp_endpoints<T: Scalar>(init: &Trajectory<T>, spec: &ActionSpec<T>) -> Result<Trajectory<T>> {
    let (p, q) = match spec.mode {
        EndpointMode::Fixed => (spec.start.clone(), spec.end.clone()),
        EndpointMode::UpToPermutation => {
            if spec.start.dim() == 1 {
                (spec.start.sort_ascending()?.0, spec.end.sort_ascending()?.0)
            } else {
                let asg = optimal_assignment(&spec.start, &Lattice::new(spec.end.clone()))?;
                (spec.start.clone(), spec.end.permute(&asg.perm)?)
            }
        }
    };
    let mut states = init.states().to_vec();
    let m = states.len() - 1;
    states[0] = p;
    states[m] = q;
    init.with_states(states)
}

/// Straight-line initial guess between the (relabeled) endpoints of `spec`.
pub fn straight_line_init<T: Scalar>(
    spec: &ActionSpec<T>,
    start: T,
    end: T,
    steps: usize,
) -> Result<Trajectory<T>> {
    let base = Trajectory::straight_line(spec.kind.gauge(), start, end, &spec.start, &spec.end, steps)?;
    let clamped = clamp_endpoints(&base, spec)?;
    Trajectory::straight_line(
        spec.kind.gauge(),
        start,
        end,
        clamped.first(),
        clamped.last(),
        steps,
    )
}

fn total<T: Scalar>(blocks: &[crate::actions::ResidualBlock<T>]) -> T {
    blocks
        .iter()
        .map(|b| b.r.iter().map(|&v| v * v).sum::<T>())
        .sum()
}

/// Minimizes a smooth action (`L_eps` or `K_eps`) at fixed ε by descent with
/// Armijo backtracking. Search directions are preconditioned by the
/// block-tridiagonal Gauss-Newton matrix of the residual form, with
/// Levenberg damping; every accepted step decreases the action.
pub fn minimize_fixed_eps<T: Scalar>(
    spec: &ActionSpec<T>,
    pot: &Potential<T>,
    init: &Trajectory<T>,
    opts: &SolveOptions<T>,
) -> Result<SolveReport<T>> {
    if !spec.kind.is_smooth() {
        return Err(Error::Unsupported(format!(
            "descent needs a smooth functional, got {}",
            spec.kind.name()
        )));
    }
    let mut x = clamp_endpoints(init, spec)?;
    let m = x.steps();
    let p = x.n() * x.dim();
    let mut blocks = residual_blocks(&x, spec, pot)?;
    let mut value = total(&blocks);
    if !value.is_finite() {
        return Err(Error::NonFinite("initial action"));
    }
    let mut history = vec![value];
    let mut mu = lit::<T>(1e-6);
    let two = lit::<T>(2.0);
    let mut iterations = 0;
    loop {
        let grad = lsq_gradient(&blocks, &x);
        let gnorm = grad
            .iter()
            .flat_map(|g| g.as_slice().iter())
            .fold(T::zero(), |a, &b| a.max(b.abs()));
        if gnorm <= opts.grad_tol || m < 2 {
            return Ok(report(x, value, gnorm, iterations, true, history));
        }
        if iterations >= opts.max_iter {
            return Ok(report(x, value, gnorm, iterations, false, history));
        }
        iterations += 1;
        // Gauss-Newton blocks on interior nodes 1..m-1.
        let mut diag = vec![vec![T::zero(); p * p]; m - 1];
        let mut upper = vec![vec![T::zero(); p * p]; m.saturating_sub(2)];
        for (k, blk) in blocks.iter().enumerate() {
            let q = blk.r.len();
            for i in 0..p {
                for j in 0..p {
                    let (mut bb, mut cc, mut bc) = (T::zero(), T::zero(), T::zero());
                    for l in 0..q {
                        bb += blk.b[l * p + i] * blk.b[l * p + j];
                        cc += blk.c[l * p + i] * blk.c[l * p + j];
                        bc += blk.b[l * p + i] * blk.c[l * p + j];
                    }
                    if k >= 1 {
                        diag[k - 1][i * p + j] += two * bb;
                    }
                    if k < m - 1 {
                        diag[k][i * p + j] += two * cc;
                    }
                    if k >= 1 && k < m - 1 {
                        upper[k - 1][i * p + j] += two * bc;
                    }
                }
            }
        }
        let scale = diag
            .iter()
            .map(|d| (0..p).map(|i| d[i * p + i]).fold(T::zero(), T::max))
            .fold(T::zero(), T::max);
        let rhs: Vec<T> = grad[1..m].iter().flat_map(|g| g.as_slice().iter().map(|&v| -v)).collect();
        let slope_full: T = -rhs.iter().map(|&v| v * v).sum::<T>();
        let mut accepted = false;
        for _attempt in 0..40 {
            let mut damped = diag.clone();
            for d in &mut damped {
                for i in 0..p {
                    d[i * p + i] += mu * scale;
                }
            }
            let mut dir = rhs.clone();
            if solve_block_tridiagonal(&damped, &upper, &mut dir, p).is_none() {
                mu *= lit(10.0);
                continue;
            }
            let mut slope = T::zero();
            for (d, g) in dir.iter().zip(&rhs) {
                slope -= *d * *g;
            }
            if !(slope < T::zero()) {
                // Fall back to steepest descent scaled by the diagonal.
                dir = rhs.iter().map(|&g| g / scale.max(T::min_positive_value())).collect();
                slope = slope_full / scale.max(T::min_positive_value());
            }
            let mut alpha = T::one();
            let mut halvings = 0;
            while alpha > lit(1e-20) {
                let mut states = x.states().to_vec();
                for k in 1..m {
                    let s = states[k].as_mut_slice();
                    for i in 0..p {
                        s[i] += alpha * dir[(k - 1) * p + i];
                    }
                }
                let cand = x.with_states(states)?;
                if let Ok(cb) = residual_blocks(&cand, spec, pot) {
                    let cv = total(&cb);
                    if cv.is_finite() && cv <= value + opts.armijo * alpha * slope {
                        x = cand;
                        blocks = cb;
                        value = cv;
                        accepted = true;
                        break;
                    }
                }
                alpha *= lit(0.5);
                halvings += 1;
            }
            if accepted {
                if halvings == 0 {
                    mu = (mu / lit(3.0)).max(lit(1e-12));
                } else if halvings > 2 {
                    mu = (mu * lit(4.0)).min(lit(1e6));
                }
                break;
            }
            mu = (mu * lit(10.0)).min(lit(1e12));
        }
        if !accepted {
            return Ok(report(x, value, gnorm, iterations, false, history));
        }
        history.push(value);
    }
}

fn report<T: Scalar>(
    trajectory: Trajectory<T>,
    value: T,
    grad_norm: T,
    iterations: usize,
    converged: bool,
    history: Vec<T>,
) -> SolveReport<T> {
    SolveReport {
        trajectory,
        value,
        grad_norm,
        iterations,
        converged,
        history,
    }
}

/// One stage of an ε-continuation.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepStep<T> {
    pub eps: T,
    pub report: SolveReport<T>,
    /// The ε → 0 limit functional evaluated on this stage's minimizer.
    pub limit_value: ActionValue<T>,
}

/// Cluster tolerance for optimizer output: `1e-4` times the coordinate scale.
pub fn optimizer_cluster_tol<T: Scalar>(traj: &Trajectory<T>) -> T {
    let scale = traj
        .states()
        .iter()
        .flat_map(|s| s.as_slice().iter())
        .fold(T::zero(), |a, &b| a.max(b.abs()));
    lit::<T>(1e-4) * scale.max(T::one())
}

/// Minimizes the smooth action along a decreasing ε schedule. Each stage
/// starts from the previous minimizer and from `init`, keeping the lower value.
pub fn continuation_sweep<T: Scalar>(
    spec: &ActionSpec<T>,
    pot: &Potential<T>,
    schedule: &[T],
    init: &Trajectory<T>,
    opts: &SolveOptions<T>,
) -> Result<Vec<SweepStep<T>>> {
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("empty eps schedule".into()));
    }
    if schedule.iter().any(|&e| !(e > T::zero()))
        || schedule.windows(2).any(|w| !(w[1] < w[0]))
    {
        return Err(Error::InvalidArgument(
            "eps schedule must be positive and strictly decreasing".into(),
        ));
    }
    let mut current = init.clone();
    let mut out = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let stage = spec.clone().with_eps(eps);
        let mut report = minimize_fixed_eps(&stage, pot, &current, opts)?;
        if !out.is_empty() {
            // The action is not convex; a warm start can settle in a worse basin.
            let cold = minimize_fixed_eps(&stage, pot, init, opts)?;
            if cold.value < report.value {
                report = cold;
            }
        }
        let limit_spec = spec
            .clone()
            .with_kind(spec.kind.limit())
            .with_cluster_tol(optimizer_cluster_tol(&report.trajectory).max(spec.cluster_tol));
        let limit_value = eval_action(&report.trajectory, &limit_spec, pot)?;
        current = report.trajectory.clone();
        out.push(SweepStep {
            eps,
            report,
            limit_value,
        });
    }
    Ok(out)
}

/// Largest distance between two particles at any grid time.
pub fn max_spread<T: Scalar>(traj: &Trajectory<T>) -> T {
    traj.states()
        .iter()
        .map(|s| {
            let all: Vec<usize> = (0..s.n()).collect();
            crate::partition::class_spread(s, &all)
        })
        .fold(T::zero(), T::max)
}
