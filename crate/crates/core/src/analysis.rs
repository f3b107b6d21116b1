//! Measurements on one-dimensional θ-gauge trajectories: energy, mean
//! motion, shocks and velocity jumps.

use crate::cloud::{Cloud, Lattice};
use crate::error::{Error, Result};
use crate::partition::{class_spread, partition_of, Partition};
use crate::potential::{delta_gap, internal_energy};
use crate::scalar::{count, lit, Scalar};
use crate::trajectory::{Gauge, Trajectory};

/// Grid steps used on each side of a shock for velocity estimates.
pub const JUMP_WINDOW: usize = 8;
/// Isolation window, in grid steps and in multiples of the cluster spread.
pub const ISOLATION_FACTOR: usize = 4;

fn check_line<T: Scalar>(traj: &Trajectory<T>, a: Option<&Lattice<T>>) -> Result<()> {
    if traj.dim() != 1 {
        return Err(Error::Dimension(format!("analysis needs d=1, got d={}", traj.dim())));
    }
    if traj.gauge() != Gauge::Theta {
        return Err(Error::Gauge("analysis works in the θ-gauge".into()));
    }
    if let Some(a) = a {
        if a.dim() != 1 || a.n() != traj.n() {
            return Err(Error::Dimension(format!(
                "lattice has {} points in d={}, trajectory has {}",
                a.n(),
                a.dim(),
                traj.n()
            )));
        }
    }
    Ok(())
}

fn grid_tol<T: Scalar>(traj: &Trajectory<T>, a: &Lattice<T>) -> T {
    let scale = traj
        .states()
        .iter()
        .flat_map(|s| s.as_slice())
        .chain(a.cloud().as_slice())
        .fold(T::zero(), |m, &v| m.max(v.abs()));
    lit::<T>(1e-9) * (T::one() + scale)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile<T> {
    /// Interval midpoints where the cluster structure is constant.
    pub times: Vec<T>,
    pub values: Vec<T>,
    pub median: T,
    pub max_deviation: T,
}

/// `E = |Ż|² - |Z - A|² - h(π(Z))` on interval midpoints. Intervals across
/// which the partition changes are skipped.
pub fn energy_profile<T: Scalar>(traj: &Trajectory<T>, a: &Lattice<T>) -> Result<EnergyProfile<T>> {
    check_line(traj, Some(a))?;
    let tol = grid_tol(traj, a);
    let sorted_a = a.sorted_values()?;
    let ordered = Lattice::line(&sorted_a)?;
    let dt = traj.step();
    let half = lit::<T>(0.5);
    let parts: Vec<Partition> = traj.states().iter().map(|s| partition_of(s, tol)).collect();
    let mut times = Vec::new();
    let mut values = Vec::new();
    for k in 0..traj.steps() {
        if parts[k] != parts[k + 1] {
            continue;
        }
        let (z0, z1) = (traj.state(k), traj.state(k + 1));
        let kinetic = z1.sub(z0).norm_sq() / (dt * dt);
        let (mid, _) = z0.lerp(z1, half).sort_ascending()?;
        let potential: T = mid
            .as_slice()
            .iter()
            .zip(&sorted_a)
            .map(|(&z, &ai)| (z - ai) * (z - ai))
            .sum();
        let h = internal_energy(&partition_of(&mid, tol), &ordered)?;
        times.push(traj.time(k) + half * dt);
        values.push(kinetic - potential - h);
    }
    let median = median(&values);
    let max_deviation = values.iter().fold(T::zero(), |m, &v| m.max((v - median).abs()));
    Ok(EnergyProfile {
        times,
        values,
        median,
        max_deviation,
    })
}

fn median<T: Scalar>(v: &[T]) -> T {
    if v.is_empty() {
        return T::nan();
    }
    let mut s = v.to_vec();
    s.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        lit::<T>(0.5) * (s[m - 1] + s[m])
    }
}

/// `max |M̈ - (M - ā)|` over interior nodes, `M` the mean particle position.
pub fn momentum_residual<T: Scalar>(traj: &Trajectory<T>, a: &Lattice<T>) -> Result<T> {
    check_line(traj, Some(a))?;
    let n = count::<T>(traj.n());
    let abar = a.cloud().as_slice().iter().copied().sum::<T>() / n;
    let means: Vec<T> = traj
        .states()
        .iter()
        .map(|s| s.as_slice().iter().copied().sum::<T>() / n)
        .collect();
    let dt2 = traj.step() * traj.step();
    let two = lit::<T>(2.0);
    Ok(means
        .windows(3)
        .map(|w| ((w[0] - two * w[1] + w[2]) / dt2 - (w[1] - abar)).abs())
        .fold(T::zero(), T::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShockKind {
    /// The class forms across the interval.
    Merge,
    /// The class breaks up across the interval.
    Split,
    /// Classes both form and break up inside the class.
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShockRecord<T> {
    pub time: T,
    pub location: T,
    pub class: Vec<usize>,
    pub kind: ShockKind,
    /// The partition changes between nodes `interval` and `interval + 1`.
    pub interval: usize,
    /// One-sided velocities of the members, just before and just after.
    pub velocities_before: Vec<T>,
    pub velocities_after: Vec<T>,
    /// `ż(t-) - ż(t+)` for the member `min C`.
    pub jump: T,
    /// Largest spread of the class at the nodes adjacent to the shock.
    pub spread: T,
    pub isolated: bool,
}

/// Extrapolates the spread sequence `s_far, s_near` (one step apart, in that
/// order towards the shock) to zero. Returns the fraction of a step past the
/// near node.
fn zero_crossing<T: Scalar>(far: T, near: T) -> T {
    let slope = far - near;
    if slope > T::zero() {
        (near / slope).min(T::one()).max(T::zero())
    } else {
        lit::<T>(0.5)
    }
}

/// Scans the partitions along the grid. Each change yields a record for
/// every class of the join of the two partitions that is not common to both.
pub fn detect_shocks<T: Scalar>(traj: &Trajectory<T>, cluster_tol: T) -> Result<Vec<ShockRecord<T>>> {
    check_line(traj, None)?;
    let m = traj.steps();
    let dt = traj.step();
    let parts: Vec<Partition> = traj.states().iter().map(|s| partition_of(s, cluster_tol)).collect();
    let mut out = Vec::new();
    for k in 0..m {
        let (p0, p1) = (&parts[k], &parts[k + 1]);
        if p0 == p1 {
            continue;
        }
        let join = p0.join(p1);
        for class in join.classes() {
            let in0 = p0.classes().iter().any(|c| c == class);
            let in1 = p1.classes().iter().any(|c| c == class);
            if in0 && in1 {
                continue;
            }
            let kind = match (in0, in1) {
                (false, true) => ShockKind::Merge,
                (true, false) => ShockKind::Split,
                _ => ShockKind::Mixed,
            };
            let spread_at = |j: usize| class_spread(traj.state(j), class);
            let frac = match kind {
                ShockKind::Merge if k >= 1 => zero_crossing(spread_at(k - 1), spread_at(k)),
                ShockKind::Split if k + 2 <= m => T::one() - zero_crossing(spread_at(k + 2), spread_at(k + 1)),
                _ => lit::<T>(0.5),
            };
            let time = traj.time(k) + frac * dt;
            let stuck = if kind == ShockKind::Split { k } else { k + 1 };
            let location = class
                .iter()
                .map(|&i| traj.state(stuck).as_slice()[i])
                .sum::<T>()
                / count::<T>(class.len());
            let vel = |j: usize, i: usize| (traj.state(j + 1).as_slice()[i] - traj.state(j).as_slice()[i]) / dt;
            let velocities_before: Vec<T> = class.iter().map(|&i| if k >= 1 { vel(k - 1, i) } else { T::nan() }).collect();
            let velocities_after: Vec<T> = class.iter().map(|&i| if k + 2 <= m { vel(k + 1, i) } else { T::nan() }).collect();
            let jump = velocities_before[0] - velocities_after[0];
            out.push(ShockRecord {
                time,
                location,
                class: class.clone(),
                kind,
                interval: k,
                velocities_before,
                velocities_after,
                jump,
                spread: spread_at(k).max(spread_at(k + 1)),
                isolated: true,
            });
        }
    }
    let f = count::<T>(ISOLATION_FACTOR);
    let flags: Vec<bool> = (0..out.len())
        .map(|i| {
            let r = &out[i];
            let radius = f * r.spread.max(cluster_tol);
            !out.iter().enumerate().any(|(j, o)| {
                j != i && (o.time - r.time).abs() <= f * dt && (o.location - r.location).abs() <= radius
            })
        })
        .collect();
    for (r, flag) in out.iter_mut().zip(flags) {
        r.isolated = flag;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpCheck<T> {
    pub jump: T,
    pub alpha: T,
    pub pass: bool,
    /// The one-sided windows leave the grid or contain another shock.
    pub inconclusive: bool,
}

/// Least-squares quadratic through `(s_j, y_j)`, differentiated at `s = 0`.
fn fitted_slope_at_zero<T: Scalar>(s: &[T], y: &[T]) -> T {
    let mut m = [[T::zero(); 3]; 3];
    let mut r = [T::zero(); 3];
    for (&sj, &yj) in s.iter().zip(y) {
        let basis = [T::one(), sj, sj * sj];
        for p in 0..3 {
            r[p] += basis[p] * yj;
            for q in 0..3 {
                m[p][q] += basis[p] * basis[q];
            }
        }
    }
    let mut flat: Vec<T> = m.iter().flatten().copied().collect();
    match crate::linalg::solve_dense(&mut flat, &mut r, 3) {
        Some(()) => r[1],
        None => T::nan(),
    }
}

/// Velocity jump of the member `min C` at `shock`: quadratic fits over
/// `JUMP_WINDOW` steps on each side, differentiated at the shock time.
/// Passes when `jump ≥ α (1 - tolerance)`.
pub fn check_velocity_jump<T: Scalar>(
    traj: &Trajectory<T>,
    shock: &ShockRecord<T>,
    others: &[ShockRecord<T>],
    a: &Lattice<T>,
    tolerance: T,
) -> Result<JumpCheck<T>> {
    check_line(traj, Some(a))?;
    let alpha = delta_gap(a)?.alpha;
    let w = JUMP_WINDOW;
    let k = shock.interval;
    let m = traj.steps();
    let i = shock.class[0];
    let mut inconclusive = !shock.isolated || k < w || k + 1 + w > m;
    let (lo, hi) = (k.saturating_sub(w), (k + 1 + w).min(m));
    if others
        .iter()
        .any(|o| o.interval != k && o.interval + 1 >= lo && o.interval <= hi)
    {
        inconclusive = true;
    }
    let side = |nodes: std::ops::RangeInclusive<usize>| {
        let s: Vec<T> = nodes.clone().map(|j| traj.time(j) - shock.time).collect();
        let y: Vec<T> = nodes.map(|j| traj.state(j).as_slice()[i]).collect();
        fitted_slope_at_zero(&s, &y)
    };
    let jump = if k >= 2 && k + 3 <= m {
        side(lo..=k) - side(k + 1..=hi)
    } else {
        shock.jump
    };
    let pass = jump.is_finite() && jump >= alpha * (T::one() - tolerance);
    Ok(JumpCheck {
        jump,
        alpha,
        pass,
        inconclusive,
    })
}

/// Largest class spread over all nodes, for the given partition structure
/// (diameter of the whole cloud when `class` covers everything).
pub fn max_spread_of<T: Scalar>(traj: &Trajectory<T>, class: &[usize]) -> T {
    traj.states()
        .iter()
        .map(|s: &Cloud<T>| class_spread(s, class))
        .fold(T::zero(), T::max)
}
