//! Event-driven simulation of sticky particles on the line.
//!
//! Between collisions every cluster `C` follows `z̈ = z - m_C`, where `m_C`
//! is the mean of the (sorted) lattice over the cluster's labels, so motion
//! is available in closed form. Colliding clusters merge inelastically.

use crate::cloud::{Cloud, Lattice};
use crate::error::{Error, Result};
use crate::scalar::{count, default_tol, lit, Scalar};
use crate::trajectory::{uniform_grid, Gauge, Trajectory};

/// Particles `first .. first + len` (sorted labels) moving together.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<T> {
    pub first: usize,
    pub len: usize,
    pub position: T,
    pub velocity: T,
    /// Mean of the sorted lattice over the members.
    pub target: T,
}

impl<T: Scalar> Cluster<T> {
    pub fn members(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.len
    }

    fn mass(&self) -> T {
        count(self.len)
    }

    fn gap_coeffs(&self, right: &Cluster<T>) -> (T, T, T) {
        (
            right.target - self.target,
            (right.position - right.target) - (self.position - self.target),
            right.velocity - self.velocity,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState<T> {
    pub time: T,
    pub clusters: Vec<Cluster<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeEvent<T> {
    pub time: T,
    pub position: T,
    /// Labels of the left and right clusters before the merge.
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub left_velocity: T,
    pub right_velocity: T,
    /// Velocity of the merged cluster.
    pub velocity: T,
    /// `k1 k2 / (k1 + k2) (v1 - v2)²`.
    pub kinetic_loss: T,
}

impl<T> MergeEvent<T> {
    /// Labels of the merged cluster.
    pub fn class(&self) -> Vec<usize> {
        self.left.iter().chain(&self.right).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult<T> {
    /// θ-gauge trajectory of the particles, sorted labels.
    pub trajectory: Trajectory<T>,
    pub events: Vec<MergeEvent<T>>,
    pub final_state: SimState<T>,
}

const PANELS: usize = 64;

/// Advances every cluster by `dt` along its free motion. Fails if the step
/// lets clusters cross, i.e. a collision inside the step was missed.
pub fn flow_free<T: Scalar>(state: &SimState<T>, dt: T) -> Result<SimState<T>> {
    let (c, s) = (dt.cosh(), dt.sinh());
    let next = SimState {
        time: state.time + dt,
        clusters: state
            .clusters
            .iter()
            .map(|cl| {
                let dz = cl.position - cl.target;
                Cluster {
                    position: cl.target + dz * c + cl.velocity * s,
                    velocity: dz * s + cl.velocity * c,
                    ..cl.clone()
                }
            })
            .collect(),
    };
    let slack = lit::<T>(1e-9)
        * (T::one() + next.clusters.iter().fold(T::zero(), |m, c| m.max(c.position.abs())));
    if next.clusters.windows(2).any(|w| w[1].position < w[0].position - slack) {
        return Err(Error::Internal("sticky flow: cluster order violated, missed collision".into()));
    }
    Ok(next)
}

fn gap_at<T: Scalar>((c, a, b): (T, T, T), s: T) -> T {
    c + a * s.cosh() + b * s.sinh()
}

/// Earliest time in `(0, horizon]` after which two neighbouring clusters
/// touch, with the index of the left cluster. Roots are bracketed on a panel
/// subdivision that includes the gap's critical point, then bisected.
pub fn first_collision_time<T: Scalar>(state: &SimState<T>, horizon: T) -> Option<(T, usize)> {
    let tol = lit::<T>(1e-12);
    let mut best: Option<(T, usize)> = None;
    for (i, pair) in state.clusters.windows(2).enumerate() {
        let coeffs = pair[0].gap_coeffs(&pair[1]);
        let limit = best.map_or(horizon, |b| b.0);
        if let Some(t) = pair_collision(coeffs, limit, tol) {
            if best.is_none_or(|b| t < b.0) {
                best = Some((t, i));
            }
        }
    }
    best
}

fn pair_collision<T: Scalar>(coeffs: (T, T, T), horizon: T, tol: T) -> Option<T> {
    if !(horizon > T::zero()) {
        return None;
    }
    let mut marks: Vec<T> = (0..=PANELS).map(|k| horizon * count::<T>(k) / count::<T>(PANELS)).collect();
    let (_, a, b) = coeffs;
    if a != T::zero() && (b / a).abs() < T::one() {
        let crit = (-b / a).atanh();
        if crit > T::zero() && crit < horizon {
            marks.push(crit);
            marks.sort_by(|x, y| x.partial_cmp(y).unwrap());
        }
    }
    let mut prev = gap_at(coeffs, T::zero());
    for w in marks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let ghi = gap_at(coeffs, hi);
        if prev > tol && ghi <= T::zero() {
            let (mut l, mut h) = (lo, hi);
            while h - l > tol {
                let mid = lit::<T>(0.5) * (l + h);
                if gap_at(coeffs, mid) > T::zero() {
                    l = mid;
                } else {
                    h = mid;
                }
            }
            return Some(lit::<T>(0.5) * (l + h));
        }
        if prev > tol && ghi <= tol {
            return Some(hi);
        }
        prev = ghi;
    }
    None
}

/// Inelastic merge of adjacent clusters at `time`.
pub fn merge_clusters<T: Scalar>(left: &Cluster<T>, right: &Cluster<T>, time: T) -> Result<(Cluster<T>, MergeEvent<T>)> {
    if left.first + left.len != right.first {
        return Err(Error::InvalidArgument(format!(
            "clusters {:?} and {:?} are not adjacent",
            left.members(),
            right.members()
        )));
    }
    let (k1, k2) = (left.mass(), right.mass());
    let k = k1 + k2;
    let dv = left.velocity - right.velocity;
    let merged = Cluster {
        first: left.first,
        len: left.len + right.len,
        position: (k1 * left.position + k2 * right.position) / k,
        velocity: (k1 * left.velocity + k2 * right.velocity) / k,
        target: (k1 * left.target + k2 * right.target) / k,
    };
    let event = MergeEvent {
        time,
        position: merged.position,
        left: left.members().collect(),
        right: right.members().collect(),
        left_velocity: left.velocity,
        right_velocity: right.velocity,
        velocity: merged.velocity,
        kinetic_loss: k1 * k2 / k * dv * dv,
    };
    Ok((merged, event))
}

fn merge_touching<T: Scalar>(state: &mut SimState<T>, tol: T, events: &mut Vec<MergeEvent<T>>) -> Result<()> {
    let mut i = 0;
    while i + 1 < state.clusters.len() {
        let (l, r) = (&state.clusters[i], &state.clusters[i + 1]);
        if r.position - l.position <= tol && l.velocity >= r.velocity - tol {
            let (merged, event) = merge_clusters(l, r, state.time)?;
            events.push(event);
            state.clusters[i] = merged;
            state.clusters.remove(i + 1);
        } else {
            i += 1;
        }
    }
    Ok(())
}

fn positions<T: Scalar>(state: &SimState<T>, n: usize) -> Cloud<T> {
    let mut out = vec![T::zero(); n];
    for c in &state.clusters {
        for i in c.members() {
            out[i] = c.position;
        }
    }
    Cloud::raw(1, out)
}

/// Initial state from ordered positions and velocities. Coinciding particles
/// start as one cluster with their mean velocity; this is not reported as an event.
pub fn initial_state<T: Scalar>(p: &Cloud<T>, v0: &Cloud<T>, a: &Lattice<T>, time: T) -> Result<SimState<T>> {
    if p.dim() != 1 || a.dim() != 1 {
        return Err(Error::Dimension("sticky particles live on the line".into()));
    }
    a.check_cloud(p, "initial positions")?;
    a.check_cloud(v0, "initial velocities")?;
    if !p.is_sorted_ascending() {
        return Err(Error::InvalidArgument("initial positions must be ordered".into()));
    }
    let targets = a.sorted_values()?;
    let mut state = SimState {
        time,
        clusters: (0..p.n())
            .map(|i| Cluster {
                first: i,
                len: 1,
                position: p.as_slice()[i],
                velocity: v0.as_slice()[i],
                target: targets[i],
            })
            .collect(),
    };
    let mut i = 0;
    while i + 1 < state.clusters.len() {
        if state.clusters[i + 1].position == state.clusters[i].position {
            let (merged, _) = merge_clusters(&state.clusters[i], &state.clusters[i + 1], time)?;
            state.clusters[i] = merged;
            state.clusters.remove(i + 1);
        } else {
            i += 1;
        }
    }
    Ok(state)
}

/// Simulates on the θ-window and samples positions on `steps` uniform intervals.
pub fn simulate_sticky<T: Scalar>(
    p: &Cloud<T>,
    v0: &Cloud<T>,
    a: &Lattice<T>,
    window: (T, T),
    steps: usize,
) -> Result<SimResult<T>> {
    if !(window.0 < window.1) || steps == 0 {
        return Err(Error::InvalidArgument("need an increasing window and at least one step".into()));
    }
    let n = p.n();
    let scale = T::one()
        + p.as_slice().iter().chain(a.cloud().as_slice()).fold(T::zero(), |m, &v| m.max(v.abs()));
    let merge_tol = default_tol::<T>() * scale;
    let mut state = initial_state(p, v0, a, window.0)?;
    let mut events = Vec::new();
    let grid = uniform_grid(window.0, window.1, steps);
    let mut states = Vec::with_capacity(grid.len());
    for &ts in &grid {
        loop {
            let horizon = ts - state.time;
            match first_collision_time(&state, horizon) {
                Some((dt, _)) => {
                    state = flow_free(&state, dt)?;
                    merge_touching(&mut state, merge_tol, &mut events)?;
                }
                None => break,
            }
        }
        let at = flow_free(&state, ts - state.time)?;
        states.push(positions(&at, n));
        state = at;
    }
    let trajectory = Trajectory::new(Gauge::Theta, window.0, window.1, states)?;
    Ok(SimResult {
        trajectory,
        events,
        final_state: state,
    })
}
