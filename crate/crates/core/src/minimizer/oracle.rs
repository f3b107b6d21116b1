//! Exact minimizer of `Λ'` for small scalar systems.
//!
//! An ordered trajectory is described by a sequence of ordered partitions and
//! the times at which the partition changes. Between changes every cluster
//! `C` follows `z̈ = z - m_C` (`m_C` the mean of the lattice over `C`), so for
//! given change times the action is a quadratic function of the cluster
//! positions at those times and is minimized by one linear solve. The change
//! times are then optimized by grid scan plus golden-section refinement, and
//! the best pattern over all sequences within the budget wins.

use crate::cloud::{Cloud, Lattice};
use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::partition::{partition_of, Partition};
use crate::scalar::{count, default_tol, lit, Scalar};
use crate::trajectory::{uniform_grid, Gauge, Trajectory};

/// Largest particle count the oracle accepts.
pub const ORACLE_CAP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Maximal number of partition changes.
    pub budget: usize,
    /// Grid steps of the returned trajectory.
    pub steps: usize,
    /// Grid resolution of the initial scan over change times.
    pub scan: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            budget: 2,
            steps: 512,
            scan: 48,
        }
    }
}

/// Partition sequence with the times of each change.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockPattern<T> {
    pub partitions: Vec<Partition>,
    pub times: Vec<T>,
}

/// Optimal cluster motion for a fixed pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSolution<T> {
    pub pattern: ShockPattern<T>,
    /// `Λ'` of the piecewise closed-form trajectory.
    pub value: T,
    /// Per phase: (start time, end time, per class (members, mean, start, end position)).
    phases: Vec<Phase<T>>,
}

#[derive(Debug, Clone, PartialEq)]
struct Phase<T> {
    start: T,
    end: T,
    clusters: Vec<(Vec<usize>, T, T, T)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    pub trajectory: Trajectory<T>,
    pub value: T,
    pub pattern: ShockPattern<T>,
}

struct Problem<T> {
    a: Vec<T>,
    p: Vec<T>,
    q: Vec<T>,
    t0: T,
    t1: T,
    tol: T,
}

fn setup<T: Scalar>(a: &Lattice<T>, p: &Cloud<T>, q: &Cloud<T>, window: (T, T)) -> Result<Problem<T>> {
    if a.dim() != 1 {
        return Err(Error::Dimension("the oracle handles scalar particles only".into()));
    }
    if a.n() > ORACLE_CAP {
        return Err(Error::Capability {
            what: "1D oracle",
            n: a.n(),
            cap: ORACLE_CAP,
        });
    }
    if !a.is_strictly_ordered() {
        return Err(Error::InvalidArgument("oracle lattice must be strictly increasing".into()));
    }
    a.check_cloud(p, "oracle start")?;
    a.check_cloud(q, "oracle end")?;
    if !(window.0 < window.1) {
        return Err(Error::InvalidArgument("oracle window must be increasing".into()));
    }
    let scale = T::one()
        + a.cloud().as_slice().iter().chain(p.as_slice()).chain(q.as_slice())
            .fold(T::zero(), |m, &v| m.max(v.abs()));
    Ok(Problem {
        a: a.cloud().as_slice().to_vec(),
        p: p.sort_ascending()?.0.into_vec(),
        q: q.sort_ascending()?.0.into_vec(),
        t0: window.0,
        t1: window.1,
        tol: default_tol::<T>() * scale,
    })
}

/// Solves the cluster motion for `partitions` changing at `times`.
/// Returns `None` when the pattern is incompatible with the endpoints or
/// when clusters cross.
pub fn evaluate_pattern<T: Scalar>(
    a: &Lattice<T>,
    p: &Cloud<T>,
    q: &Cloud<T>,
    window: (T, T),
    partitions: &[Partition],
    times: &[T],
) -> Result<Option<PatternSolution<T>>> {
    let prob = setup(a, p, q, window)?;
    if partitions.is_empty() || times.len() + 1 != partitions.len() {
        return Err(Error::InvalidArgument(
            "a pattern has one more partition than change times".into(),
        ));
    }
    if partitions.iter().any(|pi| pi.n() != a.n() || !pi.is_ordered()) {
        return Err(Error::InvalidArgument("pattern partitions must be ordered".into()));
    }
    Ok(solve_pattern(&prob, partitions, times))
}

fn class_mean<T: Scalar>(v: &[T], c: &[usize]) -> T {
    c.iter().map(|&i| v[i]).sum::<T>() / count(c.len())
}

fn class_is_tight<T: Scalar>(v: &[T], c: &[usize], tol: T) -> bool {
    c.iter().all(|&i| (v[i] - v[c[0]]).abs() <= tol)
}

#[derive(Clone, Copy)]
enum Node<T> {
    Fixed(T),
    Free(usize),
}

fn solve_pattern<T: Scalar>(prob: &Problem<T>, parts: &[Partition], times: &[T]) -> Option<PatternSolution<T>> {
    let k = times.len();
    let mut bounds = Vec::with_capacity(k + 2);
    bounds.push(prob.t0);
    bounds.extend_from_slice(times);
    bounds.push(prob.t1);
    if bounds.windows(2).any(|w| !(w[1] > w[0])) {
        return None;
    }
    let first = &parts[0];
    let last = &parts[k];
    if !first.classes().iter().all(|c| class_is_tight(&prob.p, c, prob.tol))
        || !last.classes().iter().all(|c| class_is_tight(&prob.q, c, prob.tol))
    {
        return None;
    }
    // Unknown junction positions: one per class of the join at each change.
    let mut joins: Vec<Partition> = Vec::with_capacity(k);
    let mut offset = Vec::with_capacity(k);
    let mut n_free = 0;
    for j in 0..k {
        let jn = parts[j].join(&parts[j + 1]);
        offset.push(n_free);
        n_free += jn.len();
        joins.push(jn);
    }
    let node_at = |change: usize, member: usize| -> usize { offset[change] + joins[change].class_index(member) };
    // (phase, class members, mean, start node, end node, duration)
    let mut terms: Vec<(usize, Vec<usize>, T, Node<T>, Node<T>, T)> = Vec::new();
    for (j, pi) in parts.iter().enumerate() {
        let dur = bounds[j + 1] - bounds[j];
        for c in pi.classes() {
            let m = class_mean(&prob.a, c);
            let sa = if j == 0 { Node::Fixed(class_mean(&prob.p, c)) } else { Node::Free(node_at(j - 1, c[0])) };
            let sb = if j == k { Node::Fixed(class_mean(&prob.q, c)) } else { Node::Free(node_at(j, c[0])) };
            terms.push((j, c.clone(), m, sa, sb, dur));
        }
    }
    let two = lit::<T>(2.0);
    let mut h = vec![T::zero(); n_free * n_free];
    let mut rhs = vec![T::zero(); n_free];
    for (_, c, m, sa, sb, dur) in &terms {
        let kk = count::<T>(c.len());
        let coth = T::one() / dur.tanh();
        let csch = T::one() / dur.sinh();
        // coth - csch = tanh(dur/2), written out to avoid cancellation.
        let th2 = (*dur / two).tanh();
        for (this, other) in [(sa, sb), (sb, sa)] {
            if let Node::Free(i) = *this {
                h[i * n_free + i] += two * kk * coth;
                rhs[i] += two * kk * *m * th2;
                match *other {
                    Node::Free(o) => h[i * n_free + o] -= two * kk * csch,
                    Node::Fixed(y) => rhs[i] += two * kk * csch * y,
                }
            }
        }
    }
    if n_free > 0 && solve_dense(&mut h, &mut rhs, n_free).is_none() {
        return None;
    }
    let pos = |n: &Node<T>| match *n {
        Node::Fixed(y) => y,
        Node::Free(i) => rhs[i],
    };
    let mut value = T::zero();
    let mut phases: Vec<Phase<T>> = (0..=k)
        .map(|j| Phase {
            start: bounds[j],
            end: bounds[j + 1],
            clusters: Vec::new(),
        })
        .collect();
    for (j, c, m, sa, sb, dur) in terms {
        let (u, v) = (pos(&sa) - m, pos(&sb) - m);
        value += count::<T>(c.len()) * phase_cost(u, v, dur);
        phases[j].clusters.push((c, m, pos(&sa), pos(&sb)));
    }
    let sol = PatternSolution {
        pattern: ShockPattern {
            partitions: parts.to_vec(),
            times: times.to_vec(),
        },
        value,
        phases,
    };
    sol.is_ordered(prob.tol).then_some(sol)
}

/// `min ∫₀^dur ẏ² + y²` with `y(0) = u`, `y(dur) = v`, i.e.
/// `(u² + v²) coth(dur) - 2uv / sinh(dur)` in a cancellation-free form.
fn phase_cost<T: Scalar>(u: T, v: T, dur: T) -> T {
    let two = lit::<T>(2.0);
    (u - v) * (u - v) / dur.sinh() + (u * u + v * v) * (dur / two).tanh()
}

fn cluster_at<T: Scalar>(m: T, ya: T, yb: T, dur: T, s: T) -> T {
    m + ((ya - m) * (dur - s).sinh() + (yb - m) * s.sinh()) / dur.sinh()
}

impl<T: Scalar> PatternSolution<T> {
    fn is_ordered(&self, tol: T) -> bool {
        const SAMPLES: usize = 64;
        self.phases.iter().all(|ph| {
            let dur = ph.end - ph.start;
            (0..=SAMPLES).all(|i| {
                let s = dur * count::<T>(i) / count::<T>(SAMPLES);
                let vals: Vec<T> = ph
                    .clusters
                    .iter()
                    .map(|(_, m, ya, yb)| cluster_at(*m, *ya, *yb, dur, s))
                    .collect();
                vals.windows(2).all(|w| w[1] >= w[0] - tol)
            })
        })
    }

    /// Positions of all particles (sorted labels) at time `theta`.
    pub fn state_at(&self, theta: T) -> Cloud<T> {
        let idx = self
            .phases
            .iter()
            .position(|ph| theta <= ph.end)
            .unwrap_or(self.phases.len() - 1);
        let ph = &self.phases[idx];
        let dur = ph.end - ph.start;
        let s = (theta - ph.start).max(T::zero()).min(dur);
        let n: usize = ph.clusters.iter().map(|c| c.0.len()).sum();
        let mut out = vec![T::zero(); n];
        for (members, m, ya, yb) in &ph.clusters {
            let z = cluster_at(*m, *ya, *yb, dur, s);
            for &i in members {
                out[i] = z;
            }
        }
        Cloud::raw(1, out)
    }

    /// Samples the solution on a uniform grid of the window.
    pub fn sample(&self, steps: usize) -> Result<Trajectory<T>> {
        let (a, b) = (self.phases[0].start, self.phases[self.phases.len() - 1].end);
        let states = uniform_grid(a, b, steps).into_iter().map(|th| self.state_at(th)).collect();
        Trajectory::new(Gauge::Theta, a, b, states)
    }
}

fn golden_section<T: Scalar>(f: &mut impl FnMut(T) -> T, mut lo: T, mut hi: T, tol: T) -> (T, T) {
    let r = lit::<T>(0.618_033_988_749_894_8);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn optimize_times<T: Scalar>(prob: &Problem<T>, parts: &[Partition], scan: usize) -> Option<PatternSolution<T>> {
    let k = parts.len() - 1;
    if k == 0 {
        return solve_pattern(prob, parts, &[]);
    }
    let span = prob.t1 - prob.t0;
    let gap = span * lit(1e-9);
    let value_of = |times: &[T]| solve_pattern(prob, parts, times).map_or(T::infinity(), |s| s.value);
    let grid: Vec<T> = (1..scan).map(|i| prob.t0 + span * count::<T>(i) / count::<T>(scan)).collect();
    let cell = span / count::<T>(scan);
    // Scan.
    let mut best: Option<(Vec<T>, T)> = None;
    let consider = |times: Vec<T>, best: &mut Option<(Vec<T>, T)>| {
        let v = value_of(&times);
        if v.is_finite() && best.as_ref().is_none_or(|b| v < b.1) {
            *best = Some((times, v));
        }
    };
    match k {
        1 => {
            for &t in &grid {
                consider(vec![t], &mut best);
            }
        }
        2 => {
            for (i, &t1) in grid.iter().enumerate() {
                for &t2 in &grid[i + 1..] {
                    consider(vec![t1, t2], &mut best);
                }
            }
        }
        _ => unreachable!("budget capped at two changes"),
    }
    let (mut times, mut val) = best?;
    // Coordinate-wise golden-section refinement.
    let tol = span * lit(1e-13);
    let mut radius = cell;
    for _sweep in 0..200 {
        let prev = times.clone();
        for i in 0..k {
            let lo_bound = if i == 0 { prob.t0 } else { times[i - 1] };
            let hi_bound = if i + 1 == k { prob.t1 } else { times[i + 1] };
            let lo = (times[i] - radius).max(lo_bound + gap);
            let hi = (times[i] + radius).min(hi_bound - gap);
            if !(hi > lo) {
                continue;
            }
            let mut trial = times.clone();
            let mut f = |t: T| {
                trial[i] = t;
                value_of(&trial)
            };
            let (t, v) = golden_section(&mut f, lo, hi, tol);
            if v <= val {
                times[i] = t;
                val = v;
            }
        }
        let moved = times
            .iter()
            .zip(&prev)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        radius = (moved * lit(4.0)).max(tol * lit(10.0)).min(cell);
        if moved <= tol {
            break;
        }
    }
    solve_pattern(prob, parts, &times)
}

/// Enumerates ordered-partition sequences with at most `budget` changes,
/// optimizes each, and returns the cheapest trajectory sampled on
/// `opts.steps` intervals of the θ-window.
pub fn oracle_minimizer_1d<T: Scalar>(
    a: &Lattice<T>,
    p: &Cloud<T>,
    q: &Cloud<T>,
    window: (T, T),
    opts: &OracleOptions,
) -> Result<OracleResult<T>> {
    let prob = setup(a, p, q, window)?;
    if opts.budget > 2 {
        return Err(Error::Capability {
            what: "oracle change budget",
            n: opts.budget,
            cap: 2,
        });
    }
    let n = a.n();
    let all = Partition::all_ordered(n);
    let pi_p = partition_of(&Cloud::raw(1, prob.p.clone()), prob.tol);
    let pi_q = partition_of(&Cloud::raw(1, prob.q.clone()), prob.tol);
    let mut sequences: Vec<Vec<Partition>> = all
        .iter()
        .filter(|pi| pi.is_refinement_of(&pi_p))
        .map(|pi| vec![pi.clone()])
        .collect();
    let mut frontier = sequences.clone();
    for _ in 0..opts.budget {
        let mut next = Vec::new();
        for seq in &frontier {
            for pi in &all {
                if pi != seq.last().unwrap() {
                    let mut s = seq.clone();
                    s.push(pi.clone());
                    next.push(s);
                }
            }
        }
        sequences.extend(next.iter().cloned());
        frontier = next;
    }
    let mut best: Option<PatternSolution<T>> = None;
    for seq in sequences.iter().filter(|s| s.last().unwrap().is_refinement_of(&pi_q)) {
        if let Some(sol) = optimize_times(&prob, seq, opts.scan.max(4)) {
            // Prefer fewer changes on ties.
            let better = best.as_ref().is_none_or(|b| {
                sol.value < b.value - prob.tol
                    || (sol.value <= b.value + prob.tol && sol.pattern.times.len() < b.pattern.times.len())
            });
            if better {
                best = Some(sol);
            }
        }
    }
    let best = best.ok_or_else(|| Error::InvalidArgument("no admissible shock pattern".into()))?;
    let trajectory = best.sample(opts.steps)?;
    Ok(OracleResult {
        trajectory,
        value: best.value,
        pattern: best.pattern,
    })
}
