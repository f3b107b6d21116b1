//! Time-discretized trajectories on uniform grids.

use crate::cloud::Cloud;
use crate::error::{Error, Result};
use crate::scalar::{count, lit, Scalar};

/// Time variable of a trajectory: physical time `t`, or `θ = ½ log t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gauge {
    T,
    Theta,
}

impl Gauge {
    pub fn label(self) -> &'static str {
        match self {
            Gauge::T => "t",
            Gauge::Theta => "theta",
        }
    }
}

/// States `X_0, ..., X_M` on the uniform grid `start + k (end - start) / M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    gauge: Gauge,
    start: T,
    end: T,
    states: Vec<Cloud<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(gauge: Gauge, start: T, end: T, states: Vec<Cloud<T>>) -> Result<Self> {
        if !(start < end) || !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time window [{start}, {end}] is not an increasing finite interval"
            )));
        }
        if gauge == Gauge::T && start <= T::zero() {
            return Err(Error::InvalidArgument(
                "heat kernel requires t>0: t-gauge window must start at a positive time".into(),
            ));
        }
        if states.len() < 2 {
            return Err(Error::InvalidArgument("a trajectory needs at least two states".into()));
        }
        let first = &states[0];
        if let Some(bad) = states.iter().position(|s| !s.same_shape(first)) {
            return Err(Error::Dimension(format!("state {bad} has a different shape")));
        }
        Ok(Trajectory {
            gauge,
            start,
            end,
            states,
        })
    }

    /// Builds a trajectory from explicit sample times, which must be uniform.
    pub fn from_samples(gauge: Gauge, times: &[T], states: Vec<Cloud<T>>) -> Result<Self> {
        if times.len() != states.len() || times.len() < 2 {
            return Err(Error::InvalidArgument(
                "need matching times and states, at least two of each".into(),
            ));
        }
        let m = times.len() - 1;
        let (start, end) = (times[0], times[m]);
        let h = (end - start) / count(m);
        let tol = lit::<T>(1e-9) * (end - start).abs().max(T::one());
        for (k, &t) in times.iter().enumerate() {
            if (t - (start + h * count(k))).abs() > tol {
                return Err(Error::InvalidArgument(format!(
                    "time grid is not uniform at sample {k}"
                )));
            }
        }
        Self::new(gauge, start, end, states)
    }

    /// Linear interpolation between `p` and `q` on `m` steps.
    pub fn straight_line(
        gauge: Gauge,
        start: T,
        end: T,
        p: &Cloud<T>,
        q: &Cloud<T>,
        m: usize,
    ) -> Result<Self> {
        p.check_shape(q, "straight line endpoints")?;
        if m == 0 {
            return Err(Error::InvalidArgument("grid must have at least one step".into()));
        }
        let states = (0..=m).map(|k| p.lerp(q, count::<T>(k) / count(m))).collect();
        Self::new(gauge, start, end, states)
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn start(&self) -> T {
        self.start
    }

    pub fn end(&self) -> T {
        self.end
    }

    /// Number of steps M.
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn step(&self) -> T {
        (self.end - self.start) / count(self.steps())
    }

    pub fn time(&self, k: usize) -> T {
        if k == self.steps() {
            self.end
        } else {
            self.start + self.step() * count(k)
        }
    }

    pub fn times(&self) -> Vec<T> {
        (0..=self.steps()).map(|k| self.time(k)).collect()
    }

    pub fn states(&self) -> &[Cloud<T>] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &Cloud<T> {
        &self.states[k]
    }

    pub fn first(&self) -> &Cloud<T> {
        &self.states[0]
    }

    pub fn last(&self) -> &Cloud<T> {
        &self.states[self.steps()]
    }

    pub fn n(&self) -> usize {
        self.states[0].n()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn into_states(self) -> Vec<Cloud<T>> {
        self.states
    }

    /// Replaces the states, keeping gauge and window.
    pub fn with_states(&self, states: Vec<Cloud<T>>) -> Result<Self> {
        if states.len() != self.states.len() {
            return Err(Error::Dimension("state count changed".into()));
        }
        Self::new(self.gauge, self.start, self.end, states)
    }

    /// Piecewise-linear interpolation at time `s`, clamped to the window.
    pub fn sample(&self, s: T) -> Cloud<T> {
        let m = self.steps();
        let u = ((s - self.start) / self.step()).max(T::zero()).min(count(m));
        let k = u.floor().to_usize().unwrap_or(0).min(m - 1);
        let w = u - count(k);
        if w == T::one() {
            return self.states[k + 1].clone();
        }
        self.states[k].lerp(&self.states[k + 1], w)
    }

    /// Largest coordinate difference to another trajectory on the same grid.
    pub fn sup_distance(&self, other: &Self) -> Result<T> {
        if self.states.len() != other.states.len() {
            return Err(Error::Dimension("trajectories have different grids".into()));
        }
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(T::zero(), T::max))
    }
}

/// `m + 1` uniformly spaced times from `a` to `b`, hitting `b` exactly.
pub fn uniform_grid<T: Scalar>(a: T, b: T, m: usize) -> Vec<T> {
    let h = (b - a) / count(m);
    (0..=m)
        .map(|k| if k == m { b } else { a + h * count(k) })
        .collect()
}
