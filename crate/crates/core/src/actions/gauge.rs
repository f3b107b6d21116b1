//! Change of time variable `t = e^{2θ}`.

use crate::error::Result;
use crate::scalar::{lit, Scalar};
use crate::trajectory::{uniform_grid, Gauge, Trajectory};

/// How states are transformed between gauges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    /// `Z_θ = X_{e^{2θ}}`.
    Plain,
    /// `Y_θ = X_{e^{2θ}} / e^θ`.
    Scaled,
}

/// Resamples `traj` onto a uniform grid in the other gauge with the same
/// number of steps, by linear interpolation. Same-gauge input is returned as is.
pub fn change_gauge<T: Scalar>(traj: &Trajectory<T>, target: Gauge, scaling: Scaling) -> Result<Trajectory<T>> {
    if traj.gauge() == target {
        return Ok(traj.clone());
    }
    let m = traj.steps();
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    match target {
        Gauge::Theta => {
            let (a, b) = (half * traj.start().ln(), half * traj.end().ln());
            let grid = uniform_grid(a, b, m);
            let states = grid
                .iter()
                .enumerate()
                .map(|(k, &th)| {
                    let x = endpoint_aware(traj, k, m, (two * th).exp());
                    match scaling {
                        Scaling::Plain => x,
                        Scaling::Scaled => x.scale((-th).exp()),
                    }
                })
                .collect();
            Trajectory::new(Gauge::Theta, a, b, states)
        }
        Gauge::T => {
            let (a, b) = ((two * traj.start()).exp(), (two * traj.end()).exp());
            let grid = uniform_grid(a, b, m);
            let states = grid
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    let z = endpoint_aware(traj, k, m, half * t.ln());
                    match scaling {
                        Scaling::Plain => z,
                        Scaling::Scaled => z.scale(t.sqrt()),
                    }
                })
                .collect();
            Trajectory::new(Gauge::T, a, b, states)
        }
    }
}

fn endpoint_aware<T: Scalar>(traj: &Trajectory<T>, k: usize, m: usize, s: T) -> crate::cloud::Cloud<T> {
    if k == 0 {
        traj.first().clone()
    } else if k == m {
        traj.last().clone()
    } else {
        traj.sample(s)
    }
}
