//! File formats of a run bundle.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use magrav::sticky::MergeEvent;
use magrav::{Cloud64, Gauge, Trajectory64};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed csv at line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

/// File name to contents. Ordered by name so writes are deterministic.
pub type Bundle = BTreeMap<String, Vec<u8>>;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn column_names(n: usize, dim: usize) -> Vec<String> {
    if dim == 1 {
        (1..=n).map(|i| format!("z_{i}")).collect()
    } else {
        (1..=n)
            .flat_map(|i| (1..=dim).map(move |k| format!("z_{i}_{k}")))
            .collect()
    }
}

/// Header `theta,z_1,…,z_N` (or `t,…`), one row per grid node. In d>1 the
/// columns are `z_i_k`, coordinate `k` of particle `i`.
pub fn trajectory_csv(traj: &Trajectory64) -> String {
    let mut out = String::new();
    let time = match traj.gauge() {
        Gauge::Theta => "theta",
        Gauge::T => "t",
    };
    out.push_str(time);
    for c in column_names(traj.n(), traj.dim()) {
        out.push(',');
        out.push_str(&c);
    }
    out.push('\n');
    for (k, s) in traj.states().iter().enumerate() {
        out.push_str(&fmt_f64(traj.time(k)));
        for v in s.as_slice() {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// Parses [`trajectory_csv`] output back into a trajectory with `dim`
/// coordinates per particle.
pub fn parse_trajectory_csv(text: &str, dim: usize) -> Result<Trajectory64, OutputError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(OutputError::Csv { line: 1, reason: "empty file".into() })?;
    let cols: Vec<&str> = header.split(',').collect();
    let gauge = match cols[0] {
        "theta" => Gauge::Theta,
        "t" => Gauge::T,
        other => {
            return Err(OutputError::Csv {
                line: 1,
                reason: format!("unknown time column `{other}`"),
            })
        }
    };
    let width = cols.len() - 1;
    if dim == 0 || width == 0 || !width.is_multiple_of(dim) {
        return Err(OutputError::Csv {
            line: 1,
            reason: format!("{width} coordinate columns do not fit d={dim}"),
        });
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (i, row) in lines.enumerate() {
        let line = i + 2;
        let vals: Vec<f64> = row
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| OutputError::Csv { line, reason: e.to_string() })?;
        if vals.len() != width + 1 {
            return Err(OutputError::Csv {
                line,
                reason: format!("expected {} fields, got {}", width + 1, vals.len()),
            });
        }
        times.push(vals[0]);
        states.push(Cloud64::new(dim, vals[1..].to_vec()).map_err(|e| OutputError::Csv { line, reason: e.to_string() })?);
    }
    if times.len() < 2 {
        return Err(OutputError::Csv { line: 2, reason: "need at least two rows".into() });
    }
    // The grid is uniform; rebuild it from the endpoints like the writer did.
    let (a, b) = (times[0], times[times.len() - 1]);
    Trajectory64::new(gauge, a, b, states).map_err(|e| OutputError::Csv { line: 2, reason: e.to_string() })
}

/// Plain CSV with a fixed header; every value through [`fmt_f64`] unless
/// already textual.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct EventLine<'a> {
    time: f64,
    position: f64,
    class: Vec<usize>,
    left: &'a [usize],
    right: &'a [usize],
    left_velocity: f64,
    right_velocity: f64,
    velocity: f64,
    kinetic_loss: f64,
}

/// One JSON object per merge, labels 1-based like the CSV columns.
pub fn events_jsonl(events: &[MergeEvent<f64>]) -> String {
    let mut out = String::new();
    for ev in events {
        let left: Vec<usize> = ev.left.iter().map(|i| i + 1).collect();
        let right: Vec<usize> = ev.right.iter().map(|i| i + 1).collect();
        let line = EventLine {
            time: ev.time,
            position: ev.position,
            class: ev.class().iter().map(|i| i + 1).collect(),
            left: &left,
            right: &right,
            left_velocity: ev.left_velocity,
            right_velocity: ev.right_velocity,
            velocity: ev.velocity,
            kinetic_loss: ev.kinetic_loss,
        };
        let _ = writeln!(out, "{}", serde_json::to_string(&line).expect("event serializes"));
    }
    out
}

/// Writes every file of `bundle` into `dir`, creating it if needed.
pub fn write_outputs(bundle: &Bundle, dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    std::fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut paths = Vec::with_capacity(bundle.len());
    for (name, bytes) in bundle {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|source| OutputError::Io {
            path: path.display().to_string(),
            source,
        })?;
        paths.push(path);
    }
    Ok(paths)
}
