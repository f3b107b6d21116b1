//! Experiment drivers. Each turns a validated scenario into a bundle of files.

use std::collections::BTreeMap;

use magrav::actions::{change_gauge, eval_action, ActionKind, ActionSpec, Scaling};
use magrav::analysis::{check_velocity_jump, detect_shocks, energy_profile, momentum_residual, ShockKind};
use magrav::heatwave::{integrate_companion, sample_sde};
use magrav::minimizer::{
    continuation_sweep, minimize_fixed_eps, optimizer_cluster_tol, oracle_minimizer_1d, straight_line_init,
    OracleOptions, OracleResult, SolveOptions,
};
use magrav::sticky::simulate_sticky;
use magrav::{Error, Gauge, Potential64, Trajectory64};
use serde::Serialize;
use thiserror::Error;

use crate::output::{events_jsonl, fmt_f64, table_csv, trajectory_csv, Bundle, OutputError};
use crate::scenario::{Experiment, Scenario, ScenarioError};

pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error(transparent)]
    Output(#[from] OutputError),
}

/// Files plus headline numbers for the manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub files: Bundle,
    pub results: BTreeMap<String, f64>,
    /// Names of failed checks (check-invariants only).
    pub failed_checks: Vec<String>,
}

impl RunOutput {
    fn file(&mut self, name: &str, text: String) {
        self.files.insert(name.to_string(), text.into_bytes());
    }

    fn result(&mut self, key: &str, v: f64) {
        self.results.insert(key.to_string(), v);
    }
}

pub fn run_experiment(s: &Scenario) -> Result<RunOutput, RunError> {
    s.validate()?;
    match s.experiment {
        Experiment::Minimize => run_minimize(s),
        Experiment::GammaSweep => run_gamma_sweep(s),
        Experiment::Sticky => run_sticky(s),
        Experiment::Heatwave => run_heatwave(s),
        Experiment::CheckInvariants => run_check(s),
    }
}

fn solve_options(s: &Scenario) -> SolveOptions<f64> {
    SolveOptions {
        grad_tol: s.tolerances.grad,
        max_iter: s.tolerances.max_iter,
        ..SolveOptions::default()
    }
}

/// Action spec with endpoints converted to the functional's variables
/// (`K` acts on `Y = Z e^{-θ}`), and the window in its gauge.
fn action_setup(s: &Scenario) -> Result<(ActionSpec<f64>, (f64, f64)), RunError> {
    let kind = s.action.kind();
    let window = s.window.in_gauge(kind.gauge());
    let (mut p, mut q) = (s.start_cloud()?, s.end_cloud()?);
    if matches!(kind, ActionKind::KEps | ActionKind::K) {
        p = p.scale((-window.0).exp());
        q = q.scale((-window.1).exp());
    }
    let spec = ActionSpec::new(kind, p, q)
        .with_mode(s.action.mode())
        .with_weight(s.action.weight())
        .with_cluster_tol(s.tolerances.cluster);
    Ok((spec, window))
}

/// θ-gauge positions `Z` of a minimizer of `kind`.
fn to_plain_theta(traj: &Trajectory64, kind: ActionKind) -> Result<Trajectory64, RunError> {
    Ok(match kind {
        ActionKind::KEps | ActionKind::K => {
            let states = traj
                .states()
                .iter()
                .enumerate()
                .map(|(k, y)| y.scale(traj.time(k).exp()))
                .collect();
            traj.with_states(states)?
        }
        _ => change_gauge(traj, Gauge::Theta, Scaling::Plain)?,
    })
}

fn run_minimize(s: &Scenario) -> Result<RunOutput, RunError> {
    let pot = Potential64::new(s.lattice()?);
    let (spec, (a, b)) = action_setup(s)?;
    let eps = *s.action.epsilon.last().expect("validated");
    let spec = spec.with_eps(eps);
    let init = straight_line_init(&spec, a, b, s.grid)?;
    let rep = minimize_fixed_eps(&spec, &pot, &init, &solve_options(s))?;
    let limit_spec = spec
        .clone()
        .with_kind(spec.kind.limit())
        .with_cluster_tol(optimizer_cluster_tol(&rep.trajectory).max(s.tolerances.cluster));
    let limit = eval_action(&rep.trajectory, &limit_spec, &pot)?.value();
    let mut out = RunOutput::default();
    out.file("trajectory.csv", trajectory_csv(&rep.trajectory));
    out.file(
        "summary.csv",
        table_csv(
            &["kind", "eps", "value", "limit_value", "grad_norm", "iterations", "converged"],
            &[vec![
                spec.kind.name().to_string(),
                fmt_f64(eps),
                fmt_f64(rep.value),
                fmt_f64(limit),
                fmt_f64(rep.grad_norm),
                rep.iterations.to_string(),
                rep.converged.to_string(),
            ]],
        ),
    );
    out.result("value", rep.value);
    out.result("limit_value", limit);
    out.result("grad_norm", rep.grad_norm);
    Ok(out)
}

fn oracle_for(s: &Scenario, steps: usize) -> Result<Option<OracleResult<f64>>, RunError> {
    let a = s.lattice()?;
    if a.dim() != 1 || !a.is_strictly_ordered() {
        return Ok(None);
    }
    let window = s.window.in_gauge(Gauge::Theta);
    let opts = OracleOptions {
        budget: s.tolerances.oracle_budget,
        steps,
        ..OracleOptions::default()
    };
    match oracle_minimizer_1d(&a, &s.start_cloud()?, &s.end_cloud()?, window, &opts) {
        Ok(r) => Ok(Some(r)),
        Err(Error::Capability { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn run_gamma_sweep(s: &Scenario) -> Result<RunOutput, RunError> {
    let pot = Potential64::new(s.lattice()?);
    let (spec, (a, b)) = action_setup(s)?;
    let init = straight_line_init(&spec, a, b, s.grid)?;
    let sweep = continuation_sweep(&spec, &pot, &s.action.epsilon, &init, &solve_options(s))?;
    let oracle = oracle_for(s, s.grid)?;
    let mut out = RunOutput::default();
    let mut rows = Vec::with_capacity(sweep.len());
    for st in &sweep {
        let z = to_plain_theta(&st.report.trajectory, spec.kind)?;
        let lp_spec = ActionSpec::new(ActionKind::LambdaPrime, z.first().clone(), z.last().clone())
            .with_cluster_tol(optimizer_cluster_tol(&z).max(s.tolerances.cluster));
        let lambda_prime = eval_action(&z, &lp_spec, &pot)?.value();
        let (oracle_value, sup) = match &oracle {
            Some(o) => (o.value, z.sup_distance(&o.trajectory)?),
            None => (f64::NAN, f64::NAN),
        };
        rows.push(vec![
            fmt_f64(st.eps),
            fmt_f64(st.report.value),
            fmt_f64(st.limit_value.value()),
            fmt_f64(lambda_prime),
            fmt_f64(oracle_value),
            fmt_f64(sup),
        ]);
    }
    out.file(
        "sweep_summary.csv",
        table_csv(
            &["eps", "min_value", "limit_value", "lambda_prime", "oracle_value", "sup_distance"],
            &rows,
        ),
    );
    let last = sweep.last().expect("non-empty schedule");
    out.file("trajectory.csv", trajectory_csv(&last.report.trajectory));
    out.result("final_eps", last.eps);
    out.result("final_value", last.report.value);
    if let Some(o) = &oracle {
        out.file("oracle.csv", trajectory_csv(&o.trajectory));
        out.result("oracle_value", o.value);
    }
    Ok(out)
}

fn run_sticky(s: &Scenario) -> Result<RunOutput, RunError> {
    let a = s.lattice()?;
    let window = s.window.in_gauge(Gauge::Theta);
    let res = simulate_sticky(&s.start_cloud()?, &s.velocity_cloud()?, &a, window, s.grid)?;
    let mut out = RunOutput::default();
    out.file("trajectory.csv", trajectory_csv(&res.trajectory));
    out.file("events.jsonl", events_jsonl(&res.events));
    out.result("events", res.events.len() as f64);
    out.result("momentum_residual", momentum_residual(&res.trajectory, &a)?);
    Ok(out)
}

fn run_heatwave(s: &Scenario) -> Result<RunOutput, RunError> {
    let pot = Potential64::new(s.lattice()?);
    let (t0, t1) = s.window.in_gauge(Gauge::T);
    let eps = *s.action.epsilon.last().expect("validated");
    let x0 = s.start_cloud()?;
    let det = integrate_companion(&pot, &x0, t0, t1, s.noise.steps, eps)?;
    let sde = sample_sde(&pot, &x0, t0, t1, &s.noise_spec()?, eps)?;
    let mut out = RunOutput::default();
    out.file("companion.csv", trajectory_csv(&det));
    out.file("sde.csv", trajectory_csv(&sde));
    out.result("sde_endpoint_distance", sde.last().dist(det.last()));
    Ok(out)
}

#[derive(Serialize)]
struct ShockLine {
    time: f64,
    location: f64,
    class: Vec<usize>,
    kind: &'static str,
    isolated: bool,
    jump: f64,
    alpha: f64,
    pass: bool,
    inconclusive: bool,
}

fn run_check(s: &Scenario) -> Result<RunOutput, RunError> {
    let a = s.lattice()?;
    let oracle = oracle_for(s, s.grid)?.ok_or_else(|| {
        ScenarioError::Invalid {
            field: "lattice".into(),
            reason: "check-invariants needs the exact oracle (d=1, small N)".into(),
        }
    })?;
    let traj = &oracle.trajectory;
    let m = s.grid as f64;
    let mut checks: Vec<(String, f64, f64, bool)> = Vec::new();
    let energy = energy_profile(traj, &a)?;
    let e_tol = 2.0 / m;
    checks.push(("energy_deviation".into(), energy.max_deviation, e_tol, energy.max_deviation <= e_tol));
    let mom = momentum_residual(traj, &a)?;
    let mom_tol = 10.0 / m;
    checks.push(("momentum_residual".into(), mom, mom_tol, mom <= mom_tol));
    let shocks = detect_shocks(traj, s.tolerances.cluster)?;
    let mut lines = String::new();
    for (idx, sh) in shocks.iter().enumerate() {
        let jc = if a.n() >= 2 {
            Some(check_velocity_jump(traj, sh, &shocks, &a, s.tolerances.jump)?)
        } else {
            None
        };
        let line = ShockLine {
            time: sh.time,
            location: sh.location,
            class: sh.class.iter().map(|i| i + 1).collect(),
            kind: match sh.kind {
                ShockKind::Merge => "merge",
                ShockKind::Split => "split",
                ShockKind::Mixed => "mixed",
            },
            isolated: sh.isolated,
            jump: jc.map_or(sh.jump, |c| c.jump),
            alpha: jc.map_or(f64::NAN, |c| c.alpha),
            pass: jc.is_some_and(|c| c.pass),
            inconclusive: jc.is_none_or(|c| c.inconclusive),
        };
        if line.isolated && !line.inconclusive {
            let name = format!("jump_bound_shock_{}", idx + 1);
            checks.push((name, line.jump, line.alpha * (1.0 - s.tolerances.jump), line.pass));
        }
        lines.push_str(&serde_json::to_string(&line).expect("shock serializes"));
        lines.push('\n');
    }
    let mut out = RunOutput::default();
    out.file("oracle.csv", trajectory_csv(traj));
    out.file("shocks.jsonl", lines);
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|(n, v, t, p)| vec![n.clone(), fmt_f64(*v), fmt_f64(*t), p.to_string()])
        .collect();
    out.file("invariants.csv", table_csv(&["check", "value", "threshold", "pass"], &rows));
    out.result("oracle_value", oracle.value);
    out.result("shocks", shocks.len() as f64);
    out.failed_checks = checks.into_iter().filter(|c| !c.3).map(|c| c.0).collect();
    Ok(out)
}

#[derive(Serialize)]
struct RunInfo<'a> {
    version: &'static str,
    experiment: &'a str,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    files: Vec<&'a str>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    run: RunInfo<'a>,
    overrides: &'a BTreeMap<String, String>,
    results: &'a BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<&'a Scenario>,
}

/// `manifest.toml`: resolved scenario, flag overrides, status and file list.
pub fn manifest(
    scenario: Option<&Scenario>,
    experiment: &str,
    overrides: &BTreeMap<String, String>,
    outcome: Result<&RunOutput, &str>,
) -> String {
    let empty = BTreeMap::new();
    let (status, error, files, results) = match outcome {
        Ok(o) if o.failed_checks.is_empty() => ("ok", None, o.files.keys().map(String::as_str).collect(), &o.results),
        Ok(o) => ("checks-failed", None, o.files.keys().map(String::as_str).collect(), &o.results),
        Err(msg) => ("failed", Some(msg), Vec::new(), &empty),
    };
    let m = Manifest {
        run: RunInfo {
            version: env!("CARGO_PKG_VERSION"),
            experiment,
            status,
            error,
            files,
        },
        overrides,
        results,
        scenario,
    };
    toml::to_string(&m).expect("manifest serializes")
}

/// One command-line run.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub experiment: Experiment,
    pub scenario: std::path::PathBuf,
    pub out_dir: std::path::PathBuf,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct Finished {
    /// 0 on success, 1 on error, 2 when invariant checks failed.
    pub code: u8,
    pub paths: Vec<std::path::PathBuf>,
    pub summary: String,
}

fn apply_overrides(inv: &Invocation, s: &mut Scenario) -> Result<BTreeMap<String, String>, ScenarioError> {
    let mut overrides = BTreeMap::new();
    if s.experiment != inv.experiment {
        overrides.insert("experiment".into(), inv.experiment.name().into());
        s.experiment = inv.experiment;
    }
    if let Some(m) = inv.grid {
        overrides.insert("grid".into(), m.to_string());
        s.grid = m;
    }
    if let Some(seed) = inv.seed {
        overrides.insert("seed".into(), seed.to_string());
        s.seed = seed;
    }
    s.resolve()?;
    Ok(overrides)
}

/// Loads, runs and writes the bundle. Errors still produce a manifest.
pub fn invoke(inv: &Invocation) -> Finished {
    let mut overrides = BTreeMap::new();
    let prepared = crate::scenario::load_scenario(&inv.scenario).and_then(|mut s| {
        overrides = apply_overrides(inv, &mut s)?;
        Ok(s)
    });
    let name = inv.experiment.name();
    let (scenario, result) = match prepared {
        Ok(s) => {
            let r = run_experiment(&s);
            (Some(s), r)
        }
        Err(e) => (None, Err(e.into())),
    };
    let (bundle, code, summary) = match &result {
        Ok(o) => {
            let text = manifest(scenario.as_ref(), name, &overrides, Ok(o));
            let mut files = o.files.clone();
            files.insert(MANIFEST.into(), text.into_bytes());
            let mut summary = format!("{name}: {} files", files.len());
            for (k, v) in &o.results {
                summary.push_str(&format!(", {k}={v:.6e}"));
            }
            if o.failed_checks.is_empty() {
                (files, 0, summary)
            } else {
                summary.push_str(&format!("; failed checks: {}", o.failed_checks.join(", ")));
                (files, 2, summary)
            }
        }
        Err(e) => {
            let msg = e.to_string();
            let text = manifest(scenario.as_ref(), name, &overrides, Err(&msg));
            let mut files = Bundle::new();
            files.insert(MANIFEST.into(), text.into_bytes());
            (files, 1, format!("{name} failed: {msg}"))
        }
    };
    match crate::output::write_outputs(&bundle, &inv.out_dir) {
        Ok(paths) => Finished { code, paths, summary },
        Err(e) => Finished {
            code: 1,
            paths: Vec::new(),
            summary: format!("{summary}; writing outputs failed: {e}"),
        },
    }
}
