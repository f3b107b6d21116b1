//! Scenario files: strict TOML schema, defaults, validation.

use std::path::Path;

use magrav::actions::{ActionKind, EndpointMode, Weight};
use magrav::heatwave::{NoiseScale, NoiseSpec};
use magrav::{Cloud64, Gauge, Lattice64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Minimize,
    GammaSweep,
    Sticky,
    Heatwave,
    CheckInvariants,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Minimize => "minimize",
            Experiment::GammaSweep => "gamma-sweep",
            Experiment::Sticky => "sticky",
            Experiment::Heatwave => "heatwave",
            Experiment::CheckInvariants => "check-invariants",
        }
    }

    /// Experiments built on the ordered one-dimensional theory.
    fn needs_ordered_line(self) -> bool {
        matches!(self, Experiment::Sticky | Experiment::CheckInvariants)
    }
}

/// Point sets: a flat array on the line or one array per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Points {
    Line(Vec<f64>),
    Cloud(Vec<Vec<f64>>),
}

impl Points {
    pub fn to_cloud(&self, field: &str) -> Result<Cloud64, ScenarioError> {
        let c = match self {
            Points::Line(v) => Cloud64::line(v),
            Points::Cloud(pts) => Cloud64::from_points(pts),
        };
        let c = c.map_err(|e| invalid(field, e.to_string()))?;
        if c.n() == 0 {
            return Err(invalid(field, "needs at least one point"));
        }
        if c.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(invalid(field, "all coordinates must be finite"));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaugeName {
    Theta,
    T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub gauge: GaugeName,
    pub start: f64,
    pub end: f64,
}

impl Default for Window {
    fn default() -> Self {
        Window {
            gauge: GaugeName::Theta,
            start: 0.0,
            end: 1.0,
        }
    }
}

impl Window {
    /// The window expressed in `gauge`, using `t = e^{2θ}`.
    pub fn in_gauge(&self, gauge: Gauge) -> (f64, f64) {
        match (self.gauge, gauge) {
            (GaugeName::Theta, Gauge::Theta) | (GaugeName::T, Gauge::T) => (self.start, self.end),
            (GaugeName::Theta, Gauge::T) => ((2.0 * self.start).exp(), (2.0 * self.end).exp()),
            (GaugeName::T, Gauge::Theta) => (0.5 * self.start.ln(), 0.5 * self.end.ln()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndpointsName {
    Fixed,
    Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionConfig {
    #[serde(default = "default_kind")]
    pub kind: String,
    /// Smoothing schedule, strictly decreasing; a single value for plain solves.
    #[serde(default = "default_epsilon")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_endpoints")]
    pub endpoints: EndpointsName,
    #[serde(default = "one")]
    pub weight_coefficient: f64,
    #[serde(default = "one")]
    pub weight_exponent: f64,
}

fn default_kind() -> String {
    ActionKind::LEps.name().to_string()
}

fn default_epsilon() -> Vec<f64> {
    vec![1.0]
}

fn default_endpoints() -> EndpointsName {
    EndpointsName::Fixed
}

fn one() -> f64 {
    1.0
}

impl Default for ActionConfig {
    fn default() -> Self {
        ActionConfig {
            kind: default_kind(),
            epsilon: default_epsilon(),
            endpoints: default_endpoints(),
            weight_coefficient: 1.0,
            weight_exponent: 1.0,
        }
    }
}

impl ActionConfig {
    pub fn kind(&self) -> ActionKind {
        ActionKind::from_name(&self.kind).expect("validated")
    }

    pub fn mode(&self) -> EndpointMode {
        match self.endpoints {
            EndpointsName::Fixed => EndpointMode::Fixed,
            EndpointsName::Permutation => EndpointMode::UpToPermutation,
        }
    }

    pub fn weight(&self) -> Weight<f64> {
        Weight {
            coefficient: self.weight_coefficient,
            exponent: self.weight_exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_cluster")]
    pub cluster: f64,
    #[serde(default = "default_grad")]
    pub grad: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Maximal number of partition changes explored by the oracle.
    #[serde(default = "default_budget")]
    pub oracle_budget: usize,
    /// Relative slack of the velocity-jump check.
    #[serde(default = "default_jump")]
    pub jump: f64,
}

fn default_cluster() -> f64 {
    1e-9
}
fn default_grad() -> f64 {
    1e-7
}
fn default_max_iter() -> usize {
    100_000
}
fn default_budget() -> usize {
    2
}
fn default_jump() -> f64 {
    0.01
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            cluster: default_cluster(),
            grad: default_grad(),
            max_iter: default_max_iter(),
            oracle_budget: default_budget(),
            jump: default_jump(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaName {
    InvSqrt,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub eta: f64,
    #[serde(default = "default_alpha")]
    pub alpha: AlphaName,
    /// Amplitude used when `alpha = "constant"`.
    #[serde(default = "one")]
    pub alpha_value: f64,
    #[serde(default = "default_noise_steps")]
    pub steps: usize,
}

fn default_alpha() -> AlphaName {
    AlphaName::InvSqrt
}
fn default_noise_steps() -> usize {
    1000
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            eta: 0.0,
            alpha: default_alpha(),
            alpha_value: 1.0,
            steps: default_noise_steps(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub experiment: Experiment,
    pub lattice: Points,
    pub start: Points,
    /// Defaults to `start`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<Points>,
    /// Initial velocities of the sticky simulation; zero by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocities: Option<Points>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub window: Window,
    #[serde(default)]
    pub action: ActionConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub noise: NoiseConfig,
}

fn default_grid() -> usize {
    512
}

fn finite(field: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), ScenarioError> {
    finite(field, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be > 0, got {v}")))
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|sp| line_column(text, sp.start))
                .unwrap_or((0, 0));
            ScenarioError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        s.resolve()?;
        Ok(s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Fills defaults that depend on other fields, then validates.
    pub fn resolve(&mut self) -> Result<(), ScenarioError> {
        if self.end.is_none() {
            self.end = Some(self.start.clone());
        }
        if self.velocities.is_none() && self.experiment == Experiment::Sticky {
            let n = self.start.to_cloud("start")?.n();
            self.velocities = Some(Points::Line(vec![0.0; n]));
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        let a = self.lattice()?;
        let p = self.start_cloud()?;
        let q = self.end_cloud()?;
        for (field, c) in [("start", &p), ("end", &q)] {
            if c.n() != a.n() || c.dim() != a.dim() {
                return Err(invalid(
                    field,
                    format!("has {} points in d={}, lattice has {} in d={}", c.n(), c.dim(), a.n(), a.dim()),
                ));
            }
        }
        if let Some(v) = &self.velocities {
            let v = v.to_cloud("velocities")?;
            if v.n() != a.n() || v.dim() != 1 {
                return Err(invalid("velocities", "needs one value per particle on the line"));
            }
        }
        if self.grid == 0 {
            return Err(invalid("grid", "must be at least 1"));
        }
        let w = &self.window;
        finite("window.start", w.start)?;
        finite("window.end", w.end)?;
        if w.gauge == GaugeName::T && !(w.start > 0.0) {
            return Err(invalid("window.start", "heat kernel requires t>0"));
        }
        if !(w.end > w.start) {
            return Err(invalid("window.end", "must exceed window.start"));
        }
        let kind = ActionKind::from_name(&self.action.kind)
            .ok_or_else(|| invalid("action.kind", format!("unknown functional `{}`", self.action.kind)))?;
        if self.action.epsilon.is_empty() {
            return Err(invalid("action.epsilon", "needs at least one value"));
        }
        for &e in &self.action.epsilon {
            positive("action.epsilon", e)?;
        }
        if self.action.epsilon.windows(2).any(|x| !(x[1] < x[0])) {
            return Err(invalid("action.epsilon", "must be strictly decreasing"));
        }
        positive("action.weight_coefficient", self.action.weight_coefficient)?;
        finite("action.weight_exponent", self.action.weight_exponent)?;
        if matches!(self.experiment, Experiment::Minimize | Experiment::GammaSweep) && !kind.is_smooth() {
            return Err(invalid("action.kind", format!("{} cannot be minimized, use L_eps or K_eps", kind.name())));
        }
        let t = &self.tolerances;
        positive("tolerances.cluster", t.cluster)?;
        positive("tolerances.grad", t.grad)?;
        if t.max_iter == 0 {
            return Err(invalid("tolerances.max_iter", "must be at least 1"));
        }
        finite("tolerances.jump", t.jump)?;
        if !(0.0..1.0).contains(&t.jump) {
            return Err(invalid("tolerances.jump", "must lie in [0, 1)"));
        }
        let n = &self.noise;
        finite("noise.eta", n.eta)?;
        if n.eta < 0.0 {
            return Err(invalid("noise.eta", "must be >= 0"));
        }
        finite("noise.alpha_value", n.alpha_value)?;
        if n.steps == 0 {
            return Err(invalid("noise.steps", "must be at least 1"));
        }
        if self.experiment.needs_ordered_line() {
            if a.dim() != 1 {
                return Err(invalid("lattice", format!("{} needs d=1", self.experiment.name())));
            }
            if !a.is_strictly_ordered() {
                return Err(invalid("lattice", "must be strictly increasing"));
            }
        }
        if self.experiment == Experiment::Sticky && !p.is_sorted_ascending() {
            return Err(invalid("start", "sticky initial positions must be ordered"));
        }
        if self.experiment == Experiment::Heatwave {
            let (t0, _) = w.in_gauge(Gauge::T);
            if !(t0 > 0.0) {
                return Err(invalid("window.start", "heat kernel requires t>0"));
            }
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice64, ScenarioError> {
        Ok(Lattice64::new(self.lattice.to_cloud("lattice")?))
    }

    pub fn start_cloud(&self) -> Result<Cloud64, ScenarioError> {
        self.start.to_cloud("start")
    }

    pub fn end_cloud(&self) -> Result<Cloud64, ScenarioError> {
        self.end.as_ref().unwrap_or(&self.start).to_cloud("end")
    }

    pub fn velocity_cloud(&self) -> Result<Cloud64, ScenarioError> {
        match &self.velocities {
            Some(v) => v.to_cloud("velocities"),
            None => Ok(Cloud64::zeros(self.start_cloud()?.n(), 1)),
        }
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec<f64>, ScenarioError> {
        let spec = NoiseSpec::new(self.noise.eta, self.seed, self.noise.steps)
            .map_err(|e| invalid("noise", e.to_string()))?;
        Ok(match self.noise.alpha {
            AlphaName::InvSqrt => spec,
            AlphaName::Constant => spec.with_alpha(NoiseScale::Constant(self.noise.alpha_value)),
        })
    }
}

/// One-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Scenario::from_toml_str(&text)
}
