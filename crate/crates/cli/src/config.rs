//! JSON run configuration.
//!
//! Every field has a default, so `{}` is a valid configuration. Unknown keys
//! are rejected and errors carry the JSON path of the offending value.

use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use nlci_core::dynamics::Formulation;
use nlci_core::{DiffusionSpec, ModelConfig, NonlinearitySpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionChoice {
    /// `a ≡ 1`.
    Constant,
    /// `a(s) = 1 + s/(1+s)`.
    Saturating,
    /// Piecewise-linear knots `[[s, a], ...]`.
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityChoice {
    Cubic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanBlock {
    /// Explicit ε list; when absent, `points` values evenly spaced over
    /// `[2ε_j, 0]` for each equilibrium.
    pub epsilons: Option<Vec<f64>>,
    pub points: usize,
    pub track: usize,
}

impl Default for ScanBlock {
    fn default() -> Self {
        Self { epsilons: None, points: 41, track: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Random combination of the first four sine modes.
    Random { amplitude: f64 },
    /// An equilibrium plus `delta` times its leading eigenvector.
    Equilibrium { label: String, delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowBlock {
    pub formulation: FormulationChoice,
    pub t_end: f64,
    pub dt: Option<f64>,
    pub stride: usize,
    pub initial: InitialState,
    /// Write one profile CSV per recorded sample.
    pub snapshots: bool,
}

impl Default for FlowBlock {
    fn default() -> Self {
        Self {
            formulation: FormulationChoice::Quasilinear,
            t_end: 10.0,
            dt: None,
            stride: 100,
            initial: InitialState::Random { amplitude: 0.5 },
            snapshots: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulationChoice {
    Quasilinear,
    Semilinear,
}

impl From<FormulationChoice> for Formulation {
    fn from(f: FormulationChoice) -> Self {
        match f {
            FormulationChoice::Quasilinear => Formulation::Quasilinear,
            FormulationChoice::Semilinear => Formulation::Semilinear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeBlock {
    pub delta: f64,
    /// Eigenvector indices (1 = leading) to probe along, each with both signs.
    pub directions: Vec<usize>,
    pub t_max: Option<f64>,
}

impl Default for ProbeBlock {
    fn default() -> Self {
        Self { delta: 1e-3, directions: vec![1], t_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Eigenvalues closer than this to 0 make a margin case.
    pub margin: f64,
    /// H¹ distance at which a probe counts as settled.
    pub settle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { margin: 1e-4, settle: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub a: DiffusionChoice,
    pub f: NonlinearityChoice,
    pub lambda: f64,
    pub grid_n: usize,
    pub seed: u64,
    /// λ values for the bifurcation table.
    pub lambda_sweep: Vec<f64>,
    pub spectrum_count: usize,
    pub scan: ScanBlock,
    pub flow: FlowBlock,
    pub probe: ProbeBlock,
    pub tolerances: Tolerances,
    pub max_n: usize,
    pub max_j: usize,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            a: DiffusionChoice::Saturating,
            f: NonlinearityChoice::Cubic,
            lambda: 6.0,
            grid_n: 1023,
            seed: 0,
            lambda_sweep: Vec::new(),
            spectrum_count: 10,
            scan: ScanBlock::default(),
            flow: FlowBlock::default(),
            probe: ProbeBlock::default(),
            tolerances: Tolerances::default(),
            max_n: 50,
            max_j: 60,
            output_dir: "out".into(),
        }
    }
}

/// A schema or validation failure at a JSON path such as `$.lambda`.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn at(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { path: path.to_string(), message: message.into() }
}

fn json_path(path: &serde_path_to_error::Path) -> String {
    let mut out = String::from("$");
    for seg in path.iter() {
        match seg {
            serde_path_to_error::Segment::Seq { index } => out.push_str(&format!("[{index}]")),
            serde_path_to_error::Segment::Map { key } => {
                out.push('.');
                out.push_str(key);
            }
            serde_path_to_error::Segment::Enum { variant } => {
                out.push('.');
                out.push_str(variant);
            }
            serde_path_to_error::Segment::Unknown => out.push_str(".?"),
        }
    }
    out
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = json_path(e.path());
        let inner = e.into_inner().to_string();
        let message = inner.split(" at line ").next().unwrap_or(&inner).to_string();
        ConfigError { path, message }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("invalid configuration {}", path.display()))
}

fn positive(path: &str, v: f64) -> std::result::Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(at(path, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        positive("$.lambda", self.lambda)?;
        if self.grid_n < 3 {
            return Err(at("$.grid_n", format!("must be at least 3, got {}", self.grid_n)));
        }
        for (i, &l) in self.lambda_sweep.iter().enumerate() {
            positive(&format!("$.lambda_sweep[{i}]"), l)?;
        }
        if self.spectrum_count == 0 {
            return Err(at("$.spectrum_count", "must be at least 1"));
        }
        if let Some(eps) = &self.scan.epsilons {
            if eps.iter().any(|e| !e.is_finite()) {
                return Err(at("$.scan.epsilons", "values must be finite"));
            }
        }
        if self.scan.points < 2 {
            return Err(at("$.scan.points", "must be at least 2"));
        }
        if self.scan.track == 0 {
            return Err(at("$.scan.track", "must be at least 1"));
        }
        positive("$.flow.t_end", self.flow.t_end)?;
        if let Some(dt) = self.flow.dt {
            positive("$.flow.dt", dt)?;
        }
        if self.flow.stride == 0 {
            return Err(at("$.flow.stride", "must be at least 1"));
        }
        match &self.flow.initial {
            InitialState::Random { amplitude } => positive("$.flow.initial.random.amplitude", *amplitude)?,
            InitialState::Equilibrium { delta, .. } => {
                if !delta.is_finite() || delta.abs() > 1e-2 {
                    return Err(at("$.flow.initial.equilibrium.delta", "must satisfy |delta| <= 1e-2"));
                }
            }
        }
        if !(self.probe.delta.abs() > 0.0 && self.probe.delta.abs() <= 1e-2) {
            return Err(at("$.probe.delta", "must satisfy 0 < |delta| <= 1e-2"));
        }
        if self.probe.directions.is_empty() || self.probe.directions.contains(&0) {
            return Err(at("$.probe.directions", "must list eigenvector indices starting at 1"));
        }
        if let Some(t) = self.probe.t_max {
            positive("$.probe.t_max", t)?;
        }
        positive("$.tolerances.margin", self.tolerances.margin)?;
        positive("$.tolerances.settle", self.tolerances.settle)?;
        if self.max_n < 2 {
            return Err(at("$.max_n", "must be at least 2"));
        }
        if self.max_j < 2 {
            return Err(at("$.max_j", "must be at least 2"));
        }
        self.model().map(|_| ())
    }

    pub fn model(&self) -> std::result::Result<ModelConfig, ConfigError> {
        let diffusion = match &self.a {
            DiffusionChoice::Constant => DiffusionSpec::constant(1.0),
            DiffusionChoice::Saturating => Ok(DiffusionSpec::saturating()),
            DiffusionChoice::Table(points) => DiffusionSpec::table(points),
        }
        .map_err(|e| at("$.a", e.to_string()))?;
        let nonlinearity = match self.f {
            NonlinearityChoice::Cubic => NonlinearitySpec::cubic(),
        };
        ModelConfig::new(diffusion, nonlinearity, self.lambda).map_err(|e| at("$.lambda", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(parse_config("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn negative_lambda_is_reported_at_its_path() {
        let err = parse_config(r#"{"lambda": -1}"#).unwrap_err();
        assert_eq!(err.path, "$.lambda");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config(r#"{"scan": {"pointz": 3}}"#).unwrap_err();
        assert_eq!(err.path, "$.scan.pointz");
        assert!(err.message.contains("pointz"));
        let err = parse_config(r#"{"lambda_sweep": [1, "x"]}"#).unwrap_err();
        assert_eq!(err.path, "$.lambda_sweep[1]");
    }

    #[test]
    fn table_diffusion_is_accepted() {
        let cfg = parse_config(r#"{"a": {"table": [[0, 1], [1, 1.5], [4, 2]]}}"#).unwrap();
        assert!((cfg.model().unwrap().a0() - 1.0).abs() < 1e-15);
        let err = parse_config(r#"{"a": "quadratic"}"#).unwrap_err();
        assert_eq!(err.path, "$.a");
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"{
            "a": "constant", "f": "cubic", "lambda": 12.5, "grid_n": 255, "seed": 9,
            "lambda_sweep": [1, 2, 3.5], "spectrum_count": 4,
            "scan": {"epsilons": [-2, -1, 0], "points": 5, "track": 3},
            "flow": {"formulation": "semilinear", "t_end": 2, "dt": 0.001, "stride": 5,
                     "initial": {"equilibrium": {"label": "phi2+", "delta": 0.001}}, "snapshots": true},
            "probe": {"delta": 0.002, "directions": [1, 2], "t_max": 50},
            "tolerances": {"margin": 1e-5, "settle": 1e-6},
            "max_n": 30, "max_j": 40, "output_dir": "results"
        }"#;
        let cfg = parse_config(text).unwrap();
        let echoed = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&echoed).unwrap(), cfg);
    }
}
