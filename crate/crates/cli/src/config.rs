//! Run configuration: a TOML document with a schema version, the command,
//! the master seed and a command-specific `[parameters]` table.
//!
//! Parsing is strict: unknown keys anywhere are errors, reported with the
//! line and column the TOML parser points at.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use fermi_scatter::density::SobolevWeights;
use fermi_scatter::response::{Potential, StateKind};

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    MultiplierScan,
    InvertibilityCheck,
    HypothesisAudit,
    StrichartzScan,
    OptimalityProbe,
    WaveSeries,
    Solve,
    ScatterCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::MultiplierScan => "multiplier-scan",
            Command::InvertibilityCheck => "invertibility-check",
            Command::HypothesisAudit => "hypothesis-audit",
            Command::StrichartzScan => "strichartz-scan",
            Command::OptimalityProbe => "optimality-probe",
            Command::WaveSeries => "wave-series",
            Command::Solve => "solve",
            Command::ScatterCheck => "scatter-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Parameters {
    MultiplierScan(MultiplierScan),
    InvertibilityCheck(InvertibilityCheck),
    HypothesisAudit(HypothesisAudit),
    StrichartzScan(StrichartzScan),
    OptimalityProbe(OptimalityProbe),
    WaveSeries(WaveSeries),
    Solve(Solve),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub spec_version: u32,
    pub command: Command,
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub parameters: Parameters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Deserialize)]
struct Header {
    spec_version: Option<toml::Value>,
    command: Option<Command>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document<P> {
    spec_version: u32,
    #[allow(dead_code)]
    command: Command,
    master_seed: u64,
    output_dir: Option<PathBuf>,
    workers: Option<usize>,
    parameters: P,
}

fn typed<P: DeserializeOwned>(text: &str) -> Result<Document<P>, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(format!("config error: {e}")))
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let header: Header = toml::from_str(text).map_err(|e| ConfigError(format!("config error: {e}")))?;
    match header.spec_version {
        Some(toml::Value::Integer(v)) if v == SPEC_VERSION as i64 => {}
        Some(v) => return Err(ConfigError(format!("config error: key `spec_version`: unsupported value {v} (expected {SPEC_VERSION})"))),
        None => return Err(ConfigError("config error: missing key `spec_version`".into())),
    }
    let command = header.command.ok_or_else(|| ConfigError("config error: missing key `command`".into()))?;
    macro_rules! doc {
        ($ty:ty, $variant:ident) => {{
            let d: Document<$ty> = typed(text)?;
            (d.spec_version, d.master_seed, d.output_dir, d.workers, Parameters::$variant(d.parameters))
        }};
    }
    let (spec_version, master_seed, output_dir, workers, parameters) = match command {
        Command::MultiplierScan => doc!(MultiplierScan, MultiplierScan),
        Command::InvertibilityCheck => doc!(InvertibilityCheck, InvertibilityCheck),
        Command::HypothesisAudit => doc!(HypothesisAudit, HypothesisAudit),
        Command::StrichartzScan => doc!(StrichartzScan, StrichartzScan),
        Command::OptimalityProbe => doc!(OptimalityProbe, OptimalityProbe),
        Command::WaveSeries => doc!(WaveSeries, WaveSeries),
        Command::Solve | Command::ScatterCheck => doc!(Solve, Solve),
    };
    Ok(RunConfig { spec_version, command, master_seed, output_dir, workers, parameters })
}

pub fn load(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

fn default_length() -> f64 {
    16.0 * PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    #[serde(default = "default_length")]
    pub length: f64,
    pub horizon: f64,
    pub nt: usize,
}

fn s_nodes() -> usize {
    48
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierScan {
    pub state: StateKind,
    pub dim: usize,
    pub taus: Vec<f64>,
    pub xis: Vec<f64>,
    #[serde(default = "s_nodes")]
    pub s_nodes: usize,
    /// Compare against the time-domain route.
    #[serde(default = "yes")]
    pub cross_check: bool,
    #[serde(default = "cross_tolerance")]
    pub tolerance: f64,
    /// Reach of the ǧ table used by the time-domain route.
    #[serde(default = "table_radius")]
    pub table_radius: f64,
}

fn yes() -> bool {
    true
}

fn cross_tolerance() -> f64 {
    1e-3
}

fn table_radius() -> f64 {
    40.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertibilityCheck {
    pub state: StateKind,
    pub potential: Potential,
    pub dim: usize,
    pub taus: Vec<f64>,
    pub xis: Vec<f64>,
    #[serde(default = "half")]
    pub delta: f64,
    #[serde(default = "s_nodes")]
    pub s_nodes: usize,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisAudit {
    pub state: StateKind,
    pub potential: Potential,
    pub weights: SobolevWeights,
    pub dim: usize,
    #[serde(default = "audit_nodes")]
    pub s_nodes: usize,
}

fn audit_nodes() -> usize {
    24
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrichartzScan {
    pub dim: usize,
    #[serde(default = "half")]
    pub alpha_tilde: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Extra `(τ, |ξ|)` grid for the sup; the tail profile is always computed.
    #[serde(default)]
    pub taus: Vec<f64>,
    #[serde(default)]
    pub xis: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimalityProbe {
    pub family: Family,
    pub dim: usize,
    pub alpha_tilde: f64,
    /// Orders for the high-frequency family.
    pub alpha0: Option<f64>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    #[serde(default = "n_list")]
    pub n_list: Vec<usize>,
}

fn n_list() -> Vec<usize> {
    vec![4, 8, 16, 32]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSeries {
    pub grid: GridSpec,
    /// `‖V‖_{L²_t L^d_x}` of each random potential.
    pub v_norm: f64,
    #[serde(default = "one")]
    pub ensemble: usize,
    #[serde(default = "bump_count")]
    pub bumps: usize,
    #[serde(default = "order")]
    pub n_max: usize,
    #[serde(default = "epsilon")]
    pub epsilon: f64,
}

fn one() -> usize {
    1
}

fn bump_count() -> usize {
    3
}

fn order() -> usize {
    6
}

fn epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Zero,
    /// `Σ ±|u_r⟩⟨u_r|` Gaussian packets at seeded random centres, scaled to
    /// `‖Q0‖_{H^α} = size`.
    Packets { rank: usize, width: f64, size: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solve {
    pub state: StateKind,
    pub potential: Potential,
    pub weights: SobolevWeights,
    pub grid: GridSpec,
    pub data: InitialData,
    #[serde(default = "series_order")]
    pub series_order: usize,
    #[serde(default = "order")]
    pub wave_order: usize,
    #[serde(default = "tol")]
    pub tol: f64,
    #[serde(default = "max_iter")]
    pub max_iter: usize,
    /// Rerun on `[0, 2T]` for the plateau test.
    #[serde(default)]
    pub extend: bool,
    /// Schatten exponents for the scattering tables (`2d` when empty).
    #[serde(default)]
    pub schatten: Vec<f64>,
    #[serde(default)]
    pub override_audit: bool,
    /// Write φ as a binary field.
    #[serde(default = "yes")]
    pub write_field: bool,
}

fn series_order() -> usize {
    4
}

fn tol() -> f64 {
    1e-8
}

fn max_iter() -> usize {
    50
}
