//! TOML run configuration.
//!
//! ```toml
//! schema_version = 1
//! mode = "solve"            # solve | ergodic | longtime | verify
//!
//! [grid]
//! dim = 1
//! n_x = 64
//! n_t = 64
//! horizon = 1.0
//!
//! [model.hamiltonian]
//! exponent = 2.0
//! weight = { preset = "constant", value = 1.0 }
//! potential = { preset = "cosine", amplitude = 1.0, frequency = 1 }
//!
//! [model.coupling]
//! family = "power"          # power | log
//! exponent = 2.0
//! weight = { preset = "constant", value = 1.0 }
//!
//! [data]
//! m0 = { preset = "constant", value = 1.0 }
//! phi_terminal = [0.0, 0.0]   # inline arrays hold n_x^d values
//! ```
//!
//! Every block and key is optional except `schema_version`; missing entries
//! take the values of [`RunConfig::default`].

use std::f64::consts::TAU;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{MfgError, Result};
use crate::grid::Grid;
use crate::model::{check_assumptions, AssumptionReport, Coupling, Hamiltonian, ModelSpec};
use crate::solver::SolverOptions;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Solve,
    Ergodic,
    Longtime,
    Verify,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Ergodic => "ergodic",
            Mode::Longtime => "longtime",
            Mode::Verify => "verify",
        }
    }
}

/// A spatial profile: an inline array of `n_x^d` values or a named preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Values(Vec<f64>),
    Preset(Preset),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase", deny_unknown_fields)]
pub enum Preset {
    Zero,
    Constant {
        value: f64,
    },
    /// `offset + amplitude * cos(2 pi frequency x_axis)`.
    Cosine {
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        axis: usize,
    },
}

fn one() -> f64 {
    1.0
}

impl FieldSpec {
    pub fn constant(value: f64) -> Self {
        FieldSpec::Preset(Preset::Constant { value })
    }

    pub fn zero() -> Self {
        FieldSpec::Preset(Preset::Zero)
    }

    /// Values on the spatial grid; `path` names the key in errors.
    pub fn expand(&self, grid: &Grid, path: &str) -> Result<Vec<f64>> {
        let n = grid.n_space();
        let values = match self {
            FieldSpec::Values(v) => {
                if v.len() != n {
                    return Err(schema(path, format!("expected {n} values, found {}", v.len())));
                }
                v.clone()
            }
            FieldSpec::Preset(Preset::Zero) => vec![0.0; n],
            FieldSpec::Preset(Preset::Constant { value }) => vec![*value; n],
            FieldSpec::Preset(Preset::Cosine {
                amplitude,
                frequency,
                offset,
                axis,
            }) => {
                if *axis >= grid.dim() {
                    return Err(schema(
                        &format!("{path}.axis"),
                        format!("axis must be below d = {}", grid.dim()),
                    ));
                }
                (0..n)
                    .map(|i| offset + amplitude * (TAU * frequency * grid.coords(i)[*axis]).cos())
                    .collect()
            }
        };
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(schema(path, format!("entry {bad} is not finite")));
        }
        Ok(values)
    }
}

fn schema(path: &str, message: impl Into<String>) -> MfgError {
    MfgError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub dim: usize,
    pub n_x: usize,
    pub n_t: usize,
    pub horizon: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            n_x: 64,
            n_t: 64,
            horizon: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HamiltonianConfig {
    /// `r` in `H = c |p|^r / r - V`.
    pub exponent: f64,
    pub weight: FieldSpec,
    pub potential: FieldSpec,
}

impl Default for HamiltonianConfig {
    fn default() -> Self {
        Self {
            exponent: 2.0,
            weight: FieldSpec::constant(1.0),
            potential: FieldSpec::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingFamily {
    Power,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingConfig {
    pub family: CouplingFamily,
    /// `q` in `f = a m^(q-1)`; ignored by the log family.
    pub exponent: f64,
    pub weight: FieldSpec,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            family: CouplingFamily::Power,
            exponent: 2.0,
            weight: FieldSpec::constant(1.0),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub hamiltonian: HamiltonianConfig,
    pub coupling: CouplingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub m0: FieldSpec,
    pub phi_terminal: FieldSpec,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            m0: FieldSpec::constant(1.0),
            phi_terminal: FieldSpec::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Binary,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Binary => "bin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<ExportFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![ExportFormat::Csv],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LongtimeConfig {
    /// Horizons `T`, each a multiple of the grid time step.
    pub horizons: Vec<f64>,
}

impl Default for LongtimeConfig {
    fn default() -> Self {
        Self {
            horizons: vec![2.0, 5.0, 10.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Directory of a binary fixture (`phi.bin`, `m.bin`, `w.bin`); the
    /// bundled reference fixture when absent.
    pub fixture: Option<PathBuf>,
    pub max_hj_violation: f64,
    /// Bound on the identity gap divided by `T`.
    pub max_identity_gap: f64,
    pub max_continuity_residual: f64,
    pub max_terminal_violation: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            fixture: None,
            max_hj_violation: 1e-3,
            max_identity_gap: 1e-3,
            max_continuity_residual: 1e-3,
            max_terminal_violation: 1e-10,
        }
    }
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub longtime: LongtimeConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

fn default_mode() -> Mode {
    Mode::Solve
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            mode: Mode::Solve,
            grid: GridConfig::default(),
            model: ModelConfig::default(),
            data: DataConfig::default(),
            solver: SolverOptions::default(),
            output: OutputConfig::default(),
            longtime: LongtimeConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

/// Parses and validates a TOML document, including the structural
/// assumptions on the exponents.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::new(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(&path, e.into_inner().message().trim().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    /// Schema checks followed by the assumption gate.
    pub fn validate(&self) -> Result<AssumptionReport> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        self.solver.validate().map_err(|e| schema("solver", e.to_string()))?;
        if self.output.formats.is_empty() {
            return Err(schema("output.formats", "at least one format is required"));
        }
        if self.mode == Mode::Longtime {
            let h = &self.longtime.horizons;
            if h.is_empty() || h[0] <= 0.0 || h.windows(2).any(|w| w[0] >= w[1]) {
                return Err(schema("longtime.horizons", "horizons must be positive and increasing"));
            }
        }
        let (grid, model) = self.build()?;
        check_assumptions(&model, grid.dim())
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        Grid::new(g.dim, g.n_x, g.n_t, g.horizon).map_err(|e| schema("grid", e.to_string()))
    }

    /// Expands presets into the grid and model.
    pub fn build(&self) -> Result<(Grid, ModelSpec)> {
        let grid = self.grid()?;
        let h = &self.model.hamiltonian;
        let hamiltonian = Hamiltonian::new(
            h.exponent,
            h.weight.expand(&grid, "model.hamiltonian.weight")?,
            h.potential.expand(&grid, "model.hamiltonian.potential")?,
        )
        .map_err(|e| schema("model.hamiltonian", e.to_string()))?;
        let c = &self.model.coupling;
        let coupling = match c.family {
            CouplingFamily::Power => Coupling::power(c.exponent, c.weight.expand(&grid, "model.coupling.weight")?)
                .map_err(|e| schema("model.coupling", e.to_string()))?,
            CouplingFamily::Log => Coupling::Log,
        };
        let model = ModelSpec {
            hamiltonian,
            coupling,
            m0: self.data.m0.expand(&grid, "data.m0")?,
            phi_terminal: self.data.phi_terminal.expand(&grid, "data.phi_terminal")?,
        };
        if self.mode != Mode::Ergodic {
            model.validate(&grid).map_err(|e| schema("data", e.to_string()))?;
        }
        Ok((grid, model))
    }
}
