//! Run configuration in TOML.
//!
//! Only `[grid] n` is required. Every other key has a default; unknown keys
//! are rejected so a typo never silently falls back to a default. The
//! resolved configuration (all effective values, lengths spelled out) is
//! itself a valid config file and replays the run bit for bit.
//!
//! ```toml
//! model = "pfc"              # or "hydro"
//! workers = 4
//!
//! [grid]
//! n = [64, 64, 64]           # nz = 1 (or two entries) for 2D
//! cells = [4, 4, 4]          # lattice periods per axis; or give `len` directly
//!
//! [params]
//! eps = -0.3
//! dt = 0.1
//! psi_bar = -0.3
//! steps = 500
//! rho = 1.0                  # hydro only
//! gamma = 1.0
//! a0 = 6.283185307179586
//!
//! [init]
//! kind = "two_mode_fcc_3d"   # constant_plus_noise | seeded_crystallites | single_mode_triangular_2d
//! seed = 0
//! a1 = 0.1
//! a2 = 0.05
//!
//! [io]
//! out_dir = "out"
//! diag_every = 10
//! snap_every = 100
//! full = true                # full volume; false writes three mid-plane slices
//!
//! [bench]
//! repetitions = 3
//! workers = [1, 2, 4]
//! steps = 10
//!
//! [transport]
//! timeout_seconds = 30.0
//! buffer_cap = 64
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use slabpfc_core::grid::GridSpec;
use slabpfc_core::hydro::HydroParams;
use slabpfc_core::init::{fcc_period, triangular_periods, Commensurability, InitKind};
use slabpfc_core::pfc::PfcParams;

use crate::transport::TransportConfig;

/// Grid points per lattice period used when neither `len` nor `cells` is given.
pub const DEFAULT_POINTS_PER_PERIOD: usize = 16;

/// Total point count up to which snapshots default to the full volume.
pub const FULL_SNAPSHOT_LIMIT: usize = 128 * 128 * 128;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Pfc,
    Hydro,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Pfc => "pfc",
            Model::Hydro => "hydro",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKindName {
    ConstantPlusNoise,
    SeededCrystallites,
    SingleModeTriangular2d,
    TwoModeFcc3d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Error,
    #[default]
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub len: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub eps: f64,
    pub dt: f64,
    pub psi_bar: f64,
    pub steps: u64,
    pub rho: f64,
    pub gamma: f64,
    pub a0: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        let h = HydroParams::default();
        ParamsConfig {
            eps: h.pfc.eps,
            dt: h.pfc.dt,
            psi_bar: h.pfc.psi_bar,
            steps: h.pfc.n_steps,
            rho: h.rho,
            gamma: h.gamma,
            a0: h.a0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<InitKindName>,
    pub seed: u64,
    pub noise_amplitude: f64,
    /// Amplitude of the triangular pattern and of seeded crystallites.
    pub amplitude: f64,
    pub a1: f64,
    pub a2: f64,
    pub count: usize,
    pub radius: f64,
    pub commensurability: Policy,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            kind: None,
            seed: 0,
            noise_amplitude: 0.01,
            amplitude: 0.3,
            a1: 0.1,
            a2: 0.05,
            count: 4,
            radius: 10.0,
            commensurability: Policy::Warn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoConfig {
    pub out_dir: PathBuf,
    pub diag_every: u64,
    pub snap_every: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full: Option<bool>,
}

impl Default for IoConfig {
    fn default() -> Self {
        IoConfig { out_dir: PathBuf::from("out"), diag_every: 10, snap_every: 100, full: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub repetitions: usize,
    /// Worker counts to time. The benchmark always runs the PFC stepper.
    pub workers: Vec<usize>,
    pub steps: u64,
    pub warmup: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { repetitions: 3, workers: vec![1, 2, 4], steps: 10, warmup: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportSection {
    pub timeout_seconds: f64,
    pub buffer_cap: usize,
}

impl Default for TransportSection {
    fn default() -> Self {
        let t = TransportConfig::default();
        TransportSection { timeout_seconds: t.timeout.as_secs_f64(), buffer_cap: t.buffer_cap }
    }
}

/// Validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_model")]
    pub model: Model,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub grid: GridConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub io: IoConfig,
    #[serde(default)]
    pub bench: BenchConfig,
    #[serde(default)]
    pub transport: TransportSection,
}

fn default_model() -> Model {
    Model::Pfc
}

fn default_workers() -> usize {
    1
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<Model>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub steps: Option<u64>,
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Parses TOML text and resolves defaults.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        raw.resolve()
    }

    pub fn from_toml_for(text: &str, model: Option<Model>) -> Result<Self, ConfigError> {
        let Some(model) = model else { return Self::from_toml(text) };
        let mut raw: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let declared = text.parse::<toml::Table>().map_err(|e| ConfigError::Parse(e.to_string()))?.contains_key("model");
        if declared && raw.model != model {
            return Err(invalid("model", format!("config is for `{}` but the `{model}` subcommand was used", raw.model)));
        }
        raw.model = model;
        raw.resolve()
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self, ConfigError> {
        if let Some(m) = o.model {
            self.model = m;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if let Some(d) = &o.out_dir {
            self.io.out_dir = d.clone();
        }
        if let Some(s) = o.steps {
            self.params.steps = s;
        }
        if let Some(s) = o.seed {
            self.init.seed = s;
        }
        self.resolve()
    }

    /// Fills derived values and checks every constraint.
    pub fn resolve(mut self) -> Result<Self, ConfigError> {
        let n = match self.grid.n.as_slice() {
            [nx, ny] => [*nx, *ny, 1],
            [nx, ny, nz] => [*nx, *ny, *nz],
            _ => return Err(invalid("grid.n", "expected two or three grid sizes")),
        };
        if n.contains(&0) {
            return Err(invalid("grid.n", "grid sizes must be at least 1"));
        }
        let is_2d = n[2] == 1;
        self.grid.n = n.to_vec();

        let periods = if is_2d {
            let [px, py] = triangular_periods();
            [px, py, 1.0]
        } else {
            [fcc_period(); 3]
        };
        let len = match (&self.grid.len, &self.grid.cells) {
            (Some(_), Some(_)) => return Err(invalid("grid", "give either `len` or `cells`, not both")),
            (Some(len), None) => {
                let mut l = [1.0; 3];
                match len.as_slice() {
                    [a, b] if is_2d => l[..2].copy_from_slice(&[*a, *b]),
                    [a, b, c] => l.copy_from_slice(&[*a, *b, *c]),
                    _ => return Err(invalid("grid.len", "expected one length per grid axis")),
                }
                l
            }
            (None, cells) => {
                let cells: Vec<usize> = match cells {
                    Some(c) => c.clone(),
                    None => n.iter().map(|&k| (k / DEFAULT_POINTS_PER_PERIOD).max(1)).collect(),
                };
                let dims = if is_2d { 2 } else { 3 };
                if cells.len() < dims || cells.len() > 3 || cells.contains(&0) {
                    return Err(invalid("grid.cells", "expected one positive cell count per grid axis"));
                }
                let mut l = [1.0; 3];
                for a in 0..dims {
                    l[a] = cells[a] as f64 * periods[a];
                }
                l
            }
        };
        if len.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("grid.len", "lengths must be positive and finite"));
        }
        self.grid.len = Some(if is_2d { len[..2].to_vec() } else { len.to_vec() });
        self.grid.cells = None;
        if n[0].checked_mul(n[1]).and_then(|p| p.checked_mul(n[2])).is_none() {
            return Err(invalid("grid.n", "total point count overflows"));
        }

        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        if self.model == Model::Hydro && !matches!(self.workers, 1 | 4) {
            return Err(invalid("workers", "workers must be 1 or 4 for HYDRO"));
        }
        if self.model == Model::Hydro && is_2d {
            return Err(invalid("grid.n", "the hydrodynamic model is three-dimensional"));
        }
        let p = &self.params;
        for (key, v) in [("params.eps", p.eps), ("params.psi_bar", p.psi_bar)] {
            if !v.is_finite() {
                return Err(invalid(key, "must be finite"));
            }
        }
        for (key, v) in [("params.dt", p.dt), ("params.rho", p.rho), ("params.a0", p.a0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(key, "must be positive and finite"));
            }
        }
        if !(p.gamma.is_finite() && p.gamma >= 0.0) {
            return Err(invalid("params.gamma", "must be non-negative"));
        }

        let kind = self.init.kind.unwrap_or(if is_2d {
            InitKindName::SingleModeTriangular2d
        } else {
            InitKindName::TwoModeFcc3d
        });
        match kind {
            InitKindName::SingleModeTriangular2d if !is_2d => {
                return Err(invalid("init.kind", "single_mode_triangular_2d needs a 2D grid"))
            }
            InitKindName::TwoModeFcc3d if is_2d => return Err(invalid("init.kind", "two_mode_fcc_3d needs a 3D grid")),
            _ => {}
        }
        self.init.kind = Some(kind);
        let i = &self.init;
        for (key, v) in [
            ("init.noise_amplitude", i.noise_amplitude),
            ("init.amplitude", i.amplitude),
            ("init.a1", i.a1),
            ("init.a2", i.a2),
        ] {
            if !v.is_finite() {
                return Err(invalid(key, "must be finite"));
            }
        }
        if !(i.radius.is_finite() && i.radius > 0.0) {
            return Err(invalid("init.radius", "must be positive"));
        }

        if self.io.diag_every == 0 {
            return Err(invalid("io.diag_every", "must be at least 1"));
        }
        if self.io.snap_every == 0 {
            return Err(invalid("io.snap_every", "must be at least 1"));
        }
        let total = n[0] * n[1] * n[2];
        self.io.full.get_or_insert(total <= FULL_SNAPSHOT_LIMIT);

        if self.bench.repetitions < 3 {
            return Err(invalid("bench.repetitions", "must be at least 3"));
        }
        if self.bench.workers.is_empty() || self.bench.workers.contains(&0) {
            return Err(invalid("bench.workers", "expected a non-empty list of positive worker counts"));
        }
        if self.bench.steps == 0 {
            return Err(invalid("bench.steps", "must be at least 1"));
        }
        if !(self.transport.timeout_seconds.is_finite() && self.transport.timeout_seconds > 0.0) {
            return Err(invalid("transport.timeout_seconds", "must be positive"));
        }
        if self.transport.buffer_cap == 0 {
            return Err(invalid("transport.buffer_cap", "must be at least 1"));
        }
        Ok(self)
    }

    pub fn grid_spec(&self) -> GridSpec {
        let n = [self.grid.n[0], self.grid.n[1], self.grid.n[2]];
        let l = self.grid.len.as_deref().expect("resolved config has lengths");
        let len = if l.len() == 2 { [l[0], l[1], 1.0] } else { [l[0], l[1], l[2]] };
        GridSpec::new(n, len).expect("validated grid")
    }

    pub fn pfc_params(&self) -> PfcParams {
        PfcParams { eps: self.params.eps, dt: self.params.dt, psi_bar: self.params.psi_bar, n_steps: self.params.steps }
    }

    pub fn hydro_params(&self) -> HydroParams {
        HydroParams { pfc: self.pfc_params(), rho: self.params.rho, gamma: self.params.gamma, a0: self.params.a0 }
    }

    pub fn init_kind(&self) -> InitKind {
        let i = &self.init;
        match i.kind.expect("resolved config has an init kind") {
            InitKindName::ConstantPlusNoise => InitKind::ConstantPlusNoise { amplitude: i.noise_amplitude },
            InitKindName::SeededCrystallites => {
                InitKind::SeededCrystallites { count: i.count, radius: i.radius, amplitude: i.amplitude }
            }
            InitKindName::SingleModeTriangular2d => InitKind::SingleModeTriangular2d { amplitude: i.amplitude },
            InitKindName::TwoModeFcc3d => InitKind::TwoModeFcc3d { a1: i.a1, a2: i.a2 },
        }
    }

    pub fn commensurability(&self) -> Commensurability {
        match self.init.commensurability {
            Policy::Error => Commensurability::Error,
            Policy::Warn => Commensurability::Warn,
        }
    }

    pub fn transport_config(&self) -> TransportConfig {
        TransportConfig {
            timeout: Duration::from_secs_f64(self.transport.timeout_seconds),
            buffer_cap: self.transport.buffer_cap,
        }
    }

    /// TOML dump of every effective value.
    pub fn resolved_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of [`Self::resolved_toml`].
    pub fn hash(&self) -> String {
        Sha256::digest(self.resolved_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Reads, parses and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    parse_config_for(path, None)
}

/// Like [`parse_config`], for a specific model subcommand: a file without a
/// `model` key takes the subcommand's model, a file naming another model is
/// an error.
pub fn parse_config_for(path: &Path, model: Option<Model>) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    RunConfig::from_toml_for(&text, model)
}
