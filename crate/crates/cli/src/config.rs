//! Run configuration: JSON on disk, overridden by command-line flags.

use std::path::{Path, PathBuf};

use gldiv::diagnostics::MeshPolicy;
use gldiv::geometry::RadialShape;
use gldiv::minimizer::MinimizeOptions;
use serde::{Deserialize, Serialize};

/// A configuration problem, reported with exit code 2.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigError {
    /// Dotted key path (`.` for the document root), when known.
    pub path: Option<String>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn at(path: &str, message: impl Into<String>) -> Self {
        Self {
            path: Some(path.to_string()),
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some(p) = &self.path {
            write!(f, "{p}: ")?;
        }
        write!(f, "{}", self.message)?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " (line {l}, column {c})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSizes {
    pub n_theta: usize,
    pub n_s: usize,
}

impl Default for MeshSizes {
    fn default() -> Self {
        Self { n_theta: 128, n_s: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Ansatz,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    pub kind: InitKind,
    /// Vortex centre for the ansatz.
    pub center: [f64; 2],
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            kind: InitKind::Ansatz,
            center: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub mesh: MeshPolicy,
    pub warm_start: bool,
    pub window_radius: f64,
    pub window_cells: usize,
    pub jobs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            mesh: MeshPolicy::default(),
            warm_start: false,
            window_radius: 1.0,
            window_cells: 32,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtendConfig {
    /// Collar columns.
    pub n1: usize,
    /// Collar rows, split evenly across the boundary.
    pub n2: usize,
    /// Random samples in the ellipticity audit.
    pub samples: usize,
}

impl Default for ExtendConfig {
    fn default() -> Self {
        Self {
            n1: 256,
            n2: 32,
            samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolyaConfig {
    pub beta: f64,
    pub gamma: f64,
    pub radius: f64,
}

impl Default for PolyaConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            gamma: 1.0,
            radius: 0.4,
        }
    }
}

fn default_k() -> f64 {
    1.0
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Radial profile of the boundary, e.g. `{"fourier": {"a0": 1.0}}`.
    pub domain: RadialShape,
    #[serde(default)]
    pub mesh: MeshSizes,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub minimize: MinimizeOptions,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub extend: ExtendConfig,
    #[serde(default)]
    pub polya: PolyaConfig,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

impl RunConfig {
    /// Unit disk with every default filled in.
    pub fn unit_disk() -> Self {
        Self {
            domain: RadialShape::Fourier {
                a0: 1.0,
                cos: vec![],
                sin: vec![],
            },
            mesh: MeshSizes::default(),
            eps: None,
            eps_list: None,
            k: default_k(),
            seed: 0,
            init: InitConfig::default(),
            minimize: MinimizeOptions::default(),
            sweep: SweepConfig::default(),
            extend: ExtendConfig::default(),
            polya: PolyaConfig::default(),
            output: default_output(),
        }
    }

    /// Checks the fields shared by every subcommand.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |path: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::at(path, format!("must be positive and finite, got {v}")))
            }
        };
        positive("k", self.k)?;
        if let Some(e) = self.eps {
            positive("eps", e)?;
        }
        if let Some(list) = &self.eps_list {
            if list.is_empty() {
                return Err(ConfigError::at("eps_list", "must not be empty"));
            }
            for (i, e) in list.iter().enumerate() {
                positive(&format!("eps_list[{i}]"), *e)?;
            }
            if list.windows(2).any(|w| w[1] >= w[0]) {
                return Err(ConfigError::at("eps_list", "must be strictly decreasing"));
            }
        }
        if self.mesh.n_theta < 16 || self.mesh.n_theta % 2 != 0 {
            return Err(ConfigError::at("mesh.n_theta", format!("must be even and at least 16, got {}", self.mesh.n_theta)));
        }
        if self.mesh.n_s < 8 {
            return Err(ConfigError::at("mesh.n_s", format!("must be at least 8, got {}", self.mesh.n_s)));
        }
        if let Some(t) = self.minimize.tolerance {
            positive("minimize.tolerance", t)?;
        }
        if !(self.minimize.armijo > 0.0 && self.minimize.armijo < 1.0) {
            return Err(ConfigError::at("minimize.armijo", "must lie in (0, 1)"));
        }
        if self.sweep.jobs == 0 {
            return Err(ConfigError::at("sweep.jobs", "must be at least 1"));
        }
        positive("sweep.window_radius", self.sweep.window_radius)?;
        if self.extend.n2 < 2 || self.extend.n2 % 2 != 0 {
            return Err(ConfigError::at("extend.n2", format!("must be even and at least 2, got {}", self.extend.n2)));
        }
        if self.extend.n1 < 8 {
            return Err(ConfigError::at("extend.n1", format!("must be at least 8, got {}", self.extend.n1)));
        }
        positive("polya.radius", self.polya.radius)?;
        Ok(())
    }
}

/// Parses a configuration document. Whitespace-only input counts as `{}`,
/// so the error names the first required key.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let text = if text.trim().is_empty() { "{}" } else { text };
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ConfigError {
            path: Some(path),
            line: Some(inner.line()),
            column: Some(inner.column()),
            message: inner.to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: None,
        line: None,
        column: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config(&text)
}
