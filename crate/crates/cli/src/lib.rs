//! Command-line front end for the gldiv experiments.
//!
//! Every subcommand resolves a [`RunConfig`] (JSON file, then flags), runs,
//! writes its artifacts into the output directory and finishes with a
//! `manifest.json` listing the resolved configuration and SHA-256 checksums.
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

pub mod config;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use gldiv::diagnostics::{self, SweepOptions, SweepRecord};
use gldiv::energy::{self, EnergyParams};
use gldiv::extension::{self, EllipticityBound};
use gldiv::geometry::{BoundaryCurve, RadialShape, TangentNormalChart};
use gldiv::mesh::{build_collar_mesh, build_interior_mesh, GridField, InteriorMesh};
use gldiv::minimizer::{self, MinimizeReport};
use gldiv::validators::{self, PolyaParams};
use gldiv::Vec2;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

pub use config::{load_config, parse_config, ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable that takes precedence over `--jobs`.
pub const JOBS_ENV: &str = "GLDIV_JOBS";

#[derive(Debug, Parser)]
#[command(name = "gldiv", version, about = "Divergence-penalized Ginzburg-Landau experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the energy from the vortex ansatz or a random start.
    Minimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        eps: Option<f64>,
    },
    /// One minimization per ε; writes sweep.csv and sweep.json.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, strictly decreasing.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        eps: Option<Vec<f64>>,
        /// Worker threads; GLDIV_JOBS overrides this flag.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Minimize, reflect across the boundary and audit the glued system.
    ExtendCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        eps: Option<f64>,
        #[arg(long)]
        n1: Option<usize>,
        #[arg(long)]
        n2: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Interior-maximum report for the quadratic solution of the linear system.
    Polya {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        gamma: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        radius: Option<f64>,
    },
    /// Energy of the vortex ansatz against its closed form.
    Ansatz {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        eps: Option<f64>,
    },
    /// Mesh metadata: sizes, spacing, quadrature area.
    MeshInfo {
        #[command(flatten)]
        common: Common,
    },
}

/// Flags shared by every subcommand. Without `--config` the domain is the
/// unit disk and every other key takes its default (k = 1, nθ = 128,
/// ns = 64, seed 0, output `out`).
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Divergence penalty.
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
    /// Angular cells of the interior mesh.
    #[arg(long)]
    pub n_theta: Option<usize>,
    /// Radial cells of the interior mesh.
    #[arg(long)]
    pub n_s: Option<usize>,
    /// Seed for random initial data.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn record(&self) -> serde_json::Value {
        match self {
            Failure::Config(e) => json!({
                "exit_code": EXIT_CONFIG,
                "kind": "config",
                "path": e.path,
                "line": e.line,
                "column": e.column,
                "message": e.message,
            }),
            Failure::Numerical(m) => json!({
                "exit_code": EXIT_NUMERICAL,
                "kind": "numerical",
                "message": m,
            }),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<gldiv::Error> for Failure {
    fn from(e: gldiv::Error) -> Self {
        use gldiv::Error as E;
        match e {
            E::InvalidParameter { name, reason } => Failure::Config(ConfigError::at(name, reason)),
            E::Curve(m) => Failure::Config(ConfigError::at("domain", m)),
            E::Mesh(m) => Failure::Config(ConfigError::at("mesh", m)),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(format!("i/o error: {e}"))
    }
}

#[derive(Debug, Serialize)]
struct Artifact {
    path: String,
    bytes: usize,
    sha256: String,
}

/// Output directory that remembers what has been written to it.
struct Outputs {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), Failure> {
        let mut text = serde_json::to_vec_pretty(value).map_err(|e| Failure::Numerical(e.to_string()))?;
        text.push(b'\n');
        self.write(name, &text)
    }

    fn finish(self, command: &str, config: &RunConfig, exit_code: i32) -> Result<(), Failure> {
        let manifest = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "exit_code": exit_code,
            "config": config,
            "artifacts": self.artifacts,
        });
        let mut text = serde_json::to_vec_pretty(&manifest).map_err(|e| Failure::Numerical(e.to_string()))?;
        text.push(b'\n');
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Minimize { .. } => "minimize",
            Command::Sweep { .. } => "sweep",
            Command::ExtendCheck { .. } => "extend-check",
            Command::Polya { .. } => "polya",
            Command::Ansatz { .. } => "ansatz",
            Command::MeshInfo { .. } => "mesh-info",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Minimize { common, .. }
            | Command::Sweep { common, .. }
            | Command::ExtendCheck { common, .. }
            | Command::Polya { common, .. }
            | Command::Ansatz { common, .. }
            | Command::MeshInfo { common } => common,
        }
    }

    /// Configuration file (or unit-disk defaults) with the flags applied
    /// and validated.
    pub fn resolve(&self, jobs_env: Option<&str>) -> Result<RunConfig, ConfigError> {
        let c = self.apply_flags(jobs_env)?;
        c.validate()?;
        Ok(c)
    }

    fn apply_flags(&self, jobs_env: Option<&str>) -> Result<RunConfig, ConfigError> {
        let common = self.common();
        let mut c = match &common.config {
            Some(path) => load_config(path)?,
            None => RunConfig::unit_disk(),
        };
        if let Some(v) = &common.out {
            c.output = v.clone();
        }
        if let Some(v) = common.k {
            c.k = v;
        }
        if let Some(v) = common.n_theta {
            c.mesh.n_theta = v;
        }
        if let Some(v) = common.n_s {
            c.mesh.n_s = v;
        }
        if let Some(v) = common.seed {
            c.seed = v;
        }
        match self {
            Command::Minimize { eps, .. } | Command::Ansatz { eps, .. } => {
                if eps.is_some() {
                    c.eps = *eps;
                }
            }
            Command::ExtendCheck { eps, n1, n2, samples, .. } => {
                if eps.is_some() {
                    c.eps = *eps;
                }
                if let Some(v) = n1 {
                    c.extend.n1 = *v;
                }
                if let Some(v) = n2 {
                    c.extend.n2 = *v;
                }
                if let Some(v) = samples {
                    c.extend.samples = *v;
                }
            }
            Command::Sweep { eps, jobs, .. } => {
                if eps.is_some() {
                    c.eps_list = eps.clone();
                }
                if let Some(v) = jobs {
                    c.sweep.jobs = *v;
                }
                if let Some(text) = jobs_env {
                    c.sweep.jobs = text
                        .trim()
                        .parse()
                        .map_err(|_| ConfigError::at(JOBS_ENV, format!("expected a positive integer, got {text:?}")))?;
                }
            }
            Command::Polya { beta, gamma, radius, .. } => {
                if let Some(v) = beta {
                    c.polya.beta = *v;
                }
                if let Some(v) = gamma {
                    c.polya.gamma = *v;
                }
                if let Some(v) = radius {
                    c.polya.radius = *v;
                }
            }
            Command::MeshInfo { .. } => {}
        }
        Ok(c)
    }
}

/// Runs a parsed command line and returns the process exit code. Errors are
/// printed to stderr as JSON and, when the output directory is known,
/// written to `error.json` next to a manifest.
pub fn run(cli: Cli) -> i32 {
    let jobs_env = std::env::var(JOBS_ENV).ok();
    let name = cli.command.name();
    let config = match cli.command.apply_flags(jobs_env.as_deref()) {
        Ok(c) => c,
        Err(e) => return report_failure(Failure::Config(e), None),
    };
    let mut out = match Outputs::new(&config.output) {
        Ok(o) => o,
        Err(f) => return report_failure(f, None),
    };
    let result = match config.validate() {
        Ok(()) => execute(&cli.command, &config, &mut out),
        Err(e) => Err(Failure::Config(e)),
    };
    let code = match &result {
        Ok(code) => *code,
        Err(f) => f.exit_code(),
    };
    if let Err(f) = &result {
        let _ = out.write_json("error.json", &f.record());
    }
    let _ = out.finish(name, &config, code);
    match result {
        Ok(code) => code,
        Err(f) => report_failure(f, Some(&config.output)),
    }
}

fn report_failure(f: Failure, dir: Option<&Path>) -> i32 {
    let mut record = f.record();
    if let Some(d) = dir {
        record["output"] = json!(d.display().to_string());
    }
    eprintln!("{record}");
    f.exit_code()
}

fn require_eps(config: &RunConfig, command: &str) -> Result<f64, Failure> {
    config
        .eps
        .ok_or_else(|| Failure::Config(ConfigError::at("eps", format!("required by {command} (flag --eps or config key)"))))
}

fn curve_of(config: &RunConfig) -> Result<Arc<BoundaryCurve>, Failure> {
    Ok(Arc::new(BoundaryCurve::new(config.domain.clone())?))
}

fn mesh_of(config: &RunConfig) -> Result<Arc<InteriorMesh>, Failure> {
    Ok(build_interior_mesh(curve_of(config)?, config.mesh.n_theta, config.mesh.n_s)?)
}

fn is_unit_disk(shape: &RadialShape) -> bool {
    match shape {
        RadialShape::Fourier { a0, cos, sin } => *a0 == 1.0 && cos.iter().chain(sin).all(|c| *c == 0.0),
        RadialShape::Ellipse { a, b } => *a == 1.0 && *b == 1.0,
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn minimize_from_config(config: &RunConfig, eps: f64) -> Result<(GridField, MinimizeReport), Failure> {
    let mesh = mesh_of(config)?;
    let params = EnergyParams::new(eps, config.k)?;
    let init = match config.init.kind {
        config::InitKind::Ansatz => minimizer::vortex_ansatz(&mesh, Vec2::new(config.init.center[0], config.init.center[1]), eps)?,
        config::InitKind::Random => minimizer::random_init(&mesh, config.seed),
    };
    Ok(minimizer::minimize(&init, &params, &config.minimize)?)
}

#[derive(Serialize)]
struct MinimizeSummary<'a> {
    eps: f64,
    k: f64,
    iterations: usize,
    converged: bool,
    stop_reason: minimizer::StopReason,
    gradient_norm: f64,
    tolerance: f64,
    energy: &'a energy::EnergyBreakdown,
    sup_u: f64,
    degree: Option<i64>,
}

fn execute(command: &Command, config: &RunConfig, out: &mut Outputs) -> Result<i32, Failure> {
    match command {
        Command::Minimize { .. } => {
            let eps = require_eps(config, "minimize")?;
            let (u, report) = minimize_from_config(config, eps)?;
            let chart = TangentNormalChart::new(u.mesh().curve().clone())?;
            let degree = diagnostics::winding_number(&u, &diagnostics::Contour::default_for(&chart)).ok();
            out.write("field.csv", &csv_bytes(|b| u.write_csv(b))?)?;
            out.write("history.csv", &csv_bytes(|b| report.write_history_csv(b))?)?;
            out.write_json(
                "report.json",
                &MinimizeSummary {
                    eps,
                    k: config.k,
                    iterations: report.iterations,
                    converged: report.converged,
                    stop_reason: report.stop_reason,
                    gradient_norm: report.gradient_norm,
                    tolerance: report.tolerance,
                    energy: &report.energy,
                    sup_u: diagnostics::sup_norm(&u),
                    degree,
                },
            )?;
            Ok(EXIT_OK)
        }
        Command::Sweep { .. } => {
            let eps = config
                .eps_list
                .clone()
                .ok_or_else(|| ConfigError::at("eps_list", "required by sweep (flag --eps or config key)"))?;
            let opts = SweepOptions {
                k: config.k,
                mesh: config.sweep.mesh,
                minimize: config.minimize,
                warm_start: config.sweep.warm_start,
                window_radius: config.sweep.window_radius,
                window_cells: config.sweep.window_cells,
            };
            let records = diagnostics::sweep(curve_of(config)?, &eps, &opts, config.sweep.jobs)?;
            write_sweep(out, &records)?;
            let failed: Vec<String> = records
                .iter()
                .filter_map(|r| match &r.status {
                    diagnostics::RecordStatus::Failed(m) => Some(format!("eps = {}: {m}", r.eps)),
                    _ => None,
                })
                .collect();
            if failed.is_empty() {
                Ok(EXIT_OK)
            } else {
                Err(Failure::Numerical(failed.join("; ")))
            }
        }
        Command::ExtendCheck { .. } => {
            let eps = require_eps(config, "extend-check")?;
            let (u, report) = minimize_from_config(config, eps)?;
            let chart = Arc::new(TangentNormalChart::new(u.mesh().curve().clone())?);
            let collar = build_collar_mesh(chart.clone(), config.extend.n1, config.extend.n2)?;
            let ext = extension::reflect_extend(&u, &collar)?;
            out.write("extension.csv", &csv_bytes(|b| ext.write_csv(b))?)?;

            let bound = if chart.curve().min_curvature() >= 0.0 {
                EllipticityBound::Convex
            } else {
                EllipticityBound::Exact
            };
            let audit = extension::ellipticity_audit(&chart, config.k, config.extend.samples, config.seed, bound)?;
            out.write_json("ellipticity.json", &audit)?;

            let params = EnergyParams::new(eps, config.k)?;
            let mut bumps = Vec::new();
            for (kind, interior) in [("interior", true), ("straddling", false)] {
                for b in extension::standard_bumps(&chart, interior) {
                    let r = extension::weak_glued_residual(&ext, &b, &params)?;
                    bumps.push(json!({
                        "kind": kind,
                        "bump": b,
                        "lhs": r.lhs,
                        "rhs": r.rhs,
                        "remainder": r.remainder,
                        "growth_constant": r.growth_constant(),
                    }));
                }
            }
            out.write_json(
                "gluing.json",
                &json!({
                    "eps": eps,
                    "k": config.k,
                    "minimize_converged": report.converged,
                    "r0": chart.r0(),
                    "r1": chart.r1(),
                    "bumps": bumps,
                }),
            )?;
            Ok(EXIT_OK)
        }
        Command::Polya { .. } => {
            let params = PolyaParams::new(config.k, config.polya.beta, config.polya.gamma)?;
            let report = validators::interior_max_check(params, config.polya.radius)?;
            out.write_json("polya.json", &report)?;
            println!("{}", serde_json::to_string(&report).map_err(|e| Failure::Numerical(e.to_string()))?);
            Ok(EXIT_OK)
        }
        Command::Ansatz { .. } => {
            let eps = require_eps(config, "ansatz")?;
            let mesh = mesh_of(config)?;
            let center = Vec2::new(config.init.center[0], config.init.center[1]);
            let u = minimizer::vortex_ansatz(&mesh, center, eps)?;
            let measured = energy::energy(&u, &EnergyParams::new(eps, config.k)?)?;
            let exact = if is_unit_disk(&config.domain) && center == Vec2::zeros() && eps < 1.0 {
                Some(validators::ansatz_energy_closed_form(eps, config.k)?)
            } else {
                None
            };
            let summary = json!({
                "eps": eps,
                "k": config.k,
                "n_theta": config.mesh.n_theta,
                "n_s": config.mesh.n_s,
                "measured": measured,
                "closed_form": exact,
                "relative_error": exact.map(|e| (measured.total - e.total) / e.total),
                "divergence_fraction": measured.divergence / measured.total,
            });
            out.write_json("ansatz.json", &summary)?;
            println!("{summary}");
            Ok(EXIT_OK)
        }
        Command::MeshInfo { .. } => {
            let mesh = mesh_of(config)?;
            let meta = mesh.metadata();
            out.write_json("mesh.json", &meta)?;
            println!("{}", serde_json::to_string(&meta).map_err(|e| Failure::Numerical(e.to_string()))?);
            Ok(EXIT_OK)
        }
    }
}

fn write_sweep(out: &mut Outputs, records: &[SweepRecord]) -> Result<(), Failure> {
    out.write("sweep.csv", &csv_bytes(|b| diagnostics::write_sweep_csv(records, b))?)?;
    out.write_json("sweep.json", &records)
}
