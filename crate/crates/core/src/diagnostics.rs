//! Norms, degree counting, ε-sweeps and rescaled windows.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::{self, EnergyBreakdown, EnergyParams};
use crate::error::{Error, Result};
use crate::extension::extended_value;
use crate::geometry::{BoundaryCurve, TangentNormalChart};
use crate::mesh::{build_interior_mesh, discrete_gradient, GridField};
use crate::minimizer::{minimize, vortex_ansatz, MinimizeOptions};
use crate::Vec2;

/// Samples per closed contour in [`winding_number`].
pub const CONTOUR_SAMPLES: usize = 512;

/// Modulus below which a contour sample counts as hitting a defect core.
pub const MIN_CONTOUR_MODULUS: f64 = 0.5;

/// `max |u|` over the nodes.
pub fn sup_norm(field: &GridField) -> f64 {
    field.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Largest Frobenius norm of the discrete gradient, skipping the boundary
/// row where the one-sided stencil is only first-order accurate in its
/// derivative.
pub fn lipschitz_proxy(field: &GridField) -> f64 {
    let mesh = field.mesh();
    discrete_gradient(field)
        .iter()
        .enumerate()
        .filter(|(n, _)| !mesh.is_boundary(*n))
        .map(|(_, g)| g.norm())
        .fold(0.0, f64::max)
}

/// Node of smallest modulus (first one on ties).
pub fn locate_defect(field: &GridField) -> Vec2 {
    let mut best = (f64::INFINITY, 0);
    for (n, v) in field.values().iter().enumerate() {
        if v.norm() < best.0 {
            best = (v.norm(), n);
        }
    }
    field.mesh().positions()[best.1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Contour {
    Circle { center: [f64; 2], radius: f64 },
    /// The curve at signed distance `y2` from the boundary (inside for `y2 > 0`).
    ChartOffset { y2: f64 },
}

impl Contour {
    /// Offset at half the collar width, `y2 = r₁/2`.
    pub fn default_for(chart: &TangentNormalChart) -> Self {
        Contour::ChartOffset { y2: 0.5 * chart.r1() }
    }

    fn point(&self, curve: &BoundaryCurve, t: f64) -> Vec2 {
        match *self {
            Contour::Circle { center, radius } => {
                let a = 2.0 * PI * t;
                Vec2::new(center[0] + radius * a.cos(), center[1] + radius * a.sin())
            }
            Contour::ChartOffset { y2 } => {
                let y1 = t * curve.perimeter();
                curve.boundary_point(y1) + curve.frame(y1).normal * y2
            }
        }
    }
}

/// Degree of `u/|u|` along a closed counter-clockwise contour, as the sum of
/// principal-branch angle increments over [`CONTOUR_SAMPLES`] samples.
pub fn winding_number(field: &GridField, contour: &Contour) -> Result<i64> {
    let curve = field.mesh().curve();
    let mut angles = Vec::with_capacity(CONTOUR_SAMPLES);
    for m in 0..CONTOUR_SAMPLES {
        let x = contour.point(curve, m as f64 / CONTOUR_SAMPLES as f64);
        let u = field.value_at(x)?;
        let modulus = u.norm();
        if !(modulus >= MIN_CONTOUR_MODULUS) {
            return Err(Error::DefectOnContour { modulus, x: x.x, y: x.y });
        }
        angles.push(u.y.atan2(u.x));
    }
    let mut total = 0.0;
    for m in 0..CONTOUR_SAMPLES {
        let d = angles[(m + 1) % CONTOUR_SAMPLES] - angles[m];
        total += (d + PI).rem_euclid(2.0 * PI) - PI;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Region {
    Domain,
    Disk { center: [f64; 2], radius: f64 },
}

/// `(∫ |u|⁴)^{1/4}` over the nodes inside `region`.
pub fn l4_norm(field: &GridField, region: &Region) -> f64 {
    let mesh = field.mesh();
    let inside = |x: &Vec2| match *region {
        Region::Domain => true,
        Region::Disk { center, radius } => (x - Vec2::new(center[0], center[1])).norm() <= radius,
    };
    mesh.positions()
        .iter()
        .zip(field.values())
        .zip(mesh.weights())
        .filter(|((x, _), _)| inside(x))
        .map(|((_, u), w)| w * u.norm_squared().powi(2))
        .sum::<f64>()
        .powf(0.25)
}

/// `Û(z) = U(x0 + εz)` sampled at the cell centres of a uniform grid on
/// `[−R, R]²` that lie in the ball `|z| ≤ R`, `U` being the reflection
/// extension of the field.
#[derive(Debug, Clone, Serialize)]
pub struct RescaledWindow {
    pub center: [f64; 2],
    pub eps: f64,
    pub radius: f64,
    pub n: usize,
    /// Row-major, `values[j·n + i]` at `z = (z_i, z_j)`; `None` outside the ball.
    pub values: Vec<Option<[f64; 2]>>,
}

impl RescaledWindow {
    pub fn dz(&self) -> f64 {
        2.0 * self.radius / self.n as f64
    }

    pub fn z(&self, i: usize) -> f64 {
        -self.radius + (i as f64 + 0.5) * self.dz()
    }

    pub fn value(&self, i: usize, j: usize) -> Option<Vec2> {
        self.values[j * self.n + i].map(|v| Vec2::new(v[0], v[1]))
    }

    /// `(∫_{B₁(0)} |Û|⁴ dz)^{1/4}` by cell-centre quadrature.
    pub fn l4_unit_ball(&self) -> f64 {
        let area = self.dz() * self.dz();
        let mut acc = 0.0;
        for j in 0..self.n {
            for i in 0..self.n {
                if self.z(i).hypot(self.z(j)) < 1.0 {
                    if let Some(v) = self.value(i, j) {
                        acc += area * v.norm_squared().powi(2);
                    }
                }
            }
        }
        acc.powf(0.25)
    }

    /// Largest Frobenius norm of the central-difference gradient of `Û`
    /// over the cells whose four neighbours are sampled.
    pub fn max_gradient(&self) -> f64 {
        let h = 2.0 * self.dz();
        let mut best: f64 = 0.0;
        for j in 1..self.n - 1 {
            for i in 1..self.n - 1 {
                let (Some(e), Some(w), Some(n), Some(s)) =
                    (self.value(i + 1, j), self.value(i - 1, j), self.value(i, j + 1), self.value(i, j - 1))
                else {
                    continue;
                };
                let (dx, dy) = ((e - w) / h, (n - s) / h);
                best = best.max((dx.norm_squared() + dy.norm_squared()).sqrt());
            }
        }
        best
    }
}

pub fn rescale_window(field: &GridField, chart: &TangentNormalChart, x0: Vec2, eps: f64, radius: f64, n: usize) -> Result<RescaledWindow> {
    if !(eps > 0.0 && radius > 0.0) {
        return Err(Error::param("window", format!("need eps > 0 and radius > 0, got {eps}, {radius}")));
    }
    if n < 3 {
        return Err(Error::param("n", format!("window needs at least 3 cells per side, got {n}")));
    }
    let dz = 2.0 * radius / n as f64;
    let mut values = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let z = Vec2::new(-radius + (i as f64 + 0.5) * dz, -radius + (j as f64 + 0.5) * dz);
            if z.norm() > radius {
                values.push(None);
                continue;
            }
            let u = extended_value(field, chart, x0 + z * eps)?;
            values.push(Some([u.x, u.y]));
        }
    }
    Ok(RescaledWindow {
        center: [x0.x, x0.y],
        eps,
        radius,
        n,
        values,
    })
}

/// Angular and radial resolution of the meshes used by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshPolicy {
    pub n_theta: usize,
    pub min_n_s: usize,
    /// Required core resolution: radial spacing at most `ε/points_per_eps`.
    pub points_per_eps: f64,
}

impl Default for MeshPolicy {
    fn default() -> Self {
        Self {
            n_theta: 64,
            min_n_s: 16,
            points_per_eps: 4.0,
        }
    }
}

impl MeshPolicy {
    /// Rows needed so that `ρ_max Δs ≤ ε/points_per_eps` with `Δs = 2/(2n_s − 1)`.
    pub fn n_s(&self, curve: &BoundaryCurve, eps: f64) -> usize {
        let need = (2.0 * self.points_per_eps * curve.max_radius() / eps + 1.0) / 2.0;
        (need.ceil() as usize).max(self.min_n_s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOptions {
    pub k: f64,
    pub mesh: MeshPolicy,
    pub minimize: MinimizeOptions,
    /// Start each ε from the previous minimizer instead of the ansatz; forces
    /// sequential execution.
    pub warm_start: bool,
    /// Radius `R` of the rescaled windows, in units of ε.
    pub window_radius: f64,
    pub window_cells: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            k: 1.0,
            mesh: MeshPolicy::default(),
            minimize: MinimizeOptions::default(),
            warm_start: false,
            window_radius: 1.0,
            window_cells: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Converged,
    NotConverged,
    Failed(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub sup_u: f64,
    pub eps_lip: f64,
    pub energy: EnergyBreakdown,
    /// `E − π ln(1/ε)`.
    pub excess: f64,
    /// `∫ (k/2)(div u)² + (1/8ε²)(|u|² − 1)²`.
    pub combo: f64,
    pub degree: Option<i64>,
    pub iterations: usize,
    pub status: RecordStatus,
    /// `‖Û‖_{L⁴(B₁)}` around the defect.
    pub l4_center: Option<f64>,
    /// `‖Û‖_{L⁴(B₁)}` around the boundary point at `y1 = 0`.
    pub l4_boundary: Option<f64>,
    pub n_theta: usize,
    pub n_s: usize,
}

impl SweepRecord {
    fn failed(eps: f64, n_theta: usize, n_s: usize, message: String) -> Self {
        Self {
            eps,
            sup_u: f64::NAN,
            eps_lip: f64::NAN,
            energy: EnergyBreakdown::new(f64::NAN, f64::NAN, f64::NAN),
            excess: f64::NAN,
            combo: f64::NAN,
            degree: None,
            iterations: 0,
            status: RecordStatus::Failed(message),
            l4_center: None,
            l4_boundary: None,
            n_theta,
            n_s,
        }
    }

    pub fn is_ok(&self) -> bool {
        !matches!(self.status, RecordStatus::Failed(_))
    }
}

pub const SWEEP_CSV_HEADER: &str = "eps,sup_u,eps_lip,e_dir,e_div,e_pot,e_total,excess,combo,degree,iters";

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in records {
        let degree = r.degree.map(|d| d.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{}",
            r.eps,
            r.sup_u,
            r.eps_lip,
            r.energy.dirichlet,
            r.energy.divergence,
            r.energy.potential,
            r.energy.total,
            r.excess,
            r.combo,
            degree,
            r.iterations
        )?;
    }
    Ok(())
}

fn check_eps_list(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::param("eps", "list is empty"));
    }
    if let Some(bad) = eps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::param("eps", format!("entries must be positive, got {bad}")));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("eps", "list must be strictly decreasing"));
    }
    Ok(())
}

fn run_one(curve: &Arc<BoundaryCurve>, chart: &TangentNormalChart, eps: f64, opts: &SweepOptions, warm: Option<&GridField>) -> (SweepRecord, Option<GridField>) {
    let n_theta = opts.mesh.n_theta;
    let n_s = opts.mesh.n_s(curve, eps);
    let attempt = || -> Result<(SweepRecord, GridField)> {
        let params = EnergyParams::new(eps, opts.k)?;
        let mesh = build_interior_mesh(curve.clone(), n_theta, n_s)?;
        let init = match warm {
            Some(prev) => GridField::from_fn(mesh.clone(), |x| prev.value_at(x).unwrap_or_else(|_| Vec2::zeros()))?,
            None => vortex_ansatz(&mesh, Vec2::zeros(), eps)?,
        };
        let (u, report) = minimize(&init, &params, &opts.minimize)?;
        let e = report.energy;
        let degree = winding_number(&u, &Contour::default_for(chart)).ok();
        let window = |x0: Vec2| {
            rescale_window(&u, chart, x0, eps, opts.window_radius, opts.window_cells)
                .ok()
                .map(|w| w.l4_unit_ball())
        };
        let record = SweepRecord {
            eps,
            sup_u: sup_norm(&u),
            eps_lip: eps * lipschitz_proxy(&u),
            energy: e,
            excess: e.total - PI * (1.0 / eps).ln(),
            combo: e.divergence + 0.5 * e.potential,
            degree,
            iterations: report.iterations,
            status: if report.converged { RecordStatus::Converged } else { RecordStatus::NotConverged },
            l4_center: window(locate_defect(&u)),
            l4_boundary: window(curve.boundary_point(0.0)),
            n_theta,
            n_s,
        };
        if [record.sup_u, record.eps_lip, record.energy.total].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sweep record at eps = {eps}")));
        }
        Ok((record, u))
    };
    match attempt() {
        Ok((r, u)) => (r, Some(u)),
        Err(e) => (SweepRecord::failed(eps, n_theta, n_s, e.to_string()), None),
    }
}

/// One minimization per ε, started from the centred vortex ansatz unless
/// `warm_start` is set. Failures are recorded and the sweep continues.
/// Records come back in the order of `eps`; the result does not depend on
/// `jobs`.
pub fn sweep(curve: Arc<BoundaryCurve>, eps: &[f64], opts: &SweepOptions, jobs: usize) -> Result<Vec<SweepRecord>> {
    check_eps_list(eps)?;
    EnergyParams::new(eps[0], opts.k)?;
    opts.minimize.validate()?;
    let chart = TangentNormalChart::new(curve.clone())?;

    if opts.warm_start {
        let mut prev: Option<GridField> = None;
        let mut out = Vec::with_capacity(eps.len());
        for &e in eps {
            let (r, u) = run_one(&curve, &chart, e, opts, prev.as_ref());
            if u.is_some() {
                prev = u;
            }
            out.push(r);
        }
        return Ok(out);
    }
    Ok(run_parallel(&curve, &chart, eps, opts, jobs.max(1)))
}

#[cfg(feature = "parallel")]
fn run_parallel(curve: &Arc<BoundaryCurve>, chart: &TangentNormalChart, eps: &[f64], opts: &SweepOptions, jobs: usize) -> Vec<SweepRecord> {
    use rayon::prelude::*;
    let work = || eps.par_iter().map(|&e| run_one(curve, chart, e, opts, None).0).collect();
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(work),
        Err(_) => eps.iter().map(|&e| run_one(curve, chart, e, opts, None).0).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_parallel(curve: &Arc<BoundaryCurve>, chart: &TangentNormalChart, eps: &[f64], opts: &SweepOptions, _jobs: usize) -> Vec<SweepRecord> {
    eps.iter().map(|&e| run_one(curve, chart, e, opts, None).0).collect()
}

/// Ordinary least-squares slope of `ys` against `xs`; at least four points.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::param("ys", format!("length {} differs from xs length {}", ys.len(), xs.len())));
    }
    if xs.len() < 4 {
        return Err(Error::param("xs", format!("a slope fit needs at least 4 points, got {}", xs.len())));
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::param("xs", "all abscissae coincide"));
    }
    Ok(sxy / sxx)
}

/// Slope of total energy against `ln(1/ε)` over the successful records.
pub fn energy_slope(records: &[SweepRecord]) -> Result<f64> {
    let ok: Vec<&SweepRecord> = records.iter().filter(|r| r.is_ok()).collect();
    let xs: Vec<f64> = ok.iter().map(|r| (1.0 / r.eps).ln()).collect();
    let ys: Vec<f64> = ok.iter().map(|r| r.energy.total).collect();
    ols_slope(&xs, &ys)
}

/// Smallest `C` with `|E − π ln(1/ε)| ≤ C` for every successful record.
pub fn sandwich_constant(records: &[SweepRecord]) -> f64 {
    records.iter().filter(|r| r.is_ok()).map(|r| r.excess.abs()).fold(0.0, f64::max)
}

/// `max/min` of a positive quantity over the successful records.
pub fn spread(records: &[SweepRecord], f: impl Fn(&SweepRecord) -> f64) -> f64 {
    let vals: Vec<f64> = records.iter().filter(|r| r.is_ok()).map(f).collect();
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// The energy of a field through the public entry point, as used by sweeps.
pub fn energy_of(field: &GridField, eps: f64, k: f64) -> Result<EnergyBreakdown> {
    energy::energy(field, &EnergyParams::new(eps, k)?)
}
