//! Initial data and projected Barzilai–Borwein descent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{self, EnergyBreakdown, EnergyParams};
use crate::error::{Error, Result};
use crate::mesh::{GridField, InteriorMesh};
use crate::{rot90, Vec2};
use std::sync::Arc;

/// `ρ_ε(x)(x − x0)^⊥/|x − x0|` with `ρ_ε = min(|x − x0|/ε, 1)`, projected on
/// the boundary row.
pub fn vortex_ansatz(mesh: &Arc<InteriorMesh>, x0: Vec2, eps: f64) -> Result<GridField> {
    if !(eps > 0.0) {
        return Err(Error::param("eps", format!("must be positive, got {eps}")));
    }
    if !mesh.curve().contains(x0) {
        return Err(Error::param("x0", format!("({}, {}) is not inside the domain", x0.x, x0.y)));
    }
    let values = mesh
        .positions()
        .iter()
        .map(|&x| {
            let d = x - x0;
            let r = d.norm();
            if r == 0.0 {
                Vec2::zeros()
            } else {
                rot90(d) * ((r / eps).min(1.0) / r)
            }
        })
        .collect();
    let field = GridField::new(mesh.clone(), values)?;
    Ok(energy::project_tangential(&field))
}

/// Independent uniform components in `[−1, 1]`, projected; deterministic per seed.
pub fn random_init(mesh: &Arc<InteriorMesh>, seed: u64) -> GridField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<Vec2> = (0..mesh.len())
        .map(|_| Vec2::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
        .collect();
    energy::project_in_place(mesh, &mut values);
    GridField::from_raw(mesh.clone(), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    /// Bound on the max-norm of the area-normalised gradient. `None` means
    /// `1e−6/ε²`.
    pub tolerance: Option<f64>,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            tolerance: None,
            armijo: 1e-4,
            max_backtracks: 60,
        }
    }
}

impl MinimizeOptions {
    pub fn resolved_tolerance(&self, params: &EnergyParams) -> f64 {
        self.tolerance.unwrap_or(1e-6 / (params.eps * params.eps))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tolerance {
            if !(t > 0.0) {
                return Err(Error::param("tolerance", format!("must be positive, got {t}")));
            }
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::param("armijo", format!("must lie in (0, 1), got {}", self.armijo)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// Line search could not decrease the energy further (round-off floor).
    Stalled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeReport {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub tolerance: f64,
    /// `history[0]` is the initial energy; each further entry adds the exact
    /// energy change of an accepted step.
    pub history: Vec<f64>,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub energy: EnergyBreakdown,
}

impl MinimizeReport {
    pub fn write_history_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iter,total")?;
        for (i, e) in self.history.iter().enumerate() {
            writeln!(out, "{i},{e:e}")?;
        }
        Ok(())
    }
}

fn preconditioned_norm(mesh: &InteriorMesh, g: &[Vec2]) -> f64 {
    g.iter()
        .zip(mesh.weights())
        .map(|(g, w)| g.norm() / w)
        .fold(0.0, f64::max)
}

/// Projected Barzilai–Borwein descent in the area-weighted metric, with a
/// strict Armijo backtracking safeguard.
pub fn minimize(init: &GridField, params: &EnergyParams, opts: &MinimizeOptions) -> Result<(GridField, MinimizeReport)> {
    params.validate()?;
    opts.validate()?;
    let mesh = init.mesh().clone();
    let stencil = mesh.stencil();
    let weights = mesh.weights();
    let tol = opts.resolved_tolerance(params);

    let mut u = init.values().to_vec();
    if opts.max_iterations > 0 {
        energy::project_in_place(&mesh, &mut u);
    }
    let mut gu = stencil.gradient(&u);
    let e0 = energy::breakdown(&mesh, params, &u, &gu);
    if !e0.total.is_finite() {
        return Err(Error::NonFinite("initial energy".into()));
    }
    let mut g = energy::raw_gradient(&mesh, params, &u, &gu);
    let mut gnorm = preconditioned_norm(&mesh, &g);
    let mut history = vec![e0.total];
    let mut total = e0.total;

    if opts.max_iterations == 0 {
        let report = MinimizeReport {
            iterations: 0,
            gradient_norm: gnorm,
            tolerance: tol,
            history,
            converged: false,
            stop_reason: StopReason::MaxIterations,
            energy: e0,
        };
        return Ok((GridField::from_raw(mesh, u), report));
    }

    // explicit-diffusion scale as the first trial step
    let h = mesh.h_min();
    let mut alpha = 0.25 * h * h / (1.0 + params.k);
    let mut iterations = 0;
    let mut stop = StopReason::MaxIterations;

    while iterations < opts.max_iterations {
        if gnorm <= tol {
            stop = StopReason::Converged;
            break;
        }
        let d: Vec<Vec2> = g.iter().zip(weights).map(|(g, w)| -g / *w).collect();
        let slope: f64 = g.iter().zip(&d).map(|(g, d)| g.dot(d)).sum();
        let gd = stencil.gradient(&d);

        let mut accepted = None;
        let mut trial = alpha;
        for _ in 0..=opts.max_backtracks {
            let de = energy::energy_change(&mesh, params, &u, &gu, &d, &gd, trial);
            if !de.is_finite() {
                return Err(Error::Minimize(format!(
                    "non-finite energy change at iteration {iterations} (step {trial:e})"
                )));
            }
            if de < 0.0 && de <= opts.armijo * trial * slope {
                accepted = Some((trial, de));
                break;
            }
            trial *= 0.5;
        }
        let Some((step, de)) = accepted else {
            stop = StopReason::Stalled;
            break;
        };

        for (v, dv) in u.iter_mut().zip(&d) {
            *v += dv * step;
        }
        energy::project_in_place(&mesh, &mut u);
        gu = stencil.gradient(&u);
        let g_new = energy::raw_gradient(&mesh, params, &u, &gu);
        total += de;
        history.push(total);
        iterations += 1;

        // BB1 step in the weighted metric: ⟨s, W s⟩/⟨s, Δg⟩ with s = step·d
        let (mut ss, mut sy) = (0.0, 0.0);
        for n in 0..u.len() {
            let s = d[n] * step;
            ss += weights[n] * s.norm_squared();
            sy += s.dot(&(g_new[n] - g[n]));
        }
        alpha = if sy > 0.0 && (ss / sy).is_finite() { ss / sy } else { 2.0 * step };
        g = g_new;
        gnorm = preconditioned_norm(&mesh, &g);
        if gnorm <= tol {
            stop = StopReason::Converged;
            break;
        }
    }

    let final_energy = energy::breakdown(&mesh, params, &u, &gu);
    if u.iter().any(|v| !(v.x.is_finite() && v.y.is_finite())) {
        return Err(Error::NonFinite("minimizer iterate".into()));
    }
    let report = MinimizeReport {
        iterations,
        gradient_norm: gnorm,
        tolerance: tol,
        history,
        converged: stop == StopReason::Converged,
        stop_reason: stop,
        energy: final_energy,
    };
    Ok((GridField::from_raw(mesh, u), report))
}
