//! Closed-form oracles.
//!
//! The quadratic field `u = (α/2 (x² + y²) − β, −γxy)` with `α = kγ/(k + 2)`
//! solves `−Δu − k∇(div u) = 0`, yet for small disks `|u|` peaks at the
//! centre: there is no maximum principle for this system. The centred vortex
//! ansatz on the unit disk has an energy that can be integrated by hand.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::energy::{linear_residual, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::mesh::{GridField, InteriorMesh};
use crate::{Mat2, Vec2};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolyaParams {
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl PolyaParams {
    /// `α` derived from `k` and `γ`; requires `k ≠ −2`.
    pub fn new(k: f64, beta: f64, gamma: f64) -> Result<Self> {
        if k == -2.0 {
            return Err(Error::param("k", "k = −2 leaves α free; use PolyaParams::critical"));
        }
        Ok(Self {
            k,
            alpha: k * gamma / (k + 2.0),
            beta,
            gamma,
        })
    }

    /// The `k = −2` family: `γ = 0`, `α` and `β` free.
    pub fn critical(alpha: f64, beta: f64) -> Self {
        Self {
            k: -2.0,
            alpha,
            beta,
            gamma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.k, self.alpha, self.beta, self.gamma].iter().all(|v| v.is_finite()) {
            return Err(Error::param("polya", "coefficients must be finite"));
        }
        if self.k == -2.0 {
            if self.gamma != 0.0 {
                return Err(Error::param("gamma", "must vanish when k = −2"));
            }
        } else {
            let lhs = self.alpha * (self.k + 2.0);
            let rhs = self.k * self.gamma;
            if (lhs - rhs).abs() > 1e-14 * (lhs.abs() + rhs.abs()).max(1.0) {
                return Err(Error::param("alpha", format!("α(k + 2) = {lhs} but kγ = {rhs}")));
            }
        }
        Ok(())
    }
}

/// Evaluator for the quadratic field with arbitrary coefficients. Use
/// [`polya_field`] for the checked constructor.
#[derive(Debug, Clone, Copy)]
pub struct PolyaField {
    pub params: PolyaParams,
}

pub fn polya_field(params: PolyaParams) -> Result<PolyaField> {
    params.validate()?;
    Ok(PolyaField { params })
}

impl PolyaField {
    /// Skips the `α` consistency check, for probing mismatched coefficients.
    pub fn unchecked(params: PolyaParams) -> Self {
        Self { params }
    }

    pub fn eval(&self, x: Vec2) -> Vec2 {
        let p = &self.params;
        Vec2::new(0.5 * p.alpha * x.norm_squared() - p.beta, -p.gamma * x.x * x.y)
    }

    /// Entry `(i, a)` is `∂_a u_i`.
    pub fn gradient(&self, x: Vec2) -> Mat2 {
        let p = &self.params;
        Mat2::new(p.alpha * x.x, p.alpha * x.y, -p.gamma * x.y, -p.gamma * x.x)
    }

    /// Hessians of the two components.
    pub fn hessians(&self, _x: Vec2) -> [Mat2; 2] {
        let p = &self.params;
        [Mat2::new(p.alpha, 0.0, 0.0, p.alpha), Mat2::new(0.0, -p.gamma, -p.gamma, 0.0)]
    }

    pub fn divergence(&self, x: Vec2) -> f64 {
        self.gradient(x).trace()
    }

    pub fn laplacian(&self, x: Vec2) -> Vec2 {
        let [h1, h2] = self.hessians(x);
        Vec2::new(h1.trace(), h2.trace())
    }

    /// `∇(div u)`: row sums of the Hessians along the matching index.
    pub fn grad_div(&self, x: Vec2) -> Vec2 {
        let [h1, h2] = self.hessians(x);
        Vec2::new(h1[(0, 0)] + h2[(1, 0)], h1[(0, 1)] + h2[(1, 1)])
    }

    /// `−Δu − k∇(div u)` from the analytic derivatives.
    pub fn residual(&self, x: Vec2) -> Vec2 {
        -self.laplacian(x) - self.grad_div(x) * self.params.k
    }
}

/// Max of the analytic residual norm over the given points.
pub fn polya_residual(field: &PolyaField, points: &[Vec2]) -> f64 {
    points.iter().map(|&x| field.residual(x).norm()).fold(0.0, f64::max)
}

/// Max over all nodes of the residual built from the mesh stencils. The
/// stencils differentiate quadratics exactly, so this is round-off only.
pub fn polya_discrete_residual(field: &PolyaField, mesh: &Arc<InteriorMesh>) -> Result<f64> {
    let u = GridField::from_fn(mesh.clone(), |x| field.eval(x))?;
    Ok(linear_residual(&u, field.params.k).iter().map(|r| r.norm()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct PolyaReport {
    pub alpha: f64,
    pub argmax: [f64; 2],
    pub interior: bool,
    pub max: f64,
    pub boundary_max: f64,
}

const GRID: usize = 401;

/// Locates the maximum of `|u|` over the closed disk `B_r(0)` by a dense grid
/// scan, a boundary scan and local pattern-search refinement.
pub fn interior_max_check(params: PolyaParams, radius: f64) -> Result<PolyaReport> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param("radius", format!("must be positive, got {radius}")));
    }
    let field = PolyaField::unchecked(params);
    let modulus = |x: Vec2| field.eval(x).norm();
    let h = 2.0 * radius / (GRID - 1) as f64;

    let mut best = (f64::NEG_INFINITY, Vec2::zeros());
    for a in 0..GRID {
        for b in 0..GRID {
            let x = Vec2::new(-radius + a as f64 * h, -radius + b as f64 * h);
            if x.norm() <= radius {
                let m = modulus(x);
                if m > best.0 {
                    best = (m, x);
                }
            }
        }
    }
    let interior_best = refine_in_disk(&modulus, best.1, h, radius);

    let on_circle = |t: f64| modulus(Vec2::new(radius * t.cos(), radius * t.sin()));
    let n_b = 4096;
    let dt = TAU / n_b as f64;
    let (mut bt, mut bm) = (0.0, f64::NEG_INFINITY);
    for i in 0..n_b {
        let t = i as f64 * dt;
        let m = on_circle(t);
        if m > bm {
            bm = m;
            bt = t;
        }
    }
    let (bt, bm) = golden_max(&on_circle, bt - dt, bt + dt);
    let boundary_point = Vec2::new(radius * bt.cos(), radius * bt.sin());

    let (max, argmax) = if interior_best.0 >= bm { interior_best } else { (bm, boundary_point) };
    Ok(PolyaReport {
        alpha: params.alpha,
        argmax: [argmax.x, argmax.y],
        interior: argmax.norm() < radius - 2.0 * h,
        max,
        boundary_max: bm,
    })
}

fn refine_in_disk(f: &impl Fn(Vec2) -> f64, start: Vec2, h: f64, radius: f64) -> (f64, Vec2) {
    let mut x = start;
    let mut fx = f(x);
    let mut step = h;
    let dirs = [Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(0.0, -1.0)];
    while step > 1e-13 * radius.max(1.0) {
        let mut moved = false;
        for d in &dirs {
            let y = x + d * step;
            if y.norm() <= radius {
                let fy = f(y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (fx, x)
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-12 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// Bisection for the largest radius at which the maximum of `|u|` is still
/// attained in the interior.
pub fn interior_radius_threshold(params: PolyaParams, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    if !interior_max_check(params, lo)?.interior || interior_max_check(params, hi)?.interior {
        return Err(Error::param("bracket", format!("[{lo}, {hi}] does not bracket the transition")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if interior_max_check(params, mid)?.interior {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exact energy of the centred vortex ansatz on the unit disk. The
/// divergence vanishes identically, so `k` does not enter.
pub fn ansatz_energy_closed_form(eps: f64, k: f64) -> Result<EnergyBreakdown> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param("eps", format!("must lie in (0, 1), got {eps}")));
    }
    if !(k > 0.0) {
        return Err(Error::param("k", format!("must be positive, got {k}")));
    }
    // core: |∇u|² = 2/ε² on a disk of area πε²; tail: ½∫ r⁻² = π ln(1/ε);
    // potential: (π/2)∫₀¹ (1 − t²)² t dt = π/12
    Ok(EnergyBreakdown::new(PI * (1.0 / eps).ln() + PI, 0.0, PI / 12.0))
}
