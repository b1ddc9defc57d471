//! Discrete Ginzburg–Landau energy with divergence penalty.
//!
//! With `G` the least-squares gradient stencil and `w` the area weights,
//!
//! ```text
//! E(u) = Σ_n w_n [ ½|G u|²_n + (k/2)(tr G u)²_n + (|u_n|² − 1)² / (4ε²) ]
//! ```
//!
//! The energy gradient is the exact adjoint of this sum, so descent methods
//! see a consistent objective. Tangential anchoring `u·ν = 0` is imposed by
//! projecting the boundary row; the Neumann condition on `u_τ` is natural.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{GridField, InteriorMesh};
use crate::{Mat2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub eps: f64,
    /// Divergence modulus; the bend/splay modulus is fixed to 1.
    pub k: f64,
}

impl EnergyParams {
    pub fn new(eps: f64, k: f64) -> Result<Self> {
        let p = Self { eps, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::param("eps", format!("must be positive and finite, got {}", self.eps)));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::param("k", format!("must be positive and finite, got {}", self.k)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub divergence: f64,
    pub potential: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(dirichlet: f64, divergence: f64, potential: f64) -> Self {
        Self {
            dirichlet,
            divergence,
            potential,
            total: dirichlet + divergence + potential,
        }
    }
}

pub fn energy(field: &GridField, params: &EnergyParams) -> Result<EnergyBreakdown> {
    params.validate()?;
    check_finite(field.values())?;
    let grads = field.mesh().stencil().gradient(field.values());
    Ok(breakdown(field.mesh(), params, field.values(), &grads))
}

pub(crate) fn breakdown(mesh: &InteriorMesh, params: &EnergyParams, u: &[Vec2], grads: &[Mat2]) -> EnergyBreakdown {
    let c = 0.25 / (params.eps * params.eps);
    let (mut dir, mut div, mut pot) = (0.0, 0.0, 0.0);
    for ((w, g), v) in mesh.weights().iter().zip(grads).zip(u) {
        dir += w * 0.5 * g.norm_squared();
        div += w * 0.5 * params.k * g.trace().powi(2);
        pot += w * c * (v.norm_squared() - 1.0).powi(2);
    }
    EnergyBreakdown::new(dir, div, pot)
}

fn check_finite(u: &[Vec2]) -> Result<()> {
    match u.iter().position(|v| !(v.x.is_finite() && v.y.is_finite())) {
        Some(n) => Err(Error::NonFinite(format!("field value at node {n}"))),
        None => Ok(()),
    }
}

/// Replaces `u` by `(u·τ)τ` on the boundary row.
pub fn project_tangential(field: &GridField) -> GridField {
    let mut values = field.values().to_vec();
    project_in_place(field.mesh(), &mut values);
    GridField::from_raw(field.mesh().clone(), values)
}

pub(crate) fn project_in_place(mesh: &InteriorMesh, u: &mut [Vec2]) {
    let n_theta = mesh.n_theta();
    for (col, node) in mesh.boundary_nodes().enumerate() {
        debug_assert_eq!(node % n_theta, col);
        let t = mesh.boundary_frame(col).tangent;
        u[node] = t * u[node].dot(&t);
    }
}

/// Exact gradient of the discrete energy with respect to the nodal values,
/// projected onto the tangential constraint on the boundary row.
pub fn energy_gradient(field: &GridField, params: &EnergyParams) -> Result<GridField> {
    params.validate()?;
    check_finite(field.values())?;
    let grads = field.mesh().stencil().gradient(field.values());
    let g = raw_gradient(field.mesh(), params, field.values(), &grads);
    Ok(GridField::from_raw(field.mesh().clone(), g))
}

/// Projected energy gradient given precomputed nodal gradients.
pub(crate) fn raw_gradient(mesh: &InteriorMesh, params: &EnergyParams, u: &[Vec2], grads: &[Mat2]) -> Vec<Vec2> {
    let c = 1.0 / (params.eps * params.eps);
    let dual: Vec<Mat2> = grads
        .iter()
        .zip(mesh.weights())
        .map(|(g, w)| *w * (g + Mat2::identity() * (params.k * g.trace())))
        .collect();
    let mut out: Vec<Vec2> = u
        .iter()
        .zip(mesh.weights())
        .map(|(v, w)| v * (w * c * (v.norm_squared() - 1.0)))
        .collect();
    mesh.stencil().accumulate_adjoint(&dual, &mut out);
    project_in_place(mesh, &mut out);
    out
}

/// Energy change `E(u + α d) − E(u)` in difference form, free of the
/// cancellation that subtracting two totals would suffer near convergence.
/// `gu` and `gd` are the stencil gradients of `u` and `d`.
pub(crate) fn energy_change(
    mesh: &InteriorMesh,
    params: &EnergyParams,
    u: &[Vec2],
    gu: &[Mat2],
    d: &[Vec2],
    gd: &[Mat2],
    alpha: f64,
) -> f64 {
    let c = 0.25 / (params.eps * params.eps);
    let mut acc = 0.0;
    for n in 0..u.len() {
        let dg = gd[n] * alpha;
        let dir = 0.5 * dg.dot(&(gu[n] * 2.0 + dg));
        let (ta, td) = (gu[n].trace(), dg.trace());
        let div = 0.5 * params.k * td * (2.0 * ta + td);
        let du = d[n] * alpha;
        let a2 = u[n].norm_squared();
        let diff = du.dot(&(u[n] * 2.0 + du));
        let pot = c * diff * (2.0 * a2 + diff - 2.0);
        acc += mesh.weights()[n] * (dir + div + pot);
    }
    acc
}

/// Strong-form residual `−Δu − k∇(div u) − u(1 − |u|²)/ε²`, built by
/// composing the gradient stencil with itself. Boundary-row values use the
/// one-sided stencils and are less accurate than interior ones.
pub fn el_residual(field: &GridField, params: &EnergyParams) -> Result<Vec<Vec2>> {
    params.validate()?;
    check_finite(field.values())?;
    let c = 1.0 / (params.eps * params.eps);
    let mut r = linear_residual(field, params.k);
    for (r, u) in r.iter_mut().zip(field.values()) {
        *r -= u * (c * (1.0 - u.norm_squared()));
    }
    Ok(r)
}

/// `−Δu − k∇(div u)` by composed stencils. `k` is unrestricted here.
pub fn linear_residual(field: &GridField, k: f64) -> Vec<Vec2> {
    let stencil = field.mesh().stencil();
    let grads = stencil.gradient(field.values());
    // second derivatives: column a of ∇u differentiated again
    let col = |a: usize| -> Vec<Mat2> {
        let c: Vec<Vec2> = grads.iter().map(|g| g.column(a).into_owned()).collect();
        stencil.gradient(&c)
    };
    let (h0, h1) = (col(0), col(1));
    (0..grads.len())
        .map(|n| {
            // h_a(i, b) = ∂_b ∂_a u_i
            let lap = Vec2::new(h0[n][(0, 0)] + h1[n][(0, 1)], h0[n][(1, 0)] + h1[n][(1, 1)]);
            let grad_div = Vec2::new(h0[n][(0, 0)] + h1[n][(1, 0)], h0[n][(0, 1)] + h1[n][(1, 1)]);
            -lap - grad_div * k
        })
        .collect()
}

/// Largest residual norm away from the boundary row.
pub fn max_interior_norm(mesh: &InteriorMesh, r: &[Vec2]) -> f64 {
    r.iter()
        .enumerate()
        .filter(|(n, _)| !mesh.is_boundary(*n))
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryCurve;
    use crate::mesh::build_interior_mesh;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn disk(nt: usize, ns: usize) -> Arc<InteriorMesh> {
        build_interior_mesh(Arc::new(BoundaryCurve::unit_disk()), nt, ns).unwrap()
    }

    fn random_field(mesh: &Arc<InteriorMesh>, rng: &mut ChaCha8Rng) -> GridField {
        let v = (0..mesh.len()).map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        project_tangential(&GridField::new(mesh.clone(), v).unwrap())
    }

    fn dot(a: &[Vec2], b: &[Vec2]) -> f64 {
        a.iter().zip(b).map(|(a, b)| a.dot(b)).sum()
    }

    #[test]
    fn constant_unit_field_has_zero_energy() {
        let u = GridField::constant(disk(32, 16), Vec2::new(1.0, 0.0));
        let e = energy(&u, &EnergyParams::new(0.1, 1.0).unwrap()).unwrap();
        assert!(e.dirichlet.abs() < 1e-20 && e.divergence.abs() < 1e-20 && e.potential == 0.0);
    }

    #[test]
    fn zero_field_potential_is_area_over_four_eps_squared() {
        let u = GridField::constant(disk(64, 32), Vec2::zeros());
        let e = energy(&u, &EnergyParams::new(0.5, 1.0).unwrap()).unwrap();
        assert!((e.potential - PI).abs() < 1e-3);
        assert_eq!(e.total, e.dirichlet + e.divergence + e.potential);
    }

    #[test]
    fn nan_is_rejected() {
        let mesh = disk(16, 8);
        let mut v = vec![Vec2::zeros(); mesh.len()];
        v[7].x = f64::NAN;
        let u = GridField::from_raw(mesh, v);
        assert!(matches!(energy(&u, &EnergyParams::new(0.1, 1.0).unwrap()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn params_are_validated() {
        assert!(EnergyParams::new(0.0, 1.0).is_err());
        assert!(EnergyParams::new(0.1, -1.0).is_err());
        assert!(EnergyParams::new(0.1, 0.0).is_err());
    }

    #[test]
    fn projection_on_disk_frames() {
        let mesh = disk(64, 16);
        let u = GridField::constant(mesh.clone(), Vec2::new(1.0, 0.0));
        let p = project_tangential(&u);
        let top = mesh.index(16, mesh.n_s() - 1);
        let right = mesh.index(0, mesh.n_s() - 1);
        assert!((p.values()[top] - Vec2::new(1.0, 0.0)).norm() < 1e-12);
        assert!(p.values()[right].norm() < 1e-12);
        // interior untouched
        assert_eq!(p.values()[mesh.index(0, 3)], Vec2::new(1.0, 0.0));
    }

    #[test]
    fn projection_of_normal_and_tangent() {
        let mesh = disk(32, 8);
        let mut nu = vec![Vec2::zeros(); mesh.len()];
        let mut tau = nu.clone();
        for (col, node) in mesh.boundary_nodes().enumerate() {
            nu[node] = mesh.boundary_frame(col).normal;
            tau[node] = mesh.boundary_frame(col).tangent;
        }
        let pn = project_tangential(&GridField::new(mesh.clone(), nu).unwrap());
        let pt = project_tangential(&GridField::new(mesh, tau.clone()).unwrap());
        assert!(pn.values().iter().all(|v| v.norm() < 1e-15));
        assert!(pt.values().iter().zip(&tau).all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mesh = disk(32, 16);
        let params = EnergyParams::new(0.3, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_field(&mesh, &mut rng);
        let g = energy_gradient(&u, &params).unwrap();
        let t = 1e-5;
        for _ in 0..5 {
            let d = random_field(&mesh, &mut rng);
            let shifted = |s: f64| {
                let v = u.values().iter().zip(d.values()).map(|(a, b)| a + b * s).collect();
                energy(&GridField::new(mesh.clone(), v).unwrap(), &params).unwrap().total
            };
            let fd = (shifted(t) - shifted(-t)) / (2.0 * t);
            let an = dot(g.values(), d.values());
            assert!(((fd - an) / an).abs() < 1e-6, "{fd} vs {an}");
        }
    }

    #[test]
    fn difference_form_matches_direct_difference() {
        let mesh = disk(32, 16);
        let params = EnergyParams::new(0.2, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_field(&mesh, &mut rng);
        let d = random_field(&mesh, &mut rng);
        let (gu, gd) = (mesh.stencil().gradient(u.values()), mesh.stencil().gradient(d.values()));
        let alpha = 0.37;
        let moved: Vec<Vec2> = u.values().iter().zip(d.values()).map(|(a, b)| a + b * alpha).collect();
        let direct = energy(&GridField::new(mesh.clone(), moved).unwrap(), &params).unwrap().total
            - energy(&u, &params).unwrap().total;
        let diff = energy_change(&mesh, &params, u.values(), &gu, d.values(), &gd, alpha);
        assert!((direct - diff).abs() < 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn unit_constant_is_critical_away_from_boundary() {
        let mesh = disk(32, 16);
        let u = GridField::constant(mesh.clone(), Vec2::new(1.0, 0.0));
        let g = energy_gradient(&u, &EnergyParams::new(0.1, 1.0).unwrap()).unwrap();
        for (n, v) in g.values().iter().enumerate() {
            let (_, row) = mesh.coords(n);
            if row + 3 < mesh.n_s() {
                assert!(v.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn small_projected_step_decreases_energy() {
        let mesh = disk(32, 16);
        let params = EnergyParams::new(0.25, 1.0).unwrap();
        let u = random_field(&mesh, &mut ChaCha8Rng::seed_from_u64(5));
        let g = energy_gradient(&u, &params).unwrap();
        let step: Vec<Vec2> = u.values().iter().zip(g.values()).map(|(a, b)| a - b * 1e-6).collect();
        let e0 = energy(&u, &params).unwrap().total;
        let e1 = energy(&GridField::new(mesh, step).unwrap(), &params).unwrap().total;
        assert!(e1 < e0);
    }

    #[test]
    fn rotation_equivariance_on_disk() {
        let mesh = disk(32, 16);
        let params = EnergyParams::new(0.3, 2.0).unwrap();
        let u = random_field(&mesh, &mut ChaCha8Rng::seed_from_u64(9));
        let e0 = energy(&u, &params).unwrap().total;
        for m in [1usize, 5, 16] {
            let phi = m as f64 * mesh.d_theta();
            let rot = nalgebra::Rotation2::new(phi);
            let mut v = vec![Vec2::zeros(); mesh.len()];
            for (n, val) in u.values().iter().enumerate() {
                let (i, j) = mesh.coords(n);
                v[mesh.index((i + m) % mesh.n_theta(), j)] = rot * val;
            }
            let e1 = energy(&GridField::new(mesh.clone(), v).unwrap(), &params).unwrap().total;
            assert!(((e1 - e0) / e0).abs() < 1e-12, "{m}: {e0} {e1}");
        }
    }

    #[test]
    fn residual_of_unit_constant_vanishes() {
        let u = GridField::constant(disk(32, 16), Vec2::new(1.0, 0.0));
        let r = el_residual(&u, &EnergyParams::new(0.1, 1.0).unwrap()).unwrap();
        assert!(r.iter().all(|v| v.norm() < 1e-9));
    }

    #[test]
    fn composed_residual_is_exact_for_quadratics() {
        let mesh = disk(32, 16);
        let k = 0.7;
        let u = GridField::from_fn(mesh.clone(), |x| Vec2::new(x.x * x.x + 3.0 * x.x * x.y, x.y * x.y - x.x)).unwrap();
        // Δu = (2, 2), ∇div u = ∇(2x + 3y + 2y) = (2, 5)
        let expected = -Vec2::new(2.0, 2.0) - Vec2::new(2.0, 5.0) * k;
        let r = linear_residual(&u, k);
        assert!(r.iter().all(|v| (v - expected).norm() < 1e-8));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn projection_is_orthogonal(seed in any::<u64>()) {
            let mesh = disk(16, 8);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = (0..mesh.len()).map(|_| Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
            let u = GridField::new(mesh.clone(), v).unwrap();
            let p = project_tangential(&u);
            let pp = project_tangential(&p);
            for (a, b) in p.values().iter().zip(pp.values()) {
                prop_assert!((a - b).norm() < 1e-15);
            }
            for node in mesh.boundary_nodes() {
                let (a, b) = (u.values()[node], p.values()[node]);
                prop_assert!((a - b).dot(&b).abs() < 1e-14);
            }
        }

        #[test]
        fn energy_parts_are_nonnegative(seed in any::<u64>(), eps in 0.05f64..1.0, k in 0.1f64..5.0) {
            let mesh = disk(16, 8);
            let u = random_field(&mesh, &mut ChaCha8Rng::seed_from_u64(seed));
            let e = energy(&u, &EnergyParams::new(eps, k).unwrap()).unwrap();
            prop_assert!(e.dirichlet >= 0.0 && e.divergence >= 0.0 && e.potential >= 0.0);
            prop_assert_eq!(e.total, e.dirichlet + e.divergence + e.potential);
        }
    }
}
