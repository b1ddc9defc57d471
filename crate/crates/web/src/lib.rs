//! Browser bindings for three small gldiv experiments: the quadratic
//! solution of the linear system on a disk, relaxation of a vortex, and the
//! ellipticity profile of the reflected system across an elliptic collar.

use std::sync::Arc;

use gldiv::diagnostics::{locate_defect, winding_number, Contour};
use gldiv::energy::{energy, EnergyParams};
use gldiv::extension::{distortion, legendre_hadamard_form};
use gldiv::geometry::{BoundaryCurve, RadialShape, TangentNormalChart};
use gldiv::mesh::{build_interior_mesh, GridField};
use gldiv::minimizer::{minimize, vortex_ansatz, MinimizeOptions};
use gldiv::validators::{interior_max_check, polya_field, PolyaParams};
use gldiv::Vec2;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// `|u|` of the quadratic field on an `n × n` grid over `[−r, r]²`, row-major
/// from the top-left; NaN outside the disk of radius `r`.
#[wasm_bindgen]
pub fn polya_modulus(k: f64, beta: f64, gamma: f64, radius: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let field = polya_field(PolyaParams::new(k, beta, gamma).map_err(js_err)?).map_err(js_err)?;
    let step = 2.0 * radius / n as f64;
    let mut out = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let x = Vec2::new(-radius + (col as f64 + 0.5) * step, radius - (row as f64 + 0.5) * step);
            out.push(if x.norm() <= radius { field.eval(x).norm() } else { f64::NAN });
        }
    }
    Ok(out)
}

/// `[argmax_x, argmax_y, max, boundary_max, interior (0 or 1)]`.
#[wasm_bindgen]
pub fn polya_report(k: f64, beta: f64, gamma: f64, radius: f64) -> Result<Vec<f64>, JsError> {
    let r = interior_max_check(PolyaParams::new(k, beta, gamma).map_err(js_err)?, radius).map_err(js_err)?;
    Ok(vec![r.argmax[0], r.argmax[1], r.max, r.boundary_max, f64::from(u8::from(r.interior))])
}

/// A minimizer on the unit disk that advances a few iterations per call.
#[wasm_bindgen]
pub struct Relaxation {
    field: GridField,
    params: EnergyParams,
    iterations: usize,
}

#[wasm_bindgen]
impl Relaxation {
    /// Starts from the vortex ansatz centred at `(cx, cy)`.
    #[wasm_bindgen(constructor)]
    pub fn new(eps: f64, k: f64, n_theta: usize, n_s: usize, cx: f64, cy: f64) -> Result<Relaxation, JsError> {
        let params = EnergyParams::new(eps, k).map_err(js_err)?;
        let mesh = build_interior_mesh(Arc::new(BoundaryCurve::unit_disk()), n_theta, n_s).map_err(js_err)?;
        let field = vortex_ansatz(&mesh, Vec2::new(cx, cy), eps).map_err(js_err)?;
        Ok(Self { field, params, iterations: 0 })
    }

    /// Runs at most `iterations` descent steps; returns whether the
    /// stopping tolerance was reached.
    pub fn step(&mut self, iterations: usize) -> Result<bool, JsError> {
        let opts = MinimizeOptions {
            max_iterations: iterations,
            ..Default::default()
        };
        let (next, report) = minimize(&self.field, &self.params, &opts).map_err(js_err)?;
        self.field = next;
        self.iterations += report.iterations;
        Ok(report.converged)
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn energy(&self) -> Result<f64, JsError> {
        Ok(energy(&self.field, &self.params).map_err(js_err)?.total)
    }

    /// Winding number of `u` around a circle of radius 0.9.
    pub fn degree(&self) -> Result<i64, JsError> {
        let contour = Contour::Circle {
            center: [0.0, 0.0],
            radius: 0.9,
        };
        winding_number(&self.field, &contour).map_err(js_err)
    }

    /// Node where `|u|` is smallest, as `[x, y]`.
    pub fn defect(&self) -> Vec<f64> {
        let x = locate_defect(&self.field);
        vec![x.x, x.y]
    }

    /// Flattened `[x, y, u1, u2]` per node.
    pub fn nodes(&self) -> Vec<f64> {
        let mesh = self.field.mesh();
        mesh.positions()
            .iter()
            .zip(self.field.values())
            .flat_map(|(x, u)| [x.x, x.y, u.x, u.y])
            .collect()
    }
}

/// Across the collar of the ellipse with semi-axes `(a, b)`, at the point of
/// largest curvature: for `n` offsets `y2` in `[−r1, r1]` returns rows
/// `[y2, distortion, min LH ratio, bound]`. The ratio is the smallest value
/// of the Legendre–Hadamard form over unit `ξ, η` on a 48 × 48 angle grid;
/// the bound is `min{1/(1−|y2|κ)², 1}`.
#[wasm_bindgen]
pub fn collar_profile(a: f64, b: f64, k: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let curve = Arc::new(BoundaryCurve::new(RadialShape::Ellipse { a, b }).map_err(js_err)?);
    let chart = TangentNormalChart::new(curve.clone()).map_err(js_err)?;
    let length = curve.perimeter();
    let y1 = (0..720)
        .map(|i| length * i as f64 / 720.0)
        .max_by(|p, q| curve.frame(*p).curvature.total_cmp(&curve.frame(*q).curvature))
        .unwrap_or(0.0);
    let kappa = curve.frame(y1).curvature;
    let r1 = chart.r1();
    let angles: Vec<Vec2> = (0..48)
        .map(|i| {
            let t = std::f64::consts::PI * i as f64 / 48.0;
            Vec2::new(t.cos(), t.sin())
        })
        .collect();
    let mut out = Vec::with_capacity(4 * n);
    for j in 0..n {
        let y2 = -r1 + 2.0 * r1 * (j as f64 + 0.5) / n as f64;
        let min = angles
            .iter()
            .flat_map(|xi| angles.iter().map(move |eta| (*xi, *eta)))
            .map(|(xi, eta)| legendre_hadamard_form(&chart, y1, y2, k, xi, eta))
            .fold(f64::INFINITY, f64::min);
        let bound = if y2 < 0.0 { (1.0 / (1.0 - y2.abs() * kappa).powi(2)).min(1.0) } else { 1.0 };
        out.extend([y2, distortion(&chart, y1, y2), min, bound]);
    }
    Ok(out)
}
