//! Reflection of a field across the boundary and the glued weak form.
//!
//! In chart coordinates the fold `σ` maps `X(y1, −d)` to `X(y1, d)` and the
//! vector reflection `ℛ = ττᵀ − ννᵀ` flips the normal component. A field `u`
//! on the domain extends to the exterior collar as `U(x) = ℛ u(σ(x))`, so
//! `U_τ` is even and `U_ν` odd in `y2`. On the exterior the extension solves
//! a glued system whose principal part carries the distortion factor
//! `𝒟 = (1 − y2κ)/(1 + y2κ)` and the metric `∇σ(σx)∇σ(σx)ᵀ`; the lower-order
//! terms are left as a measured remainder.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::EnergyParams;
use crate::error::{Error, Result};
use crate::geometry::{Frame, TangentNormalChart};
use crate::mesh::{discrete_gradient, CollarMesh, GridField};
use crate::{Mat2, Vec2};

/// `σ(x)`: interior points are fixed, exterior collar points are sent to
/// the point at the same boundary distance on the inside.
pub fn fold_point(chart: &TangentNormalChart, x: Vec2) -> Result<Vec2> {
    if chart.curve().contains(x) {
        return Ok(x);
    }
    let y = chart.cartesian_to_chart(x)?;
    if y.y2 >= 0.0 {
        return Ok(x);
    }
    chart.chart_to_cartesian(y.y1, -y.y2)
}

/// `ℛ z = (z·τ)τ − (z·ν)ν` in the frame below `x`.
pub fn reflect_vector(chart: &TangentNormalChart, x: Vec2, z: Vec2) -> Result<Vec2> {
    let y = chart.cartesian_to_chart(x)?;
    Ok(reflect_in(&chart.curve().frame(y.y1), z))
}

pub(crate) fn reflect_in(frame: &Frame, z: Vec2) -> Vec2 {
    frame.tangent * z.dot(&frame.tangent) - frame.normal * z.dot(&frame.normal)
}

/// Distortion factor: 1 inside, `(1 − y2κ)/(1 + y2κ)` outside (`y2 < 0`).
pub fn distortion(chart: &TangentNormalChart, y1: f64, y2: f64) -> f64 {
    distortion_with(chart.curve().frame(y1).curvature, y2)
}

fn distortion_with(kappa: f64, y2: f64) -> f64 {
    if y2 >= 0.0 {
        1.0
    } else {
        (1.0 - y2 * kappa) / (1.0 + y2 * kappa)
    }
}

/// `|det ∇σ|`: 1 inside, `JX(y1, −y2)/JX(y1, y2)` outside.
fn det_sigma_with(kappa: f64, y2: f64) -> f64 {
    if y2 >= 0.0 {
        1.0
    } else {
        (1.0 + y2 * kappa) / (1.0 - y2 * kappa)
    }
}

/// Glued metric data at one point of the collar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricEntry {
    /// `∇σ(σx)∇σ(σx)ᵀ` in Cartesian components: the identity inside and
    /// `((1 + y2κ)/(1 − y2κ))⁻² ττᵀ + ννᵀ`, i.e. `∇X M ∇Xᵀ`, outside.
    pub gram: Mat2,
    /// Chart-coordinate metric in the `(τ, ν)` basis: `diag(1/(1 − y2κ)², 1)`
    /// inside and `diag(1/(1 − |y2|κ)², 1)` outside.
    pub chart_metric: Mat2,
    pub det_sigma: f64,
}

impl MetricEntry {
    /// `chart_metric` expressed in Cartesian components.
    pub fn chart_metric_cartesian(&self, frame: &Frame) -> Mat2 {
        let r = Mat2::from_columns(&[frame.tangent, frame.normal]);
        r * self.chart_metric * r.transpose()
    }
}

pub fn glued_metric(chart: &TangentNormalChart, y1: f64, y2: f64) -> MetricEntry {
    let frame = chart.curve().frame(y1);
    metric_with(&frame, y2)
}

fn metric_with(frame: &Frame, y2: f64) -> MetricEntry {
    let kappa = frame.curvature;
    let a = 1.0 / (1.0 - y2.abs() * kappa);
    let chart_metric = Mat2::new(a * a, 0.0, 0.0, 1.0);
    let gram = if y2 >= 0.0 {
        Mat2::identity()
    } else {
        let stretch = (1.0 - y2 * kappa) * a;
        let (t, n) = (frame.tangent, frame.normal);
        t * t.transpose() * (stretch * stretch) + n * n.transpose()
    };
    MetricEntry {
        gram,
        chart_metric,
        det_sigma: det_sigma_with(kappa, y2),
    }
}

/// Extension of an interior field to the collar, with cached factors.
#[derive(Debug, Clone)]
pub struct CollarField {
    mesh: Arc<CollarMesh>,
    values: Vec<Vec2>,
    tangential: Vec<f64>,
    normal: Vec<f64>,
    distortion: Vec<f64>,
    metric: Vec<MetricEntry>,
}

impl CollarField {
    /// Builds the field from frame components `(U_τ, U_ν)` per node.
    pub fn from_components(mesh: Arc<CollarMesh>, tangential: Vec<f64>, normal: Vec<f64>) -> Result<Self> {
        if tangential.len() != mesh.len() || normal.len() != mesh.len() {
            return Err(Error::MeshMismatch {
                expected: mesh.len(),
                got: tangential.len().min(normal.len()),
            });
        }
        let mut values = Vec::with_capacity(mesh.len());
        let mut distortion = Vec::with_capacity(mesh.len());
        let mut metric = Vec::with_capacity(mesh.len());
        for n in 0..mesh.len() {
            let f = mesh.node_frame(n);
            let (_, y2) = mesh.chart_coords(n);
            values.push(f.tangent * tangential[n] + f.normal * normal[n]);
            distortion.push(distortion_with(f.curvature, y2));
            metric.push(metric_with(f, y2));
        }
        Ok(Self {
            mesh,
            values,
            tangential,
            normal,
            distortion,
            metric,
        })
    }

    pub fn mesh(&self) -> &Arc<CollarMesh> {
        &self.mesh
    }

    /// Cartesian values.
    pub fn values(&self) -> &[Vec2] {
        &self.values
    }

    pub fn tangential(&self) -> &[f64] {
        &self.tangential
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn distortion(&self) -> &[f64] {
        &self.distortion
    }

    pub fn metric(&self) -> &[MetricEntry] {
        &self.metric
    }

    /// Writes `y1,y2,x,y,U1,U2,D,detSigma`, one node per row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "y1,y2,x,y,U1,U2,D,detSigma")?;
        for n in 0..self.mesh.len() {
            let (y1, y2) = self.mesh.chart_coords(n);
            let x = self.mesh.positions()[n];
            let u = self.values[n];
            writeln!(
                out,
                "{y1:e},{y2:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                x.x, x.y, u.x, u.y, self.distortion[n], self.metric[n].det_sigma
            )?;
        }
        Ok(())
    }

    /// Cartesian gradients of the two components; entry `(i, a)` is `∂_a U_i`.
    pub fn gradient(&self) -> Result<Vec<Mat2>> {
        let u1: Vec<f64> = self.values.iter().map(|v| v.x).collect();
        let u2: Vec<f64> = self.values.iter().map(|v| v.y).collect();
        let g1 = self.mesh.cartesian_gradient(&u1)?;
        let g2 = self.mesh.cartesian_gradient(&u2)?;
        Ok(g1.iter().zip(&g2).map(|(a, b)| Mat2::from_rows(&[a.transpose(), b.transpose()])).collect())
    }
}

/// Reflection extension of an interior field onto the collar mesh: interior
/// nodes take interpolated values, and an exterior node at `(y1, −s)` takes
/// `U_τ = u_τ(X(y1, s))`, `U_ν = −u_ν(X(y1, s))` from its mirror node.
pub fn reflect_extend(field: &GridField, collar: &Arc<CollarMesh>) -> Result<CollarField> {
    let n = collar.len();
    let mut tangential = vec![0.0; n];
    let mut normal = vec![0.0; n];
    for node in 0..n {
        if collar.is_exterior(node) {
            continue;
        }
        let u = field.value_at(collar.positions()[node])?;
        let f = collar.node_frame(node);
        let (t, nu) = (u.dot(&f.tangent), u.dot(&f.normal));
        let m = collar.mirror(node);
        tangential[node] = t;
        normal[node] = nu;
        tangential[m] = t;
        normal[m] = -nu;
    }
    CollarField::from_components(collar.clone(), tangential, normal)
}

/// Value of the reflection extension of `field` at any point of the domain
/// or of the exterior collar.
pub fn extended_value(field: &GridField, chart: &TangentNormalChart, x: Vec2) -> Result<Vec2> {
    if chart.curve().contains(x) {
        return field.value_at(x);
    }
    let y = chart.cartesian_to_chart(x)?;
    if y.y2 >= 0.0 {
        return field.value_at(x);
    }
    if -y.y2 >= chart.r1() {
        return Err(Error::OutOfCollar {
            x: x.x,
            y: x.y,
            distance: -y.y2,
            limit: chart.r1(),
        });
    }
    let inner = chart.chart_to_cartesian(y.y1, -y.y2)?;
    let u = field.value_at(inner)?;
    Ok(reflect_in(&chart.curve().frame(y.y1), u))
}

/// `|det∇σ|^{1/2} [𝒟 τ·∂_τ w + ν·∂_ν w]` at every collar node, with chart
/// differences. The frame is held fixed while differentiating, so on the
/// interior side this is the ordinary divergence.
pub fn div_j(field: &CollarField) -> Result<Vec<f64>> {
    let grads = field.gradient()?;
    Ok((0..field.mesh.len())
        .map(|n| {
            let f = field.mesh.node_frame(n);
            let g = grads[n];
            let tt = f.tangent.dot(&(g * f.tangent));
            let nn = f.normal.dot(&(g * f.normal));
            field.metric[n].det_sigma.sqrt() * (field.distortion[n] * tt + nn)
        })
        .collect())
}

/// `Σ A^{αβ}_{ij} ξ_α ξ_β η^i η^j` for the glued principal part in chart
/// coordinates, with `a = 1/(1 − |y2|κ)`:
///
/// ```text
/// (1+k)a²ξ1²η1² + a²ξ1²η2² + 2k a ξ1ξ2η1η2 + ξ2²η1² + (1+k)ξ2²η2²
///   = (a²ξ1² + ξ2²)|η|² + k(aξ1η1 + ξ2η2)²
/// ```
pub fn legendre_hadamard_form(chart: &TangentNormalChart, y1: f64, y2: f64, k: f64, xi: Vec2, eta: Vec2) -> f64 {
    lh_form_with(chart.curve().frame(y1).curvature, y2, k, xi, eta)
}

fn lh_form_with(kappa: f64, y2: f64, k: f64, xi: Vec2, eta: Vec2) -> f64 {
    let a = 1.0 / (1.0 - y2.abs() * kappa);
    let (x1, x2, e1, e2) = (xi.x, xi.y, eta.x, eta.y);
    (1.0 + k) * a * a * x1 * x1 * e1 * e1
        + a * a * x1 * x1 * e2 * e2
        + 2.0 * k * a * x1 * x2 * e1 * e2
        + x2 * x2 * e1 * e1
        + (1.0 + k) * x2 * x2 * e2 * e2
}

/// Which lower bound the ellipticity audit divides by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EllipticityBound {
    /// `min{1/(1 + |y2|κ)², 1}`; valid where `κ ≥ 0`.
    Convex,
    /// `min{1/(1 − |y2|κ)², 1}`, valid for either sign of `κ`.
    Exact,
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityAudit {
    pub samples: usize,
    /// Smallest `form / (bound·|ξ|²|η|²)` seen.
    pub min_ratio: f64,
    pub violations: usize,
    pub bound: EllipticityBound,
}

/// Random audit of the Legendre–Hadamard condition over the collar
/// `|y2| < r₁`. Deterministic for a fixed seed.
pub fn ellipticity_audit(chart: &TangentNormalChart, k: f64, samples: usize, seed: u64, bound: EllipticityBound) -> Result<EllipticityAudit> {
    if !(k > 0.0) {
        return Err(Error::param("k", format!("must be positive, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perimeter = chart.curve().perimeter();
    let r1 = chart.r1();
    let unit = |rng: &mut ChaCha8Rng| {
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        Vec2::new(t.cos(), t.sin())
    };
    let (mut min_ratio, mut violations) = (f64::INFINITY, 0);
    for _ in 0..samples {
        let y1 = rng.gen_range(0.0..perimeter);
        let y2 = rng.gen_range(-r1..r1);
        let (xi, eta) = (unit(&mut rng), unit(&mut rng));
        let kappa = chart.curve().frame(y1).curvature;
        let lower = match bound {
            EllipticityBound::Convex => (1.0 / (1.0 + y2.abs() * kappa).powi(2)).min(1.0),
            EllipticityBound::Exact => (1.0 / (1.0 - y2.abs() * kappa).powi(2)).min(1.0),
        };
        let ratio = lh_form_with(kappa, y2, k, xi, eta) / (lower * xi.norm_squared() * eta.norm_squared());
        if ratio < 1.0 - 1e-12 {
            violations += 1;
        }
        min_ratio = min_ratio.min(ratio);
    }
    Ok(EllipticityAudit {
        samples,
        min_ratio,
        violations,
        bound,
    })
}

/// Tensor bump `b((y1 − c1)/a1) b((y2 − c2)/a2)`, `b(t) = (1 − t²)³`, times a
/// constant vector in the moving frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChartBump {
    pub y1: f64,
    pub y2: f64,
    pub a1: f64,
    pub a2: f64,
    pub c_tau: f64,
    pub c_nu: f64,
}

/// Value, Cartesian gradient and `div_j` of a test function at one node.
#[derive(Debug, Clone, Copy)]
struct TestSample {
    v: Vec2,
    grad: Mat2,
    div_j: f64,
}

fn bump(t: f64) -> (f64, f64) {
    if t.abs() >= 1.0 {
        (0.0, 0.0)
    } else {
        let s = 1.0 - t * t;
        (s * s * s, -6.0 * t * s * s)
    }
}

impl ChartBump {
    pub fn validate(&self, chart: &TangentNormalChart) -> Result<()> {
        let perimeter = chart.curve().perimeter();
        if !(self.a1 > 0.0 && self.a1 < 0.5 * perimeter) {
            return Err(Error::UnsupportedTestFunction(format!("tangential radius {} must lie in (0, L/2)", self.a1)));
        }
        if !(self.a2 > 0.0 && self.y2.abs() + self.a2 <= chart.r1()) {
            return Err(Error::UnsupportedTestFunction(format!(
                "normal support [{}, {}] leaves the collar |y2| < {}",
                self.y2 - self.a2,
                self.y2 + self.a2,
                chart.r1()
            )));
        }
        Ok(())
    }

    /// Whether the support lies in the closed interior side `y2 ≥ 0`.
    pub fn is_interior(&self) -> bool {
        self.y2 - self.a2 >= 0.0
    }

    fn sample(&self, perimeter: f64, y1: f64, y2: f64, frame: &Frame, metric: &MetricEntry, distortion: f64) -> TestSample {
        let mut d1 = (y1 - self.y1).rem_euclid(perimeter);
        if d1 > 0.5 * perimeter {
            d1 -= perimeter;
        }
        let (b1, db1) = bump(d1 / self.a1);
        let (b2, db2) = bump((y2 - self.y2) / self.a2);
        let phi = b1 * b2;
        let (p1, p2) = (db1 * b2 / self.a1, b1 * db2 / self.a2);
        let (t, n, kappa) = (frame.tangent, frame.normal, frame.curvature);
        let dir = t * self.c_tau + n * self.c_nu;
        // τ' = κν, ν' = −κτ
        let dy1 = dir * p1 + (n * self.c_tau - t * self.c_nu) * (kappa * phi);
        let dy2 = dir * p2;
        let jx = 1.0 - y2 * kappa;
        let grad = (dy1 / jx) * t.transpose() + dy2 * n.transpose();
        let tt = (p1 * self.c_tau - kappa * phi * self.c_nu) / jx;
        let nn = p2 * self.c_nu;
        TestSample {
            v: dir * phi,
            grad,
            div_j: metric.det_sigma.sqrt() * (distortion * tt + nn),
        }
    }
}

/// Sixteen deterministic bumps spread along the boundary. With
/// `interior_only` the supports sit in `0 < y2 < r₁`; otherwise they
/// straddle the boundary.
pub fn standard_bumps(chart: &TangentNormalChart, interior_only: bool) -> Vec<ChartBump> {
    let perimeter = chart.curve().perimeter();
    let r1 = chart.r1();
    (0..16)
        .map(|i| {
            let angle = 0.7 * i as f64;
            let (y2, a2) = if interior_only {
                (0.5 * r1, 0.45 * r1)
            } else {
                let shift = [0.0, 0.2, -0.2, 0.1][i % 4] * r1;
                (shift, 0.95 * r1 - shift.abs())
            };
            ChartBump {
                y1: perimeter * (i as f64 + 0.5) / 16.0,
                y2,
                a1: perimeter / 8.0,
                a2,
                c_tau: angle.cos(),
                c_nu: angle.sin(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeakResidual {
    /// `Σ_i ∫⟨∇U^i, ∇v^i⟩_j + k ∫ div_j U div_j v`.
    pub lhs: f64,
    /// Interior reaction plus the `|det∇σ|`-weighted reflected reaction.
    pub rhs: f64,
    pub remainder: f64,
    /// `‖1 + |U| + |∇U|‖` in L² over the support of `v`.
    pub growth_norm: f64,
    /// `‖v‖` in W^{1,2}.
    pub test_norm: f64,
    /// Interior part of `rhs`.
    pub interior_reaction: f64,
}

impl WeakResidual {
    /// `|R(v)| / (‖1 + |U| + |∇U|‖ ‖v‖_{W^{1,2}})`.
    pub fn growth_constant(&self) -> f64 {
        self.remainder.abs() / (self.growth_norm * self.test_norm)
    }
}

/// Glued weak form of an extended field against a chart bump. The exterior
/// reaction integrand is `|det∇σ| ℛ u(σx)·v = |det∇σ| U·v`.
pub fn weak_glued_residual(field: &CollarField, v: &ChartBump, params: &EnergyParams) -> Result<WeakResidual> {
    params.validate()?;
    let mesh = &field.mesh;
    v.validate(mesh.chart())?;
    let grads = field.gradient()?;
    let div_u = div_j(field)?;
    let perimeter = mesh.chart().curve().perimeter();
    let c = 1.0 / (params.eps * params.eps);

    let (mut lhs, mut interior, mut exterior, mut growth, mut test) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for n in 0..mesh.len() {
        let (y1, y2) = mesh.chart_coords(n);
        let w = mesh.weights()[n];
        let metric = &field.metric[n];
        let s = v.sample(perimeter, y1, y2, mesh.node_frame(n), metric, field.distortion[n]);
        if s.v == Vec2::zeros() && s.grad == Mat2::zeros() {
            continue;
        }
        let u = field.values[n];
        let g = grads[n];
        let mut dirichlet = 0.0;
        for i in 0..2 {
            let gu = g.row(i).transpose();
            let gv = s.grad.row(i).transpose();
            dirichlet += gu.dot(&(metric.gram * gv));
        }
        lhs += w * (metric.det_sigma * dirichlet + params.k * div_u[n] * s.div_j);
        let reaction = u.dot(&s.v) * (1.0 - u.norm_squared()) * c;
        if y2 >= 0.0 {
            interior += w * reaction;
        } else {
            exterior += w * metric.det_sigma * reaction;
        }
        growth += w * (1.0 + u.norm() + g.norm()).powi(2);
        test += w * (s.v.norm_squared() + s.grad.norm_squared());
    }
    let rhs = interior + exterior;
    Ok(WeakResidual {
        lhs,
        rhs,
        remainder: lhs - rhs,
        growth_norm: growth.sqrt(),
        test_norm: test.sqrt(),
        interior_reaction: interior,
    })
}

/// The interior weak form `∫ ∇u:∇v + k div u div v − ∫ u·v(1 − |u|²)/ε²`
/// of a mesh field against a bump supported inside the domain, evaluated
/// with the interior stencil and quadrature.
pub fn interior_weak_form(field: &GridField, v: &ChartBump, params: &EnergyParams, chart: &TangentNormalChart) -> Result<f64> {
    params.validate()?;
    v.validate(chart)?;
    if !v.is_interior() {
        return Err(Error::UnsupportedTestFunction("support crosses the boundary".into()));
    }
    let mesh = field.mesh();
    let grads = discrete_gradient(field);
    let perimeter = chart.curve().perimeter();
    let c = 1.0 / (params.eps * params.eps);
    let mut acc = 0.0;
    for (n, &x) in mesh.positions().iter().enumerate() {
        let y = match chart.cartesian_to_chart(x) {
            Ok(y) => y,
            Err(Error::OutOfCollar { .. }) => continue,
            Err(e) => return Err(e),
        };
        let f = chart.curve().frame(y.y1);
        let s = v.sample(perimeter, y.y1, y.y2, &f, &metric_with(&f, y.y2), 1.0);
        let u = field.values()[n];
        let g = grads[n];
        let bulk = g.dot(&s.grad) + params.k * g.trace() * s.grad.trace();
        acc += mesh.weights()[n] * (bulk - u.dot(&s.v) * (1.0 - u.norm_squared()) * c);
    }
    Ok(acc)
}

/// `2 ∫_Ω U·v_E (1 − |U|²)/ε²` over the interior half of the collar, with
/// the even part `v_E(x) = (v(x) + ℛ v(x*))/2` and `x*` the exterior mirror.
pub fn even_part_reaction(field: &CollarField, v: &ChartBump, params: &EnergyParams) -> Result<f64> {
    params.validate()?;
    let mesh = &field.mesh;
    v.validate(mesh.chart())?;
    let perimeter = mesh.chart().curve().perimeter();
    let c = 1.0 / (params.eps * params.eps);
    let mut acc = 0.0;
    for n in 0..mesh.len() {
        if mesh.is_exterior(n) {
            continue;
        }
        let m = mesh.mirror(n);
        let frame = mesh.node_frame(n);
        let at = |node: usize| {
            let (y1, y2) = mesh.chart_coords(node);
            v.sample(perimeter, y1, y2, frame, &field.metric[node], field.distortion[node]).v
        };
        let v_even = (at(n) + reflect_in(frame, at(m))) * 0.5;
        let u = field.values[n];
        acc += mesh.weights()[n] * u.dot(&v_even) * (1.0 - u.norm_squared()) * c;
    }
    Ok(2.0 * acc)
}

/// `(v_E)_ν` on `y2 = 0` at every collar column.
pub fn even_part_normal_trace(field: &CollarField, v: &ChartBump) -> Vec<f64> {
    let mesh = &field.mesh;
    let perimeter = mesh.chart().curve().perimeter();
    (0..mesh.n1())
        .map(|i| {
            let frame = mesh.frame(i);
            let metric = metric_with(frame, 0.0);
            let trace = v.sample(perimeter, mesh.y1(i), 0.0, frame, &metric, 1.0).v;
            ((trace + reflect_in(frame, trace)) * 0.5).dot(&frame.normal)
        })
        .collect()
}
