//! Star-shaped boundary curves and the tangent–normal chart of their collar.
//!
//! The boundary is given in polar form `ρ(θ)(cos θ, sin θ)`. Everything the
//! chart needs (tangent, inward normal, signed curvature) is evaluated in
//! closed form from `ρ, ρ', ρ''`; the arclength parametrization is obtained
//! by inverting a cumulative Gauss–Legendre table.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{rot90, Vec2};

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Radial profile `ρ(θ)` of a star-shaped boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialShape {
    /// `ρ(θ) = a0 + Σ_m a_m cos(mθ) + b_m sin(mθ)`, modes numbered from 1.
    Fourier {
        a0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// Axis-aligned ellipse with semi-axes `a` (x) and `b` (y).
    Ellipse { a: f64, b: f64 },
}

impl RadialShape {
    /// `(ρ, ρ', ρ'')` at `theta`.
    pub fn eval(&self, theta: f64) -> (f64, f64, f64) {
        match self {
            RadialShape::Fourier { a0, cos, sin } => {
                let (mut r, mut r1, mut r2) = (*a0, 0.0, 0.0);
                for (m, (a, b)) in fourier_pairs(cos, sin).enumerate() {
                    let m = (m + 1) as f64;
                    let (s, c) = (m * theta).sin_cos();
                    r += a * c + b * s;
                    r1 += m * (b * c - a * s);
                    r2 -= m * m * (a * c + b * s);
                }
                (r, r1, r2)
            }
            RadialShape::Ellipse { a, b } => {
                let (s2, c2) = (2.0 * theta).sin_cos();
                let sin_sq = theta.sin().powi(2);
                let d = a * a - b * b;
                let q = b * b + d * sin_sq;
                let q1 = d * s2;
                let q2 = 2.0 * d * c2;
                let ab = a * b;
                let r = ab / q.sqrt();
                let r1 = -0.5 * ab * q.powf(-1.5) * q1;
                let r2 = ab * (0.75 * q.powf(-2.5) * q1 * q1 - 0.5 * q.powf(-1.5) * q2);
                (r, r1, r2)
            }
        }
    }

    fn highest_mode(&self) -> usize {
        match self {
            RadialShape::Fourier { cos, sin, .. } => cos.len().max(sin.len()),
            // The ellipse radius is analytic; its Fourier content decays
            // geometrically, so treat it as moderately oscillatory.
            RadialShape::Ellipse { .. } => 16,
        }
    }

    /// Enclosed area `½∫ρ²dθ`, exact.
    pub fn area(&self) -> f64 {
        match self {
            RadialShape::Fourier { a0, cos, sin } => {
                let modes: f64 = fourier_pairs(cos, sin).map(|(a, b)| a * a + b * b).sum();
                PI * (a0 * a0 + 0.5 * modes)
            }
            RadialShape::Ellipse { a, b } => PI * a * b,
        }
    }
}

fn fourier_pairs<'a>(cos: &'a [f64], sin: &'a [f64]) -> impl Iterator<Item = (f64, f64)> + 'a {
    let n = cos.len().max(sin.len());
    (0..n).map(move |m| {
        (
            cos.get(m).copied().unwrap_or(0.0),
            sin.get(m).copied().unwrap_or(0.0),
        )
    })
}

/// Unit tangent, unit inward normal and signed curvature at a boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub tangent: Vec2,
    /// Inward normal, `τ^⊥`.
    pub normal: Vec2,
    pub curvature: f64,
}

impl Frame {
    pub fn outward_normal(&self) -> Vec2 {
        -self.normal
    }
}

/// A closed C² boundary curve, positively oriented, with a precomputed
/// arclength table.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    shape: RadialShape,
    /// Panel edges in θ of the arclength table.
    table_theta: Vec<f64>,
    /// Cumulative arclength at each panel edge; last entry is the perimeter.
    table_arclength: Vec<f64>,
    max_curvature: f64,
    min_curvature: f64,
    max_radius: f64,
}

impl BoundaryCurve {
    pub fn new(shape: RadialShape) -> Result<Self> {
        match &shape {
            RadialShape::Fourier { a0, cos, sin } => {
                if !a0.is_finite() || cos.iter().chain(sin).any(|c| !c.is_finite()) {
                    return Err(Error::Curve("non-finite Fourier coefficient".into()));
                }
            }
            RadialShape::Ellipse { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0) {
                    return Err(Error::Curve(format!("ellipse semi-axes must be positive, got a={a}, b={b}")));
                }
            }
        }

        let samples = (8 * shape.highest_mode()).max(64) * 16;
        let mut max_curvature = f64::NEG_INFINITY;
        let mut min_curvature = f64::INFINITY;
        let mut max_radius = 0.0_f64;
        for i in 0..samples {
            let theta = TAU * i as f64 / samples as f64;
            let (r, r1, r2) = shape.eval(theta);
            if !(r > 0.0) {
                return Err(Error::Curve(format!("radius ρ(θ) = {r} is not positive at θ = {theta}")));
            }
            let k = polar_curvature(r, r1, r2);
            max_curvature = max_curvature.max(k);
            min_curvature = min_curvature.min(k);
            max_radius = max_radius.max(r);
        }

        let panels = (4 * shape.highest_mode()).max(64) * 8;
        let mut table_theta = Vec::with_capacity(panels + 1);
        let mut table_arclength = Vec::with_capacity(panels + 1);
        let mut acc = 0.0;
        table_theta.push(0.0);
        table_arclength.push(0.0);
        for p in 0..panels {
            let lo = TAU * p as f64 / panels as f64;
            let hi = TAU * (p + 1) as f64 / panels as f64;
            let piece = gauss_legendre(lo, hi, |t| speed(&shape, t));
            if !(piece > 0.0) {
                return Err(Error::Curve("arclength table is not strictly increasing".into()));
            }
            acc += piece;
            table_theta.push(hi);
            table_arclength.push(acc);
        }

        Ok(Self {
            shape,
            table_theta,
            table_arclength,
            max_curvature,
            min_curvature,
            max_radius,
        })
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Self::new(RadialShape::Fourier {
            a0: radius,
            cos: vec![],
            sin: vec![],
        })
    }

    pub fn unit_disk() -> Self {
        Self::disk(1.0).expect("unit disk is a valid curve")
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        Self::new(RadialShape::Ellipse { a, b })
    }

    pub fn shape(&self) -> &RadialShape {
        &self.shape
    }

    pub fn perimeter(&self) -> f64 {
        *self.table_arclength.last().unwrap()
    }

    pub fn area(&self) -> f64 {
        self.shape.area()
    }

    /// Largest `|κ|` over a dense sample of the boundary.
    pub fn max_abs_curvature(&self) -> f64 {
        self.max_curvature.abs().max(self.min_curvature.abs())
    }

    pub fn min_curvature(&self) -> f64 {
        self.min_curvature
    }

    pub fn max_radius(&self) -> f64 {
        self.max_radius
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.shape.eval(theta).0
    }

    pub fn point_at_theta(&self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        self.radius(theta) * Vec2::new(c, s)
    }

    pub fn frame_at_theta(&self, theta: f64) -> Frame {
        let (r, r1, r2) = self.shape.eval(theta);
        let (s, c) = theta.sin_cos();
        let radial = Vec2::new(c, s);
        let angular = Vec2::new(-s, c);
        let tangent = (r1 * radial + r * angular).normalize();
        Frame {
            tangent,
            normal: rot90(tangent),
            curvature: polar_curvature(r, r1, r2),
        }
    }

    /// Arclength from θ = 0 to `theta`, for `theta ∈ [0, 2π]`.
    pub fn arclength_at(&self, theta: f64) -> f64 {
        let theta = theta.rem_euclid(TAU);
        let panels = self.table_theta.len() - 1;
        let p = ((theta / TAU * panels as f64) as usize).min(panels - 1);
        self.table_arclength[p] + gauss_legendre(self.table_theta[p], theta, |t| speed(&self.shape, t))
    }

    /// Polar angle of the boundary point at arclength `y1` (taken mod L).
    pub fn theta_at(&self, y1: f64) -> f64 {
        let total = self.perimeter();
        let s = y1.rem_euclid(total);
        let p = match self
            .table_arclength
            .binary_search_by(|v| v.partial_cmp(&s).unwrap())
        {
            Ok(i) => return self.table_theta[i],
            Err(i) => i - 1,
        };
        let (s0, s1) = (self.table_arclength[p], self.table_arclength[p + 1]);
        let (t0, t1) = (self.table_theta[p], self.table_theta[p + 1]);
        // Cubic Hermite seed using dθ/ds = 1/|γ'|, then Newton on S(θ) = s.
        let h = s1 - s0;
        let u = (s - s0) / h;
        let (m0, m1) = (h / speed(&self.shape, t0), h / speed(&self.shape, t1));
        let u2 = u * u;
        let u3 = u2 * u;
        let mut theta = (2.0 * u3 - 3.0 * u2 + 1.0) * t0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * t1
            + (u3 - u2) * m1;
        for _ in 0..8 {
            let residual = s0 + gauss_legendre(t0, theta, |t| speed(&self.shape, t)) - s;
            let step = residual / speed(&self.shape, theta);
            theta = (theta - step).clamp(t0, t1);
            if step.abs() < 1e-15 {
                break;
            }
        }
        theta
    }

    /// γ(y1).
    pub fn boundary_point(&self, y1: f64) -> Vec2 {
        self.point_at_theta(self.theta_at(y1))
    }

    /// (τ, ν, κ) at arclength `y1`.
    pub fn frame(&self, y1: f64) -> Frame {
        self.frame_at_theta(self.theta_at(y1))
    }

    /// Whether `x` lies in the closed domain.
    pub fn contains(&self, x: Vec2) -> bool {
        let r = x.norm();
        r == 0.0 || r <= self.radius(x.y.atan2(x.x))
    }
}

fn speed(shape: &RadialShape, theta: f64) -> f64 {
    let (r, r1, _) = shape.eval(theta);
    r.hypot(r1)
}

/// Signed curvature of a polar curve, positive for a convex CCW boundary.
pub fn polar_curvature(r: f64, r1: f64, r2: f64) -> f64 {
    (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1).powf(1.5)
}

fn gauss_legendre(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS.iter())
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Chart coordinates `(y1, y2)`: arclength and signed distance, positive
/// inside the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint {
    pub y1: f64,
    pub y2: f64,
}

/// The map `X(y1, y2) = γ(y1) + y2 ν(y1)` on the two-sided collar
/// `|y2| < r0`, with the smaller half-width `r1` used by collar meshes.
#[derive(Debug, Clone)]
pub struct TangentNormalChart {
    curve: Arc<BoundaryCurve>,
    r0: f64,
    r1: f64,
    /// Arclength samples used to seed inversion: (y1, γ(y1)).
    seeds: Vec<(f64, Vec2)>,
}

impl TangentNormalChart {
    /// Default widths: `r0 = 0.5 / max|κ|` and `r1 = r0 / 2`.
    pub fn new(curve: Arc<BoundaryCurve>) -> Result<Self> {
        let r0 = 0.5 / curve.max_abs_curvature();
        Self::with_widths(curve, r0, 0.5 * r0)
    }

    pub fn with_widths(curve: Arc<BoundaryCurve>, r0: f64, r1: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0 * curve.max_abs_curvature() < 1.0) {
            return Err(Error::param(
                "r0",
                format!("collar half-width {r0} violates r0·max|κ| < 1 (max|κ| = {})", curve.max_abs_curvature()),
            ));
        }
        if !(r1 > 0.0 && r1 < r0) {
            return Err(Error::param("r1", format!("need 0 < r1 < r0 = {r0}, got {r1}")));
        }
        let n = 1024;
        let total = curve.perimeter();
        let seeds = (0..n)
            .map(|i| {
                let y1 = total * i as f64 / n as f64;
                (y1, curve.boundary_point(y1))
            })
            .collect();
        Ok(Self { curve, r0, r1, seeds })
    }

    pub fn curve(&self) -> &Arc<BoundaryCurve> {
        &self.curve
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn chart_to_cartesian(&self, y1: f64, y2: f64) -> Result<Vec2> {
        if y2.abs() >= self.r0 {
            let p = self.curve.boundary_point(y1);
            return Err(Error::OutOfCollar {
                x: p.x,
                y: p.y,
                distance: y2.abs(),
                limit: self.r0,
            });
        }
        let theta = self.curve.theta_at(y1);
        let frame = self.curve.frame_at_theta(theta);
        Ok(self.curve.point_at_theta(theta) + y2 * frame.normal)
    }

    /// Inverse of [`chart_to_cartesian`](Self::chart_to_cartesian) by damped
    /// Newton on the foot point of `x`.
    pub fn cartesian_to_chart(&self, x: Vec2) -> Result<ChartPoint> {
        let (mut y1, nearest) = self
            .seeds
            .iter()
            .map(|(y1, p)| (*y1, (x - p).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if nearest >= 1.5 * self.r0 {
            return Err(Error::OutOfCollar {
                x: x.x,
                y: x.y,
                distance: nearest,
                limit: self.r0,
            });
        }
        let total = self.curve.perimeter();
        let max_step = total / 64.0;
        let mut converged = false;
        for _ in 0..60 {
            let theta = self.curve.theta_at(y1);
            let frame = self.curve.frame_at_theta(theta);
            let offset = x - self.curve.point_at_theta(theta);
            let f = offset.dot(&frame.tangent);
            let y2 = offset.dot(&frame.normal);
            let slope = 1.0 - frame.curvature * y2;
            let step = if slope > 0.1 { f / slope } else { f };
            y1 += step.clamp(-max_step, max_step);
            if step.abs() < 1e-14 * total.max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Inversion { x: x.x, y: x.y });
        }
        let y1 = y1.rem_euclid(total);
        let theta = self.curve.theta_at(y1);
        let frame = self.curve.frame_at_theta(theta);
        let y2 = (x - self.curve.point_at_theta(theta)).dot(&frame.normal);
        if y2.abs() >= self.r0 {
            return Err(Error::OutOfCollar {
                x: x.x,
                y: x.y,
                distance: y2.abs(),
                limit: self.r0,
            });
        }
        Ok(ChartPoint { y1, y2 })
    }

    /// `JX(y) = 1 − y2 κ(y1)`.
    pub fn jacobian(&self, y1: f64, y2: f64) -> f64 {
        1.0 - y2 * self.curve.frame(y1).curvature
    }
}
