use std::f64::consts::TAU;
use std::sync::Arc;

use serde::Serialize;

use super::stencil::{cubic_weights, Stencil, STENCIL_SIZE};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, Frame};
use crate::Vec2;

/// Tensor grid in `(θ, s)` with nodes at `s ρ(θ)(cos θ, sin θ)`.
///
/// The `s` rows are uniformly spaced, offset by half a cell from the centre
/// (`s_0 = Δs/2`) and ending on the boundary (`s = 1`), so no node sits on
/// the coordinate singularity. Node `(i, j)` has index `j·nθ + i`.
#[derive(Debug, Clone)]
pub struct InteriorMesh {
    curve: Arc<BoundaryCurve>,
    n_theta: usize,
    n_s: usize,
    d_theta: f64,
    d_s: f64,
    positions: Vec<Vec2>,
    weights: Vec<f64>,
    boundary_frames: Vec<Frame>,
    stencil: Stencil,
    min_spacing: f64,
    max_spacing: f64,
}

/// Summary written by `mesh-info` and alongside field dumps.
#[derive(Debug, Clone, Serialize)]
pub struct MeshMetadata {
    pub n_theta: usize,
    pub n_s: usize,
    /// Largest distance between neighbouring nodes.
    pub h: f64,
    pub h_min: f64,
    pub area: f64,
    pub exact_area: f64,
    pub perimeter: f64,
    pub max_curvature: f64,
}

impl InteriorMesh {
    pub fn new(curve: Arc<BoundaryCurve>, n_theta: usize, n_s: usize) -> Result<Self> {
        if n_theta < 16 || n_theta % 2 != 0 {
            return Err(Error::param("n_theta", format!("need an even count ≥ 16, got {n_theta}")));
        }
        if n_s < 8 {
            return Err(Error::param("n_s", format!("need at least 8 radial rows, got {n_s}")));
        }
        let d_theta = TAU / n_theta as f64;
        let d_s = 2.0 / (2 * n_s - 1) as f64;
        let thetas: Vec<f64> = (0..n_theta).map(|i| i as f64 * d_theta).collect();
        let radii: Vec<f64> = thetas.iter().map(|&t| curve.radius(t)).collect();

        let mut positions = Vec::with_capacity(n_theta * n_s);
        let mut weights = Vec::with_capacity(n_theta * n_s);
        for j in 0..n_s {
            let s = (j as f64 + 0.5) * d_s;
            // exact first moment ∫ s ds over the node's cell; the boundary
            // row owns the half cell [1 − Δs/2, 1]
            let (lo, hi) = if j + 1 == n_s { (s - 0.5 * d_s, 1.0) } else { (s - 0.5 * d_s, s + 0.5 * d_s) };
            let moment = 0.5 * (hi * hi - lo * lo);
            for i in 0..n_theta {
                let (sn, cs) = thetas[i].sin_cos();
                positions.push(s * radii[i] * Vec2::new(cs, sn));
                weights.push(moment * radii[i] * radii[i] * d_theta);
            }
        }
        let boundary_frames = thetas.iter().map(|&t| curve.frame_at_theta(t)).collect();

        let index = |i: isize, j: usize| j * n_theta + i.rem_euclid(n_theta as isize) as usize;
        let half = (n_theta / 2) as isize;
        let mut neighbours = Vec::with_capacity(n_theta * n_s);
        for j in 0..n_s {
            for i in 0..n_theta as isize {
                let mut nb = [0usize; STENCIL_SIZE];
                let mut k = 0;
                for di in -1..=1 {
                    let rows: [(isize, usize); 3] = if j == 0 {
                        // the row across the centre is row 0 rotated by π
                        [(i + di, 0), (i + di, 1), (i + half - di, 0)]
                    } else if j + 1 == n_s {
                        [(i + di, j), (i + di, j - 1), (i + di, j - 2)]
                    } else {
                        [(i + di, j - 1), (i + di, j), (i + di, j + 1)]
                    };
                    for (ii, jj) in rows {
                        nb[k] = index(ii, jj);
                        k += 1;
                    }
                }
                neighbours.push(nb);
            }
        }
        let stencil = Stencil::least_squares(&positions, neighbours)?;

        let (mut min_spacing, mut max_spacing) = (f64::INFINITY, 0.0_f64);
        for j in 0..n_s {
            for i in 0..n_theta as isize {
                let p = positions[index(i, j)];
                let a = (positions[index(i + 1, j)] - p).norm();
                min_spacing = min_spacing.min(a);
                max_spacing = max_spacing.max(a);
                if j + 1 < n_s {
                    let b = (positions[index(i, j + 1)] - p).norm();
                    min_spacing = min_spacing.min(b);
                    max_spacing = max_spacing.max(b);
                }
            }
        }

        Ok(Self {
            curve,
            n_theta,
            n_s,
            d_theta,
            d_s,
            positions,
            weights,
            boundary_frames,
            stencil,
            min_spacing,
            max_spacing,
        })
    }

    pub fn curve(&self) -> &Arc<BoundaryCurve> {
        &self.curve
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn d_theta(&self) -> f64 {
        self.d_theta
    }

    pub fn d_s(&self) -> f64 {
        self.d_s
    }

    pub fn s(&self, row: usize) -> f64 {
        (row as f64 + 0.5) * self.d_s
    }

    pub fn theta(&self, col: usize) -> f64 {
        col as f64 * self.d_theta
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.n_theta + col
    }

    /// `(col, row)` of a node index.
    pub fn coords(&self, node: usize) -> (usize, usize) {
        (node % self.n_theta, node / self.n_theta)
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        node / self.n_theta + 1 == self.n_s
    }

    /// Node indices of the boundary row, in θ order.
    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        let start = (self.n_s - 1) * self.n_theta;
        start..start + self.n_theta
    }

    /// Frame of the boundary at the node's column.
    pub fn boundary_frame(&self, col: usize) -> &Frame {
        &self.boundary_frames[col]
    }

    /// Largest neighbour distance.
    pub fn h(&self) -> f64 {
        self.max_spacing
    }

    pub fn h_min(&self) -> f64 {
        self.min_spacing
    }

    /// Largest radial spacing `Δs·max ρ`.
    pub fn radial_spacing(&self) -> f64 {
        self.d_s * self.curve.max_radius()
    }

    pub fn metadata(&self) -> MeshMetadata {
        MeshMetadata {
            n_theta: self.n_theta,
            n_s: self.n_s,
            h: self.max_spacing,
            h_min: self.min_spacing,
            area: self.weights.iter().sum(),
            exact_area: self.curve.area(),
            perimeter: self.curve.perimeter(),
            max_curvature: self.curve.max_abs_curvature(),
        }
    }

    /// Logical coordinates `(θ, s)` of a Cartesian point.
    pub fn logical_coords(&self, x: Vec2) -> Result<(f64, f64)> {
        let r = x.norm();
        if r == 0.0 {
            return Ok((0.0, 0.0));
        }
        let theta = x.y.atan2(x.x).rem_euclid(TAU);
        let s = r / self.curve.radius(theta);
        if s > 1.0 + 1e-12 {
            return Err(Error::OutsideDomain { x: x.x, y: x.y });
        }
        Ok((theta, s.min(1.0)))
    }

    /// Bicubic (tensor Lagrange) interpolation in `(θ, s)`. Rows below the
    /// first are taken from the opposite side of the centre; stencils are
    /// shifted inwards at the boundary.
    pub fn interpolate(&self, values: &[Vec2], x: Vec2) -> Result<Vec2> {
        if values.len() != self.len() {
            return Err(Error::MeshMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        let (theta, s) = self.logical_coords(x)?;
        let fi = theta / self.d_theta;
        let ci = fi.floor();
        let wi = cubic_weights(fi - ci);
        let ci = ci as isize;

        let fj = s / self.d_s - 0.5;
        let mut cj = fj.floor() as isize;
        let last = self.n_s as isize - 1;
        if cj + 2 > last {
            cj = last - 2;
        }
        let wj = cubic_weights(fj - cj as f64);
        let half = (self.n_theta / 2) as isize;
        let n = self.n_theta as isize;

        let mut acc = Vec2::zeros();
        for (b, wb) in wj.iter().enumerate() {
            let row = cj - 1 + b as isize;
            let (row, shift) = if row < 0 { ((-row - 1) as usize, half) } else { (row as usize, 0) };
            for (a, wa) in wi.iter().enumerate() {
                let col = (ci - 1 + a as isize + shift).rem_euclid(n) as usize;
                acc += wa * wb * values[row * self.n_theta + col];
            }
        }
        Ok(acc)
    }
}
