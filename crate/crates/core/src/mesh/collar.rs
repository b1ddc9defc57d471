use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Frame, TangentNormalChart};
use crate::Vec2;

/// Tensor grid on the two-sided collar `{|y2| < r₁}` in chart coordinates.
///
/// `y1` is uniform in arclength and periodic; `y2` rows are cell-centred and
/// symmetric about the boundary, so row `j` mirrors row `n2 − 1 − j` and no
/// row lies on `y2 = 0`. Node `(i, j)` has index `j·n1 + i`.
#[derive(Debug, Clone)]
pub struct CollarMesh {
    chart: Arc<TangentNormalChart>,
    n1: usize,
    n2: usize,
    d1: f64,
    d2: f64,
    y1: Vec<f64>,
    y2: Vec<f64>,
    frames: Vec<Frame>,
    positions: Vec<Vec2>,
    jacobians: Vec<f64>,
    weights: Vec<f64>,
}

impl CollarMesh {
    pub fn new(chart: Arc<TangentNormalChart>, n1: usize, n2: usize) -> Result<Self> {
        if n1 < 8 {
            return Err(Error::param("n1", format!("need at least 8 tangential samples, got {n1}")));
        }
        if n2 < 2 || n2 % 2 != 0 {
            return Err(Error::param("n2", format!("need an even, positive row count, got {n2}")));
        }
        let r1 = chart.r1();
        let kappa = chart.curve().max_abs_curvature();
        if !(r1 * kappa < 1.0) {
            return Err(Error::Mesh(format!("collar half-width {r1} violates r₁·max|κ| < 1 (max|κ| = {kappa})")));
        }
        let perimeter = chart.curve().perimeter();
        let d1 = perimeter / n1 as f64;
        let d2 = 2.0 * r1 / n2 as f64;
        let y1: Vec<f64> = (0..n1).map(|i| i as f64 * d1).collect();
        let y2: Vec<f64> = (0..n2).map(|j| -r1 + (j as f64 + 0.5) * d2).collect();
        let frames: Vec<Frame> = y1.iter().map(|&s| chart.curve().frame(s)).collect();
        let base: Vec<Vec2> = y1.iter().map(|&s| chart.curve().boundary_point(s)).collect();

        let mut positions = Vec::with_capacity(n1 * n2);
        let mut jacobians = Vec::with_capacity(n1 * n2);
        let mut weights = Vec::with_capacity(n1 * n2);
        for &t in &y2 {
            for i in 0..n1 {
                let jx = 1.0 - t * frames[i].curvature;
                if !(jx > 0.0) {
                    return Err(Error::Mesh(format!("non-positive chart Jacobian {jx} at y1 = {}, y2 = {t}", y1[i])));
                }
                positions.push(base[i] + t * frames[i].normal);
                jacobians.push(jx);
                weights.push(jx * d1 * d2);
            }
        }
        Ok(Self {
            chart,
            n1,
            n2,
            d1,
            d2,
            y1,
            y2,
            frames,
            positions,
            jacobians,
            weights,
        })
    }

    pub fn chart(&self) -> &Arc<TangentNormalChart> {
        &self.chart
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n1 + i
    }

    pub fn coords(&self, node: usize) -> (usize, usize) {
        (node % self.n1, node / self.n1)
    }

    pub fn y1(&self, i: usize) -> f64 {
        self.y1[i]
    }

    pub fn y2(&self, j: usize) -> f64 {
        self.y2[j]
    }

    /// Chart coordinates of a node.
    pub fn chart_coords(&self, node: usize) -> (f64, f64) {
        let (i, j) = self.coords(node);
        (self.y1[i], self.y2[j])
    }

    pub fn frame(&self, i: usize) -> &Frame {
        &self.frames[i]
    }

    /// Frame of the boundary point below a node.
    pub fn node_frame(&self, node: usize) -> &Frame {
        &self.frames[node % self.n1]
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    /// `JX = 1 − y2 κ` per node.
    pub fn jacobians(&self) -> &[f64] {
        &self.jacobians
    }

    /// Quadrature weights `|JX| Δy1 Δy2`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_exterior(&self, node: usize) -> bool {
        self.y2[node / self.n1] < 0.0
    }

    /// Node at the same `y1` with `y2` negated.
    pub fn mirror(&self, node: usize) -> usize {
        let (i, j) = self.coords(node);
        self.index(i, self.n2 - 1 - j)
    }

    /// Chart-coordinate partial derivatives `(∂_{y1} f, ∂_{y2} f)` of nodal
    /// values: centred and periodic in `y1`, centred in `y2` with three-point
    /// one-sided formulas on the outer rows.
    pub fn chart_derivatives(&self, values: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if values.len() != self.len() {
            return Err(Error::MeshMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        if self.n2 < 3 {
            return Err(Error::Mesh("normal derivatives need at least 3 collar rows".into()));
        }
        let (n1, n2) = (self.n1, self.n2);
        let mut d1 = vec![0.0; values.len()];
        let mut d2 = vec![0.0; values.len()];
        for j in 0..n2 {
            for i in 0..n1 {
                let at = |ii: usize, jj: usize| values[jj * n1 + ii];
                let node = j * n1 + i;
                d1[node] = (at((i + 1) % n1, j) - at((i + n1 - 1) % n1, j)) / (2.0 * self.d1);
                d2[node] = if j == 0 {
                    (-3.0 * at(i, 0) + 4.0 * at(i, 1) - at(i, 2)) / (2.0 * self.d2)
                } else if j + 1 == n2 {
                    (3.0 * at(i, j) - 4.0 * at(i, j - 1) + at(i, j - 2)) / (2.0 * self.d2)
                } else {
                    (at(i, j + 1) - at(i, j - 1)) / (2.0 * self.d2)
                };
            }
        }
        Ok((d1, d2))
    }

    /// Cartesian gradient from chart derivatives: `∇f = τ ∂_{y1}f / JX + ν ∂_{y2}f`.
    pub fn cartesian_gradient(&self, values: &[f64]) -> Result<Vec<Vec2>> {
        let (d1, d2) = self.chart_derivatives(values)?;
        Ok((0..self.len())
            .map(|n| {
                let f = self.node_frame(n);
                f.tangent * (d1[n] / self.jacobians[n]) + f.normal * d2[n]
            })
            .collect())
    }
}
