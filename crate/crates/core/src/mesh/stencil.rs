use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::{Mat2, Vec2};

pub const STENCIL_SIZE: usize = 9;

/// Per-node first-derivative weights on a logical 3×3 neighbourhood.
///
/// Weights come from a least-squares quadratic fit in Cartesian coordinates,
/// so the operator differentiates every quadratic polynomial exactly and is
/// second-order accurate for smooth fields. Being a fixed linear map, its
/// adjoint is available in closed form, which the energy gradient relies on.
#[derive(Debug, Clone)]
pub struct Stencil {
    neighbours: Vec<[usize; STENCIL_SIZE]>,
    weights: Vec<[Vec2; STENCIL_SIZE]>,
}

impl Stencil {
    /// `neighbours[n]` lists the node indices used at node `n`; the node
    /// itself must be among them.
    pub fn least_squares(positions: &[Vec2], neighbours: Vec<[usize; STENCIL_SIZE]>) -> Result<Self> {
        let mut weights = Vec::with_capacity(neighbours.len());
        for (n, nb) in neighbours.iter().enumerate() {
            let centre = positions[n];
            let scale = nb
                .iter()
                .map(|&m| (positions[m] - centre).norm())
                .fold(0.0_f64, f64::max);
            if !(scale > 0.0) {
                return Err(Error::Mesh(format!("degenerate stencil at node {n}")));
            }
            let mut v = SMatrix::<f64, STENCIL_SIZE, 6>::zeros();
            for (row, &m) in nb.iter().enumerate() {
                let d = (positions[m] - centre) / scale;
                let terms = [1.0, d.x, d.y, d.x * d.x, d.x * d.y, d.y * d.y];
                for (col, t) in terms.iter().enumerate() {
                    v[(row, col)] = *t;
                }
            }
            let svd = v.svd(true, true);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if !(smin > 1e-13 * smax) {
                return Err(Error::Mesh(format!(
                    "rank-deficient stencil at node {n} (σ_min/σ_max = {:e})",
                    smin / smax
                )));
            }
            let pinv = svd
                .pseudo_inverse(0.0)
                .map_err(|e| Error::Mesh(format!("stencil pseudo-inverse failed at node {n}: {e}")))?;
            let mut w = [Vec2::zeros(); STENCIL_SIZE];
            for (k, wk) in w.iter_mut().enumerate() {
                *wk = Vec2::new(pinv[(1, k)], pinv[(2, k)]) / scale;
            }
            weights.push(w);
        }
        Ok(Self { neighbours, weights })
    }

    pub fn len(&self) -> usize {
        self.neighbours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbours.is_empty()
    }

    pub fn neighbours(&self, node: usize) -> &[usize; STENCIL_SIZE] {
        &self.neighbours[node]
    }

    pub fn weights(&self, node: usize) -> &[Vec2; STENCIL_SIZE] {
        &self.weights[node]
    }

    /// Cartesian gradient of a vector field; entry `(i, a)` is `∂_a u_i`.
    pub fn gradient_at(&self, values: &[Vec2], node: usize) -> Mat2 {
        let mut g = Mat2::zeros();
        for (&m, w) in self.neighbours[node].iter().zip(self.weights[node].iter()) {
            g += values[m] * w.transpose();
        }
        g
    }

    pub fn gradient(&self, values: &[Vec2]) -> Vec<Mat2> {
        (0..self.len()).map(|n| self.gradient_at(values, n)).collect()
    }

    pub fn scalar_gradient(&self, values: &[f64]) -> Vec<Vec2> {
        (0..self.len())
            .map(|n| {
                self.neighbours[n]
                    .iter()
                    .zip(self.weights[n].iter())
                    .map(|(&m, w)| values[m] * w)
                    .sum()
            })
            .collect()
    }

    /// Adds `Gᵀ dual` to `out`, where `G` maps nodal vectors to nodal
    /// gradients. Summation order is fixed, so results are reproducible.
    pub fn accumulate_adjoint(&self, dual: &[Mat2], out: &mut [Vec2]) {
        for (n, d) in dual.iter().enumerate() {
            for (&m, w) in self.neighbours[n].iter().zip(self.weights[n].iter()) {
                out[m] += d * w;
            }
        }
    }
}

/// Cubic Lagrange weights on nodes at offsets −1, 0, 1, 2 for position `t`.
pub(crate) fn cubic_weights(t: f64) -> [f64; 4] {
    let (a, b, c, d) = (t + 1.0, t, t - 1.0, t - 2.0);
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_weights_reproduce_cubics() {
        for &t in &[0.0, 0.25, 0.5, 0.9, 1.0, 1.4] {
            let w = cubic_weights(t);
            let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x - 0.3 * x * x * x;
            let approx: f64 = [-1.0, 0.0, 1.0, 2.0].iter().zip(w.iter()).map(|(x, w)| w * f(*x)).sum();
            assert!((approx - f(t)).abs() < 1e-13);
        }
    }
}
