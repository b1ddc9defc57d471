//! Boundary-fitted grids, derivative stencils and quadrature.

mod collar;
mod interior;
mod stencil;

use std::io::Write;
use std::sync::Arc;

pub use collar::CollarMesh;
pub use interior::{InteriorMesh, MeshMetadata};
pub use stencil::{Stencil, STENCIL_SIZE};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, TangentNormalChart};
use crate::{Mat2, Vec2};

pub fn build_interior_mesh(curve: Arc<BoundaryCurve>, n_theta: usize, n_s: usize) -> Result<Arc<InteriorMesh>> {
    InteriorMesh::new(curve, n_theta, n_s).map(Arc::new)
}

pub fn build_collar_mesh(chart: Arc<TangentNormalChart>, n1: usize, n2: usize) -> Result<Arc<CollarMesh>> {
    CollarMesh::new(chart, n1, n2).map(Arc::new)
}

/// Vector field sampled at the nodes of an [`InteriorMesh`], in Cartesian
/// components.
#[derive(Debug, Clone)]
pub struct GridField {
    mesh: Arc<InteriorMesh>,
    values: Vec<Vec2>,
}

impl GridField {
    pub fn new(mesh: Arc<InteriorMesh>, values: Vec<Vec2>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::MeshMismatch {
                expected: mesh.len(),
                got: values.len(),
            });
        }
        if let Some(n) = values.iter().position(|v| !(v.x.is_finite() && v.y.is_finite())) {
            return Err(Error::NonFinite(format!("field value at node {n}")));
        }
        Ok(Self { mesh, values })
    }

    pub fn from_fn(mesh: Arc<InteriorMesh>, f: impl Fn(Vec2) -> Vec2) -> Result<Self> {
        let values = mesh.positions().iter().map(|&x| f(x)).collect();
        Self::new(mesh, values)
    }

    pub fn constant(mesh: Arc<InteriorMesh>, value: Vec2) -> Self {
        let values = vec![value; mesh.len()];
        Self { mesh, values }
    }

    /// Skips the finiteness check; used by solvers that validate separately.
    pub(crate) fn from_raw(mesh: Arc<InteriorMesh>, values: Vec<Vec2>) -> Self {
        debug_assert_eq!(values.len(), mesh.len());
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<InteriorMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[Vec2] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Vec2> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_at(&self, x: Vec2) -> Result<Vec2> {
        self.mesh.interpolate(&self.values, x)
    }

    /// Writes `x,y,u1,u2`, one node per row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,y,u1,u2")?;
        for (x, u) in self.mesh.positions().iter().zip(&self.values) {
            writeln!(out, "{:e},{:e},{:e},{:e}", x.x, x.y, u.x, u.y)?;
        }
        Ok(())
    }
}

/// Per-node Cartesian gradient; entry `(i, a)` is `∂_a u_i`.
pub fn discrete_gradient(field: &GridField) -> Vec<Mat2> {
    field.mesh.stencil().gradient(&field.values)
}

pub fn discrete_divergence(field: &GridField) -> Vec<f64> {
    discrete_gradient(field).iter().map(|g| g.trace()).collect()
}

/// Quadrature of nodal values against the mesh area weights. The sum runs in
/// node order, so the result does not depend on thread count.
pub fn integrate(mesh: &InteriorMesh, values: &[f64]) -> Result<f64> {
    if values.len() != mesh.len() {
        return Err(Error::MeshMismatch {
            expected: mesh.len(),
            got: values.len(),
        });
    }
    Ok(values.iter().zip(mesh.weights()).map(|(f, w)| f * w).sum())
}

/// Discrete L² norm of a vector field.
pub fn l2_norm(field: &GridField) -> f64 {
    field
        .values
        .iter()
        .zip(field.mesh.weights())
        .map(|(u, w)| u.norm_squared() * w)
        .sum::<f64>()
        .sqrt()
}
