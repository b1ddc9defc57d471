//! Divergence-penalized Ginzburg–Landau energy on star-shaped planar
//! domains with tangential anchoring `u·ν = 0`.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: boundary curves, the tangent–normal chart `(y1, y2)`.
//! * [`mesh`]: boundary-fitted tensor grids on the domain and on the
//!   two-sided collar, least-squares derivative stencils, quadrature.
//! * [`energy`]: the discrete energy, its exact gradient, the tangential
//!   projection and the strong-form residual.
//! * [`minimizer`]: vortex ansatz and projected Barzilai–Borwein descent.
//! * [`extension`]: reflection of a field across the boundary, distortion
//!   factor, glued metric, Legendre–Hadamard form, glued weak residual.
//! * [`diagnostics`]: norms, winding numbers, ε-sweeps, rescaled windows.
//! * [`validators`]: closed-form oracles (the quadratic counterexample to a
//!   maximum principle and the closed-form ansatz energy).

pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod extension;
pub mod geometry;
pub mod mesh;
pub mod minimizer;
pub mod validators;

pub use error::{Error, Result};

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

/// Counter-clockwise rotation by a right angle, `(x, y) ↦ (−y, x)`.
#[inline]
pub fn rot90(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}
