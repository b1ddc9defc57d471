use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid boundary curve: {0}")]
    Curve(String),

    #[error("mesh construction failed: {0}")]
    Mesh(String),

    #[error("point ({x}, {y}) lies outside the collar (|y2| = {distance} >= {limit})")]
    OutOfCollar {
        x: f64,
        y: f64,
        distance: f64,
        limit: f64,
    },

    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("chart inversion did not converge at ({x}, {y})")]
    Inversion { x: f64, y: f64 },

    #[error("field has {got} values but the mesh has {expected} nodes")]
    MeshMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("contour crosses a defect core: |u| = {modulus} at ({x}, {y})")]
    DefectOnContour { modulus: f64, x: f64, y: f64 },

    #[error("minimization failed: {0}")]
    Minimize(String),

    #[error("unsupported test function: {0}")]
    UnsupportedTestFunction(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
