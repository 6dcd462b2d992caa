//! Integrated quadratic reconstruction for finite-volume schemes on scalar
//! conservation laws.

pub mod geometry;
pub mod harness;
pub mod qp;
pub mod models;
pub mod reconstruction;
pub mod solver;

pub use geometry::MeshError;
pub use qp::QpError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Qp(#[from] QpError),
}
