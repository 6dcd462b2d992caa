//! Meshes of intervals, rectangles, triangles, cuboids and tetrahedra, with
//! the per-cell data the reconstruction and the scheme consume.

mod cell;
mod kind;
mod mesh;
pub mod quadrature;
mod structured;
mod triangle_io;

use thiserror::Error;

pub use cell::{CellGeometry, FaceGeometry};
pub use kind::{interior_quadrature_weights, CellKind, Fraction, KindParams};
pub use mesh::{Domain, Face, FaceLink, Ghost, Mesh, Neighbor};
pub use structured::{
    build_structured_tet_mesh, build_structured_tri_mesh, build_uniform_cuboid_mesh, build_uniform_interval_mesh,
    build_uniform_rect_mesh, Diagonal,
};
pub use triangle_io::{load_unstructured_tri_mesh, write_triangle_files};

/// Points always carry three coordinates; unused axes are zero.
pub type Point = nalgebra::Vector3<f64>;
pub type SymMatrix = nalgebra::Matrix3<f64>;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("degenerate cell: {0}")]
    Degenerate(String),
    #[error("{file} file, line {line}: {message}")]
    Parse {
        file: &'static str,
        line: usize,
        message: String,
    },
    #[error("cell {cell} references node {index}, which does not exist")]
    DanglingIndex { cell: usize, index: usize },
    #[error("element {cell} (line {line}) is inverted, signed area {signed_area:e}")]
    Inverted {
        cell: usize,
        line: usize,
        signed_area: f64,
    },
}

/// Second moments `J0` of a cell.
pub fn second_moments(cell: &CellGeometry) -> SymMatrix {
    cell.second_moments
}

/// The collocation cluster `Z0` of a cell: centroid first, then face points.
pub fn collocation_cluster(cell: &CellGeometry) -> Vec<Point> {
    cell.cluster().collect()
}

/// Number of entries in the half-vectorization of a `dim x dim` matrix.
pub fn vech_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Half-vectorization: lower-triangular part, column by column.
pub fn vech(m: &SymMatrix, dim: usize, out: &mut [f64]) {
    let mut k = 0;
    for col in 0..dim {
        for row in col..dim {
            out[k] = m[(row, col)];
            k += 1;
        }
    }
}
