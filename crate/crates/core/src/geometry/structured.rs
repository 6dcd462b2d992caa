//! Uniform mesh generators.

use super::{CellKind, Domain, Mesh, MeshError, Point};

/// How each rectangle of a structured triangular mesh is split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    /// Split along the `(x0,y0)-(x1,y1)` diagonal.
    #[default]
    Forward,
    /// Split along the `(x1,y0)-(x0,y1)` diagonal.
    Backward,
}

fn check_counts(counts: &[usize]) -> Result<(), MeshError> {
    if let Some(&n) = counts.iter().find(|&&n| n < 3) {
        return Err(MeshError::Invalid(format!(
            "at least 3 cells per direction are required, got {n}"
        )));
    }
    Ok(())
}

fn check_domain(domain: &Domain, dim: usize) -> Result<(), MeshError> {
    for a in 0..dim {
        let l = domain.length(a);
        if !(l.is_finite() && l > 0.0) {
            return Err(MeshError::Invalid(format!("degenerate domain extent {l} on axis {a}")));
        }
    }
    Ok(())
}

struct Grid {
    counts: [usize; 3],
    vertices: Vec<Point>,
}

impl Grid {
    fn new(domain: &Domain, counts: [usize; 3], dim: usize) -> Self {
        let np = |a: usize| if a < dim { counts[a] + 1 } else { 1 };
        let mut vertices = Vec::with_capacity(np(0) * np(1) * np(2));
        for k in 0..np(2) {
            for j in 0..np(1) {
                for i in 0..np(0) {
                    let idx = [i, j, k];
                    let mut p = Point::zeros();
                    for a in 0..dim {
                        p[a] = domain.lo[a] + domain.length(a) * idx[a] as f64 / counts[a] as f64;
                    }
                    vertices.push(p);
                }
            }
        }
        Self { counts, vertices }
    }

    fn id(&self, i: usize, j: usize, k: usize) -> usize {
        let nx = self.counts[0] + 1;
        let ny = self.counts[1] + 1;
        i + nx * (j + ny * k)
    }
}

pub fn build_uniform_interval_mesh(n: usize, domain: Domain) -> Result<Mesh, MeshError> {
    check_counts(&[n])?;
    check_domain(&domain, 1)?;
    let grid = Grid::new(&domain, [n, 1, 1], 1);
    let cells: Vec<Vec<usize>> = (0..n).map(|i| vec![i, i + 1]).collect();
    Mesh::from_cells(CellKind::Interval, &grid.vertices, &cells, domain)
}

pub fn build_uniform_rect_mesh(nx: usize, ny: usize, domain: Domain) -> Result<Mesh, MeshError> {
    check_counts(&[nx, ny])?;
    check_domain(&domain, 2)?;
    let grid = Grid::new(&domain, [nx, ny, 1], 2);
    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push(vec![
                grid.id(i, j, 0),
                grid.id(i + 1, j, 0),
                grid.id(i + 1, j + 1, 0),
                grid.id(i, j + 1, 0),
            ]);
        }
    }
    Mesh::from_cells(CellKind::Rectangle, &grid.vertices, &cells, domain)
}

pub fn build_structured_tri_mesh(
    nx: usize,
    ny: usize,
    domain: Domain,
    diagonal: Diagonal,
) -> Result<Mesh, MeshError> {
    check_counts(&[nx, ny])?;
    check_domain(&domain, 2)?;
    let grid = Grid::new(&domain, [nx, ny, 1], 2);
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v00 = grid.id(i, j, 0);
            let v10 = grid.id(i + 1, j, 0);
            let v11 = grid.id(i + 1, j + 1, 0);
            let v01 = grid.id(i, j + 1, 0);
            match diagonal {
                Diagonal::Forward => {
                    cells.push(vec![v00, v10, v11]);
                    cells.push(vec![v00, v11, v01]);
                }
                Diagonal::Backward => {
                    cells.push(vec![v00, v10, v01]);
                    cells.push(vec![v10, v11, v01]);
                }
            }
        }
    }
    Mesh::from_cells(CellKind::Triangle, &grid.vertices, &cells, domain)
}

pub fn build_uniform_cuboid_mesh(nx: usize, ny: usize, nz: usize, domain: Domain) -> Result<Mesh, MeshError> {
    check_counts(&[nx, ny, nz])?;
    check_domain(&domain, 3)?;
    let grid = Grid::new(&domain, [nx, ny, nz], 3);
    let mut cells = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let mut c = Vec::with_capacity(8);
                for dk in 0..2 {
                    for (di, dj) in [(0, 0), (1, 0), (1, 1), (0, 1)] {
                        c.push(grid.id(i + di, j + dj, k + dk));
                    }
                }
                cells.push(c);
            }
        }
    }
    Mesh::from_cells(CellKind::Cuboid, &grid.vertices, &cells, domain)
}

/// Cube split into six tetrahedra around the main diagonal, repeated on a
/// uniform grid.
pub fn build_structured_tet_mesh(n: usize, domain: Domain) -> Result<Mesh, MeshError> {
    check_counts(&[n])?;
    check_domain(&domain, 3)?;
    let grid = Grid::new(&domain, [n, n, n], 3);
    let mut cells = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let v = |di, dj, dk| grid.id(i + di, j + dj, k + dk);
                let (a, b) = (v(0, 0, 0), v(1, 1, 1));
                let ring = [v(1, 0, 0), v(1, 1, 0), v(0, 1, 0), v(0, 1, 1), v(0, 0, 1), v(1, 0, 1)];
                for s in 0..6 {
                    cells.push(vec![a, ring[s], ring[(s + 1) % 6], b]);
                }
            }
        }
    }
    Mesh::from_cells(CellKind::Tetrahedron, &grid.vertices, &cells, domain)
}
