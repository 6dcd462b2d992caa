use super::quadrature::{bounding_box, face_points};
use super::{CellKind, MeshError, Point, SymMatrix};

/// One face of a cell, seen from that cell.
#[derive(Debug, Clone)]
pub struct FaceGeometry {
    /// Local indices into the owning cell's vertex list.
    pub vertices: Vec<usize>,
    pub area: f64,
    /// Unit outward normal.
    pub normal: Point,
    pub centroid: Point,
    pub points: Vec<Point>,
    pub weights: &'static [f64],
}

/// Geometric data of a single control volume.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub kind: CellKind,
    pub vertices: Vec<Point>,
    pub centroid: Point,
    pub volume: f64,
    /// `J0`: average of `(x - x0)(x - x0)^T` over the cell.
    pub second_moments: SymMatrix,
    /// Perimeter (2D), surface area (3D), or number of endpoints (1D).
    pub surface: f64,
    /// Inscribed-sphere diameter for simplices, harmonic mean of the
    /// side lengths for boxes.
    pub size: f64,
    pub faces: Vec<FaceGeometry>,
}

const TRI_FACES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];
const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

impl CellGeometry {
    pub fn new(kind: CellKind, vertices: Vec<Point>) -> Result<Self, MeshError> {
        if vertices.len() != kind.vertex_count() {
            return Err(MeshError::Invalid(format!(
                "{kind} needs {} vertices, got {}",
                kind.vertex_count(),
                vertices.len()
            )));
        }
        let (lo, hi) = bounding_box(&vertices);
        let extent = (hi - lo).max();
        let (centroid, volume, second_moments) = match kind {
            CellKind::Interval | CellKind::Rectangle | CellKind::Cuboid => {
                check_box_corners(kind, &vertices, lo, hi)?;
                let d = kind.dim();
                let mut j = SymMatrix::zeros();
                let mut vol = 1.0;
                for a in 0..d {
                    let l = hi[a] - lo[a];
                    j[(a, a)] = l * l / 12.0;
                    vol *= l;
                }
                ((lo + hi) * 0.5, vol, j)
            }
            CellKind::Triangle => {
                let e1 = vertices[1] - vertices[0];
                let e2 = vertices[2] - vertices[0];
                let area = 0.5 * (e1.x * e2.y - e1.y * e2.x).abs();
                let c = (vertices[0] + vertices[1] + vertices[2]) / 3.0;
                (c, area, simplex_moments(&vertices, 36.0))
            }
            CellKind::Tetrahedron => {
                let e1 = vertices[1] - vertices[0];
                let e2 = vertices[2] - vertices[0];
                let e3 = vertices[3] - vertices[0];
                let vol = e1.dot(&e2.cross(&e3)).abs() / 6.0;
                let c = (vertices[0] + vertices[1] + vertices[2] + vertices[3]) / 4.0;
                (c, vol, simplex_moments(&vertices, 80.0))
            }
        };
        if !(volume > 1e-13 * extent.powi(kind.dim() as i32)) {
            return Err(MeshError::Degenerate(format!(
                "{kind} with vertices {:?} has volume {volume:e}",
                vertices.iter().map(|p| [p.x, p.y, p.z]).collect::<Vec<_>>()
            )));
        }

        let faces = build_faces(kind, &vertices, centroid, lo, hi);
        let surface: f64 = faces.iter().map(|f| f.area).sum();
        let size = if kind.is_simplex() {
            if kind == CellKind::Interval {
                volume
            } else {
                2.0 * kind.dim() as f64 * volume / surface
            }
        } else {
            let d = kind.dim();
            d as f64 / (0..d).map(|a| 1.0 / (hi[a] - lo[a])).sum::<f64>()
        };

        Ok(Self {
            kind,
            vertices,
            centroid,
            volume,
            second_moments,
            surface,
            size,
            faces,
        })
    }

    /// Collocation cluster `Z0`: centroid first, then each face's quadrature
    /// points in face order.
    pub fn cluster(&self) -> impl Iterator<Item = Point> + '_ {
        std::iter::once(self.centroid).chain(self.faces.iter().flat_map(|f| f.points.iter().copied()))
    }

    /// Mirror image of this cell across the plane of face `face`.
    pub fn reflected(&self, face: usize) -> CellGeometry {
        let f = &self.faces[face];
        let n = f.normal;
        let p0 = f.centroid;
        let reflect = |x: &Point| x - n * (2.0 * (x - p0).dot(&n));
        let vertices: Vec<Point> = self.vertices.iter().map(reflect).collect();
        // rebuild from the mirrored vertices; a reflection preserves volume and shape
        CellGeometry::new(self.kind, vertices).expect("reflection of a valid cell is valid")
    }
}

fn check_box_corners(kind: CellKind, vertices: &[Point], lo: Point, hi: Point) -> Result<(), MeshError> {
    let d = kind.dim();
    let tol = 1e-12 * (hi - lo).max().max(1e-300);
    for v in vertices {
        for a in 0..d {
            if (v[a] - lo[a]).abs() > tol && (v[a] - hi[a]).abs() > tol {
                return Err(MeshError::Invalid(format!(
                    "{kind} cells must be axis-aligned boxes; vertex {:?} is not a corner",
                    [v.x, v.y, v.z]
                )));
            }
        }
        for a in d..3 {
            if v[a] != 0.0 {
                return Err(MeshError::Invalid(format!(
                    "{kind} vertex has nonzero coordinate on unused axis {a}"
                )));
            }
        }
    }
    Ok(())
}

/// `(1/k) * sum_{i<j} (Pj - Pi)(Pj - Pi)^T`, with `k = (d+1)^2 (d+2)`.
fn simplex_moments(vertices: &[Point], k: f64) -> SymMatrix {
    let mut j = SymMatrix::zeros();
    for a in 0..vertices.len() {
        for b in a + 1..vertices.len() {
            let e = vertices[b] - vertices[a];
            j += e * e.transpose();
        }
    }
    j / k
}

fn build_faces(kind: CellKind, v: &[Point], centroid: Point, lo: Point, hi: Point) -> Vec<FaceGeometry> {
    let weights = kind.face_weights();
    let make = |idx: Vec<usize>, area: f64, normal: Point| {
        let fv: Vec<Point> = idx.iter().map(|&i| v[i]).collect();
        let fc = fv.iter().sum::<Point>() / fv.len() as f64;
        FaceGeometry {
            points: face_points(kind, &fv),
            vertices: idx,
            area,
            normal,
            centroid: fc,
            weights,
        }
    };
    match kind {
        CellKind::Interval | CellKind::Rectangle | CellKind::Cuboid => {
            let d = kind.dim();
            let mut faces = Vec::with_capacity(2 * d);
            for a in 0..d {
                let area: f64 = (0..d).filter(|&b| b != a).map(|b| hi[b] - lo[b]).product();
                for (side, value) in [(-1.0, lo[a]), (1.0, hi[a])] {
                    let tol = 1e-12 * (hi[a] - lo[a]);
                    let idx: Vec<usize> = (0..v.len()).filter(|&i| (v[i][a] - value).abs() <= tol).collect();
                    let mut normal = Point::zeros();
                    normal[a] = side;
                    faces.push(make(sorted_face(kind, idx, v), area, normal));
                }
            }
            faces
        }
        CellKind::Triangle => TRI_FACES
            .iter()
            .map(|&[i, j]| {
                let e = v[j] - v[i];
                let len = e.norm();
                let mut n = Point::new(e.y, -e.x, 0.0) / len;
                if n.dot(&((v[i] + v[j]) * 0.5 - centroid)) < 0.0 {
                    n = -n;
                }
                make(vec![i, j], len, n)
            })
            .collect(),
        CellKind::Tetrahedron => TET_FACES
            .iter()
            .map(|&[i, j, k]| {
                let c = (v[j] - v[i]).cross(&(v[k] - v[i]));
                let area = 0.5 * c.norm();
                let mut n = c.normalize();
                if n.dot(&((v[i] + v[j] + v[k]) / 3.0 - centroid)) < 0.0 {
                    n = -n;
                }
                make(vec![i, j, k], area, n)
            })
            .collect(),
    }
}

/// Orders the vertices of a box face; a 2D edge needs its two endpoints in
/// increasing coordinate order so the Gauss points come out deterministic.
fn sorted_face(kind: CellKind, mut idx: Vec<usize>, v: &[Point]) -> Vec<usize> {
    if kind == CellKind::Rectangle {
        idx.sort_by(|&a, &b| {
            (v[a].x, v[a].y)
                .partial_cmp(&(v[b].x, v[b].y))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    }
    idx
}
