use std::collections::HashMap;

use super::cell::CellGeometry;
use super::quadrature::{bounding_box, cell_rule};
use super::{CellKind, MeshError, Point};

/// Reference to an adjacent cell. `shift` is added to the neighbor's own
/// coordinates to place it next to the referring cell (non-zero only across
/// periodic boundaries).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub cell: usize,
    pub shift: Point,
}

/// Axis-aligned domain with optional periodic wrap per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: Point,
    pub hi: Point,
    pub periodic: [bool; 3],
}

impl Domain {
    pub fn new(dim: usize, lo: &[f64], hi: &[f64], periodic: bool) -> Self {
        let mut l = Point::zeros();
        let mut h = Point::zeros();
        for a in 0..dim {
            l[a] = lo[a];
            h[a] = hi[a];
        }
        let mut p = [false; 3];
        for flag in p.iter_mut().take(dim) {
            *flag = periodic;
        }
        Self { lo: l, hi: h, periodic: p }
    }

    pub fn unit(dim: usize, periodic: bool) -> Self {
        Self::new(dim, &[0.0; 3], &[1.0; 3], periodic)
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn any_periodic(&self) -> bool {
        self.periodic.iter().any(|&p| p)
    }
}

/// Face shared by two cells, or by a cell and a ghost.
#[derive(Debug, Clone)]
pub struct Face {
    pub owner: usize,
    /// Index of this face in the owner's face list.
    pub owner_local: usize,
    /// Neighbor across the face, relative to the owner.
    pub neighbor: Neighbor,
    pub boundary: bool,
}

/// Mirror cell across a boundary face; holds a boundary-condition value.
#[derive(Debug, Clone)]
pub struct Ghost {
    pub owner: usize,
    pub owner_local: usize,
    pub face: usize,
    pub geometry: CellGeometry,
}

/// Per-cell link from a local face to the shared face list.
#[derive(Debug, Clone, Copy)]
pub struct FaceLink {
    pub face: usize,
    pub neighbor: Neighbor,
}

/// Immutable mesh with adjacency and cached geometry.
///
/// Cell indices `0..n_cells()` are real cells; `n_cells()..n_total()` are
/// ghosts, one per boundary face.
#[derive(Debug, Clone)]
pub struct Mesh {
    kind: CellKind,
    domain: Domain,
    cells: Vec<CellGeometry>,
    ghosts: Vec<Ghost>,
    faces: Vec<Face>,
    links: Vec<Vec<FaceLink>>,
    moore: Vec<Vec<Neighbor>>,
}

impl Mesh {
    /// Builds a mesh from raw vertices and cell connectivity. Vertices lying
    /// on opposite sides of a periodic axis are identified.
    pub fn from_cells(
        kind: CellKind,
        vertices: &[Point],
        cells: &[Vec<usize>],
        domain: Domain,
    ) -> Result<Self, MeshError> {
        if cells.is_empty() {
            return Err(MeshError::Invalid("mesh has no cells".into()));
        }
        let geometry: Vec<CellGeometry> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if let Some(&bad) = c.iter().find(|&&v| v >= vertices.len()) {
                    return Err(MeshError::DanglingIndex { cell: i, index: bad });
                }
                CellGeometry::new(kind, c.iter().map(|&v| vertices[v]).collect())
            })
            .collect::<Result<_, _>>()?;

        let canonical = canonical_ids(vertices, &domain);
        let dim = kind.dim();
        let snap = |raw: Point| -> Point {
            let mut s = Point::zeros();
            for a in 0..dim {
                if domain.periodic[a] {
                    let l = domain.length(a);
                    s[a] = (raw[a] / l).round() * l;
                }
            }
            s
        };

        // face matching on canonical vertex sets
        let mut by_key: HashMap<Vec<usize>, Vec<(usize, usize)>> = HashMap::new();
        let mut key_order = Vec::new();
        for (ci, (conn, g)) in cells.iter().zip(&geometry).enumerate() {
            for (fi, f) in g.faces.iter().enumerate() {
                let mut key: Vec<usize> = f.vertices.iter().map(|&lv| canonical[conn[lv]]).collect();
                key.sort_unstable();
                let entry = by_key.entry(key.clone()).or_default();
                if entry.is_empty() {
                    key_order.push(key);
                }
                entry.push((ci, fi));
            }
        }

        let mut faces = Vec::new();
        let mut links: Vec<Vec<Option<FaceLink>>> = geometry.iter().map(|g| vec![None; g.faces.len()]).collect();
        let mut boundary = Vec::new();
        for key in &key_order {
            let sides = &by_key[key];
            match sides.as_slice() {
                [(i, fi), (j, fj)] => {
                    let shift = snap(geometry[*i].faces[*fi].centroid - geometry[*j].faces[*fj].centroid);
                    let id = faces.len();
                    faces.push(Face {
                        owner: *i,
                        owner_local: *fi,
                        neighbor: Neighbor { cell: *j, shift },
                        boundary: false,
                    });
                    links[*i][*fi] = Some(FaceLink { face: id, neighbor: Neighbor { cell: *j, shift } });
                    links[*j][*fj] = Some(FaceLink { face: id, neighbor: Neighbor { cell: *i, shift: -shift } });
                }
                [(i, fi)] => boundary.push((*i, *fi)),
                _ => {
                    return Err(MeshError::Invalid(format!(
                        "face shared by {} cells (non-manifold mesh)",
                        sides.len()
                    )))
                }
            }
        }

        let n = geometry.len();
        let mut ghosts = Vec::with_capacity(boundary.len());
        for (i, fi) in boundary {
            let f = &geometry[i].faces[fi];
            for a in 0..dim {
                if domain.periodic[a] && f.normal[a].abs() > 0.5 {
                    return Err(MeshError::Invalid(format!(
                        "unmatched face on periodic axis {a} at {:?}",
                        [f.centroid.x, f.centroid.y, f.centroid.z]
                    )));
                }
            }
            let g = n + ghosts.len();
            let id = faces.len();
            faces.push(Face {
                owner: i,
                owner_local: fi,
                neighbor: Neighbor { cell: g, shift: Point::zeros() },
                boundary: true,
            });
            links[i][fi] = Some(FaceLink { face: id, neighbor: Neighbor { cell: g, shift: Point::zeros() } });
            ghosts.push(Ghost {
                owner: i,
                owner_local: fi,
                face: id,
                geometry: geometry[i].reflected(fi),
            });
        }
        let links: Vec<Vec<FaceLink>> = links
            .into_iter()
            .map(|l| l.into_iter().map(|x| x.expect("every face linked")).collect())
            .collect();

        // Moore neighbors through shared (canonical) vertices
        let mut incident: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
        for (ci, conn) in cells.iter().enumerate() {
            for (lv, &v) in conn.iter().enumerate() {
                incident.entry(canonical[v]).or_default().push((ci, lv));
            }
        }
        let tol = 1e-9 * (0..dim).map(|a| domain.length(a).abs()).fold(1e-300, f64::max);
        let mut moore: Vec<Vec<Neighbor>> = vec![Vec::new(); n];
        let push_unique = |list: &mut Vec<Neighbor>, nb: Neighbor| {
            if !list.iter().any(|m| m.cell == nb.cell && (m.shift - nb.shift).amax() <= tol) {
                list.push(nb);
            }
        };
        for (ci, conn) in cells.iter().enumerate() {
            for (lv, &v) in conn.iter().enumerate() {
                for &(cj, lw) in &incident[&canonical[v]] {
                    if cj == ci {
                        continue;
                    }
                    let shift = snap(geometry[ci].vertices[lv] - geometry[cj].vertices[lw]);
                    push_unique(&mut moore[ci], Neighbor { cell: cj, shift });
                }
            }
        }
        for (gi, ghost) in ghosts.iter().enumerate() {
            let owner_conn = &cells[ghost.owner];
            for &lv in &geometry[ghost.owner].faces[ghost.owner_local].vertices {
                let corner = geometry[ghost.owner].vertices[lv];
                for &(cj, lw) in &incident[&canonical[owner_conn[lv]]] {
                    let shift = snap(geometry[cj].vertices[lw] - corner);
                    push_unique(&mut moore[cj], Neighbor { cell: n + gi, shift });
                }
            }
        }
        for list in &mut moore {
            list.sort_by(|a, b| {
                a.cell.cmp(&b.cell).then_with(|| {
                    (a.shift.x, a.shift.y, a.shift.z)
                        .partial_cmp(&(b.shift.x, b.shift.y, b.shift.z))
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
            });
        }

        Ok(Self {
            kind,
            domain,
            cells: geometry,
            ghosts,
            faces,
            links,
            moore,
        })
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_ghosts(&self) -> usize {
        self.ghosts.len()
    }

    /// Real cells plus ghosts.
    pub fn n_total(&self) -> usize {
        self.cells.len() + self.ghosts.len()
    }

    pub fn is_ghost(&self, index: usize) -> bool {
        index >= self.cells.len()
    }

    pub fn cells(&self) -> &[CellGeometry] {
        &self.cells
    }

    pub fn cell(&self, index: usize) -> &CellGeometry {
        &self.cells[index]
    }

    /// Geometry of a real cell or a ghost.
    pub fn geometry(&self, index: usize) -> &CellGeometry {
        if index < self.cells.len() {
            &self.cells[index]
        } else {
            &self.ghosts[index - self.cells.len()].geometry
        }
    }

    pub fn ghosts(&self) -> &[Ghost] {
        &self.ghosts
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Face links of a real cell, in the cell's local face order.
    pub fn face_links(&self, cell: usize) -> &[FaceLink] {
        &self.links[cell]
    }

    /// Von Neumann neighbors (across faces, ghosts included).
    pub fn von_neumann(&self, cell: usize) -> impl Iterator<Item = Neighbor> + '_ {
        self.links[cell].iter().map(|l| l.neighbor)
    }

    /// Moore neighbors (sharing at least one vertex, ghosts included).
    pub fn moore(&self, cell: usize) -> &[Neighbor] {
        &self.moore[cell]
    }

    /// Smallest cell size over the mesh.
    pub fn h_min(&self) -> f64 {
        self.cells.iter().map(|c| c.size).fold(f64::INFINITY, f64::min)
    }

    pub fn total_volume(&self) -> f64 {
        self.cells.iter().map(|c| c.volume).sum()
    }

    /// Average of `f` over cell `index` (real or ghost) with the degree-4 rule
    /// on `2^depth`-fold subdivided sub-cells.
    pub fn cell_average(&self, index: usize, depth: u32, f: impl Fn(&Point) -> f64) -> f64 {
        let g = self.geometry(index);
        cell_rule(self.kind, &g.vertices, depth)
            .iter()
            .map(|(p, w)| w * f(p))
            .sum()
    }

    /// Structured-text summary.
    pub fn summary(&self) -> String {
        use std::fmt::Write;
        let p = self.kind.params();
        let (lo, hi) = bounding_box(&self.cells.iter().map(|c| c.centroid).collect::<Vec<_>>());
        let mut s = String::new();
        let _ = writeln!(s, "kind = {}", self.kind);
        let _ = writeln!(s, "dimension = {}", self.dim());
        let _ = writeln!(s, "cells = {}", self.n_cells());
        let _ = writeln!(s, "ghosts = {}", self.n_ghosts());
        let _ = writeln!(s, "faces = {}", self.faces.len());
        let _ = writeln!(s, "h_min = {:.6e}", self.h_min());
        let _ = writeln!(s, "volume = {:.12e}", self.total_volume());
        let _ = writeln!(
            s,
            "centroid_bbox = [{:.6}, {:.6}, {:.6}] .. [{:.6}, {:.6}, {:.6}]",
            lo.x, lo.y, lo.z, hi.x, hi.y, hi.z
        );
        let (mmin, mmax) = self
            .moore
            .iter()
            .map(|m| m.len())
            .fold((usize::MAX, 0), |(a, b), l| (a.min(l), b.max(l)));
        let _ = writeln!(s, "moore_patch = {mmin}..{mmax}");
        let _ = writeln!(s, "faces_per_cell = {}", p.faces);
        let _ = writeln!(s, "points_per_face = {}", p.points_per_face);
        let _ = writeln!(s, "alpha = {}", p.alpha);
        let _ = writeln!(s, "beta = {}", p.beta);
        let _ = writeln!(s, "nu = {}", p.nu);
        let _ = writeln!(s, "gamma = {}", self.kind.gamma());
        s
    }
}

/// Maps each vertex to a canonical id, identifying periodic images.
fn canonical_ids(vertices: &[Point], domain: &Domain) -> Vec<usize> {
    if !domain.any_periodic() {
        return (0..vertices.len()).collect();
    }
    let extent = (0..3).map(|a| domain.length(a).abs()).fold(0.0, f64::max);
    let quantum = 1e-9 * extent;
    let mut ids: HashMap<[i64; 3], usize> = HashMap::new();
    vertices
        .iter()
        .map(|v| {
            let mut key = [0i64; 3];
            for a in 0..3 {
                let mut x = v[a];
                if domain.periodic[a] {
                    let l = domain.length(a);
                    let mut t = (x - domain.lo[a]) / l;
                    t -= t.floor();
                    if t > 1.0 - 1e-9 {
                        t = 0.0;
                    }
                    x = domain.lo[a] + t * l;
                }
                key[a] = (x / quantum).round() as i64;
            }
            let next = ids.len();
            *ids.entry(key).or_insert(next)
        })
        .collect()
}
