//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

pub mod qp_oracle;

use iqr::geometry::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Proptest settings without on-disk failure persistence.
pub fn prop_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        failure_persistence: None,
        ..Default::default()
    }
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Five-point Gauss-Legendre on [0, 1], exact through degree 9.
pub fn gauss5() -> [(f64, f64); 5] {
    let x = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    let w = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    std::array::from_fn(|i| (0.5 * (x[i] + 1.0), 0.5 * w[i]))
}

fn signed_measure(kind: CellKind, v: &[Point]) -> f64 {
    let (e1, e2) = (v[1] - v[0], v[2] - v[0]);
    match kind {
        CellKind::Triangle => e1.x * e2.y - e1.y * e2.x,
        _ => e1.cross(&e2).dot(&(v[3] - v[0])),
    }
}

/// A random, reasonably shaped cell of the given kind.
pub fn random_cell(kind: CellKind, rng: &mut StdRng) -> CellGeometry {
    let dim = kind.dim();
    let mut pt = |scale: f64| {
        let mut p = Point::zeros();
        for a in 0..dim {
            p[a] = rng.random_range(-scale..scale);
        }
        p
    };
    match kind {
        CellKind::Interval | CellKind::Rectangle | CellKind::Cuboid => {
            let lo = pt(2.0);
            let mut ext = Point::zeros();
            for a in 0..dim {
                ext[a] = 0.2 + pt(1.0)[a].abs() * 2.0;
            }
            let n = kind.vertex_count();
            let verts = (0..n)
                .map(|k| {
                    let mut p = lo;
                    for a in 0..dim {
                        if (k >> a) & 1 == 1 {
                            p[a] += ext[a];
                        }
                    }
                    p
                })
                .collect();
            CellGeometry::new(kind, verts).unwrap()
        }
        CellKind::Triangle | CellKind::Tetrahedron => loop {
            let mut v: Vec<Point> = (0..kind.vertex_count()).map(|_| pt(1.0)).collect();
            let s = signed_measure(kind, &v);
            if s.abs() < 0.05 {
                continue;
            }
            if s < 0.0 {
                v.swap(0, 1);
            }
            break CellGeometry::new(kind, v).unwrap();
        },
    }
}

/// `E[x x^T]` under the uniform measure with barycentric moments
/// `E[l_i l_j] = (1 + delta_ij) / ((d+1)(d+2))`, minus the centroid outer product.
pub fn simplex_moments_oracle(v: &[Point]) -> (Point, f64, SymMatrix) {
    let d = v.len() - 1;
    let centroid = v.iter().sum::<Point>() / (d + 1) as f64;
    let mut m = SymMatrix::zeros();
    for (i, p) in v.iter().enumerate() {
        for (j, q) in v.iter().enumerate() {
            let e = if i == j { 2.0 } else { 1.0 } / (((d + 1) * (d + 2)) as f64);
            m += p * q.transpose() * e;
        }
    }
    let vol = match d {
        1 => (v[1] - v[0]).norm(),
        2 => 0.5 * (v[1] - v[0]).cross(&(v[2] - v[0])).norm(),
        _ => (v[1] - v[0]).cross(&(v[2] - v[0])).dot(&(v[3] - v[0])).abs() / 6.0,
    };
    (centroid, vol, m - centroid * centroid.transpose())
}

/// Centroid, volume and second moments by brute-force tensor Gauss on boxes
/// and the barycentric formula on simplices.
pub fn moments_oracle(cell: &CellGeometry) -> (Point, f64, SymMatrix) {
    match cell.kind {
        CellKind::Triangle | CellKind::Tetrahedron => simplex_moments_oracle(&cell.vertices),
        _ => {
            let dim = cell.kind.dim();
            let lo = cell.vertices.iter().fold(cell.vertices[0], |a, b| a.inf(b));
            let hi = cell.vertices.iter().fold(cell.vertices[0], |a, b| a.sup(b));
            let g = gauss5();
            let mut pts = vec![(Point::zeros(), 1.0)];
            for a in 0..dim {
                pts = pts
                    .iter()
                    .flat_map(|(p, w)| {
                        g.iter().map(move |(x, gw)| {
                            let mut q = *p;
                            q[a] = lo[a] + x * (hi[a] - lo[a]);
                            (q, w * gw)
                        })
                    })
                    .collect();
            }
            let c: Point = pts.iter().map(|(p, w)| p * *w).sum();
            let mut j = SymMatrix::zeros();
            for (p, w) in &pts {
                j += (p - c) * (p - c).transpose() * *w;
            }
            let vol = (0..dim).map(|a| hi[a] - lo[a]).product();
            (c, vol, j)
        }
    }
}

/// Random quadratic `q(x) = c + g.x + x^T H x / 2` in `dim` dimensions.
#[derive(Debug, Clone, Copy)]
pub struct Quadratic {
    pub c: f64,
    pub g: Point,
    pub h: SymMatrix,
    pub dim: usize,
}

impl Quadratic {
    pub fn random(dim: usize, rng: &mut StdRng) -> Self {
        let mut g = Point::zeros();
        let mut h = SymMatrix::zeros();
        for a in 0..dim {
            g[a] = rng.random_range(-1.0..1.0);
            for b in 0..=a {
                let v = rng.random_range(-1.0..1.0);
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        Self {
            c: rng.random_range(-1.0..1.0),
            g,
            h,
            dim,
        }
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.c + self.g.dot(x) + 0.5 * x.dot(&(self.h * x))
    }

    /// Exact cell average from the centroid and second moments.
    pub fn average(&self, centroid: &Point, moments: &SymMatrix) -> f64 {
        self.eval(centroid) + 0.5 * (self.h * moments).trace()
    }
}

pub fn unit_domain(dim: usize, periodic: bool) -> Domain {
    Domain::unit(dim, periodic)
}

/// One small mesh of every kind on the unit box.
pub fn small_meshes(periodic: bool) -> Vec<Mesh> {
    let d = |dim| Domain::unit(dim, periodic);
    vec![
        build_uniform_interval_mesh(9, d(1)).unwrap(),
        build_uniform_rect_mesh(6, 5, d(2)).unwrap(),
        build_structured_tri_mesh(5, 6, d(2), Diagonal::Forward).unwrap(),
        build_structured_tri_mesh(5, 5, d(2), Diagonal::Backward).unwrap(),
        build_uniform_cuboid_mesh(4, 4, 3, d(3)).unwrap(),
        build_structured_tet_mesh(3, d(3)).unwrap(),
    ]
}

pub fn random_point_in(cell: &CellGeometry, rng: &mut StdRng) -> Point {
    let mut w: Vec<f64> = (0..cell.vertices.len()).map(|_| rng.random_range(0.0..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    cell.vertices.iter().zip(&w).map(|(p, w)| p * *w).sum()
}
