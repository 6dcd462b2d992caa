//! Face quadrature (the collocation points) and cell-average rules.

use super::{CellKind, Point};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Quadrature points on a cell face, in the same order as the face vertices
/// determine. Weights are normalized to sum to one.
pub fn face_points(kind: CellKind, face_vertices: &[Point]) -> Vec<Point> {
    match kind {
        CellKind::Interval => vec![face_vertices[0]],
        CellKind::Rectangle | CellKind::Triangle => {
            let (p, q) = (face_vertices[0], face_vertices[1]);
            let mid = (p + q) * 0.5;
            let half = (q - p) * (0.5 / 3f64.sqrt());
            vec![mid - half, mid + half]
        }
        CellKind::Cuboid => {
            let (lo, hi) = bounding_box(face_vertices);
            let center = (lo + hi) * 0.5;
            let half = (hi - lo) * (0.5 / 3f64.sqrt());
            // the normal axis has zero extent, so only two axes vary
            let axes: Vec<usize> = (0..3).filter(|&k| half[k] != 0.0).collect();
            let (a, b) = (axes[0], axes[1]);
            let mut pts = Vec::with_capacity(4);
            for sa in [-1.0, 1.0] {
                for sb in [-1.0, 1.0] {
                    let mut z = center;
                    z[a] += sa * half[a];
                    z[b] += sb * half[b];
                    pts.push(z);
                }
            }
            pts
        }
        CellKind::Tetrahedron => {
            let (p0, p1, p2) = (face_vertices[0], face_vertices[1], face_vertices[2]);
            let bary = [
                [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
                [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
                [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
            ];
            bary.iter()
                .map(|l| p0 * l[0] + p1 * l[1] + p2 * l[2])
                .collect()
        }
    }
}

pub(crate) fn bounding_box(points: &[Point]) -> (Point, Point) {
    let mut lo = points[0];
    let mut hi = points[0];
    for p in &points[1..] {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

const DUNAVANT4: [(f64, f64); 2] = [
    (0.4459484909159649, 0.22338158967801147),
    (0.09157621350977074, 0.10995174365532187),
];

/// A cell-average rule: points with weights summing to one.
pub type CellRule = Vec<(Point, f64)>;

/// Degree-4 cell-average rule, applied on `2^depth`-fold uniformly subdivided
/// sub-cells (triangles split at edge midpoints, boxes split per axis).
pub fn cell_rule(kind: CellKind, vertices: &[Point], depth: u32) -> CellRule {
    match kind {
        CellKind::Interval | CellKind::Rectangle | CellKind::Cuboid => {
            let (lo, hi) = bounding_box(vertices);
            box_rule(kind.dim(), lo, hi, 1usize << depth)
        }
        CellKind::Triangle => {
            let mut out = Vec::new();
            triangle_rule(vertices[0], vertices[1], vertices[2], depth, 1.0, &mut out);
            out
        }
        CellKind::Tetrahedron => tetra_rule(vertices, 4 + 2 * depth as usize),
    }
}

fn box_rule(dim: usize, lo: Point, hi: Point, splits: usize) -> CellRule {
    let (gx, gw) = gauss_legendre(3);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for s in 0..splits {
        for (x, w) in gx.iter().zip(&gw) {
            nodes.push((s as f64 + 0.5 + 0.5 * x) / splits as f64);
            weights.push(0.5 * w / splits as f64);
        }
    }
    let n = nodes.len();
    let mut out = Vec::with_capacity(n.pow(dim as u32));
    let count = [n, if dim > 1 { n } else { 1 }, if dim > 2 { n } else { 1 }];
    for i in 0..count[0] {
        for j in 0..count[1] {
            for k in 0..count[2] {
                let idx = [i, j, k];
                let mut p = lo;
                let mut w = 1.0;
                for a in 0..dim {
                    p[a] = lo[a] + nodes[idx[a]] * (hi[a] - lo[a]);
                    w *= weights[idx[a]];
                }
                out.push((p, w));
            }
        }
    }
    out
}

fn triangle_rule(p0: Point, p1: Point, p2: Point, depth: u32, scale: f64, out: &mut CellRule) {
    if depth > 0 {
        let m01 = (p0 + p1) * 0.5;
        let m12 = (p1 + p2) * 0.5;
        let m20 = (p2 + p0) * 0.5;
        let s = scale * 0.25;
        triangle_rule(p0, m01, m20, depth - 1, s, out);
        triangle_rule(m01, p1, m12, depth - 1, s, out);
        triangle_rule(m20, m12, p2, depth - 1, s, out);
        triangle_rule(m01, m12, m20, depth - 1, s, out);
        return;
    }
    for &(a, w) in &DUNAVANT4 {
        let b = 1.0 - 2.0 * a;
        for l in [[a, a, b], [a, b, a], [b, a, a]] {
            out.push((p0 * l[0] + p1 * l[1] + p2 * l[2], w * scale));
        }
    }
}

/// Collapsed-coordinate Gauss rule on a tetrahedron; exact for degree
/// `2n - 3` polynomials.
fn tetra_rule(v: &[Point], n: usize) -> CellRule {
    let (gx, gw) = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n * n);
    for (a, wa) in gx.iter().zip(&gw) {
        let u = 0.5 * (a + 1.0);
        for (b, wb) in gx.iter().zip(&gw) {
            let s = 0.5 * (b + 1.0);
            for (c, wc) in gx.iter().zip(&gw) {
                let r = 0.5 * (c + 1.0);
                let l1 = u;
                let l2 = s * (1.0 - u);
                let l3 = r * (1.0 - u) * (1.0 - s);
                let l0 = 1.0 - l1 - l2 - l3;
                // reference volume 1/6, jacobian (1-u)^2 (1-s), and 1/8 from the [-1,1] maps
                let w = wa * wb * wc / 8.0 * (1.0 - u).powi(2) * (1.0 - s) * 6.0;
                out.push((v[0] * l0 + v[1] * l1 + v[2] * l2 + v[3] * l3, w));
            }
        }
    }
    out
}
