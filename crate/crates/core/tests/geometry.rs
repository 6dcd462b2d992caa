mod common;

use common::*;
use iqr::geometry::*;
use rand::Rng;

const KIND_TABLE: [(CellKind, usize, usize, f64, f64, f64, f64); 5] = [
    (CellKind::Interval, 2, 1, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 3.0),
    (CellKind::Rectangle, 4, 2, 1.0 / 16.0, 1.0 / 2.0, 1.0 / 16.0, 4.0),
    (CellKind::Triangle, 3, 2, 1.0 / 12.0, 1.0 / 2.0, 1.0 / 12.0, 3.0),
    (CellKind::Cuboid, 6, 4, 1.0 / 40.0, 2.0 / 5.0, 1.0 / 30.0, 5.0),
    (CellKind::Tetrahedron, 4, 3, 1.0 / 20.0, 2.0 / 5.0, 1.0 / 20.0, 10.0 / 3.0),
];

#[test]
fn kind_constants() {
    for (kind, j, q, alpha, beta, nu, gamma) in KIND_TABLE {
        let p = kind.params();
        assert_eq!((p.faces, p.points_per_face), (j, q), "{kind}");
        assert!((p.alpha.value() - alpha).abs() < 1e-15, "{kind}");
        assert!((p.beta.value() - beta).abs() < 1e-15, "{kind}");
        assert!((p.nu.value() - nu).abs() < 1e-15, "{kind}");
        assert!((kind.gamma() - gamma).abs() < 1e-12, "{kind}: {}", kind.gamma());
        // Gamma from the face weights, recomputed here
        let w_min = kind.face_weights().iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((w_min / (2.0 * alpha) - gamma).abs() < 1e-12);
        assert!(((j * q) as f64 * alpha + beta - 1.0).abs() < 1e-15);
        assert_eq!(kind.cluster_size(), j * q + 1);
    }
}

#[test]
fn second_moments_match_oracle() {
    let mut r = rng(11);
    for kind in CellKind::ALL {
        for _ in 0..100 {
            let cell = random_cell(kind, &mut r);
            let (c, vol, j) = moments_oracle(&cell);
            let scale = cell.size * cell.size;
            assert!((cell.centroid - c).norm() < 1e-12, "{kind} centroid");
            assert!((cell.volume - vol).abs() < 1e-12 * vol.max(1.0), "{kind} volume");
            assert!(
                (cell.second_moments - j).abs().max() < 1e-12 * scale.max(1.0),
                "{kind}: {} vs {}",
                cell.second_moments,
                j
            );
        }
    }
}

#[test]
fn unit_cell_second_moments_closed_form() {
    let sq = CellGeometry::new(
        CellKind::Rectangle,
        vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
        ],
    )
    .unwrap();
    assert!((sq.second_moments[(0, 0)] - 1.0 / 12.0).abs() < 1e-15);
    assert!(sq.second_moments[(0, 1)].abs() < 1e-15);
    let tri = CellGeometry::new(
        CellKind::Triangle,
        vec![Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0)],
    )
    .unwrap();
    assert!((tri.second_moments[(0, 0)] - 1.0 / 18.0).abs() < 1e-15);
    assert!((tri.second_moments[(0, 1)] + 1.0 / 36.0).abs() < 1e-15);
}

#[test]
fn interior_rule_exact_on_quadratics() {
    let mut r = rng(12);
    for kind in CellKind::ALL {
        let (alpha, beta) = interior_quadrature_weights(kind);
        for _ in 0..100 {
            let cell = random_cell(kind, &mut r);
            let q = Quadratic::random(kind.dim(), &mut r);
            let (c, _, j) = moments_oracle(&cell);
            let exact = q.average(&c, &j);
            let face_sum: f64 = cell.faces.iter().flat_map(|f| f.points.iter()).map(|p| q.eval(p)).sum();
            let rule = alpha * face_sum + beta * q.eval(&cell.centroid);
            assert!((rule - exact).abs() < 1e-12 * exact.abs().max(1.0), "{kind}: {rule} vs {exact}");
        }
    }
}

#[test]
fn interior_rule_fails_on_some_cubic() {
    // the rule is exact only through degree two on simplices
    let tri = CellGeometry::new(
        CellKind::Triangle,
        vec![Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0)],
    )
    .unwrap();
    let f = |p: &Point| p.x.powi(3);
    let (alpha, beta) = interior_quadrature_weights(CellKind::Triangle);
    let rule = alpha * tri.faces.iter().flat_map(|f| f.points.iter()).map(f).sum::<f64>() + beta * f(&tri.centroid);
    // average of x^3 over the reference triangle is 1/10
    assert!((rule - 0.1).abs() > 1e-3);
}

fn face_average_oracle(kind: CellKind, verts: &[Point], f: &dyn Fn(&Point) -> f64) -> f64 {
    let g = gauss5();
    match kind {
        CellKind::Interval => f(&verts[0]),
        CellKind::Rectangle | CellKind::Triangle => g.iter().map(|(x, w)| w * f(&(verts[0] + (verts[1] - verts[0]) * *x))).sum(),
        CellKind::Cuboid => {
            let lo = verts.iter().fold(verts[0], |a, b| a.inf(b));
            let hi = verts.iter().fold(verts[0], |a, b| a.sup(b));
            let axes: Vec<usize> = (0..3).filter(|&k| hi[k] > lo[k]).collect();
            let mut s = 0.0;
            for (x, wx) in &g {
                for (y, wy) in &g {
                    let mut p = lo;
                    p[axes[0]] += x * (hi[axes[0]] - lo[axes[0]]);
                    p[axes[1]] += y * (hi[axes[1]] - lo[axes[1]]);
                    s += wx * wy * f(&p);
                }
            }
            s
        }
        CellKind::Tetrahedron => {
            // Duffy map of the unit square onto the triangle, tensor Gauss
            let mut s = 0.0;
            for (u, wu) in &g {
                for (v, wv) in &g {
                    let p = verts[0] + (verts[1] - verts[0]) * *u + (verts[2] - verts[0]) * ((1.0 - u) * v);
                    s += 2.0 * wu * wv * (1.0 - u) * f(&p);
                }
            }
            s
        }
    }
}

#[test]
fn face_quadrature_exactness() {
    let mut r = rng(13);
    for kind in CellKind::ALL {
        // Gauss pairs are exact through cubics; the tetrahedral face rule through quadratics
        let cubic = kind != CellKind::Tetrahedron;
        for _ in 0..50 {
            let cell = random_cell(kind, &mut r);
            let q = Quadratic::random(kind.dim(), &mut r);
            let a = Point::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            let f = |p: &Point| {
                let lin = a.dot(p);
                q.eval(p) + if cubic { lin * lin * lin } else { 0.0 }
            };
            for face in &cell.faces {
                assert!((face.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
                let verts: Vec<Point> = face.vertices.iter().map(|&v| cell.vertices[v]).collect();
                let rule: f64 = face.points.iter().zip(face.weights).map(|(p, w)| w * f(p)).sum();
                let exact = face_average_oracle(kind, &verts, &f);
                assert!((rule - exact).abs() < 1e-12 * exact.abs().max(1.0), "{kind}: {rule} vs {exact}");
            }
        }
    }
}

#[test]
fn faces_are_closed_and_outward() {
    let mut r = rng(14);
    for kind in CellKind::ALL {
        for _ in 0..50 {
            let cell = random_cell(kind, &mut r);
            let mut closure = Point::zeros();
            for face in &cell.faces {
                assert!((face.normal.norm() - 1.0).abs() < 1e-14);
                assert!(face.normal.dot(&(face.centroid - cell.centroid)) > 0.0, "{kind} normal points inward");
                closure += face.normal * face.area;
            }
            if kind != CellKind::Interval {
                assert!(closure.norm() < 1e-12 * cell.surface, "{kind}: {closure}");
            }
            let surface: f64 = cell.faces.iter().map(|f| f.area).sum();
            assert!((surface - cell.surface).abs() < 1e-12 * surface);
            assert_eq!(cell.cluster().count(), kind.cluster_size());
        }
    }
}

#[test]
fn reflection_preserves_shape() {
    let mut r = rng(15);
    for kind in CellKind::ALL {
        let cell = random_cell(kind, &mut r);
        for f in 0..cell.faces.len() {
            let m = cell.reflected(f);
            assert!((m.volume - cell.volume).abs() < 1e-12 * cell.volume);
            assert!((m.second_moments.trace() - cell.second_moments.trace()).abs() < 1e-12);
            // the mirror image sits across the shared face
            let n = cell.faces[f].normal;
            let p0 = cell.faces[f].centroid;
            assert!(((m.centroid - p0).dot(&n) + (cell.centroid - p0).dot(&n)).abs() < 1e-12);
        }
    }
}

#[test]
fn neighbor_relations_are_symmetric() {
    for periodic in [true, false] {
        for mesh in small_meshes(periodic) {
            let kind = mesh.kind();
            assert!((mesh.total_volume() - 1.0).abs() < 1e-12);
            if periodic {
                assert_eq!(mesh.n_ghosts(), 0, "{kind}");
            } else {
                assert!(mesh.n_ghosts() > 0, "{kind}");
            }
            for i in 0..mesh.n_cells() {
                assert_eq!(mesh.face_links(i).len(), kind.params().faces);
                let moore: Vec<usize> = mesh.moore(i).iter().map(|n| n.cell).collect();
                assert!(!moore.contains(&i), "{kind}: cell {i} is its own neighbor");
                for nb in mesh.von_neumann(i) {
                    assert!(moore.contains(&nb.cell), "{kind}: face neighbor missing from the patch");
                    if !mesh.is_ghost(nb.cell) {
                        assert!(mesh.von_neumann(nb.cell).any(|b| b.cell == i));
                    }
                }
                for nb in mesh.moore(i) {
                    if !mesh.is_ghost(nb.cell) {
                        let back = mesh.moore(nb.cell).iter().find(|b| b.cell == i);
                        let back = back.unwrap_or_else(|| panic!("{kind}: moore({}) lacks {i}", nb.cell));
                        assert!((back.shift + nb.shift).norm() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn patch_sizes_on_uniform_meshes() {
    let rect = build_uniform_rect_mesh(5, 5, Domain::unit(2, true)).unwrap();
    assert!((0..rect.n_cells()).all(|i| rect.moore(i).len() == 8));
    let cube = build_uniform_cuboid_mesh(4, 4, 4, Domain::unit(3, true)).unwrap();
    assert!((0..cube.n_cells()).all(|i| cube.moore(i).len() == 26));
    let tri = build_structured_tri_mesh(5, 5, Domain::unit(2, true), Diagonal::Forward).unwrap();
    assert!((0..tri.n_cells()).all(|i| tri.moore(i).len() == 12));
    let line = build_uniform_interval_mesh(5, Domain::unit(1, true)).unwrap();
    assert!((0..line.n_cells()).all(|i| line.moore(i).len() == 2));
}

#[test]
fn face_neighbor_points_coincide() {
    for periodic in [true, false] {
        for mesh in small_meshes(periodic) {
            for face in mesh.faces() {
                let own = &mesh.cell(face.owner).faces[face.owner_local];
                let nb = mesh.geometry(face.neighbor.cell);
                // the neighbor's face of matching centroid, after the periodic shift
                let c = own.centroid - face.neighbor.shift;
                let hit = nb.faces.iter().any(|f| (f.centroid - c).norm() < 1e-12);
                assert!(hit, "{}: face of cell {} has no partner", mesh.kind(), face.owner);
            }
        }
    }
}

fn pinwheel_files() -> (String, String) {
    let mut v = Vec::new();
    for j in 0..3 {
        for i in 0..3 {
            v.push(Point::new(0.5 * i as f64, 0.5 * j as f64, 0.0));
        }
    }
    let mut cells = Vec::new();
    for j in 0..2 {
        for i in 0..2 {
            let c = v.len();
            v.push(Point::new(0.5 * i as f64 + 0.25, 0.5 * j as f64 + 0.25, 0.0));
            let (a, b, d, e) = (3 * j + i, 3 * j + i + 1, 3 * (j + 1) + i + 1, 3 * (j + 1) + i);
            cells.extend([[a, b, c], [b, d, c], [d, e, c], [e, a, c]]);
        }
    }
    write_triangle_files(&v, &cells)
}

#[test]
fn sixteen_triangle_mesh() {
    let (node, ele) = pinwheel_files();
    let mesh = load_unstructured_tri_mesh(&node, &ele, Domain::unit(2, false)).unwrap();
    assert_eq!(mesh.n_cells(), 16);
    assert_eq!(mesh.n_ghosts(), 8);
    assert!((mesh.total_volume() - 1.0).abs() < 1e-15);
    // 48 half-edges: 8 on the boundary, the rest paired
    assert_eq!(mesh.faces().len(), 8 + 20);
    let summary = mesh.summary();
    assert!(summary.contains("cells = 16"), "{summary}");
    // two edges per side: wrapping makes distinct boundary edges coincide
    assert!(load_unstructured_tri_mesh(&node, &ele, Domain::unit(2, true)).is_err());
}

#[test]
fn triangle_files_reject_bad_input() {
    let (node, ele) = pinwheel_files();
    let dangling = ele.replacen(" 1 2 10", " 1 2 99", 1);
    assert!(load_unstructured_tri_mesh(&node, &dangling, Domain::unit(2, false)).is_err());
    assert!(load_unstructured_tri_mesh("", &ele, Domain::unit(2, false)).is_err());
    let garbage = node.replacen("\n1 ", "\n1 zz ", 1);
    assert!(load_unstructured_tri_mesh(&garbage, &ele, Domain::unit(2, false)).is_err());
}

#[test]
fn builders_reject_tiny_counts() {
    assert!(build_uniform_rect_mesh(2, 5, Domain::unit(2, true)).is_err());
    assert!(build_uniform_interval_mesh(1, Domain::unit(1, true)).is_err());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(common::prop_config(64))]

        #[test]
        fn moments_are_translation_invariant(seed in 0u64..10_000, dx in -5.0f64..5.0, dy in -5.0f64..5.0) {
            let mut r = rng(seed);
            for kind in [CellKind::Triangle, CellKind::Rectangle, CellKind::Tetrahedron] {
                let cell = random_cell(kind, &mut r);
                let shift = Point::new(dx, dy, if kind.dim() == 3 { dx - dy } else { 0.0 });
                let moved = CellGeometry::new(kind, cell.vertices.iter().map(|p| p + shift).collect()).unwrap();
                prop_assert!((moved.second_moments - cell.second_moments).abs().max() < 1e-11);
                prop_assert!((moved.volume - cell.volume).abs() < 1e-11);
            }
        }

        #[test]
        fn moments_are_positive_definite(seed in 0u64..10_000) {
            let mut r = rng(seed);
            for kind in CellKind::ALL {
                let cell = random_cell(kind, &mut r);
                let d = kind.dim();
                let j = cell.second_moments.view((0, 0), (d, d)).clone_owned();
                prop_assert!(j.cholesky().is_some());
            }
        }
    }
}
