mod common;

use common::*;
use iqr::geometry::*;
use iqr::reconstruction::*;
use proptest::prelude::*;
use rand::Rng;

fn assert_gram(ls: &LeastSquares, expected: &[f64], scale: f64) {
    assert_eq!(ls.n, 5);
    for (k, (a, e)) in ls.g.iter().zip(expected).enumerate() {
        assert!((a * scale - e).abs() < 1e-10, "entry {k}: {} vs {e}", a * scale);
    }
}

/// Up-pointing equilateral triangles of unit side with their mirror images.
fn equilateral_mesh(n: usize) -> Mesh {
    let s3 = 3f64.sqrt();
    let mut v = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            v.push(Point::new(i as f64 + 0.5 * j as f64, 0.5 * s3 * j as f64, 0.0));
        }
    }
    let id = |i: usize, j: usize| i + (n + 1) * j;
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i, j + 1)]);
            cells.push(vec![id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let hi = 2.0 * n as f64;
    Mesh::from_cells(CellKind::Triangle, &v, &cells, Domain::new(2, &[0.0, 0.0], &[hi, hi], false)).unwrap()
}

#[test]
fn equilateral_gram_matrix() {
    let n = 8;
    let mesh = equilateral_mesh(n);
    let cell = 2 * (n / 2 * n + n / 2);
    assert_eq!(mesh.moore(cell).len(), 12);
    let u = PiecewiseConstantField::constant(&mesh, 0.0);
    // reference length is the side, not the cell size
    let ls = assemble_least_squares_with_length(&mesh, cell, &u, 1.0);
    let r = 14.0 * 3f64.sqrt();
    #[rustfmt::skip]
    let expected = [
        132.0, 0.0, 0.0, -r, 0.0,
        0.0, 132.0, -r, 0.0, r,
        0.0, -r, 105.0, 0.0, 35.0,
        -r, 0.0, 0.0, 35.0, 0.0,
        0.0, r, 35.0, 0.0, 105.0,
    ];
    assert_gram(&ls, &expected, 24.0);
}

#[test]
fn right_triangle_gram_matrix() {
    let mesh = build_structured_tri_mesh(6, 6, Domain::new(2, &[0.0, 0.0], &[6.0, 6.0], false), Diagonal::Backward).unwrap();
    // lower-left half of the square [3,4]^2
    let cell = 2 * (3 * 6 + 3);
    let u = PiecewiseConstantField::constant(&mesh, 0.0);
    let ls = assemble_least_squares_with_length(&mesh, cell, &u, 1.0);
    #[rustfmt::skip]
    let expected = [
        66.0, -33.0, 14.0, -7.0, -7.0,
        -33.0, 66.0, -7.0, -7.0, 14.0,
        14.0, -7.0, 70.0, -35.0, 35.0,
        -7.0, -7.0, -35.0, 35.0, -35.0,
        -7.0, 14.0, 35.0, -35.0, 70.0,
    ];
    assert_gram(&ls, &expected, 9.0);
}

#[test]
fn square_right_hand_side() {
    // unit squares: s rows are (dx, dy, dx^2/2, dx dy, dy^2/2) per neighbor offset
    let mesh = build_uniform_rect_mesh(5, 5, Domain::new(2, &[0.0, 0.0], &[5.0, 5.0], false)).unwrap();
    let mut r = rng(3);
    let values: Vec<f64> = (0..25).map(|_| r.random_range(-1.0..1.0)).collect();
    let u = PiecewiseConstantField::from_cells(&mesh, values.clone());
    let ls = assemble_least_squares_with_length(&mesh, 12, &u, 1.0);
    let mut c = [0.0; 5];
    for dj in -1i32..=1 {
        for di in -1i32..=1 {
            if di == 0 && dj == 0 {
                continue;
            }
            let (x, y) = (di as f64, dj as f64);
            let s = [x, y, x * x, x * y, y * y];
            let du = values[(12 + di + 5 * dj) as usize] - values[12];
            for k in 0..5 {
                c[k] -= du * s[k];
            }
        }
    }
    for k in 0..5 {
        assert!((ls.c[k] - c[k]).abs() < 1e-13, "{k}: {} vs {}", ls.c[k], c[k]);
    }
}

fn quadratic_setup(mesh: &Mesh, q: &Quadratic) -> (PiecewiseConstantField, ClusterExtrema) {
    let u = PiecewiseConstantField::project(mesh, 0, |x| q.eval(x));
    let prev = ClusterExtrema::from_function(mesh, |x| q.eval(x));
    (u, prev)
}

#[test]
fn reproduces_quadratics() {
    let mut r = rng(9);
    for mesh in small_meshes(false) {
        let kind = mesh.kind();
        let recon = Reconstructor::new(&mesh, ReconstructionMode::Iqr);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let q = Quadratic::random(mesh.dim(), &mut r);
            let (u, prev) = quadratic_setup(&mesh, &q);
            let v = recon.reconstruct(&mesh, &u, &prev);
            assert_eq!(v.stats.fallbacks, 0);
            assert_eq!(v.stats.linear_only, 0, "{kind}");
            for (i, cell) in mesh.cells().iter().enumerate() {
                for z in cell.cluster().chain([random_point_in(cell, &mut r)]) {
                    worst = worst.max((v.polys[i].eval(&z) - q.eval(&z)).abs());
                }
            }
        }
        assert!(worst < 1e-10, "{kind}: {worst:e}");
    }
}

#[test]
fn k_exact_reproduces_quadratics_on_periodic_meshes() {
    let mut r = rng(10);
    let mesh = build_uniform_rect_mesh(6, 6, Domain::new(2, &[0.0, 0.0], &[6.0, 6.0], false)).unwrap();
    let q = Quadratic::random(2, &mut r);
    let u = PiecewiseConstantField::project(&mesh, 0, |x| q.eval(x));
    for i in 0..mesh.n_cells() {
        let p = k_exact_reconstruct(&mesh, i, &u).unwrap();
        let g = q.g + q.h * mesh.cell(i).centroid;
        assert!((p.gradient() - g).norm() < 1e-10);
        assert!((p.hessian() - q.h).abs().max() < 1e-10);
    }
    let recon = Reconstructor::new(&mesh, ReconstructionMode::KExact);
    let v = recon.reconstruct(&mesh, &u, &ClusterExtrema::from_constant(&u));
    for (i, cell) in mesh.cells().iter().enumerate() {
        assert!((v.polys[i].eval(&cell.vertices[0]) - q.eval(&cell.vertices[0])).abs() < 1e-10);
    }
}

fn random_field(mesh: &Mesh, r: &mut rand::rngs::StdRng) -> PiecewiseConstantField {
    let smooth = r.random_bool(0.5);
    let (a, b) = (r.random_range(0.5..3.0), r.random_range(0.0..6.0));
    let cells: Vec<f64> = mesh
        .cells()
        .iter()
        .map(|c| {
            if smooth {
                (a * (c.centroid.x + 0.7 * c.centroid.y - 0.4 * c.centroid.z) + b).sin()
            } else {
                r.random_range(-1.0..1.0)
            }
        })
        .collect();
    let mut u = PiecewiseConstantField::from_cells(mesh, cells);
    for (g, ghost) in u.ghosts_mut().iter_mut().zip(mesh.ghosts()) {
        *g = if smooth { 0.3 } else { ghost.owner as f64 * 1e-3 };
    }
    u
}

#[test]
fn cluster_values_respect_bounds_and_mean() {
    let mut r = rng(21);
    for periodic in [true, false] {
        for mesh in small_meshes(periodic) {
            let kind = mesh.kind();
            let (alpha, beta) = interior_quadrature_weights(kind);
            let recon = Reconstructor::new(&mesh, ReconstructionMode::Iqr);
            for _ in 0..10 {
                let u = random_field(&mesh, &mut r);
                let prev = if r.random_bool(0.5) {
                    ClusterExtrema::from_constant(&u)
                } else {
                    let old = random_field(&mesh, &mut r);
                    recon.reconstruct(&mesh, &old, &ClusterExtrema::from_constant(&old)).extrema
                };
                let v = recon.reconstruct(&mesh, &u, &prev);
                for (i, cell) in mesh.cells().iter().enumerate() {
                    let u0 = u.cells()[i];
                    let (lo, hi) = compute_bounds(&mesh, i, &u, &prev);
                    let cluster = v.cluster(i);
                    for (k, z) in cell.cluster().enumerate() {
                        let val = cluster[k];
                        assert!((v.polys[i].eval(&z) - val).abs() < 1e-13);
                        assert!(val >= u0 + lo[k] - 1e-12 && val <= u0 + hi[k] + 1e-12, "{kind}: cell {i} row {k}");
                    }
                    // the mean of the reconstruction is the cell average
                    let mean = alpha * cluster[1..].iter().sum::<f64>() + beta * cluster[0];
                    assert!((mean - u0).abs() < 1e-13, "{kind}: {mean} vs {u0}");
                    assert!((v.extrema.min[i] - cluster.iter().cloned().fold(f64::INFINITY, f64::min)).abs() == 0.0);
                }
            }
        }
    }
}

#[test]
fn constant_data_stays_constant() {
    for mesh in small_meshes(false) {
        let u = PiecewiseConstantField::constant(&mesh, 2.5);
        let v = reconstruct_field(&mesh, &u, &ClusterExtrema::from_constant(&u));
        assert!(v.cluster_values.iter().all(|&x| (x - 2.5).abs() < 1e-14));
    }
}

fn cluster_error(mesh: &Mesh, mode: ReconstructionMode, f: impl Fn(&Point) -> f64 + Sync + Copy) -> f64 {
    let recon = Reconstructor::new(mesh, mode);
    let (_, v) = bootstrap_initial(&recon, mesh, 2, f);
    let mut sum = 0.0;
    for (i, cell) in mesh.cells().iter().enumerate() {
        let err = cell.cluster().map(|z| (v.polys[i].eval(&z) - f(&z)).abs()).fold(0.0, f64::max);
        sum += err * cell.volume;
    }
    sum
}

#[test]
fn cluster_error_is_third_order() {
    let f = |x: &Point| (2.0 * std::f64::consts::PI * x.x).sin() * (2.0 * std::f64::consts::PI * x.y).sin();
    for mode in [ReconstructionMode::Iqr, ReconstructionMode::KExact] {
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let mesh = build_structured_tri_mesh(n, n, Domain::unit(2, true), Diagonal::Forward).unwrap();
                cluster_error(&mesh, mode, f)
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((2.7..=3.3).contains(&order), "{mode:?}: {errs:?}");
        }
    }
}

/// Tensor five-point Gauss on a 4x4 split of a rectangle.
fn box_average_oracle(cell: &CellGeometry, f: impl Fn(&Point) -> f64) -> f64 {
    let lo = cell.vertices.iter().fold(cell.vertices[0], |a, b| a.inf(b));
    let hi = cell.vertices.iter().fold(cell.vertices[0], |a, b| a.sup(b));
    let g = gauss5();
    let split = 4;
    let mut s = 0.0;
    for bi in 0..split {
        for bj in 0..split {
            for (x, wx) in &g {
                for (y, wy) in &g {
                    let px = lo.x + (bi as f64 + x) / split as f64 * (hi.x - lo.x);
                    let py = lo.y + (bj as f64 + y) / split as f64 * (hi.y - lo.y);
                    s += wx * wy * f(&Point::new(px, py, 0.0));
                }
            }
        }
    }
    s / (split * split) as f64
}

#[test]
fn initial_projection_matches_oracle() {
    let mesh = build_uniform_rect_mesh(8, 8, Domain::unit(2, true)).unwrap();
    let f = |x: &Point| (2.0 * std::f64::consts::PI * x.x).sin() * (2.0 * std::f64::consts::PI * x.y).sin();
    let recon = Reconstructor::new(&mesh, ReconstructionMode::Iqr);
    let (u, v) = bootstrap_initial(&recon, &mesh, 2, f);
    for (i, cell) in mesh.cells().iter().enumerate() {
        let exact = box_average_oracle(cell, f);
        assert!((u.cells()[i] - exact).abs() < 1e-10, "cell {i}: {} vs {exact}", u.cells()[i]);
    }
    assert!(v.extrema.max.iter().all(|&m| m <= 1.0 + 1e-12));
}

#[test]
fn short_patches_fall_back_to_linear() {
    // a lone triangle sees only its three ghosts
    let v = [Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0)];
    let mesh = Mesh::from_cells(CellKind::Triangle, &v, &[vec![0, 1, 2]], Domain::new(2, &[0.0, 0.0], &[1.0, 1.0], false)).unwrap();
    assert_eq!(mesh.moore(0).len(), 3);
    let mut u = PiecewiseConstantField::from_cells(&mesh, vec![0.5]);
    u.ghosts_mut().copy_from_slice(&[0.0, 1.0, 0.2]);
    let ls = assemble_least_squares(&mesh, 0, &u);
    assert!(ls.linear_only);
    assert_eq!(ls.n, 2);
    let prev = ClusterExtrema { min: vec![0.0], max: vec![1.0] };
    let v = reconstruct_field(&mesh, &u, &prev);
    assert_eq!(v.stats.linear_only, 1);
    assert!(v.polys[0].gradient().norm() > 0.0);
    assert!(v.cluster_values.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
}

proptest! {
    #![proptest_config(prop_config(48))]

    #[test]
    fn affine_maps_commute_with_reconstruction(seed in 0u64..100_000, scale in 0.01f64..100.0, shift in -10.0f64..10.0) {
        let mut r = rng(seed);
        let mesh = build_structured_tri_mesh(5, 5, Domain::unit(2, true), Diagonal::Forward).unwrap();
        let u = random_field(&mesh, &mut r);
        let prev = ClusterExtrema::from_constant(&u);
        let mut w = u.clone();
        w.values.iter_mut().for_each(|x| *x = scale * *x + shift);
        let prev_w = ClusterExtrema {
            min: prev.min.iter().map(|x| scale * x + shift).collect(),
            max: prev.max.iter().map(|x| scale * x + shift).collect(),
        };
        let a = reconstruct_field(&mesh, &u, &prev);
        let b = reconstruct_field(&mesh, &w, &prev_w);
        for (x, y) in a.cluster_values.iter().zip(&b.cluster_values) {
            prop_assert!((scale * x + shift - y).abs() < 1e-10 * (scale + shift.abs()).max(1.0));
        }
    }

    #[test]
    fn reconstruction_is_local(seed in 0u64..100_000) {
        let mut r = rng(seed);
        let mesh = build_uniform_rect_mesh(7, 7, Domain::unit(2, true)).unwrap();
        let u = random_field(&mesh, &mut r);
        let mut w = u.clone();
        let poked = r.random_range(0..mesh.n_cells());
        w.values[poked] += 0.5;
        let a = reconstruct_field(&mesh, &u, &ClusterExtrema::from_constant(&u));
        let b = reconstruct_field(&mesh, &w, &ClusterExtrema::from_constant(&w));
        for i in 0..mesh.n_cells() {
            let near = i == poked || mesh.moore(i).iter().any(|n| n.cell == poked);
            if !near {
                prop_assert_eq!(a.cluster(i), b.cluster(i));
            }
        }
    }
}
