//! Brute-force reference for small QPs.

use iqr::qp::QpProblem;
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::Rng;

pub fn random_problem(r: &mut StdRng, n: usize, m: usize) -> QpProblem {
    let k = n + 2;
    let f = DMatrix::from_fn(k, n, |_, _| r.random_range(-1.0..1.0));
    let g = f.transpose() * &f + DMatrix::identity(n, n) * 0.05;
    let g: Vec<f64> = (0..n * n).map(|i| g[(i / n, i % n)]).collect();
    let c = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
    let a = (0..m * n).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut lower = Vec::with_capacity(m);
    let mut upper = Vec::with_capacity(m);
    for _ in 0..m {
        let (lo, hi) = match r.random_range(0..10) {
            0 => (0.0, 0.0),
            1 => (0.0, r.random_range(0.0..1.0)),
            2 => (-r.random_range(0.0..1.0), 0.0),
            _ => (-r.random_range(0.0..1.0), r.random_range(0.0..1.0)),
        };
        lower.push(lo);
        upper.push(hi);
    }
    QpProblem { n, g, c, a, lower, upper }
}

/// Minimum over every feasible stationary point of every face.
pub fn enumeration_oracle(p: &QpProblem) -> (f64, Vec<f64>) {
    let g = DMatrix::from_row_slice(p.n, p.n, &p.g);
    let mut best = (f64::INFINITY, vec![]);
    let mut chosen: Vec<(usize, f64)> = Vec::new();
    fn recurse(
        p: &QpProblem,
        g: &DMatrix<f64>,
        start: usize,
        chosen: &mut Vec<(usize, f64)>,
        best: &mut (f64, Vec<f64>),
    ) {
        let (n, m) = (p.n, p.m());
        evaluate(p, g, chosen, best);
        if chosen.len() == n {
            return;
        }
        for row in start..m {
            let sides: &[f64] = if p.lower[row] == p.upper[row] {
                &[p.lower[row]]
            } else {
                &[p.lower[row], p.upper[row]]
            };
            for &rhs in sides {
                chosen.push((row, rhs));
                recurse(p, g, row + 1, chosen, best);
                chosen.pop();
            }
        }
    }
    fn evaluate(p: &QpProblem, g: &DMatrix<f64>, chosen: &[(usize, f64)], best: &mut (f64, Vec<f64>)) {
        let n = p.n;
        let k = chosen.len();
        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut rhs = DVector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(g);
        for i in 0..n {
            rhs[i] = -p.c[i];
        }
        for (q, &(row, b)) in chosen.iter().enumerate() {
            for j in 0..n {
                let a = p.a[row * n + j];
                kkt[(n + q, j)] = a;
                kkt[(j, n + q)] = a;
            }
            rhs[n + q] = b;
        }
        let lu = kkt.clone().lu();
        let Some(sol) = lu.solve(&rhs) else { return };
        if !sol.iter().all(|v| v.is_finite()) || (&kkt * &sol - &rhs).amax() > 1e-9 {
            return;
        }
        let x: Vec<f64> = sol.iter().take(n).copied().collect();
        for l in 0..p.m() {
            let v: f64 = (0..n).map(|j| p.a[l * n + j] * x[j]).sum();
            if v < p.lower[l] - 1e-10 || v > p.upper[l] + 1e-10 {
                return;
            }
        }
        let f = p.objective(&x);
        if f < best.0 {
            *best = (f, x);
        }
    }
    recurse(p, &g, 0, &mut chosen, &mut best);
    best
}

