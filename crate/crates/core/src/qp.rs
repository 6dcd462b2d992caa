//! Primal active-set solver for small dense strictly convex QPs
//!
//! ```text
//!     minimize    1/2 x' G x + c' x
//!     subject to  b <= A x <= B
//! ```
//!
//! Each iteration solves the equality-constrained subproblem on the working
//! set `M` through the range-space equations
//!
//! ```text
//!     (M G^-1 M') lambda = M (x + G^-1 c)
//!     p = G^-1 M' lambda - x - G^-1 c
//! ```
//!
//! then either steps along `p` (stopping at the first blocking constraint) or,
//! when `p = 0`, drops the constraint with the most negative multiplier.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("hessian is not positive definite, even after regularization")]
    NotPositiveDefinite,
    #[error("lower bound exceeds upper bound on row {row}: {lower} > {upper}")]
    InvertedBounds { row: usize, lower: f64, upper: f64 },
    #[error("start point violates row {row}: {lower} <= {value} <= {upper} fails")]
    InfeasibleStart {
        row: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
}

/// Which side of a double-sided constraint is held as an equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
    /// `b_l == B_l`; never dropped.
    Equality,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Lower | Side::Equality => 1.0,
            Side::Upper => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveConstraint {
    pub row: usize,
    pub side: Side,
    /// Nonnegative at optimality for one-sided members. Stationarity reads
    /// `G x + c = sum(sign * multiplier * a_row)` with sign `-1` on upper sides.
    pub multiplier: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    /// Iteration cap reached; `x` is the start point.
    Fallback,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub active: Vec<ActiveConstraint>,
    pub iterations: usize,
    pub status: QpStatus,
    /// The hessian needed a diagonal shift to factor.
    pub regularized: bool,
    /// Iterates including the start, when requested.
    pub trace: Option<Vec<Vec<f64>>>,
}

/// Dense problem data. Matrices are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub n: usize,
    pub g: Vec<f64>,
    pub c: Vec<f64>,
    pub a: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl QpProblem {
    pub fn m(&self) -> usize {
        self.lower.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut v = 0.0;
        for i in 0..n {
            let gx: f64 = (0..n).map(|j| self.g[i * n + j] * x[j]).sum();
            v += x[i] * (0.5 * gx + self.c[i]);
        }
        v
    }

    fn validate(&self) -> Result<(), QpError> {
        let (n, m) = (self.n, self.m());
        if self.g.len() != n * n || self.c.len() != n || self.a.len() != m * n || self.upper.len() != m {
            return Err(QpError::Dimension(format!(
                "n={n}, m={m}: |G|={}, |c|={}, |A|={}, |B|={}",
                self.g.len(),
                self.c.len(),
                self.a.len(),
                self.upper.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveOptions {
    pub record_trace: bool,
    /// Overrides the default cap `10 * (2m + 1)`.
    pub max_iterations: Option<usize>,
}


fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular Cholesky factor of a small SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
    regularized: bool,
}

impl Cholesky {
    /// Factors `g`, retrying once with `g + eps I`, `eps = 1e-10 tr(g)/n`.
    pub fn factor(g: &[f64], n: usize) -> Result<Self, QpError> {
        if let Some(l) = cholesky(g, n, 0.0) {
            return Ok(Self { n, l, regularized: false });
        }
        let trace: f64 = (0..n).map(|i| g[i * n + i]).sum();
        let eps = 1e-10 * trace.abs().max(f64::MIN_POSITIVE) / n as f64;
        cholesky(g, n, eps)
            .map(|l| Self { n, l, regularized: true })
            .ok_or(QpError::NotPositiveDefinite)
    }

    pub fn regularized(&self) -> bool {
        self.regularized
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        solve_factored(&self.l, self.n, x);
    }
}

/// Returns `None` when a pivot is not safely positive.
fn cholesky(g: &[f64], n: usize, shift: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let diag = g[j * n + j] + shift;
        let mut d = diag;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 1e-13 * diag.abs()) || d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = g[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

fn solve_factored(l: &[f64], n: usize, x: &mut [f64]) {
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * n + k] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
}

/// Hessian factor and constraint matrix that stay fixed while `c`, `b`, `B`
/// change; the reconstruction keeps one per cell.
#[derive(Debug, Clone)]
pub struct PreparedQp {
    n: usize,
    m: usize,
    chol: Cholesky,
    a: Vec<f64>,
    /// Row `l` holds `G^-1 a_l`.
    ginv_at: Vec<f64>,
}

impl PreparedQp {
    pub fn new(g: &[f64], n: usize, a: &[f64], m: usize) -> Result<Self, QpError> {
        if g.len() != n * n || a.len() != m * n {
            return Err(QpError::Dimension(format!("n={n}, m={m}, |G|={}, |A|={}", g.len(), a.len())));
        }
        let chol = Cholesky::factor(g, n)?;
        let mut ginv_at = a.to_vec();
        for row in ginv_at.chunks_mut(n) {
            chol.solve_in_place(row);
        }
        Ok(Self {
            n,
            m,
            chol,
            a: a.to_vec(),
            ginv_at,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn constraint_row(&self, l: usize) -> &[f64] {
        &self.a[l * self.n..(l + 1) * self.n]
    }

    pub fn regularized(&self) -> bool {
        self.chol.regularized
    }

    /// Unconstrained minimizer `-G^-1 c`.
    pub fn unconstrained(&self, c: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = c.iter().map(|v| -v).collect();
        self.chol.solve_in_place(&mut x);
        x
    }

    fn ginv_row(&self, l: usize) -> &[f64] {
        &self.ginv_at[l * self.n..(l + 1) * self.n]
    }

    /// Factors `M G^-1 M'` for the working set; `None` when rank-deficient.
    fn working_factor(&self, working: &[(usize, Side)]) -> Option<Vec<f64>> {
        let k = working.len();
        let mut s = vec![0.0; k * k];
        for (i, &(ri, si)) in working.iter().enumerate() {
            for (j, &(rj, sj)) in working.iter().enumerate().take(i + 1) {
                let v = si.sign() * sj.sign() * dot(self.constraint_row(ri), self.ginv_row(rj));
                s[i * k + j] = v;
                s[j * k + i] = v;
            }
        }
        let mut l = vec![0.0; k * k];
        for j in 0..k {
            let diag = s[j * k + j];
            let mut d = diag;
            for q in 0..j {
                d -= l[j * k + q] * l[j * k + q];
            }
            if !(d > 1e-12 * diag.abs()) {
                return None;
            }
            let d = d.sqrt();
            l[j * k + j] = d;
            for i in j + 1..k {
                let mut v = s[i * k + j];
                for q in 0..j {
                    v -= l[i * k + q] * l[j * k + q];
                }
                l[i * k + j] = v / d;
            }
        }
        Some(l)
    }

    pub fn solve(
        &self,
        c: &[f64],
        lower: &[f64],
        upper: &[f64],
        start: &[f64],
        opts: SolveOptions,
    ) -> Result<QpSolution, QpError> {
        let (n, m) = (self.n, self.m);
        if c.len() != n || lower.len() != m || upper.len() != m || start.len() != n {
            return Err(QpError::Dimension(format!(
                "n={n}, m={m}: |c|={}, |b|={}, |B|={}, |x0|={}",
                c.len(),
                lower.len(),
                upper.len(),
                start.len()
            )));
        }
        let tol: Vec<f64> = (0..m)
            .map(|l| 1e-12 * 1f64.max(lower[l].abs()).max(upper[l].abs()))
            .collect();
        for l in 0..m {
            if lower[l] > upper[l] + tol[l] {
                return Err(QpError::InvertedBounds {
                    row: l,
                    lower: lower[l],
                    upper: upper[l],
                });
            }
            let v = dot(self.constraint_row(l), start);
            if v < lower[l] - tol[l] || v > upper[l] + tol[l] {
                return Err(QpError::InfeasibleStart {
                    row: l,
                    value: v,
                    lower: lower[l],
                    upper: upper[l],
                });
            }
        }

        let mut x = start.to_vec();
        let mut g0 = c.to_vec();
        self.chol.solve_in_place(&mut g0);

        let mut working: Vec<(usize, Side)> = Vec::with_capacity(n);
        let mut in_working = vec![false; m];
        let mut skipped = vec![false; m];
        for l in 0..m {
            if upper[l] - lower[l] <= tol[l] {
                working.push((l, Side::Equality));
                if self.working_factor(&working).is_none() || working.len() > n {
                    working.pop();
                    skipped[l] = true;
                } else {
                    in_working[l] = true;
                }
            }
        }

        let cap = opts.max_iterations.unwrap_or(10 * (2 * m + 1));
        let mut trace = opts.record_trace.then(|| vec![x.clone()]);
        let mut lambda: Vec<f64> = Vec::new();
        let mut p = vec![0.0; n];
        let mut rhs = Vec::with_capacity(n);
        let mut iterations = 0;
        let mut optimal = false;

        while iterations < cap {
            iterations += 1;

            // multipliers of the equality-constrained subproblem
            let k = working.len();
            lambda.clear();
            if k > 0 {
                let l = match self.working_factor(&working) {
                    Some(l) => l,
                    None => break,
                };
                rhs.clear();
                for &(r, s) in &working {
                    let a = self.constraint_row(r);
                    rhs.push(s.sign() * (dot(a, &x) + dot(a, &g0)));
                }
                lambda.extend_from_slice(&rhs);
                solve_factored(&l, k, &mut lambda);
            }
            for i in 0..n {
                p[i] = -x[i] - g0[i];
            }
            let mut scale = 1f64.max(amax(&x)).max(amax(&g0));
            for (&(r, s), &lam) in working.iter().zip(&lambda) {
                let y = self.ginv_row(r);
                let f = s.sign() * lam;
                for i in 0..n {
                    p[i] += f * y[i];
                }
                scale = scale.max(lam.abs() * amax(y));
            }
            if k == n {
                // a full-rank vertex; anything left in p is roundoff
                p.iter_mut().for_each(|v| *v = 0.0);
            }

            if amax(&p) <= 1e-13 * scale {
                let mut drop: Option<(usize, f64)> = None;
                for (i, (&(r, s), &lam)) in working.iter().zip(&lambda).enumerate() {
                    if s == Side::Equality || lam >= -1e-12 {
                        continue;
                    }
                    let better = match drop {
                        None => true,
                        Some((j, best)) => lam < best || (lam == best && r < working[j].0),
                    };
                    if better {
                        drop = Some((i, lam));
                    }
                }
                match drop {
                    None => {
                        optimal = true;
                        break;
                    }
                    Some((i, _)) => {
                        let (r, _) = working.remove(i);
                        in_working[r] = false;
                        skipped.iter_mut().for_each(|s| *s = false);
                        continue;
                    }
                }
            }

            let pmax = amax(&p);
            let mut alpha = 1.0;
            let mut block: Option<(usize, Side)> = None;
            for l in 0..m {
                // a skipped row depends on the working set, so a.p is roundoff
                if in_working[l] || skipped[l] {
                    continue;
                }
                let a = self.constraint_row(l);
                let ap = dot(a, &p);
                let thresh = 1e-14 * a.iter().map(|v| v.abs()).sum::<f64>() * pmax;
                let (beta, side) = if ap < -thresh {
                    ((lower[l] - dot(a, &x)) / ap, Side::Lower)
                } else if ap > thresh {
                    ((upper[l] - dot(a, &x)) / ap, Side::Upper)
                } else {
                    continue;
                };
                let beta = beta.max(0.0);
                if beta < alpha {
                    alpha = beta;
                    block = Some((l, side));
                }
            }
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            if let Some(t) = trace.as_mut() {
                t.push(x.clone());
            }
            if let Some((l, side)) = block {
                working.push((l, side));
                if working.len() > n || self.working_factor(&working).is_none() {
                    working.pop();
                    skipped[l] = true;
                } else {
                    in_working[l] = true;
                }
            }
        }

        if !optimal {
            return Ok(QpSolution {
                x: start.to_vec(),
                active: Vec::new(),
                iterations,
                status: QpStatus::Fallback,
                regularized: self.chol.regularized,
                trace,
            });
        }
        let active = working
            .iter()
            .zip(&lambda)
            .map(|(&(row, side), &multiplier)| ActiveConstraint { row, side, multiplier })
            .collect();
        Ok(QpSolution {
            x,
            active,
            iterations,
            status: QpStatus::Optimal,
            regularized: self.chol.regularized,
            trace,
        })
    }
}

fn amax(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `problem` from the feasible point `start`.
pub fn solve_qp(problem: &QpProblem, start: &[f64]) -> Result<QpSolution, QpError> {
    solve_qp_with(problem, start, SolveOptions::default())
}

pub fn solve_qp_with(problem: &QpProblem, start: &[f64], opts: SolveOptions) -> Result<QpSolution, QpError> {
    problem.validate()?;
    let prepared = PreparedQp::new(&problem.g, problem.n, &problem.a, problem.m())?;
    prepared.solve(&problem.c, &problem.lower, &problem.upper, start, opts)
}

/// Largest of the stationarity norm `|G x + c - M' lambda|`, the primal
/// infeasibility, multiplier sign violations and complementarity products.
pub fn kkt_residual(problem: &QpProblem, solution: &QpSolution) -> f64 {
    let (n, m) = (problem.n, problem.m());
    let x = &solution.x;
    let row = |l: usize| &problem.a[l * n..(l + 1) * n];
    let mut r: Vec<f64> = (0..n)
        .map(|i| dot(&problem.g[i * n..(i + 1) * n], x) + problem.c[i])
        .collect();
    let mut worst: f64 = 0.0;
    for ac in &solution.active {
        let s = ac.side.sign() * ac.multiplier;
        for (ri, ai) in r.iter_mut().zip(row(ac.row)) {
            *ri -= s * ai;
        }
        if ac.side != Side::Equality {
            worst = worst.max(-ac.multiplier);
        }
        let bound = match ac.side {
            Side::Lower | Side::Equality => problem.lower[ac.row],
            Side::Upper => problem.upper[ac.row],
        };
        worst = worst.max((ac.multiplier * (dot(row(ac.row), x) - bound)).abs());
    }
    worst = worst.max(r.iter().map(|v| v * v).sum::<f64>().sqrt());
    for l in 0..m {
        let v = dot(row(l), x);
        worst = worst.max(problem.lower[l] - v).max(v - problem.upper[l]);
    }
    worst
}
