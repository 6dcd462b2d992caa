//! Integrated quadratic reconstruction and its unconstrained 2-exact variant.
//!
//! On each cell the reconstruction is `v(x) = u0 + phi . a(x)` with
//!
//! ```text
//!     a(x) = [ (x - x0)/h ; vech((x - x0)(x - x0)' - J0)/h^2 ]
//! ```
//!
//! so the cell average of `v` is `u0` whatever `phi` is. `phi` minimizes the
//! least-squares mismatch against the Moore-neighbor averages, subject to
//! bounds on `v` at the collocation cluster (IQR) or unconstrained (k-exact).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{vech_len, CellGeometry, Mesh, Point, SymMatrix};
use crate::qp::{PreparedQp, QpStatus, SolveOptions};

/// Largest coefficient vector (3D: 3 linear + 6 quadratic).
pub const MAX_COEFFS: usize = 9;

/// Coefficient count `d(d+3)/2`.
pub fn coeff_len(dim: usize) -> usize {
    dim + vech_len(dim)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReconstructionMode {
    /// Bound-constrained least squares.
    #[default]
    Iqr,
    /// Unconstrained least squares, `phi = -G^-1 c`.
    #[serde(alias = "k-exact", alias = "2-exact")]
    KExact,
}

impl std::str::FromStr for ReconstructionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "iqr" => Ok(Self::Iqr),
            "kexact" | "k-exact" | "2-exact" => Ok(Self::KExact),
            other => Err(format!("unknown reconstruction '{other}' (expected iqr or kexact)")),
        }
    }
}

/// Writes `[r/h ; vech(r r' + extra)/h^2]` into `out`, `r` already centered.
fn moment_vector(dim: usize, r: &Point, extra: &SymMatrix, h: f64, out: &mut [f64]) {
    for a in 0..dim {
        out[a] = r[a] / h;
    }
    let h2 = h * h;
    let mut k = dim;
    for col in 0..dim {
        for row in col..dim {
            out[k] = (r[row] * r[col] + extra[(row, col)]) / h2;
            k += 1;
        }
    }
}

/// `a(x)` for `cell` with reference length `h`.
pub fn basis_vector(cell: &CellGeometry, h: f64, x: &Point) -> Vec<f64> {
    let dim = cell.kind.dim();
    let mut out = vec![0.0; coeff_len(dim)];
    moment_vector(dim, &(x - cell.centroid), &-cell.second_moments, h, &mut out);
    out
}

/// Quadratic polynomial on one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCellPoly {
    pub cell: usize,
    pub dim: usize,
    pub mean: f64,
    /// `(hL_1..hL_d, h^2 H_11/2, h^2 H_21, .., h^2 H_dd/2)`, zero-padded.
    pub phi: [f64; MAX_COEFFS],
    pub h: f64,
    pub centroid: Point,
    pub second_moments: SymMatrix,
}

impl QuadraticCellPoly {
    pub fn constant(cell: usize, geometry: &CellGeometry, mean: f64) -> Self {
        Self {
            cell,
            dim: geometry.kind.dim(),
            mean,
            phi: [0.0; MAX_COEFFS],
            h: geometry.size,
            centroid: geometry.centroid,
            second_moments: geometry.second_moments,
        }
    }

    /// Builds the polynomial with gradient `grad` and hessian `hess` at the
    /// centroid and cell average `mean`.
    pub fn from_derivatives(cell: usize, geometry: &CellGeometry, mean: f64, grad: &Point, hess: &SymMatrix) -> Self {
        let mut p = Self::constant(cell, geometry, mean);
        let (dim, h) = (p.dim, p.h);
        for a in 0..dim {
            p.phi[a] = h * grad[a];
        }
        let mut k = dim;
        for col in 0..dim {
            for row in col..dim {
                let f = if row == col { 0.5 } else { 1.0 };
                p.phi[k] = f * h * h * hess[(row, col)];
                k += 1;
            }
        }
        p
    }

    pub fn eval(&self, x: &Point) -> f64 {
        let mut a = [0.0; MAX_COEFFS];
        moment_vector(self.dim, &(x - self.centroid), &-self.second_moments, self.h, &mut a);
        self.mean + a.iter().zip(&self.phi).map(|(a, p)| a * p).sum::<f64>()
    }

    pub fn gradient(&self) -> Point {
        let mut g = Point::zeros();
        for a in 0..self.dim {
            g[a] = self.phi[a] / self.h;
        }
        g
    }

    pub fn hessian(&self) -> SymMatrix {
        let mut m = SymMatrix::zeros();
        let h2 = self.h * self.h;
        let mut k = self.dim;
        for col in 0..self.dim {
            for row in col..self.dim {
                let v = self.phi[k] / h2;
                if row == col {
                    m[(row, col)] = 2.0 * v;
                } else {
                    m[(row, col)] = v;
                    m[(col, row)] = v;
                }
                k += 1;
            }
        }
        m
    }
}

/// Cell averages, real cells first and then one value per ghost.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantField {
    pub values: Vec<f64>,
    n_cells: usize,
}

impl PiecewiseConstantField {
    /// Takes real-cell values; ghosts start at zero.
    pub fn from_cells(mesh: &Mesh, cells: Vec<f64>) -> Self {
        assert_eq!(cells.len(), mesh.n_cells(), "one value per cell");
        let mut values = cells;
        values.resize(mesh.n_total(), 0.0);
        Self {
            values,
            n_cells: mesh.n_cells(),
        }
    }

    pub fn constant(mesh: &Mesh, value: f64) -> Self {
        Self {
            values: vec![value; mesh.n_total()],
            n_cells: mesh.n_cells(),
        }
    }

    /// Degree-4 averages of `f` on `2^depth` sub-cells, ghosts included.
    pub fn project(mesh: &Mesh, depth: u32, f: impl Fn(&Point) -> f64 + Sync) -> Self {
        let values = (0..mesh.n_total())
            .into_par_iter()
            .map(|i| mesh.cell_average(i, depth, &f))
            .collect();
        Self {
            values,
            n_cells: mesh.n_cells(),
        }
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn cells(&self) -> &[f64] {
        &self.values[..self.n_cells]
    }

    pub fn cells_mut(&mut self) -> &mut [f64] {
        &mut self.values[..self.n_cells]
    }

    pub fn ghosts(&self) -> &[f64] {
        &self.values[self.n_cells..]
    }

    pub fn ghosts_mut(&mut self) -> &mut [f64] {
        &mut self.values[self.n_cells..]
    }

    /// `sum |T| u` over real cells.
    pub fn mass(&self, mesh: &Mesh) -> f64 {
        self.cells().iter().zip(mesh.cells()).map(|(u, c)| u * c.volume).sum()
    }
}

/// Per-cell min and max of a reconstruction over its own cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterExtrema {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ClusterExtrema {
    /// Extrema of `f` sampled at each real cell's cluster.
    pub fn from_function(mesh: &Mesh, f: impl Fn(&Point) -> f64 + Sync) -> Self {
        let (min, max) = mesh
            .cells()
            .par_iter()
            .map(|c| {
                c.cluster()
                    .map(|z| f(&z))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
            })
            .unzip();
        Self { min, max }
    }

    /// Extrema of a piecewise-constant field (each cell its own value).
    pub fn from_constant(u: &PiecewiseConstantField) -> Self {
        Self {
            min: u.cells().to_vec(),
            max: u.cells().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReconstructionStats {
    /// QP iteration cap reached; the cell fell back to a constant.
    pub fallbacks: usize,
    /// Cells whose patch only supports a linear reconstruction.
    pub linear_only: usize,
    /// Cells that kept no usable least-squares system at all.
    pub constant_only: usize,
    pub regularized: usize,
}

/// Reconstruction on every real cell, with cluster values and extrema.
#[derive(Debug, Clone)]
pub struct PiecewiseQuadraticField {
    pub polys: Vec<QuadraticCellPoly>,
    /// `v` at each cell's cluster, centroid first, `cluster_len` per cell.
    pub cluster_values: Vec<f64>,
    pub cluster_len: usize,
    /// Ghosts hold constants.
    pub ghosts: Vec<f64>,
    pub extrema: ClusterExtrema,
    pub stats: ReconstructionStats,
}

impl PiecewiseQuadraticField {
    pub fn n_cells(&self) -> usize {
        self.polys.len()
    }

    pub fn cluster(&self, cell: usize) -> &[f64] {
        &self.cluster_values[cell * self.cluster_len..(cell + 1) * self.cluster_len]
    }

    /// Value of cell or ghost `index` at `x` (in that cell's own frame).
    pub fn value(&self, index: usize, x: &Point) -> f64 {
        match self.polys.get(index) {
            Some(p) => p.eval(x),
            None => self.ghosts[index - self.polys.len()],
        }
    }

    /// Constant reconstruction of `u`; cluster values all equal the mean.
    pub fn piecewise_constant(mesh: &Mesh, u: &PiecewiseConstantField) -> Self {
        let k = mesh.kind().cluster_size();
        let polys: Vec<_> = mesh
            .cells()
            .iter()
            .enumerate()
            .map(|(i, g)| QuadraticCellPoly::constant(i, g, u.values[i]))
            .collect();
        let cluster_values = u.cells().iter().flat_map(|&v| std::iter::repeat_n(v, k)).collect();
        Self {
            polys,
            cluster_values,
            cluster_len: k,
            ghosts: u.ghosts().to_vec(),
            extrema: ClusterExtrema::from_constant(u),
            stats: ReconstructionStats::default(),
        }
    }
}

/// Least-squares data of one patch.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub n: usize,
    /// `s_i` rows, one per Moore neighbor, `n` entries each.
    pub s: Vec<f64>,
    /// Row-major `sum s_i s_i'`.
    pub g: Vec<f64>,
    pub c: Vec<f64>,
    /// Patch too small for a quadratic; only the linear block is kept.
    pub linear_only: bool,
}

fn patch_rows(mesh: &Mesh, cell: usize, h: f64, n: usize) -> Vec<f64> {
    let g0 = mesh.cell(cell);
    let dim = mesh.dim();
    let mut full = [0.0; MAX_COEFFS];
    let mut s = Vec::with_capacity(mesh.moore(cell).len() * n);
    for nb in mesh.moore(cell) {
        let gi = mesh.geometry(nb.cell);
        let r = gi.centroid + nb.shift - g0.centroid;
        moment_vector(dim, &r, &(gi.second_moments - g0.second_moments), h, &mut full);
        s.extend_from_slice(&full[..n]);
    }
    s
}

fn gram(s: &[f64], n: usize) -> Vec<f64> {
    let mut g = vec![0.0; n * n];
    for row in s.chunks(n) {
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] += row[i] * row[j];
            }
        }
    }
    g
}

/// `G` and `c` of `cell` with the cell's own size as reference length.
pub fn assemble_least_squares(mesh: &Mesh, cell: usize, u: &PiecewiseConstantField) -> LeastSquares {
    assemble_least_squares_with_length(mesh, cell, u, mesh.cell(cell).size)
}

pub fn assemble_least_squares_with_length(mesh: &Mesh, cell: usize, u: &PiecewiseConstantField, h: f64) -> LeastSquares {
    let full = coeff_len(mesh.dim());
    let linear_only = mesh.moore(cell).len() < full;
    let n = if linear_only { mesh.dim() } else { full };
    let s = patch_rows(mesh, cell, h, n);
    let g = gram(&s, n);
    let u0 = u.values[cell];
    let mut c = vec![0.0; n];
    for (nb, row) in mesh.moore(cell).iter().zip(s.chunks(n)) {
        let d = u.values[nb.cell] - u0;
        for (ck, sk) in c.iter_mut().zip(row) {
            *ck -= d * sk;
        }
    }
    LeastSquares { n, s, g, c, linear_only }
}

/// Constraint matrix rows `a(z)` over the cluster, centroid row first.
pub fn constraint_rows(cell: &CellGeometry, h: f64, n: usize) -> Vec<f64> {
    let dim = cell.kind.dim();
    let mut full = [0.0; MAX_COEFFS];
    let mut a = Vec::with_capacity(cell.kind.cluster_size() * n);
    for z in cell.cluster() {
        moment_vector(dim, &(z - cell.centroid), &-cell.second_moments, h, &mut full);
        a.extend_from_slice(&full[..n]);
    }
    a
}

/// Lower and upper bounds of `v - u0` at each cluster row.
pub fn compute_bounds(
    mesh: &Mesh,
    cell: usize,
    u: &PiecewiseConstantField,
    prev: &ClusterExtrema,
) -> (Vec<f64>, Vec<f64>) {
    let q = mesh.kind().params().points_per_face;
    let rows = mesh.kind().cluster_size();
    let mut lower = vec![0.0; rows];
    let mut upper = vec![0.0; rows];
    let nbs: Vec<usize> = mesh.von_neumann(cell).map(|nb| nb.cell).collect();
    fill_bounds(mesh, cell, u, prev, &nbs, q, &mut lower, &mut upper);
    (lower, upper)
}

#[allow(clippy::too_many_arguments)]
fn fill_bounds(
    mesh: &Mesh,
    cell: usize,
    u: &PiecewiseConstantField,
    prev: &ClusterExtrema,
    face_nbs: &[usize],
    q: usize,
    lower: &mut [f64],
    upper: &mut [f64],
) {
    let u0 = u.values[cell];
    let own_lo = prev.min[cell].min(u0);
    let own_hi = prev.max[cell].max(u0);
    lower[0] = own_lo - u0;
    upper[0] = own_hi - u0;
    for (j, &nb) in face_nbs.iter().enumerate() {
        let uj = u.values[nb];
        let (lo_j, hi_j) = if mesh.is_ghost(nb) {
            (uj, uj)
        } else {
            (prev.min[nb], prev.max[nb])
        };
        let lo = own_lo.min(lo_j).min(uj) - u0;
        let hi = own_hi.max(hi_j).max(uj) - u0;
        for r in 1 + j * q..1 + (j + 1) * q {
            lower[r] = lo;
            upper[r] = hi;
        }
    }
}

/// Cached per-cell reconstruction data.
#[derive(Debug, Clone)]
struct CellStencil {
    n: usize,
    linear_only: bool,
    s: Vec<f64>,
    qp: Option<PreparedQp>,
    face_nbs: Vec<usize>,
}

/// Reconstruction operator with per-cell geometry factored once.
#[derive(Debug, Clone)]
pub struct Reconstructor {
    mode: ReconstructionMode,
    cluster_len: usize,
    points_per_face: usize,
    stencils: Vec<CellStencil>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellStatus {
    Ok,
    Fallback,
}

impl Reconstructor {
    pub fn new(mesh: &Mesh, mode: ReconstructionMode) -> Self {
        let full = coeff_len(mesh.dim());
        let stencils = (0..mesh.n_cells())
            .into_par_iter()
            .map(|i| {
                let g0 = mesh.cell(i);
                let h = g0.size;
                let mut linear_only = mesh.moore(i).len() < full;
                let face_nbs = mesh.von_neumann(i).map(|nb| nb.cell).collect();
                loop {
                    let n = if linear_only { mesh.dim() } else { full };
                    let s = patch_rows(mesh, i, h, n);
                    let g = gram(&s, n);
                    let a = constraint_rows(g0, h, n);
                    match PreparedQp::new(&g, n, &a, mesh.kind().cluster_size()) {
                        Ok(qp) => {
                            return CellStencil {
                                n,
                                linear_only,
                                s,
                                qp: Some(qp),
                                face_nbs,
                            }
                        }
                        Err(_) if !linear_only => linear_only = true,
                        Err(_) => {
                            return CellStencil {
                                n,
                                linear_only,
                                s,
                                qp: None,
                                face_nbs,
                            }
                        }
                    }
                }
            })
            .collect();
        Self {
            mode,
            cluster_len: mesh.kind().cluster_size(),
            points_per_face: mesh.kind().params().points_per_face,
            stencils,
        }
    }

    pub fn mode(&self) -> ReconstructionMode {
        self.mode
    }

    /// Fresh output buffer for [`Reconstructor::reconstruct_into`].
    pub fn empty_field(&self, mesh: &Mesh) -> PiecewiseQuadraticField {
        PiecewiseQuadraticField::piecewise_constant(mesh, &PiecewiseConstantField::constant(mesh, 0.0))
    }

    pub fn reconstruct(
        &self,
        mesh: &Mesh,
        u: &PiecewiseConstantField,
        prev: &ClusterExtrema,
    ) -> PiecewiseQuadraticField {
        let mut out = self.empty_field(mesh);
        self.reconstruct_into(mesh, u, prev, &mut out);
        out
    }

    /// `R[u, prev]` written into `out`; `prev` is ignored in k-exact mode.
    pub fn reconstruct_into(
        &self,
        mesh: &Mesh,
        u: &PiecewiseConstantField,
        prev: &ClusterExtrema,
        out: &mut PiecewiseQuadraticField,
    ) {
        let k = self.cluster_len;
        let mut status = vec![CellStatus::Ok; mesh.n_cells()];
        out.polys
            .par_iter_mut()
            .zip(out.cluster_values.par_chunks_mut(k))
            .zip(out.extrema.min.par_iter_mut().zip(out.extrema.max.par_iter_mut()))
            .zip(status.par_iter_mut())
            .enumerate()
            .for_each(|(i, (((poly, cluster), (lo, hi)), st))| {
                *st = self.reconstruct_one(mesh, i, u, prev, poly, cluster);
                let (a, b) = cluster
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                *lo = a;
                *hi = b;
            });
        out.ghosts.clear();
        out.ghosts.extend_from_slice(u.ghosts());
        out.stats = ReconstructionStats {
            fallbacks: status.iter().filter(|s| **s == CellStatus::Fallback).count(),
            linear_only: self.stencils.iter().filter(|s| s.linear_only && s.qp.is_some()).count(),
            constant_only: self.stencils.iter().filter(|s| s.qp.is_none()).count(),
            regularized: self
                .stencils
                .iter()
                .filter(|s| s.qp.as_ref().is_some_and(|q| q.regularized()))
                .count(),
        };
    }

    fn reconstruct_one(
        &self,
        mesh: &Mesh,
        i: usize,
        u: &PiecewiseConstantField,
        prev: &ClusterExtrema,
        poly: &mut QuadraticCellPoly,
        cluster: &mut [f64],
    ) -> CellStatus {
        let st = &self.stencils[i];
        let g0 = mesh.cell(i);
        let u0 = u.values[i];
        *poly = QuadraticCellPoly::constant(i, g0, u0);
        let Some(qp) = &st.qp else {
            cluster.fill(u0);
            return CellStatus::Ok;
        };
        let n = st.n;
        let mut c = [0.0; MAX_COEFFS];
        for (nb, row) in mesh.moore(i).iter().zip(st.s.chunks(n)) {
            let d = u.values[nb.cell] - u0;
            for t in 0..n {
                c[t] -= d * row[t];
            }
        }
        let mut status = CellStatus::Ok;
        match self.mode {
            ReconstructionMode::KExact => {
                let phi = qp.unconstrained(&c[..n]);
                poly.phi[..n].copy_from_slice(&phi);
            }
            ReconstructionMode::Iqr => {
                let mut lower = [0.0; 32];
                let mut upper = [0.0; 32];
                let (lower, upper) = (&mut lower[..self.cluster_len], &mut upper[..self.cluster_len]);
                fill_bounds(mesh, i, u, prev, &st.face_nbs, self.points_per_face, lower, upper);
                let zero = [0.0; MAX_COEFFS];
                match qp.solve(&c[..n], lower, upper, &zero[..n], SolveOptions::default()) {
                    Ok(sol) if sol.status == QpStatus::Optimal => poly.phi[..n].copy_from_slice(&sol.x),
                    _ => status = CellStatus::Fallback,
                }
            }
        }
        for (r, out) in cluster.iter_mut().enumerate() {
            let a = qp.constraint_row(r);
            *out = u0 + a.iter().zip(&poly.phi[..n]).map(|(a, p)| a * p).sum::<f64>();
        }
        status
    }
}

/// One-cell reconstruction, assembling everything from scratch.
pub fn reconstruct_cell(
    mesh: &Mesh,
    cell: usize,
    u: &PiecewiseConstantField,
    prev: &ClusterExtrema,
) -> QuadraticCellPoly {
    let ls = assemble_least_squares(mesh, cell, u);
    let g0 = mesh.cell(cell);
    let a = constraint_rows(g0, g0.size, ls.n);
    let (lower, upper) = compute_bounds(mesh, cell, u, prev);
    let mut poly = QuadraticCellPoly::constant(cell, g0, u.values[cell]);
    if let Ok(qp) = PreparedQp::new(&ls.g, ls.n, &a, lower.len()) {
        if let Ok(sol) = qp.solve(&ls.c, &lower, &upper, &vec![0.0; ls.n], SolveOptions::default()) {
            if sol.status == QpStatus::Optimal {
                poly.phi[..ls.n].copy_from_slice(&sol.x);
            }
        }
    }
    poly
}

/// 2-exact reconstruction of one cell. Fails when `G` is singular.
pub fn k_exact_reconstruct(
    mesh: &Mesh,
    cell: usize,
    u: &PiecewiseConstantField,
) -> Result<QuadraticCellPoly, crate::qp::QpError> {
    let ls = assemble_least_squares(mesh, cell, u);
    let g0 = mesh.cell(cell);
    let chol = crate::qp::Cholesky::factor(&ls.g, ls.n)?;
    if chol.regularized() {
        return Err(crate::qp::QpError::NotPositiveDefinite);
    }
    let mut phi: Vec<f64> = ls.c.iter().map(|v| -v).collect();
    chol.solve_in_place(&mut phi);
    let mut poly = QuadraticCellPoly::constant(cell, g0, u.values[cell]);
    poly.phi[..ls.n].copy_from_slice(&phi);
    Ok(poly)
}

/// `R[u, prev]` over the whole mesh.
pub fn reconstruct_field(mesh: &Mesh, u: &PiecewiseConstantField, prev: &ClusterExtrema) -> PiecewiseQuadraticField {
    Reconstructor::new(mesh, ReconstructionMode::Iqr).reconstruct(mesh, u, prev)
}

/// Initial cell averages (ghosts included) and the first reconstruction,
/// bounded by the extrema of `u0` itself at the cluster points.
pub fn bootstrap_initial(
    recon: &Reconstructor,
    mesh: &Mesh,
    depth: u32,
    u0: impl Fn(&Point) -> f64 + Sync,
) -> (PiecewiseConstantField, PiecewiseQuadraticField) {
    let u = PiecewiseConstantField::project(mesh, depth, &u0);
    let prev = ClusterExtrema::from_function(mesh, &u0);
    let v = recon.reconstruct(mesh, &u, &prev);
    (u, v)
}
