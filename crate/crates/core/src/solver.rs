//! Finite-volume residual with Lax-Friedrichs fluxes and the SSP-RK3 time
//! loop that threads reconstructions through its stages.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Mesh, Point};
use crate::models::{max_wave_speed, BoundaryCondition, ConservationLawModel, Flux, ModelError};
use crate::reconstruction::{
    ClusterExtrema, PiecewiseConstantField, PiecewiseQuadraticField, ReconstructionMode, Reconstructor,
};

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("CFL condition violated on cell {cell}: Gamma a dt L = {lhs:e} > |T| = {rhs:e}")]
    Cfl { cell: usize, lhs: f64, rhs: f64 },
    #[error("maximal wave speed is zero; set a fixed time step")]
    ZeroSpeed,
    #[error("invalid time interval: {0}")]
    Time(String),
    #[error("model mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("boundary condition needs an exact solution, model '{0}' has none")]
    MissingBoundaryData(String),
}

/// `1/2 (F(u) + F(v)) . n + a/2 (u - v)`.
pub fn lax_friedrichs_flux(flux: &Flux, x: &Point, u: f64, v: f64, n: &Point, a: f64) -> f64 {
    0.5 * (flux.normal_flux(x, u, n) + flux.normal_flux(x, v, n)) + 0.5 * a * (u - v)
}

/// `nu h / a`, clipped so that `t + dt` does not pass `t_end`.
pub fn compute_time_step(mesh: &Mesh, a: f64, nu: f64, t: f64, t_end: f64) -> Result<f64, SolverError> {
    if !(a > 0.0) {
        return Err(SolverError::ZeroSpeed);
    }
    Ok((nu * mesh.h_min() / a).min(t_end - t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeControls {
    /// CFL number; `None` takes the cell kind's value.
    pub cfl: Option<f64>,
    /// Used instead of the CFL step when set.
    pub fixed_dt: Option<f64>,
    /// Refuse steps that break the monotonicity condition.
    pub enforce_cfl: bool,
}

impl Default for TimeControls {
    fn default() -> Self {
        Self {
            cfl: None,
            fixed_dt: None,
            enforce_cfl: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub steps: usize,
    pub qp_fallbacks: usize,
    pub linear_only_cells: usize,
    pub constant_only_cells: usize,
    pub regularized_cells: usize,
    /// Worst excursion of an Euler substage outside its local bounds.
    pub local_violation: f64,
    pub euler_substeps: usize,
    /// Time, min, max and mass after each step; entry 0 is the start.
    pub times: Vec<f64>,
    pub min_history: Vec<f64>,
    pub max_history: Vec<f64>,
    pub mass_history: Vec<f64>,
}

impl Diagnostics {
    fn record(&mut self, mesh: &Mesh, t: f64, u: &PiecewiseConstantField) {
        let (lo, hi) = u
            .cells()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        self.times.push(t);
        self.min_history.push(lo);
        self.max_history.push(hi);
        self.mass_history.push(u.mass(mesh));
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub t: f64,
    pub u: PiecewiseConstantField,
    /// Cluster extrema of the last reconstruction, the argument `v^{n-1}`.
    pub prev: ClusterExtrema,
    /// Last reconstruction, once a step has been taken.
    pub last: Option<PiecewiseQuadraticField>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone)]
struct FaceData {
    owner: usize,
    owner_row: usize,
    neighbor: usize,
    /// Matching cluster rows in the neighbor, empty for ghosts.
    neighbor_rows: Vec<usize>,
    dissipation: f64,
}

/// Scheme on one mesh for one model.
pub struct Solver<'a> {
    mesh: &'a Mesh,
    model: &'a ConservationLawModel,
    recon: Reconstructor,
    faces: Vec<FaceData>,
    nu: f64,
    controls: TimeControls,
    max_speed: f64,
}

fn match_rows(mesh: &Mesh, face: usize) -> Vec<usize> {
    let f = &mesh.faces()[face];
    let q = mesh.kind().params().points_per_face;
    let nb = f.neighbor.cell;
    let own = &mesh.cell(f.owner).faces[f.owner_local].points;
    let local = mesh
        .face_links(nb)
        .iter()
        .position(|l| l.face == face)
        .expect("neighbor links the shared face");
    let theirs = &mesh.cell(nb).faces[local].points;
    own.iter()
        .map(|z| {
            let (best, _) = theirs
                .iter()
                .enumerate()
                .map(|(k, p)| (k, (p + f.neighbor.shift - z).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("face has points");
            1 + local * q + best
        })
        .collect()
}

impl<'a> Solver<'a> {
    pub fn new(
        mesh: &'a Mesh,
        model: &'a ConservationLawModel,
        mode: ReconstructionMode,
        controls: TimeControls,
    ) -> Result<Self, SolverError> {
        if mesh.dim() != model.dim {
            return Err(SolverError::Mismatch(format!(
                "mesh dimension {} but model '{}' is {}-dimensional",
                mesh.dim(),
                model.name,
                model.dim
            )));
        }
        let periodic = model.boundary == BoundaryCondition::Periodic;
        if periodic != (mesh.n_ghosts() == 0) {
            return Err(SolverError::Mismatch(format!(
                "model '{}' boundary {:?} does not fit a mesh with {} ghost cells",
                model.name,
                model.boundary,
                mesh.n_ghosts()
            )));
        }
        if matches!(model.boundary, BoundaryCondition::Dirichlet | BoundaryCondition::InflowOutflow) && model.exact.is_none() {
            return Err(SolverError::MissingBoundaryData(model.name.clone()));
        }
        let q = mesh.kind().params().points_per_face;
        let global = if model.flux.is_space_dependent() {
            None
        } else {
            let normals: Vec<Point> = mesh
                .faces()
                .iter()
                .map(|f| mesh.cell(f.owner).faces[f.owner_local].normal)
                .collect();
            Some(max_wave_speed(&model.flux, model.initial_range, &normals)?)
        };
        let faces: Vec<FaceData> = (0..mesh.faces().len())
            .into_par_iter()
            .map(|fi| {
                let f = &mesh.faces()[fi];
                let fg = &mesh.cell(f.owner).faces[f.owner_local];
                let dissipation = global.unwrap_or_else(|| {
                    // sup of |F' . n| over the face; affine in x, so corners and
                    // quadrature points cover it
                    let corners = fg.vertices.iter().map(|&v| mesh.cell(f.owner).vertices[v]);
                    corners
                        .chain(fg.points.iter().copied())
                        .flat_map(|x| {
                            [model.initial_range.0, model.initial_range.1]
                                .map(|u| model.flux.normal_speed(&x, u, &fg.normal).abs())
                        })
                        .fold(0.0, f64::max)
                });
                FaceData {
                    owner: f.owner,
                    owner_row: 1 + f.owner_local * q,
                    neighbor: f.neighbor.cell,
                    neighbor_rows: if f.boundary { Vec::new() } else { match_rows(mesh, fi) },
                    dissipation,
                }
            })
            .collect();
        let max_speed = faces.iter().map(|f| f.dissipation).fold(0.0, f64::max);
        Ok(Self {
            mesh,
            model,
            recon: Reconstructor::new(mesh, mode),
            faces,
            nu: controls.cfl.unwrap_or(mesh.kind().params().nu.value()),
            controls,
            max_speed,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn reconstructor(&self) -> &Reconstructor {
        &self.recon
    }

    /// Largest LF dissipation coefficient over the faces.
    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    pub fn cfl_number(&self) -> f64 {
        self.nu
    }

    /// Projected initial data; the extrema of the initial function at the
    /// cluster points stand in for the previous reconstruction.
    pub fn initial_state(&self) -> SolverState {
        let ic = &self.model.initial;
        let mut u = PiecewiseConstantField::project(self.mesh, self.model.quadrature_depth(), |x| ic(x));
        self.fill_ghosts(&mut u, 0.0);
        let prev = ClusterExtrema::from_function(self.mesh, |x| ic(x));
        let mut diagnostics = Diagnostics::default();
        diagnostics.record(self.mesh, 0.0, &u);
        SolverState {
            t: 0.0,
            u,
            prev,
            last: None,
            diagnostics,
        }
    }

    /// Sets ghost values for time `t` from the boundary condition.
    pub fn fill_ghosts(&self, u: &mut PiecewiseConstantField, t: f64) {
        let mesh = self.mesh;
        let n = mesh.n_cells();
        let depth = self.model.quadrature_depth();
        let values: Vec<f64> = mesh
            .ghosts()
            .par_iter()
            .enumerate()
            .map(|(gi, ghost)| match self.model.boundary {
                BoundaryCondition::Periodic | BoundaryCondition::Zero => 0.0,
                BoundaryCondition::Dirichlet => self.exact_average(n + gi, t, depth),
                BoundaryCondition::InflowOutflow => {
                    let fg = &mesh.cell(ghost.owner).faces[ghost.owner_local];
                    let exact = self.model.exact_at(&fg.centroid, t).unwrap_or(0.0);
                    if self.model.flux.normal_speed(&fg.centroid, exact, &fg.normal) < 0.0 {
                        self.exact_average(n + gi, t, depth)
                    } else {
                        u.values[ghost.owner]
                    }
                }
            })
            .collect();
        u.ghosts_mut().copy_from_slice(&values);
    }

    fn exact_average(&self, index: usize, t: f64, depth: u32) -> f64 {
        let exact = self.model.exact.as_ref().expect("checked at construction");
        self.mesh.cell_average(index, depth, |x| exact(x, t))
    }

    /// Time-derivative of the cell averages for reconstruction `v`, matching
    /// `-(1/|T|) sum_j |e_j| sum_q w_q Fhat`.
    pub fn spatial_residual(&self, v: &PiecewiseQuadraticField) -> Vec<f64> {
        let mesh = self.mesh;
        let flux = &self.model.flux;
        let nc = mesh.n_cells();
        let face_flux: Vec<f64> = self
            .faces
            .par_iter()
            .zip(mesh.faces().par_iter())
            .map(|(fd, f)| {
                let fg = &mesh.cell(fd.owner).faces[f.owner_local];
                let own = v.cluster(fd.owner);
                let mut total = 0.0;
                for (q, (z, w)) in fg.points.iter().zip(fg.weights).enumerate() {
                    let left = own[fd.owner_row + q];
                    let right = if fd.neighbor >= nc {
                        v.ghosts[fd.neighbor - nc]
                    } else {
                        v.cluster(fd.neighbor)[fd.neighbor_rows[q]]
                    };
                    total += w * lax_friedrichs_flux(flux, z, left, right, &fg.normal, fd.dissipation);
                }
                fg.area * total
            })
            .collect();
        (0..nc)
            .into_par_iter()
            .map(|i| {
                let mut s = 0.0;
                for (j, link) in mesh.face_links(i).iter().enumerate() {
                    let f = &mesh.faces()[link.face];
                    let sign = if f.owner == i && f.owner_local == j { 1.0 } else { -1.0 };
                    s += sign * face_flux[link.face];
                }
                -s / mesh.cell(i).volume
            })
            .collect()
    }

    /// `Gamma a dt L0 <= |T0|` on every cell.
    pub fn check_cfl(&self, dt: f64) -> Result<(), SolverError> {
        let gamma = self.mesh.kind().gamma();
        for (i, c) in self.mesh.cells().iter().enumerate() {
            let a = self
                .mesh
                .face_links(i)
                .iter()
                .map(|l| self.faces[l.face].dissipation)
                .fold(0.0, f64::max);
            let lhs = gamma * a * dt * c.surface;
            if lhs > c.volume * (1.0 + 1e-12) {
                return Err(SolverError::Cfl {
                    cell: i,
                    lhs,
                    rhs: c.volume,
                });
            }
        }
        Ok(())
    }

    fn step_size(&self, t: f64, t_end: f64) -> Result<f64, SolverError> {
        match self.controls.fixed_dt {
            Some(dt) => Ok(dt.min(t_end - t)),
            None => compute_time_step(self.mesh, self.max_speed, self.nu, t, t_end),
        }
    }

    /// `w = u + dt L(R[u, prev])` with ghosts of `u` set for `t_stage`.
    /// Returns `w` and the reconstruction; logs the local-bound excursion.
    fn euler_substage(
        &self,
        u: &mut PiecewiseConstantField,
        prev: &ClusterExtrema,
        t_stage: f64,
        dt: f64,
        diag: &mut Diagnostics,
    ) -> (PiecewiseConstantField, PiecewiseQuadraticField) {
        self.fill_ghosts(u, t_stage);
        let v = self.recon.reconstruct(self.mesh, u, prev);
        let rate = self.spatial_residual(&v);
        let mut w = u.clone();
        for (wi, r) in w.cells_mut().iter_mut().zip(&rate) {
            *wi += dt * r;
        }
        let nc = self.mesh.n_cells();
        let worst = (0..nc)
            .into_par_iter()
            .map(|i| {
                let (mut lo, mut hi) = (v.extrema.min[i], v.extrema.max[i]);
                for nb in self.mesh.von_neumann(i) {
                    let (a, b) = if nb.cell >= nc {
                        let g = v.ghosts[nb.cell - nc];
                        (g, g)
                    } else {
                        (v.extrema.min[nb.cell], v.extrema.max[nb.cell])
                    };
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
                let x = w.values[i];
                (lo - x).max(x - hi).max(0.0)
            })
            .reduce(|| 0.0, f64::max);
        diag.local_violation = diag.local_violation.max(worst);
        diag.euler_substeps += 1;
        diag.qp_fallbacks += v.stats.fallbacks;
        diag.linear_only_cells = v.stats.linear_only;
        diag.constant_only_cells = v.stats.constant_only;
        diag.regularized_cells = v.stats.regularized;
        (w, v)
    }

    fn check_step(&self, state: &SolverState, dt: f64) -> Result<(), SolverError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SolverError::Time(format!("non-positive step {dt} at t = {}", state.t)));
        }
        if self.controls.enforce_cfl {
            self.check_cfl(dt)?;
        }
        Ok(())
    }

    pub fn forward_euler_step(&self, state: &mut SolverState, dt: f64) -> Result<(), SolverError> {
        self.check_step(state, dt)?;
        let (w, v) = self.euler_substage(&mut state.u, &state.prev, state.t, dt, &mut state.diagnostics);
        state.u = w;
        state.prev = v.extrema.clone();
        state.last = Some(v);
        state.t += dt;
        state.diagnostics.steps += 1;
        state.diagnostics.record(self.mesh, state.t, &state.u);
        Ok(())
    }

    pub fn ssp_rk3_step(&self, state: &mut SolverState, dt: f64) -> Result<(), SolverError> {
        self.check_step(state, dt)?;
        let diag = &mut state.diagnostics;
        let t = state.t;
        let (mut u1, v1) = self.euler_substage(&mut state.u, &state.prev, t, dt, diag);
        let (w2, v2) = self.euler_substage(&mut u1, &v1.extrema, t + dt, dt, diag);
        let mut u2 = state.u.clone();
        for (a, (&un, &w)) in u2.cells_mut().iter_mut().zip(state.u.cells().iter().zip(w2.cells())) {
            *a = 0.75 * un + 0.25 * w;
        }
        let (w3, v3) = self.euler_substage(&mut u2, &v2.extrema, t + 0.5 * dt, dt, diag);
        let mut next = state.u.clone();
        for (a, (&un, &w)) in next.cells_mut().iter_mut().zip(state.u.cells().iter().zip(w3.cells())) {
            *a = un / 3.0 + 2.0 / 3.0 * w;
        }
        state.u = next;
        state.prev = v3.extrema.clone();
        state.last = Some(v3);
        state.t = t + dt;
        state.diagnostics.steps += 1;
        state.diagnostics.record(self.mesh, state.t, &state.u);
        Ok(())
    }

    /// SSP-RK3 steps until `t_end`, last step clipped.
    pub fn advance_to(&self, state: &mut SolverState, t_end: f64) -> Result<(), SolverError> {
        if t_end < state.t {
            return Err(SolverError::Time(format!("end time {t_end} precedes current time {}", state.t)));
        }
        let eps = 1e-13 * t_end.abs().max(1.0);
        while t_end - state.t > eps {
            let dt = self.step_size(state.t, t_end)?;
            self.ssp_rk3_step(state, dt)?;
        }
        if state.t != t_end && (state.t - t_end).abs() <= eps {
            state.t = t_end;
        }
        Ok(())
    }
}
