//! Case configuration, runs, convergence studies, error norms and output files.
//!
//! A case file is TOML with a `[case]` table and an optional `[convergence]`
//! table:
//!
//! ```toml
//! [case]
//! model = "linear2d"        # see models::MODEL_NAMES
//! mesh = "tri"              # interval | rect | tri | cuboid | tet | file
//! n = 32                    # cells per axis
//! diagonal = "forward"      # tri only
//! end_time = 1.0            # defaults to the model's time
//! cfl = 0.0625              # defaults to the model's, then the cell kind's
//! reconstruction = "iqr"    # iqr | kexact
//! enforce_cfl = true        # off by itself when the model sets its own CFL
//! output = "out"            # directory for CSV/VTK; omitted -> no files
//!
//! [convergence]
//! levels = [8, 16, 32, 64]
//! ```
//!
//! With `mesh = "file"`, `node_file` and `ele_file` name Triangle-style files,
//! relative to the case file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::geometry::{
    build_structured_tet_mesh, build_structured_tri_mesh, build_uniform_cuboid_mesh, build_uniform_interval_mesh,
    build_uniform_rect_mesh, load_unstructured_tri_mesh, CellKind, Diagonal, Domain, Mesh, MeshError,
};
use crate::models::{model_by_name, BoundaryCondition, ConservationLawModel, ModelError};
use crate::reconstruction::{PiecewiseConstantField, ReconstructionMode};
use crate::solver::{Diagnostics, Solver, SolverError, SolverState, TimeControls};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("fields differ in length: {0} vs {1}")]
    Mismatch(usize, usize),
    #[error("exact solution of '{model}' is unavailable at t = {t}")]
    NoExact { model: String, t: f64 },
    #[error("{path}, line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("invalid VTK output: {0}")]
    Vtk(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshKind {
    Interval,
    Rect,
    Tri,
    Cuboid,
    Tet,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagonalSpec {
    #[default]
    Forward,
    Backward,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub model: String,
    pub mesh: MeshKind,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub diagonal: DiagonalSpec,
    #[serde(default)]
    pub node_file: Option<PathBuf>,
    #[serde(default)]
    pub ele_file: Option<PathBuf>,
    #[serde(default)]
    pub end_time: Option<f64>,
    #[serde(default)]
    pub cfl: Option<f64>,
    #[serde(default)]
    pub reconstruction: ReconstructionMode,
    #[serde(default = "default_true")]
    pub enforce_cfl: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub check_invariants: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub levels: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: CaseConfig,
    #[serde(default)]
    pub convergence: Option<ConvergenceConfig>,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        if let Some(t) = cfg.case.end_time {
            if !(t >= 0.0) {
                return Err(HarnessError::Config {
                    path: origin.to_string(),
                    message: format!("end_time must be non-negative, got {t}"),
                });
            }
        }
        model_by_name(&cfg.case.model)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

fn mesh_domain(model: &ConservationLawModel) -> Domain {
    model.domain
}

/// Builds the case mesh with `n` cells per axis (ignored for file meshes).
pub fn build_mesh(cfg: &RunConfig, model: &ConservationLawModel, n: Option<usize>) -> Result<Mesh, HarnessError> {
    let case = &cfg.case;
    let need = || {
        n.or(case.n).ok_or_else(|| HarnessError::Config {
            path: "case".into(),
            message: "structured meshes need 'n'".into(),
        })
    };
    let domain = mesh_domain(model);
    let expect_dim = |d: usize| {
        if model.dim == d {
            Ok(())
        } else {
            Err(HarnessError::Config {
                path: "case".into(),
                message: format!("mesh '{:?}' is {d}-dimensional, model '{}' is {}-dimensional", case.mesh, model.name, model.dim),
            })
        }
    };
    let mesh = match case.mesh {
        MeshKind::Interval => {
            expect_dim(1)?;
            build_uniform_interval_mesh(need()?, domain)?
        }
        MeshKind::Rect => {
            expect_dim(2)?;
            let n = need()?;
            build_uniform_rect_mesh(n, n, domain)?
        }
        MeshKind::Tri => {
            expect_dim(2)?;
            let n = need()?;
            let d = match case.diagonal {
                DiagonalSpec::Forward => Diagonal::Forward,
                DiagonalSpec::Backward => Diagonal::Backward,
            };
            build_structured_tri_mesh(n, n, domain, d)?
        }
        MeshKind::Cuboid => {
            expect_dim(3)?;
            let n = need()?;
            build_uniform_cuboid_mesh(n, n, n, domain)?
        }
        MeshKind::Tet => {
            expect_dim(3)?;
            build_structured_tet_mesh(need()?, domain)?
        }
        MeshKind::File => {
            expect_dim(2)?;
            let missing = |what: &str| HarnessError::Config {
                path: "case".into(),
                message: format!("mesh = \"file\" needs '{what}'"),
            };
            let node = cfg.resolve(case.node_file.as_deref().ok_or_else(|| missing("node_file"))?);
            let ele = cfg.resolve(case.ele_file.as_deref().ok_or_else(|| missing("ele_file"))?);
            let node_text = std::fs::read_to_string(&node).map_err(io_err(&node))?;
            let ele_text = std::fs::read_to_string(&ele).map_err(io_err(&ele))?;
            load_unstructured_tri_mesh(&node_text, &ele_text, domain).map_err(|e| match e {
                MeshError::Parse { file, line, message } => HarnessError::Parse {
                    path: if file == "node" { node.display().to_string() } else { ele.display().to_string() },
                    line,
                    message,
                },
                other => other.into(),
            })?
        }
    };
    Ok(mesh)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub h: f64,
    pub l1: f64,
    pub linf: f64,
}

/// `L1 = sum |T| |u - e|`, `Linf = max |u - e|` over real cells.
pub fn error_norms(mesh: &Mesh, u: &[f64], exact: &[f64]) -> Result<(f64, f64), HarnessError> {
    let n = mesh.n_cells();
    if u.len() < n || exact.len() < n {
        return Err(HarnessError::Mismatch(u.len(), exact.len()));
    }
    let mut l1 = 0.0;
    let mut linf: f64 = 0.0;
    for ((a, b), c) in u.iter().zip(exact).zip(mesh.cells()) {
        let d = (a - b).abs();
        l1 += c.volume * d;
        linf = linf.max(d);
    }
    Ok((l1, linf))
}

/// Exact cell averages at time `t` (degree-4 rule, subdivided for
/// discontinuous data).
pub fn exact_averages(mesh: &Mesh, model: &ConservationLawModel, t: f64) -> Result<Vec<f64>, HarnessError> {
    use rayon::prelude::*;
    let exact = model.exact.as_ref().ok_or_else(|| HarnessError::NoExact {
        model: model.name.clone(),
        t,
    })?;
    let depth = if model.smooth { 0 } else { 4 };
    let values: Vec<f64> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|i| mesh.cell_average(i, depth, |x| exact(x, t)))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(HarnessError::NoExact {
            model: model.name.clone(),
            t,
        });
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub passed: bool,
    pub violation: f64,
    /// Informational checks never fail a run.
    pub asserted: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvariantReport {
    pub checks: Vec<InvariantCheck>,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.asserted)
    }

    pub fn get(&self, name: &str) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl std::fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            let status = match (c.passed, c.asserted) {
                (true, _) => "pass",
                (false, true) => "FAIL",
                (false, false) => "warn",
            };
            writeln!(f, "{:<24} {status}  worst violation {:.3e}", c.name, c.violation)?;
        }
        Ok(())
    }
}

pub const INVARIANT_TOLERANCE: f64 = 1e-11;

/// What a run must satisfy, given its history.
#[derive(Debug, Clone, Copy)]
pub struct InvariantContext {
    pub range: (f64, f64),
    pub periodic: bool,
    /// Step within the kind's CFL number; otherwise the local maximum
    /// principle is only reported.
    pub within_cfl: bool,
    /// `sum |T| |u0|`, the conservation scale.
    pub mass_scale: f64,
}

pub fn check_invariants(history: &Diagnostics, ctx: &InvariantContext) -> InvariantReport {
    let tol = INVARIANT_TOLERANCE;
    let mut checks = Vec::new();
    checks.push(InvariantCheck {
        name: "local_maximum_principle",
        passed: history.local_violation <= tol,
        violation: history.local_violation,
        asserted: ctx.within_cfl,
    });
    let (lo, hi) = ctx.range;
    let bound = history
        .min_history
        .iter()
        .zip(&history.max_history)
        .map(|(a, b)| (lo - a).max(b - hi).max(0.0))
        .fold(0.0, f64::max);
    checks.push(InvariantCheck {
        name: "bound_preservation",
        passed: bound <= tol,
        violation: bound,
        asserted: ctx.within_cfl,
    });
    if ctx.periodic {
        let m0 = history.mass_history.first().copied().unwrap_or(0.0);
        let scale = ctx.mass_scale.max(m0.abs()).max(f64::MIN_POSITIVE);
        let drift = history
            .mass_history
            .iter()
            .map(|m| (m - m0).abs() / scale)
            .fold(0.0, f64::max);
        checks.push(InvariantCheck {
            name: "conservation",
            passed: drift <= tol,
            violation: drift,
            asserted: true,
        });
    }
    checks.push(InvariantCheck {
        name: "qp_fallbacks",
        passed: history.qp_fallbacks == 0,
        violation: history.qp_fallbacks as f64,
        asserted: false,
    });
    InvariantReport { checks }
}

#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub mesh: Mesh,
    pub state: SolverState,
    pub errors: Option<ErrorReport>,
    pub invariants: InvariantReport,
    pub dt_count: usize,
    pub seconds: f64,
}

/// A model's own CFL number (0.1 for the 3D cases) may exceed the kind's
/// limit on purpose; the guard then stays off and the maximum principle is
/// only reported. Table and user values are guarded as configured.
fn controls_for(cfg: &CaseConfig, model: &ConservationLawModel) -> TimeControls {
    let model_chosen = cfg.cfl.is_none() && model.cfl.is_some();
    TimeControls {
        cfl: cfg.cfl.or(model.cfl),
        fixed_dt: None,
        enforce_cfl: cfg.enforce_cfl && !model_chosen,
    }
}

/// Runs the case on a given mesh.
pub fn run_on_mesh(cfg: &RunConfig, mesh: Mesh) -> Result<CaseOutcome, HarnessError> {
    let start = std::time::Instant::now();
    let model = model_by_name(&cfg.case.model)?;
    let controls = controls_for(&cfg.case, &model);
    let t_end = cfg.case.end_time.unwrap_or(model.end_time);
    let solver = Solver::new(&mesh, &model, cfg.case.reconstruction, controls)?;
    let mut state = solver.initial_state();
    let mass_scale: f64 = state
        .u
        .cells()
        .iter()
        .zip(mesh.cells())
        .map(|(u, c)| c.volume * u.abs())
        .sum();
    solver.advance_to(&mut state, t_end)?;
    let errors = match model.exact {
        Some(_) => match exact_averages(&mesh, &model, state.t) {
            Ok(exact) => {
                let (l1, linf) = error_norms(&mesh, state.u.cells(), &exact)?;
                Some(ErrorReport {
                    h: mesh.h_min(),
                    l1,
                    linf,
                })
            }
            Err(HarnessError::NoExact { .. }) => None,
            Err(e) => return Err(e),
        },
        None => None,
    };
    let within_cfl = solver.cfl_number() <= mesh.kind().params().nu.value() * (1.0 + 1e-12);
    let invariants = check_invariants(
        &state.diagnostics,
        &InvariantContext {
            range: model.initial_range,
            periodic: model.boundary == BoundaryCondition::Periodic,
            within_cfl,
            mass_scale,
        },
    );
    let dt_count = state.diagnostics.steps;
    drop(solver);
    Ok(CaseOutcome {
        mesh,
        state,
        errors,
        invariants,
        dt_count,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Builds the mesh, runs, and writes outputs when `output` is set.
pub fn run_case(cfg: &RunConfig) -> Result<CaseOutcome, HarnessError> {
    let model = model_by_name(&cfg.case.model)?;
    let mesh = build_mesh(cfg, &model, None)?;
    let outcome = run_on_mesh(cfg, mesh)?;
    if let Some(dir) = &cfg.case.output {
        let dir = cfg.resolve(dir);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let stem = format!("{}_{}", cfg.case.model, outcome.mesh.kind());
        write_cell_csv(&dir.join(format!("{stem}.csv")), &outcome.mesh, &outcome.state.u)?;
        write_vtk(&dir.join(format!("{stem}.vtk")), &outcome.mesh, &outcome.state.u)?;
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub l1: f64,
    pub l1_order: Option<f64>,
    pub linf: f64,
    pub linf_order: Option<f64>,
}

/// `log(e_c/e_f) / log(h_c/h_f)`.
pub fn order(coarse: (f64, f64), fine: (f64, f64)) -> f64 {
    (coarse.1 / fine.1).ln() / (coarse.0 / fine.0).ln()
}

/// Orders between consecutive reports.
pub fn convergence_rows(reports: &[ErrorReport]) -> Vec<ConvergenceRow> {
    reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let prev = i.checked_sub(1).map(|j| reports[j]);
            ConvergenceRow {
                h: r.h,
                l1: r.l1,
                l1_order: prev.map(|p| order((p.h, p.l1), (r.h, r.l1))),
                linf: r.linf,
                linf_order: prev.map(|p| order((p.h, p.linf), (r.h, r.linf))),
            }
        })
        .collect()
}

/// Runs each resolution in `levels` and returns one row per level.
pub fn convergence_study(cfg: &RunConfig, levels: &[usize]) -> Result<Vec<ConvergenceRow>, HarnessError> {
    if levels.len() < 2 {
        return Err(HarnessError::Config {
            path: "convergence".into(),
            message: format!("need at least 2 levels, got {}", levels.len()),
        });
    }
    let model = model_by_name(&cfg.case.model)?;
    let mut reports = Vec::with_capacity(levels.len());
    for &n in levels {
        let mesh = build_mesh(cfg, &model, Some(n))?;
        let out = run_on_mesh(cfg, mesh)?;
        let rep = out.errors.ok_or_else(|| HarnessError::NoExact {
            model: model.name.clone(),
            t: out.state.t,
        })?;
        reports.push(rep);
    }
    Ok(convergence_rows(&reports))
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("h,L1,order,Linf,order\n");
    let fmt = |o: Option<f64>| o.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
    for r in rows {
        let _ = writeln!(
            s,
            "{:.6e},{:.6e},{},{:.6e},{}",
            r.h,
            r.l1,
            fmt(r.l1_order),
            r.linf,
            fmt(r.linf_order)
        );
    }
    s
}

pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<(), HarnessError> {
    std::fs::write(path, convergence_csv(rows)).map_err(io_err(path))
}

/// `cell,x,y,z,value` with full precision.
pub fn cell_csv(mesh: &Mesh, u: &PiecewiseConstantField) -> String {
    let mut s = String::from("cell,x,y,z,value\n");
    for (i, (c, v)) in mesh.cells().iter().zip(u.cells()).enumerate() {
        let x = c.centroid;
        let _ = writeln!(s, "{i},{:e},{:e},{:e},{:e}", x.x, x.y, x.z, v);
    }
    s
}

pub fn write_cell_csv(path: &Path, mesh: &Mesh, u: &PiecewiseConstantField) -> Result<(), HarnessError> {
    std::fs::write(path, cell_csv(mesh, u)).map_err(io_err(path))
}

/// Reads back the value column of [`cell_csv`] output.
pub fn read_cell_csv(path: &Path) -> Result<Vec<f64>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_cell_csv(&text, &path.display().to_string())
}

pub fn parse_cell_csv(text: &str, origin: &str) -> Result<Vec<f64>, HarnessError> {
    let bad = |line: usize, message: String| HarnessError::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad(i + 1, format!("expected 5 fields, got {}", fields.len())));
        }
        let id: usize = fields[0].parse().map_err(|_| bad(i + 1, format!("bad cell id '{}'", fields[0])))?;
        if id != out.len() {
            return Err(bad(i + 1, format!("cell {id} out of order")));
        }
        out.push(fields[4].parse().map_err(|_| bad(i + 1, format!("bad value '{}'", fields[4])))?);
    }
    Ok(out)
}

fn vtk_type(kind: CellKind) -> u8 {
    match kind {
        CellKind::Interval => 3,
        CellKind::Rectangle => 9,
        CellKind::Triangle => 5,
        CellKind::Cuboid => 12,
        CellKind::Tetrahedron => 10,
    }
}

/// Legacy ASCII unstructured grid; each cell stores its own corner copies.
pub fn vtk_text(mesh: &Mesh, u: &PiecewiseConstantField) -> String {
    let nv = mesh.kind().vertex_count();
    let nc = mesh.n_cells();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "cell averages, {} {}", nc, mesh.kind());
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", nc * nv);
    for c in mesh.cells() {
        for v in &c.vertices {
            let _ = writeln!(s, "{:e} {:e} {:e}", v.x, v.y, v.z);
        }
    }
    let _ = writeln!(s, "CELLS {} {}", nc, nc * (nv + 1));
    for i in 0..nc {
        s.push_str(&nv.to_string());
        for k in 0..nv {
            let _ = write!(s, " {}", i * nv + k);
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    let t = vtk_type(mesh.kind());
    for _ in 0..nc {
        let _ = writeln!(s, "{t}");
    }
    let _ = writeln!(s, "CELL_DATA {nc}");
    s.push_str("SCALARS u double 1\nLOOKUP_TABLE default\n");
    for v in u.cells() {
        let _ = writeln!(s, "{v:e}");
    }
    s
}

/// Structural check of legacy VTK text: section counts agree and every
/// connectivity index names an existing point.
pub fn check_vtk(text: &str) -> Result<(), HarnessError> {
    let err = |m: &str| HarnessError::Vtk(m.to_string());
    let mut lines = text.lines();
    let mut next = |what: &str| lines.next().ok_or_else(|| err(&format!("missing {what}")));
    if !next("header")?.starts_with("# vtk DataFile") {
        return Err(err("bad magic line"));
    }
    next("title")?;
    if next("format")? != "ASCII" {
        return Err(err("not ASCII"));
    }
    if next("dataset")? != "DATASET UNSTRUCTURED_GRID" {
        return Err(err("not an unstructured grid"));
    }
    let count = |line: &str, key: &str, at: usize| -> Result<usize, HarnessError> {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.first() != Some(&key) {
            return Err(err(&format!("expected {key}, got '{line}'")));
        }
        f.get(at).and_then(|v| v.parse().ok()).ok_or_else(|| err(&format!("bad count in '{line}'")))
    };
    let np = count(next("POINTS")?, "POINTS", 1)?;
    for _ in 0..np {
        let l = next("point")?;
        if l.split_whitespace().filter(|v| v.parse::<f64>().is_ok()).count() != 3 {
            return Err(err(&format!("bad point '{l}'")));
        }
    }
    let cl = next("CELLS")?;
    let nc = count(cl, "CELLS", 1)?;
    let size = count(cl, "CELLS", 2)?;
    let mut seen = 0;
    for _ in 0..nc {
        let ids: Vec<usize> = next("cell")?
            .split_whitespace()
            .map(|v| v.parse().map_err(|_| err("bad index")))
            .collect::<Result<_, _>>()?;
        if ids.is_empty() || ids[0] + 1 != ids.len() {
            return Err(err("cell size prefix disagrees with entries"));
        }
        if ids[1..].iter().any(|&k| k >= np) {
            return Err(err("connectivity index out of range"));
        }
        seen += ids.len();
    }
    if seen != size {
        return Err(err("CELLS size field disagrees with entries"));
    }
    if count(next("CELL_TYPES")?, "CELL_TYPES", 1)? != nc {
        return Err(err("CELL_TYPES count differs from CELLS"));
    }
    for _ in 0..nc {
        next("cell type")?;
    }
    if count(next("CELL_DATA")?, "CELL_DATA", 1)? != nc {
        return Err(err("CELL_DATA count differs from CELLS"));
    }
    next("SCALARS")?;
    next("LOOKUP_TABLE")?;
    for _ in 0..nc {
        next("value")?.trim().parse::<f64>().map_err(|_| err("bad value"))?;
    }
    Ok(())
}

/// Writes [`vtk_text`] after checking it.
pub fn write_vtk(path: &Path, mesh: &Mesh, u: &PiecewiseConstantField) -> Result<(), HarnessError> {
    let text = vtk_text(mesh, u);
    check_vtk(&text)?;
    std::fs::write(path, text).map_err(io_err(path))
}
