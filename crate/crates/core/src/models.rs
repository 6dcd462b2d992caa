//! Conservation laws used by the experiments: fluxes, initial and boundary
//! data, exact solutions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{Domain, Point};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("unknown model '{0}' (expected one of {names})", names = MODEL_NAMES.join(", "))]
    Unknown(String),
    #[error("fixed-point iteration did not converge at x = {x:?}, t = {t} (past shock formation?)")]
    NoConvergence { x: [f64; 3], t: f64 },
    #[error("empty value range [{0}, {1}]")]
    EmptyRange(f64, f64),
    #[error("burgers model needs dimension 2 or 3, got {0}")]
    Dimension(usize),
}

pub const MODEL_NAMES: [&str; 7] = [
    "linear1d",
    "linear2d",
    "linear3d",
    "rotation",
    "burgers2d",
    "burgers3d",
    "riemann2d",
];

/// Flux function `F(x, u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flux {
    /// `F = velocity u`.
    Linear { velocity: Point },
    /// `F = ((cy - y) u, (x - cx) u)`, counter-clockwise rotation about `center`.
    Rotation { center: Point },
    /// `F = (u^2/2) (1, .., 1)` in `dim` dimensions.
    Burgers { dim: usize },
}

impl Flux {
    fn velocity(&self, x: &Point, u: f64) -> Point {
        match *self {
            Flux::Linear { velocity } => velocity,
            Flux::Rotation { center } => Point::new(center.y - x.y, x.x - center.x, 0.0),
            Flux::Burgers { dim } => {
                let mut v = Point::zeros();
                for a in 0..dim {
                    v[a] = u;
                }
                v
            }
        }
    }

    pub fn flux(&self, x: &Point, u: f64) -> Point {
        match self {
            Flux::Burgers { .. } => self.velocity(x, u) * (0.5 * u),
            _ => self.velocity(x, u) * u,
        }
    }

    /// `F(x, u) . n`.
    pub fn normal_flux(&self, x: &Point, u: f64, n: &Point) -> f64 {
        self.flux(x, u).dot(n)
    }

    /// `F'(x, u) . n`.
    pub fn normal_speed(&self, x: &Point, u: f64, n: &Point) -> f64 {
        self.velocity(x, u).dot(n)
    }

    pub fn is_space_dependent(&self) -> bool {
        matches!(self, Flux::Rotation { .. })
    }
}

/// `sup |F'(u) . n|` over `lo <= u <= hi` and the given normals, for fluxes
/// that do not depend on position.
pub fn max_wave_speed(flux: &Flux, range: (f64, f64), normals: &[Point]) -> Result<f64, ModelError> {
    let (lo, hi) = range;
    if !(lo <= hi) {
        return Err(ModelError::EmptyRange(lo, hi));
    }
    let origin = Point::zeros();
    // speeds are affine in u, so the ends of the range suffice
    Ok(normals
        .iter()
        .flat_map(|n| [lo, hi].map(|u| flux.normal_speed(&origin, u, n).abs()))
        .fold(0.0, f64::max))
}

pub type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type ExactFn = Arc<dyn Fn(&Point, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// Opposite faces identified.
    Periodic,
    /// Ghosts hold zero.
    Zero,
    /// Ghosts hold averages of the exact solution.
    Dirichlet,
    /// Exact values where characteristics enter, copied interior values where
    /// they leave.
    InflowOutflow,
}

#[derive(Clone)]
pub struct ConservationLawModel {
    pub name: String,
    pub dim: usize,
    pub flux: Flux,
    pub initial: ScalarFn,
    pub exact: Option<ExactFn>,
    pub boundary: BoundaryCondition,
    pub domain: Domain,
    pub end_time: f64,
    /// `[inf u0, sup u0]`.
    pub initial_range: (f64, f64),
    /// Discontinuous data get subdivided quadrature for averages.
    pub smooth: bool,
    /// CFL number overriding the cell-kind default.
    pub cfl: Option<f64>,
}

impl fmt::Debug for ConservationLawModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConservationLawModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("flux", &self.flux)
            .field("boundary", &self.boundary)
            .field("domain", &self.domain)
            .field("end_time", &self.end_time)
            .field("initial_range", &self.initial_range)
            .finish_non_exhaustive()
    }
}

impl ConservationLawModel {
    /// Subdivision depth used for cell averages of the data.
    pub fn quadrature_depth(&self) -> u32 {
        if self.smooth {
            2
        } else {
            4
        }
    }

    pub fn exact_at(&self, x: &Point, t: f64) -> Option<f64> {
        self.exact.as_ref().map(|f| f(x, t))
    }
}

fn wrap(x: &Point, domain: &Domain, dim: usize) -> Point {
    let mut p = *x;
    for a in 0..dim {
        if domain.periodic[a] {
            let l = domain.length(a);
            p[a] = domain.lo[a] + (p[a] - domain.lo[a]).rem_euclid(l);
        }
    }
    p
}

/// `u_t + velocity . grad u = 0`; the exact solution is the periodic shift.
pub fn linear_advection_model(velocity: Point, dim: usize, domain: Domain, ic: ScalarFn) -> ConservationLawModel {
    let shifted = ic.clone();
    let exact: ExactFn = Arc::new(move |x: &Point, t: f64| shifted(&wrap(&(x - velocity * t), &domain, dim)));
    ConservationLawModel {
        name: format!("linear{dim}d"),
        dim,
        flux: Flux::Linear { velocity },
        initial: ic,
        exact: Some(exact),
        boundary: BoundaryCondition::Periodic,
        domain,
        end_time: 1.0,
        initial_range: (-1.0, 1.0),
        smooth: true,
        cfl: None,
    }
}

/// The hump, cone and slotted cylinder on `[0,1]^2`, radius 0.15.
pub fn leveque_shapes(x: f64, y: f64) -> f64 {
    let r0 = 0.15;
    let radius = |cx: f64, cy: f64| ((x - cx).powi(2) + (y - cy).powi(2)).sqrt() / r0;
    let r = radius(0.5, 0.75);
    if r <= 1.0 && ((x - 0.5).abs() >= 0.025 || y >= 0.85) {
        return 1.0;
    }
    let r = radius(0.5, 0.25);
    if r <= 1.0 {
        return 1.0 - r;
    }
    let r = radius(0.25, 0.5);
    if r <= 1.0 {
        return 0.25 * (1.0 + (PI * r).cos());
    }
    0.0
}

/// Solid-body rotation about `(0.5, 0.5)`, one revolution per `2 pi`.
pub fn rotation_model() -> ConservationLawModel {
    let center = Point::new(0.5, 0.5, 0.0);
    let exact: ExactFn = Arc::new(move |x: &Point, t: f64| {
        let (s, c) = t.sin_cos();
        let (dx, dy) = (x.x - center.x, x.y - center.y);
        // rotate back by -t
        leveque_shapes(center.x + c * dx + s * dy, center.y - s * dx + c * dy)
    });
    ConservationLawModel {
        name: "rotation".into(),
        dim: 2,
        flux: Flux::Rotation { center },
        initial: Arc::new(|x: &Point| leveque_shapes(x.x, x.y)),
        exact: Some(exact),
        boundary: BoundaryCondition::Zero,
        domain: Domain::unit(2, false),
        end_time: 2.0 * PI,
        initial_range: (0.0, 1.0),
        smooth: false,
        cfl: None,
    }
}

fn burgers_phase(x: &Point, dim: usize) -> f64 {
    let sum: f64 = (0..dim).map(|a| x[a]).sum();
    PI * sum / dim as f64
}

/// `0.3 + 0.7 sin(pi sum(x)/dim)`.
pub fn burgers_initial(x: &Point, dim: usize) -> f64 {
    0.3 + 0.7 * burgers_phase(x, dim).sin()
}

/// Smooth Burgers solution `u = u0(x - u t (1,..,1))` by fixed-point
/// iteration; errors when the iteration does not settle (after the shock).
pub fn burgers_exact_smooth(x: &Point, t: f64, dim: usize) -> Result<f64, ModelError> {
    let phase = burgers_phase(x, dim);
    let mut u = 0.3 + 0.7 * phase.sin();
    for _ in 0..100 {
        let next = 0.3 + 0.7 * (phase - PI * u * t).sin();
        if (next - u).abs() <= 1e-14 {
            return Ok(next);
        }
        u = next;
    }
    Err(ModelError::NoConvergence {
        x: [x.x, x.y, x.z],
        t,
    })
}

pub fn burgers_model(dim: usize) -> Result<ConservationLawModel, ModelError> {
    let half = match dim {
        2 => 2.0,
        3 => 3.0,
        d => return Err(ModelError::Dimension(d)),
    };
    let lo = vec![-half; dim];
    let hi = vec![half; dim];
    let exact: ExactFn = Arc::new(move |x: &Point, t: f64| burgers_exact_smooth(x, t, dim).unwrap_or(f64::NAN));
    Ok(ConservationLawModel {
        name: format!("burgers{dim}d"),
        dim,
        flux: Flux::Burgers { dim },
        initial: Arc::new(move |x: &Point| burgers_initial(x, dim)),
        exact: Some(exact),
        boundary: BoundaryCondition::Periodic,
        domain: Domain::new(dim, &lo, &hi, true),
        end_time: 0.5 / (PI * PI),
        initial_range: (-0.4, 1.0),
        smooth: true,
        cfl: (dim == 3).then_some(0.1),
    })
}

/// Exact solution of the 2D Burgers Riemann problem with states 2 (lower
/// left), 3 (upper right) and 1 elsewhere, discontinuities at 0.25.
pub fn riemann_ic_and_exact(x: &Point, t: f64) -> f64 {
    let lo = x.x.min(x.y);
    let hi = x.x.max(x.y);
    if t <= 0.0 {
        return if hi < 0.25 {
            2.0
        } else if lo > 0.25 {
            3.0
        } else {
            1.0
        };
    }
    let fan_start = 0.25 + 2.0 * t - (2.0 * (x.x - x.y).abs() * t).sqrt().min(t);
    if lo > 0.25 + 3.0 * t {
        3.0
    } else if fan_start <= lo {
        (lo - 0.25) / t
    } else if lo < 0.25 + t && 0.25 + 1.5 * t < hi {
        1.0
    } else {
        2.0
    }
}

pub fn riemann_model() -> ConservationLawModel {
    ConservationLawModel {
        name: "riemann2d".into(),
        dim: 2,
        flux: Flux::Burgers { dim: 2 },
        initial: Arc::new(|x: &Point| riemann_ic_and_exact(x, 0.0)),
        exact: Some(Arc::new(riemann_ic_and_exact)),
        boundary: BoundaryCondition::InflowOutflow,
        domain: Domain::unit(2, false),
        end_time: 1.0 / 12.0,
        initial_range: (1.0, 3.0),
        smooth: false,
        cfl: None,
    }
}

/// Named model. `linear3d` advects the 2D double sine wave through a cube.
pub fn model_by_name(name: &str) -> Result<ConservationLawModel, ModelError> {
    let sine2: ScalarFn = Arc::new(|x: &Point| (2.0 * PI * x.x).sin() * (2.0 * PI * x.y).sin());
    match name {
        "linear1d" => Ok(linear_advection_model(
            Point::new(1.0, 0.0, 0.0),
            1,
            Domain::unit(1, true),
            Arc::new(|x: &Point| (2.0 * PI * x.x).sin()),
        )),
        "linear2d" => Ok(linear_advection_model(Point::new(1.0, 2.0, 0.0), 2, Domain::unit(2, true), sine2)),
        "linear3d" => {
            let mut m = linear_advection_model(Point::new(1.0, 2.0, 0.0), 3, Domain::unit(3, true), sine2);
            m.cfl = Some(0.1);
            Ok(m)
        }
        "rotation" => Ok(rotation_model()),
        "burgers2d" => burgers_model(2),
        "burgers3d" => burgers_model(3),
        "riemann2d" => Ok(riemann_model()),
        other => Err(ModelError::Unknown(other.to_string())),
    }
}
