//! Supported control-volume shapes and their fixed quadrature data.

use serde::{Deserialize, Serialize};
use std::fmt;

/// An exact rational number with small integer parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub num: i64,
    pub den: i64,
}

impl Fraction {
    pub const fn new(num: i64, den: i64) -> Self {
        Self { num, den }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Shape of every cell in a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Interval,
    Rectangle,
    Triangle,
    Cuboid,
    Tetrahedron,
}

/// Per-kind constants: face count `J`, points per face `Q`, the interior rule
/// weights `(alpha, beta)` and the CFL number `nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KindParams {
    pub faces: usize,
    pub points_per_face: usize,
    pub alpha: Fraction,
    pub beta: Fraction,
    pub nu: Fraction,
}

impl CellKind {
    pub const ALL: [CellKind; 5] = [
        CellKind::Interval,
        CellKind::Rectangle,
        CellKind::Triangle,
        CellKind::Cuboid,
        CellKind::Tetrahedron,
    ];

    pub fn dim(self) -> usize {
        match self {
            CellKind::Interval => 1,
            CellKind::Rectangle | CellKind::Triangle => 2,
            CellKind::Cuboid | CellKind::Tetrahedron => 3,
        }
    }

    pub fn vertex_count(self) -> usize {
        match self {
            CellKind::Interval => 2,
            CellKind::Triangle => 3,
            CellKind::Rectangle | CellKind::Tetrahedron => 4,
            CellKind::Cuboid => 8,
        }
    }

    pub fn is_simplex(self) -> bool {
        matches!(
            self,
            CellKind::Interval | CellKind::Triangle | CellKind::Tetrahedron
        )
    }

    pub fn params(self) -> KindParams {
        let (faces, points_per_face, alpha, beta, nu) = match self {
            CellKind::Interval => (2, 1, (1, 6), (2, 3), (1, 6)),
            CellKind::Rectangle => (4, 2, (1, 16), (1, 2), (1, 16)),
            CellKind::Triangle => (3, 2, (1, 12), (1, 2), (1, 12)),
            CellKind::Cuboid => (6, 4, (1, 40), (2, 5), (1, 30)),
            CellKind::Tetrahedron => (4, 3, (1, 20), (2, 5), (1, 20)),
        };
        KindParams {
            faces,
            points_per_face,
            alpha: Fraction::new(alpha.0, alpha.1),
            beta: Fraction::new(beta.0, beta.1),
            nu: Fraction::new(nu.0, nu.1),
        }
    }

    /// Weights of the face quadrature rule, normalized to sum to one.
    pub fn face_weights(self) -> &'static [f64] {
        match self {
            CellKind::Interval => &[1.0],
            CellKind::Rectangle | CellKind::Triangle => &[0.5, 0.5],
            CellKind::Cuboid => &[0.25, 0.25, 0.25, 0.25],
            CellKind::Tetrahedron => &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        }
    }

    /// Number of collocation points `J*Q + 1`.
    pub fn cluster_size(self) -> usize {
        let p = self.params();
        p.faces * p.points_per_face + 1
    }

    /// Monotonicity constant `(1 / 2 alpha) * min_q w_q` of the CFL condition
    /// `Gamma * a * dt * L0 <= |T0|`.
    pub fn gamma(self) -> f64 {
        let w_min = self
            .face_weights()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        w_min / (2.0 * self.params().alpha.value())
    }

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Interval => "interval",
            CellKind::Rectangle => "rectangle",
            CellKind::Triangle => "triangle",
            CellKind::Cuboid => "cuboid",
            CellKind::Tetrahedron => "tetrahedron",
        }
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Interior rule weights `(alpha, beta)`: the cell average of any quadratic
/// equals `alpha * sum(face points) + beta * value(centroid)`.
pub fn interior_quadrature_weights(kind: CellKind) -> (f64, f64) {
    let p = kind.params();
    (p.alpha.value(), p.beta.value())
}
