//! Built-in manufactured solutions: an exact solution, its gradient and the
//! matching source term, from which Dirichlet data and error norms are
//! derived.

use crate::error::{Error, Result};
use crate::mesh::{BoundingBox, Point};

/// An exact solution with its gradient and source f = -laplacian(u).
#[derive(Clone, Copy)]
pub struct ManufacturedProblem {
    pub name: &'static str,
    pub bbox: BoundingBox,
    pub exact_u: fn(Point) -> f64,
    pub exact_grad: fn(Point) -> [f64; 2],
    pub source: fn(Point) -> f64,
}

impl std::fmt::Debug for ManufacturedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedProblem")
            .field("name", &self.name)
            .field("bbox", &self.bbox)
            .finish()
    }
}

fn gaussian_u(p: Point) -> f64 {
    let px = p.x - 0.5;
    let py = p.y - 0.5;
    (p.x - p.y) * (-5.0 * px * px - 5.0 * py * py).exp()
}

fn gaussian_grad(p: Point) -> [f64; 2] {
    let px = p.x - 0.5;
    let py = p.y - 0.5;
    let w = p.x - p.y;
    let g = (-5.0 * px * px - 5.0 * py * py).exp();
    [g * (1.0 - 10.0 * px * w), g * (-1.0 - 10.0 * py * w)]
}

fn gaussian_source(p: Point) -> f64 {
    let px = p.x - 0.5;
    let py = p.y - 0.5;
    gaussian_u(p) * (40.0 - 100.0 * (px * px + py * py))
}

fn linear_u(p: Point) -> f64 {
    p.x
}

fn linear_grad(_p: Point) -> [f64; 2] {
    [1.0, 0.0]
}

fn zero_source(_p: Point) -> f64 {
    0.0
}

fn quadratic_u(p: Point) -> f64 {
    p.x * p.x + p.y * p.y
}

fn quadratic_grad(p: Point) -> [f64; 2] {
    [2.0 * p.x, 2.0 * p.y]
}

fn quadratic_source(_p: Point) -> f64 {
    -4.0
}

/// All built-in problems. `gaussian` is the benchmark case: a shifted,
/// antisymmetric Gaussian bump on [-1,1]^2 whose gradient the two-field
/// method approximates at second order. `linear_patch` and `quadratic` lie
/// in the discrete spaces for k=1 resp. k=2 and must be reproduced exactly.
pub fn builtin_problems() -> Vec<ManufacturedProblem> {
    vec![
        ManufacturedProblem {
            name: "gaussian",
            bbox: BoundingBox::biunit(),
            exact_u: gaussian_u,
            exact_grad: gaussian_grad,
            source: gaussian_source,
        },
        ManufacturedProblem {
            name: "linear_patch",
            bbox: BoundingBox::unit(),
            exact_u: linear_u,
            exact_grad: linear_grad,
            source: zero_source,
        },
        ManufacturedProblem {
            name: "quadratic",
            bbox: BoundingBox::unit(),
            exact_u: quadratic_u,
            exact_grad: quadratic_grad,
            source: quadratic_source,
        },
    ]
}

/// Look up a built-in problem by name.
pub fn find_problem(name: &str) -> Result<ManufacturedProblem> {
    let problems = builtin_problems();
    problems.iter().find(|p| p.name == name).copied().ok_or_else(|| Error::UnknownProblem {
        name: name.to_string(),
        available: problems.iter().map(|p| p.name).collect::<Vec<_>>().join(", "),
    })
}
