//! Symmetric quadrature rules on the reference triangle (0,0), (1,0), (0,1).
//!
//! Low degrees use tabulated symmetric point sets; degrees above 6 use
//! Grundmann-Moeller simplex rules constructed at runtime. Weights always
//! sum to the reference area 1/2, so integrating over a physical triangle
//! only needs the Jacobian determinant as an extra factor.

use crate::error::{Error, Result};
use crate::mesh::{AffineMap, Point};

/// Quadrature rule on the reference triangle.
#[derive(Debug, Clone)]
pub struct QuadRule {
    /// Highest total polynomial degree integrated to relative error <= 1e-13.
    pub exactness_degree: u32,
    /// Reference coordinates of the quadrature points.
    pub points: Vec<(f64, f64)>,
    /// Weights, summing to 1/2.
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn n_points(&self) -> usize {
        self.points.len()
    }
}

struct RuleBuilder {
    points: Vec<(f64, f64)>,
    weights: Vec<f64>,
}

impl RuleBuilder {
    fn new() -> Self {
        RuleBuilder { points: Vec::new(), weights: Vec::new() }
    }

    fn centroid(&mut self, w: f64) {
        self.points.push((1.0 / 3.0, 1.0 / 3.0));
        self.weights.push(w);
    }

    /// Three points with barycentric coordinates permuting (a, a, 1-2a),
    /// each with weight `w`.
    fn orbit3(&mut self, a: f64, w: f64) {
        let b = 1.0 - 2.0 * a;
        for p in [(a, a), (b, a), (a, b)] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    /// Six points permuting barycentric (a, b, 1-a-b), each with weight `w`.
    fn orbit6(&mut self, a: f64, b: f64, w: f64) {
        let c = 1.0 - a - b;
        for p in [(b, c), (c, b), (a, c), (c, a), (a, b), (b, a)] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    /// Finish the rule: weights entered so far sum to 1 and are rescaled to
    /// the reference area 1/2.
    fn build(mut self, exactness_degree: u32) -> QuadRule {
        for w in &mut self.weights {
            *w *= 0.5;
        }
        QuadRule { exactness_degree, points: self.points, weights: self.weights }
    }
}

fn rule_degree_1() -> QuadRule {
    let mut b = RuleBuilder::new();
    b.centroid(1.0);
    b.build(1)
}

fn rule_degree_2() -> QuadRule {
    let mut b = RuleBuilder::new();
    b.orbit3(1.0 / 6.0, 1.0 / 3.0);
    b.build(2)
}

fn rule_degree_4() -> QuadRule {
    let mut b = RuleBuilder::new();
    b.orbit3(0.44594849091596488631832925388305, 0.22338158967801146569500700843312);
    b.orbit3(0.09157621350977074345957146340220, 0.10995174365532186763832632490021);
    b.build(4)
}

fn rule_degree_5() -> QuadRule {
    let s15 = 15f64.sqrt();
    let mut b = RuleBuilder::new();
    b.centroid(9.0 / 40.0);
    b.orbit3((6.0 + s15) / 21.0, (155.0 + s15) / 1200.0);
    b.orbit3((6.0 - s15) / 21.0, (155.0 - s15) / 1200.0);
    b.build(5)
}

fn rule_degree_6() -> QuadRule {
    let mut b = RuleBuilder::new();
    b.orbit3(0.24928674517091042129163855310702, 0.11678627572637936602528961138558);
    b.orbit3(0.06308901449150222834033160287082, 0.05084490637020681692093680910687);
    b.orbit6(
        0.31035245103378440541660773395655,
        0.05314504984481694735324967163140,
        0.08285107561837357519355345642044,
    );
    b.build(6)
}

/// Grundmann-Moeller rule of index `m` on the triangle, exact to degree 2m+1.
///
/// Point barycentric coordinates are (2k_j + 1)/(s + 2 - 2i) for nonnegative
/// integer triples k with |k| = m - i, and the weight shared by stratum i is
/// (-1)^i 2^(-2m) (s + 2 - 2i)^s / (i! (s + 2 - i)!) with s = 2m + 1. All
/// intermediate integers stay well below 2^53, so the coefficients are
/// computed exactly before the final divisions.
fn grundmann_moeller(m: u32) -> QuadRule {
    let m = m as usize;
    let s = 2 * m + 1;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for i in 0..=m {
        let q = (s + 2 - 2 * i) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let coeff =
            sign * 0.25f64.powi(m as i32) * q.powi(s as i32) / (factorial(i) * factorial(s + 2 - i));
        let r = m - i;
        for k1 in 0..=r {
            for k2 in 0..=(r - k1) {
                points.push(((2 * k1 + 1) as f64 / q, (2 * k2 + 1) as f64 / q));
                weights.push(coeff);
            }
        }
    }
    let sum: f64 = weights.iter().sum();
    let correction = 0.5 / sum;
    for w in &mut weights {
        *w *= correction;
    }
    QuadRule { exactness_degree: s as u32, points, weights }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Smallest stored rule exact to at least the requested degree.
pub fn get_rule(degree: u32) -> Result<QuadRule> {
    match degree {
        1 => Ok(rule_degree_1()),
        2 => Ok(rule_degree_2()),
        3 | 4 => Ok(rule_degree_4()),
        5 => Ok(rule_degree_5()),
        6 => Ok(rule_degree_6()),
        7 => Ok(grundmann_moeller(3)),
        8 | 9 => Ok(grundmann_moeller(4)),
        10 => Ok(grundmann_moeller(5)),
        _ => Err(Error::UnsupportedDegree(degree)),
    }
}

/// Integrate a callable over the physical triangle described by `map`:
/// sum of w_q * det(J) * integrand(F(x_q)).
pub fn integrate_on_triangle<F: FnMut(Point) -> f64>(
    rule: &QuadRule,
    map: &AffineMap,
    mut integrand: F,
) -> f64 {
    let mut acc = 0.0;
    for (&(xr, yr), &w) in rule.points.iter().zip(&rule.weights) {
        acc += w * integrand(map.to_physical(xr, yr));
    }
    acc * map.det
}
