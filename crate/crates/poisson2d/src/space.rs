//! Scalar Lagrange finite element spaces of degree 1 and 2 on triangle
//! meshes, in continuous and discontinuous variants.
//!
//! Vector-valued fields are handled by the caller as stacked scalar spaces
//! with block offsets, so this module only knows about scalar DOFs.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Point, TriangleMesh};
use crate::quadrature::QuadRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuity {
    Continuous,
    Discontinuous,
}

/// Number of local basis functions of P_k on a triangle.
pub fn local_dim(k: u32) -> usize {
    match k {
        1 => 3,
        2 => 6,
        _ => unreachable!("degree validated at space construction"),
    }
}

/// Reference coordinates of the Lagrange nodes, vertices first, then edge
/// midpoints ordered (0-1), (1-2), (2-0).
pub fn local_nodes(k: u32) -> Vec<(f64, f64)> {
    match k {
        1 => vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)],
        2 => vec![
            (0.0, 0.0),
            (1.0, 0.0),
            (0.0, 1.0),
            (0.5, 0.0),
            (0.5, 0.5),
            (0.0, 0.5),
        ],
        _ => unreachable!("degree validated at space construction"),
    }
}

/// Values of the P_k Lagrange basis at a reference point.
pub fn shape_values(k: u32, xr: f64, yr: f64) -> Vec<f64> {
    let l0 = 1.0 - xr - yr;
    let l1 = xr;
    let l2 = yr;
    match k {
        1 => vec![l0, l1, l2],
        2 => vec![
            l0 * (2.0 * l0 - 1.0),
            l1 * (2.0 * l1 - 1.0),
            l2 * (2.0 * l2 - 1.0),
            4.0 * l0 * l1,
            4.0 * l1 * l2,
            4.0 * l2 * l0,
        ],
        _ => unreachable!("degree validated at space construction"),
    }
}

/// Reference gradients of the P_k Lagrange basis.
pub fn shape_gradients(k: u32, xr: f64, yr: f64) -> Vec<[f64; 2]> {
    let l0 = 1.0 - xr - yr;
    let l1 = xr;
    let l2 = yr;
    match k {
        1 => vec![[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]],
        2 => vec![
            [-(4.0 * l0 - 1.0), -(4.0 * l0 - 1.0)],
            [4.0 * l1 - 1.0, 0.0],
            [0.0, 4.0 * l2 - 1.0],
            [4.0 * (l0 - l1), -4.0 * l1],
            [4.0 * l2, 4.0 * l1],
            [-4.0 * l2, 4.0 * (l0 - l2)],
        ],
        _ => unreachable!("degree validated at space construction"),
    }
}

/// Basis values and reference gradients tabulated at the points of a
/// quadrature rule, indexed `[point][local_dof]`.
pub struct BasisTable {
    pub values: Vec<Vec<f64>>,
    pub ref_grads: Vec<Vec<[f64; 2]>>,
}

pub fn tabulate(k: u32, rule: &QuadRule) -> BasisTable {
    let values = rule.points.iter().map(|&(x, y)| shape_values(k, x, y)).collect();
    let ref_grads = rule.points.iter().map(|&(x, y)| shape_gradients(k, x, y)).collect();
    BasisTable { values, ref_grads }
}

/// A scalar Lagrange space: DOF layout, coordinates and boundary set.
#[derive(Debug)]
pub struct FunctionSpace {
    pub mesh: Arc<TriangleMesh>,
    pub degree: u32,
    pub continuity: Continuity,
    /// Global DOF indices, `local_dim` entries per triangle.
    dofs: Vec<usize>,
    pub n_dofs: usize,
    pub boundary_dofs: BTreeSet<usize>,
    pub dof_coords: Vec<Point>,
}

impl FunctionSpace {
    pub fn local_dim(&self) -> usize {
        local_dim(self.degree)
    }

    /// Global DOF indices of triangle `t`.
    pub fn cell_dofs(&self, t: usize) -> &[usize] {
        let nl = self.local_dim();
        &self.dofs[t * nl..(t + 1) * nl]
    }

    /// Basis values and reference gradients at a reference point; the
    /// physical gradient is `J^-T` times the reference gradient.
    pub fn eval_basis(&self, _t: usize, xr: f64, yr: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
        (shape_values(self.degree, xr, yr), shape_gradients(self.degree, xr, yr))
    }
}

/// Build a P_k Lagrange space over `mesh`.
pub fn build_space(
    mesh: Arc<TriangleMesh>,
    k: u32,
    continuity: Continuity,
) -> Result<FunctionSpace> {
    if !(1..=2).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "unsupported polynomial degree {k}; supported degrees are 1 and 2"
        )));
    }
    let nl = local_dim(k);
    let nodes = local_nodes(k);
    let mut dofs = Vec::with_capacity(mesh.triangle_count() * nl);
    let n_dofs;
    let mut dof_coords;

    match continuity {
        Continuity::Discontinuous => {
            n_dofs = mesh.triangle_count() * nl;
            dof_coords = Vec::with_capacity(n_dofs);
            for t in 0..mesh.triangle_count() {
                let map = mesh.affine_map(t)?;
                for (i, &(xr, yr)) in nodes.iter().enumerate() {
                    dofs.push(t * nl + i);
                    dof_coords.push(map.to_physical(xr, yr));
                }
            }
        }
        Continuity::Continuous => {
            let nv = mesh.vertex_count();
            // Edge DOFs (k=2) are numbered after vertex DOFs by the rank of
            // their ordered vertex-pair key, which is independent of the
            // triangle traversal order.
            let edge_ids: BTreeMap<(usize, usize), usize> = if k == 2 {
                mesh.edge_use_counts()
                    .keys()
                    .enumerate()
                    .map(|(rank, &key)| (key, nv + rank))
                    .collect()
            } else {
                BTreeMap::new()
            };
            n_dofs = nv + edge_ids.len();
            dof_coords = vec![Point::new(0.0, 0.0); n_dofs];
            for (i, &p) in mesh.vertices.iter().enumerate() {
                dof_coords[i] = p;
            }
            for (&(a, b), &id) in &edge_ids {
                let p = mesh.vertices[a];
                let q = mesh.vertices[b];
                dof_coords[id] = Point::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y));
            }
            for tri in &mesh.triangles {
                dofs.extend_from_slice(&tri[..]);
                if k == 2 {
                    for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                        let key = if a < b { (a, b) } else { (b, a) };
                        dofs.push(edge_ids[&key]);
                    }
                }
            }
        }
    }

    let boundary_dofs = match continuity {
        Continuity::Discontinuous => BTreeSet::new(),
        Continuity::Continuous => dof_coords
            .iter()
            .enumerate()
            .filter(|(_, &p)| mesh.bbox.on_boundary(p))
            .map(|(i, _)| i)
            .collect(),
    };

    Ok(FunctionSpace {
        mesh,
        degree: k,
        continuity,
        dofs,
        n_dofs,
        boundary_dofs,
        dof_coords,
    })
}

/// A finite element function: coefficients over a space.
#[derive(Debug, Clone)]
pub struct FeFunction {
    pub space: Arc<FunctionSpace>,
    pub coefficients: Vec<f64>,
}

impl FeFunction {
    pub fn new(space: Arc<FunctionSpace>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != space.n_dofs {
            return Err(Error::DimensionMismatch(format!(
                "coefficient vector has length {} but space has {} DOFs",
                coefficients.len(),
                space.n_dofs
            )));
        }
        Ok(FeFunction { space, coefficients })
    }

    pub fn zero(space: Arc<FunctionSpace>) -> Self {
        let n = space.n_dofs;
        FeFunction { space, coefficients: vec![0.0; n] }
    }

    /// Value and physical gradient at a reference point of triangle `t`.
    pub fn eval(&self, t: usize, xr: f64, yr: f64) -> (f64, [f64; 2]) {
        let space = &self.space;
        let values = shape_values(space.degree, xr, yr);
        let grads = shape_gradients(space.degree, xr, yr);
        let map = space.mesh.affine_map(t).expect("triangle index in range");
        let mut value = 0.0;
        let mut ref_grad = [0.0; 2];
        for (i, &dof) in space.cell_dofs(t).iter().enumerate() {
            let c = self.coefficients[dof];
            value += c * values[i];
            ref_grad[0] += c * grads[i][0];
            ref_grad[1] += c * grads[i][1];
        }
        (value, map.grad_to_physical(ref_grad))
    }
}

/// Nodal interpolant of a callable: coefficients are its values at the DOF
/// coordinates.
pub fn interpolate<F: Fn(Point) -> f64>(space: &Arc<FunctionSpace>, f: F) -> FeFunction {
    let coefficients = space.dof_coords.iter().map(|&p| f(p)).collect();
    FeFunction { space: space.clone(), coefficients }
}
