//! Assembly of the discrete systems: the two-field formulation that solves
//! for the scalar solution u and its scaled gradient sigma at once, and the
//! standard Galerkin stiffness problem used as its reference.
//!
//! The two-field bilinear form, after expanding a((u,s),(v,t)) =
//! (s,t) + (s - a*grad u, t - a*grad v), assembles into the block system
//!
//!   [ a^2 A   -a B^T ] [u]   [ -(g/2) F ]
//!   [ -a B     2 M   ] [s] = [    0     ]
//!
//! with A the scalar stiffness matrix, B the mixed gradient/mass coupling
//! and M the (per-component) mass matrix of the sigma space. Dirichlet
//! values of u are eliminated symmetrically, which keeps the reduced matrix
//! symmetric positive definite; sigma carries no boundary conditions.

mod problems;

pub use problems::{builtin_problems, find_problem, ManufacturedProblem};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::TriangleMesh;
use crate::quadrature::{get_rule, QuadRule};
use crate::space::{build_space, tabulate, BasisTable, Continuity, FeFunction, FunctionSpace};

/// Discretisation used for each component of sigma.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaSpaceKind {
    /// Same continuous Lagrange space as u; the variant whose gradient
    /// approximation superconverges on uniform meshes.
    EqualOrderContinuous,
    /// Elementwise discontinuous P_k, which contains grad(V_h) and therefore
    /// reproduces the Galerkin solution exactly.
    Discontinuous,
}

impl SigmaSpaceKind {
    fn continuity(self) -> Continuity {
        match self {
            SigmaSpaceKind::EqualOrderContinuous => Continuity::Continuous,
            SigmaSpaceKind::Discontinuous => Continuity::Discontinuous,
        }
    }
}

/// A two-field solve: weights (alpha, gamma), the u space, the sigma space
/// variant, and the manufactured data.
#[derive(Debug)]
pub struct TwoFieldProblem {
    pub alpha: f64,
    pub gamma: f64,
    pub u_space: Arc<FunctionSpace>,
    pub sigma_space_kind: SigmaSpaceKind,
    pub manufactured: ManufacturedProblem,
}

impl TwoFieldProblem {
    pub fn new(
        alpha: f64,
        gamma: f64,
        u_space: Arc<FunctionSpace>,
        sigma_space_kind: SigmaSpaceKind,
        manufactured: ManufacturedProblem,
    ) -> Result<Self> {
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        if u_space.continuity != Continuity::Continuous {
            return Err(Error::InvalidArgument(
                "u must live in a continuous space to carry Dirichlet data".into(),
            ));
        }
        Ok(TwoFieldProblem { alpha, gamma, u_space, sigma_space_kind, manufactured })
    }
}

/// A reduced SPD system together with the bookkeeping needed to map its
/// solution vector back to finite element functions.
#[derive(Debug)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Global u DOFs kept in the system, ascending; row r of the u block
    /// corresponds to free_u_dofs[r].
    pub free_u_dofs: Vec<usize>,
    /// Eliminated Dirichlet DOFs of u.
    pub boundary_dofs: Vec<usize>,
    /// Full-length u coefficient vector holding the boundary values and
    /// zeros elsewhere.
    pub lift: Vec<f64>,
    pub u_space: Arc<FunctionSpace>,
    /// Scalar space shared by both sigma components; None for Galerkin.
    pub sigma_space: Option<Arc<FunctionSpace>>,
}

impl AssembledSystem {
    pub fn dim(&self) -> usize {
        self.matrix.n
    }

    pub fn n_free_u(&self) -> usize {
        self.free_u_dofs.len()
    }

    /// Reassemble finite element functions from a solution vector: u with
    /// its boundary values restored, and the sigma components if present.
    pub fn split_solution(
        &self,
        x: &[f64],
    ) -> Result<(FeFunction, Option<(FeFunction, FeFunction)>)> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "solution vector has length {} but system dimension is {}",
                x.len(),
                self.dim()
            )));
        }
        let mut u_coeffs = self.lift.clone();
        for (r, &dof) in self.free_u_dofs.iter().enumerate() {
            u_coeffs[dof] = x[r];
        }
        let u = FeFunction::new(self.u_space.clone(), u_coeffs)?;

        let sigma = match &self.sigma_space {
            None => None,
            Some(space) => {
                let nf = self.n_free_u();
                let nq = space.n_dofs;
                let s1 = FeFunction::new(space.clone(), x[nf..nf + nq].to_vec())?;
                let s2 = FeFunction::new(space.clone(), x[nf + nq..nf + 2 * nq].to_vec())?;
                Some((s1, s2))
            }
        };
        Ok((u, sigma))
    }
}

/// Quadrature rule and tabulated basis data reused across the element loop.
struct ElementContext {
    rule: QuadRule,
    table: BasisTable,
    load_rule: QuadRule,
    load_table: BasisTable,
}

impl ElementContext {
    fn new(k: u32) -> Result<Self> {
        let rule = get_rule(2 * k)?;
        let table = tabulate(k, &rule);
        let load_rule = get_rule((2 * k + 2).max(6))?;
        let load_table = tabulate(k, &load_rule);
        Ok(ElementContext { rule, table, load_rule, load_table })
    }
}

/// Dirichlet bookkeeping for the u space: reduced index per DOF (None for
/// eliminated ones) and interpolated boundary values.
struct Elimination {
    free_u_dofs: Vec<usize>,
    boundary_dofs: Vec<usize>,
    reduced: Vec<Option<usize>>,
    lift: Vec<f64>,
}

fn eliminate_boundary(
    u_space: &FunctionSpace,
    boundary_value: impl Fn(crate::mesh::Point) -> f64,
) -> Result<Elimination> {
    let n = u_space.n_dofs;
    let mut reduced = vec![None; n];
    let mut free_u_dofs = Vec::new();
    let mut lift = vec![0.0; n];
    for dof in 0..n {
        if u_space.boundary_dofs.contains(&dof) {
            lift[dof] = boundary_value(u_space.dof_coords[dof]);
        } else {
            reduced[dof] = Some(free_u_dofs.len());
            free_u_dofs.push(dof);
        }
    }
    if free_u_dofs.is_empty() {
        return Err(Error::DegenerateProblem);
    }
    Ok(Elimination {
        free_u_dofs,
        boundary_dofs: u_space.boundary_dofs.iter().copied().collect(),
        reduced,
        lift,
    })
}

/// Full stiffness matrix of a scalar space, no boundary treatment. Used by
/// tests as an oracle and by the Galerkin path after elimination.
pub fn assemble_stiffness_matrix(u_space: &FunctionSpace) -> Result<CsrMatrix> {
    let mesh = &u_space.mesh;
    let k = u_space.degree;
    let ctx = ElementContext::new(k)?;
    let nl = u_space.local_dim();
    let nq = ctx.rule.n_points();
    let mut triplets = Vec::with_capacity(mesh.triangle_count() * nl * nl);
    let mut grads = vec![[0.0f64; 2]; nq * nl];

    for t in 0..mesh.triangle_count() {
        let map = mesh.affine_map(t)?;
        for q in 0..nq {
            for i in 0..nl {
                grads[q * nl + i] = map.grad_to_physical(ctx.table.ref_grads[q][i]);
            }
        }
        let dofs = u_space.cell_dofs(t);
        for i in 0..nl {
            for j in 0..nl {
                let mut acc = 0.0;
                for q in 0..nq {
                    let gi = grads[q * nl + i];
                    let gj = grads[q * nl + j];
                    acc += ctx.rule.weights[q] * (gi[0] * gj[0] + gi[1] * gj[1]);
                }
                triplets.push((dofs[i], dofs[j], acc * map.det));
            }
        }
    }
    CsrMatrix::from_triplets(u_space.n_dofs, triplets)
}

/// Stiffness system A u = F with Dirichlet data interpolated from the
/// manufactured solution and eliminated symmetrically.
pub fn assemble_galerkin(
    manufactured: &ManufacturedProblem,
    mesh: &Arc<TriangleMesh>,
    u_space: &Arc<FunctionSpace>,
) -> Result<AssembledSystem> {
    if !Arc::ptr_eq(&u_space.mesh, mesh) {
        return Err(Error::DimensionMismatch("space was built over a different mesh".into()));
    }
    let k = u_space.degree;
    let ctx = ElementContext::new(k)?;
    let elim = eliminate_boundary(u_space, manufactured.exact_u)?;
    let n_free = elim.free_u_dofs.len();
    let nl = u_space.local_dim();
    let nq = ctx.rule.n_points();
    let nql = ctx.load_rule.n_points();

    let mut triplets = Vec::with_capacity(mesh.triangle_count() * nl * nl);
    let mut rhs = vec![0.0; n_free];
    let mut grads = vec![[0.0f64; 2]; nq * nl];

    for t in 0..mesh.triangle_count() {
        let map = mesh.affine_map(t)?;
        for q in 0..nq {
            for i in 0..nl {
                grads[q * nl + i] = map.grad_to_physical(ctx.table.ref_grads[q][i]);
            }
        }
        let dofs = u_space.cell_dofs(t);
        for i in 0..nl {
            let Some(row) = elim.reduced[dofs[i]] else { continue };
            for j in 0..nl {
                let mut acc = 0.0;
                for q in 0..nq {
                    let gi = grads[q * nl + i];
                    let gj = grads[q * nl + j];
                    acc += ctx.rule.weights[q] * (gi[0] * gj[0] + gi[1] * gj[1]);
                }
                let val = acc * map.det;
                match elim.reduced[dofs[j]] {
                    Some(col) => triplets.push((row, col, val)),
                    None => rhs[row] -= val * elim.lift[dofs[j]],
                }
            }
            let mut load = 0.0;
            for q in 0..nql {
                let (xr, yr) = ctx.load_rule.points[q];
                let p = map.to_physical(xr, yr);
                load += ctx.load_rule.weights[q]
                    * (manufactured.source)(p)
                    * ctx.load_table.values[q][i];
            }
            rhs[row] += load * map.det;
        }
    }

    Ok(AssembledSystem {
        matrix: CsrMatrix::from_triplets(n_free, triplets)?,
        rhs,
        free_u_dofs: elim.free_u_dofs,
        boundary_dofs: elim.boundary_dofs,
        lift: elim.lift,
        u_space: u_space.clone(),
        sigma_space: None,
    })
}

/// Assemble the reduced two-field block system. Unknown ordering: free u
/// DOFs first, then all sigma-1 DOFs, then all sigma-2 DOFs.
pub fn assemble_two_field(
    problem: &TwoFieldProblem,
    mesh: &Arc<TriangleMesh>,
) -> Result<AssembledSystem> {
    let u_space = &problem.u_space;
    if !Arc::ptr_eq(&u_space.mesh, mesh) {
        return Err(Error::DimensionMismatch("space was built over a different mesh".into()));
    }
    let alpha = problem.alpha;
    let gamma = problem.gamma;
    let k = u_space.degree;
    let sigma_space = Arc::new(build_space(
        mesh.clone(),
        k,
        problem.sigma_space_kind.continuity(),
    )?);

    let ctx = ElementContext::new(k)?;
    let elim = eliminate_boundary(u_space, problem.manufactured.exact_u)?;
    let n_free = elim.free_u_dofs.len();
    let n_q = sigma_space.n_dofs;
    let dim = n_free + 2 * n_q;

    // Both u and sigma use degree-k shapes, so one basis table serves all
    // blocks; only the DOF maps differ.
    let nl = u_space.local_dim();
    let nq = ctx.rule.n_points();
    let nql = ctx.load_rule.n_points();

    let mut triplets = Vec::with_capacity(mesh.triangle_count() * 9 * nl * nl);
    let mut rhs = vec![0.0; dim];
    let mut grads = vec![[0.0f64; 2]; nq * nl];
    let mut ae = vec![0.0f64; nl * nl];
    let mut me = vec![0.0f64; nl * nl];
    let mut be = vec![[0.0f64; 2]; nl * nl];

    let sigma_offset = |comp: usize, dof: usize| n_free + comp * n_q + dof;

    for t in 0..mesh.triangle_count() {
        let map = mesh.affine_map(t)?;
        for q in 0..nq {
            for i in 0..nl {
                grads[q * nl + i] = map.grad_to_physical(ctx.table.ref_grads[q][i]);
            }
        }
        ae.fill(0.0);
        me.fill(0.0);
        be.fill([0.0; 2]);
        for q in 0..nq {
            let w = ctx.rule.weights[q];
            for i in 0..nl {
                let vi = ctx.table.values[q][i];
                let gi = grads[q * nl + i];
                for j in 0..nl {
                    let vj = ctx.table.values[q][j];
                    let gj = grads[q * nl + j];
                    ae[i * nl + j] += w * (gi[0] * gj[0] + gi[1] * gj[1]);
                    me[i * nl + j] += w * vi * vj;
                    // (sigma test i, u trial j) coupling: psi_i d_c phi_j.
                    be[i * nl + j][0] += w * vi * gj[0];
                    be[i * nl + j][1] += w * vi * gj[1];
                }
            }
        }

        let u_dofs = u_space.cell_dofs(t);
        let s_dofs = sigma_space.cell_dofs(t);
        let add = |row: Option<usize>, col_u: Option<(usize, f64)>, col: Option<usize>, val: f64,
                       rhs: &mut Vec<f64>,
                       triplets: &mut Vec<(usize, usize, f64)>| {
            if let Some(r) = row {
                match (col, col_u) {
                    (Some(c), _) => triplets.push((r, c, val)),
                    (None, Some((_, g))) => rhs[r] -= val * g,
                    (None, None) => unreachable!(),
                }
            }
        };

        for i in 0..nl {
            let row_u = elim.reduced[u_dofs[i]];
            for j in 0..nl {
                let uj = u_dofs[j];
                let col_u = elim.reduced[uj];
                // u-u block.
                add(
                    row_u,
                    Some((uj, elim.lift[uj])),
                    col_u,
                    alpha * alpha * ae[i * nl + j] * map.det,
                    &mut rhs,
                    &mut triplets,
                );
                // sigma-u blocks.
                for c in 0..2 {
                    add(
                        Some(sigma_offset(c, s_dofs[i])),
                        Some((uj, elim.lift[uj])),
                        col_u,
                        -alpha * be[i * nl + j][c] * map.det,
                        &mut rhs,
                        &mut triplets,
                    );
                }
            }
            // u-sigma blocks: value at (u_i, sigma_c j) = -alpha * be[j][i][c].
            for j in 0..nl {
                for c in 0..2 {
                    add(
                        row_u,
                        None,
                        Some(sigma_offset(c, s_dofs[j])),
                        -alpha * be[j * nl + i][c] * map.det,
                        &mut rhs,
                        &mut triplets,
                    );
                }
            }
            // sigma-sigma mass blocks.
            for j in 0..nl {
                for c in 0..2 {
                    add(
                        Some(sigma_offset(c, s_dofs[i])),
                        None,
                        Some(sigma_offset(c, s_dofs[j])),
                        2.0 * me[i * nl + j] * map.det,
                        &mut rhs,
                        &mut triplets,
                    );
                }
            }
            // Load: -(gamma/2) * l(v) on u test rows.
            if let Some(r) = row_u {
                let mut load = 0.0;
                for q in 0..nql {
                    let (xr, yr) = ctx.load_rule.points[q];
                    let p = map.to_physical(xr, yr);
                    load += ctx.load_rule.weights[q]
                        * (problem.manufactured.source)(p)
                        * ctx.load_table.values[q][i];
                }
                rhs[r] += -0.5 * gamma * load * map.det;
            }
        }
    }

    Ok(AssembledSystem {
        matrix: CsrMatrix::from_triplets(dim, triplets)?,
        rhs,
        free_u_dofs: elim.free_u_dofs,
        boundary_dofs: elim.boundary_dofs,
        lift: elim.lift,
        u_space: u_space.clone(),
        sigma_space: Some(sigma_space),
    })
}

/// Dirichlet energy K(v) = 1/2 ||grad v||^2 - l(v), evaluated with the same
/// quadrature the assembly uses for its load terms, so the discrete solution
/// minimises this value exactly over feasible perturbations.
pub fn evaluate_energy_k(fe_u: &FeFunction, manufactured: &ManufacturedProblem) -> f64 {
    let space = &fe_u.space;
    let mesh = &space.mesh;
    let rule = get_rule((2 * space.degree + 2).max(6)).expect("supported degree");
    let mut total = 0.0;
    for t in 0..mesh.triangle_count() {
        let map = mesh.affine_map(t).expect("valid triangle");
        let mut acc = 0.0;
        for (&(xr, yr), &w) in rule.points.iter().zip(&rule.weights) {
            let (v, g) = fe_u.eval(t, xr, yr);
            let p = map.to_physical(xr, yr);
            acc += w * (0.5 * (g[0] * g[0] + g[1] * g[1]) - (manufactured.source)(p) * v);
        }
        total += acc * map.det;
    }
    total
}

/// Two-field functional J(v, t) = ||t||^2 + ||t - alpha grad v||^2 +
/// gamma l(v), with assembly-consistent quadrature.
pub fn evaluate_functional_j(
    fe_u: &FeFunction,
    fe_sigma1: &FeFunction,
    fe_sigma2: &FeFunction,
    problem: &TwoFieldProblem,
) -> f64 {
    let space = &fe_u.space;
    let mesh = &space.mesh;
    let alpha = problem.alpha;
    let gamma = problem.gamma;
    let rule = get_rule((2 * space.degree + 2).max(6)).expect("supported degree");
    let mut total = 0.0;
    for t in 0..mesh.triangle_count() {
        let map = mesh.affine_map(t).expect("valid triangle");
        let mut acc = 0.0;
        for (&(xr, yr), &w) in rule.points.iter().zip(&rule.weights) {
            let (v, g) = fe_u.eval(t, xr, yr);
            let s1 = fe_sigma1.eval(t, xr, yr).0;
            let s2 = fe_sigma2.eval(t, xr, yr).0;
            let d1 = s1 - alpha * g[0];
            let d2 = s2 - alpha * g[1];
            let p = map.to_physical(xr, yr);
            acc += w
                * (s1 * s1 + s2 * s2 + d1 * d1 + d2 * d2
                    + gamma * (problem.manufactured.source)(p) * v);
        }
        total += acc * map.det;
    }
    total
}
