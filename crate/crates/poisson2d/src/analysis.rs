//! Error norms against manufactured solutions, convergence rates across
//! refinement levels, and table output in CSV or markdown.

use crate::mesh::Point;
use crate::quadrature::get_rule;
use crate::space::{tabulate, FeFunction};

/// Errors and metadata for one refinement level.
#[derive(Debug, Clone)]
pub struct LevelResult {
    pub level: u32,
    pub h: f64,
    pub n_dofs: usize,
    pub err_u_h1: f64,
    pub err_u_l2: f64,
    pub err_sigma1_l2: f64,
    pub err_sigma2_l2: f64,
    pub solver_iterations: usize,
    pub wall_time: f64,
}

/// Level results plus the log2 rate between consecutive levels for each of
/// the four error columns (None where undefined, e.g. the first level or a
/// zero error).
#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub results: Vec<LevelResult>,
    pub rates: Vec<[Option<f64>; 4]>,
}

/// Output format for convergence tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

fn rate_between(coarse: f64, fine: f64) -> Option<f64> {
    if coarse > 0.0 && fine > 0.0 && coarse.is_finite() && fine.is_finite() {
        Some((coarse / fine).log2())
    } else {
        None
    }
}

/// Attach log2 convergence rates to an ordered list of level results.
pub fn convergence_rates(results: Vec<LevelResult>) -> ConvergenceTable {
    let mut rates = vec![[None; 4]];
    for pair in results.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        rates.push([
            rate_between(a.err_u_h1, b.err_u_h1),
            rate_between(a.err_u_l2, b.err_u_l2),
            rate_between(a.err_sigma1_l2, b.err_sigma1_l2),
            rate_between(a.err_sigma2_l2, b.err_sigma2_l2),
        ]);
    }
    if results.is_empty() {
        rates.clear();
    }
    ConvergenceTable { results, rates }
}

/// L2 norm of fe - exact, integrated with a rule of degree max(2k+2, 6).
pub fn error_l2<F: Fn(Point) -> f64>(fe: &FeFunction, exact: F) -> f64 {
    let space = &fe.space;
    let mesh = &space.mesh;
    let k = space.degree;
    let rule = get_rule((2 * k + 2).max(6)).expect("supported degree");
    let table = tabulate(k, &rule);
    let nl = space.local_dim();
    let mut total = 0.0;
    for t in 0..mesh.triangle_count() {
        let map = mesh.affine_map(t).expect("valid triangle");
        let dofs = space.cell_dofs(t);
        let mut acc = 0.0;
        for q in 0..rule.n_points() {
            let mut value = 0.0;
            for i in 0..nl {
                value += fe.coefficients[dofs[i]] * table.values[q][i];
            }
            let (xr, yr) = rule.points[q];
            let d = value - exact(map.to_physical(xr, yr));
            acc += rule.weights[q] * d * d;
        }
        total += acc * map.det;
    }
    total.sqrt()
}

/// Full H1 norm of fe - exact: sqrt of the L2 part plus the gradient part.
pub fn error_h1<F, G>(fe: &FeFunction, exact: F, exact_grad: G) -> f64
where
    F: Fn(Point) -> f64,
    G: Fn(Point) -> [f64; 2],
{
    let space = &fe.space;
    let mesh = &space.mesh;
    let k = space.degree;
    let rule = get_rule((2 * k + 2).max(6)).expect("supported degree");
    let table = tabulate(k, &rule);
    let nl = space.local_dim();
    let mut total = 0.0;
    for t in 0..mesh.triangle_count() {
        let map = mesh.affine_map(t).expect("valid triangle");
        let dofs = space.cell_dofs(t);
        let mut acc = 0.0;
        for q in 0..rule.n_points() {
            let mut value = 0.0;
            let mut ref_grad = [0.0f64; 2];
            for i in 0..nl {
                let c = fe.coefficients[dofs[i]];
                value += c * table.values[q][i];
                ref_grad[0] += c * table.ref_grads[q][i][0];
                ref_grad[1] += c * table.ref_grads[q][i][1];
            }
            let grad = map.grad_to_physical(ref_grad);
            let (xr, yr) = rule.points[q];
            let p = map.to_physical(xr, yr);
            let dv = value - exact(p);
            let ge = exact_grad(p);
            let dg = [grad[0] - ge[0], grad[1] - ge[1]];
            acc += rule.weights[q] * (dv * dv + dg[0] * dg[0] + dg[1] * dg[1]);
        }
        total += acc * map.det;
    }
    total.sqrt()
}

/// L2 norm of one component of grad(fe) - exact_grad; together the two
/// components make up the H1 seminorm error.
pub fn error_grad_component<G: Fn(Point) -> [f64; 2]>(
    fe: &FeFunction,
    exact_grad: G,
    comp: usize,
) -> f64 {
    assert!(comp < 2, "component must be 0 or 1");
    let space = &fe.space;
    let mesh = &space.mesh;
    let k = space.degree;
    let rule = get_rule((2 * k + 2).max(6)).expect("supported degree");
    let table = tabulate(k, &rule);
    let nl = space.local_dim();
    let mut total = 0.0;
    for t in 0..mesh.triangle_count() {
        let map = mesh.affine_map(t).expect("valid triangle");
        let dofs = space.cell_dofs(t);
        let mut acc = 0.0;
        for q in 0..rule.n_points() {
            let mut ref_grad = [0.0f64; 2];
            for i in 0..nl {
                let c = fe.coefficients[dofs[i]];
                ref_grad[0] += c * table.ref_grads[q][i][0];
                ref_grad[1] += c * table.ref_grads[q][i][1];
            }
            let grad = map.grad_to_physical(ref_grad);
            let (xr, yr) = rule.points[q];
            let d = grad[comp] - exact_grad(map.to_physical(xr, yr))[comp];
            acc += rule.weights[q] * d * d;
        }
        total += acc * map.det;
    }
    total.sqrt()
}

fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

fn rate_str(r: Option<f64>) -> String {
    match r {
        Some(v) => format!("{v:.2}"),
        None => String::new(),
    }
}

/// Render the table. Columns: level, h, ndofs, err_u_H1, rate, err_u_L2,
/// rate, err_s1_L2, rate, err_s2_L2, rate. Errors and h use scientific
/// notation with 6 significant digits, rates two decimals, undefined rates
/// are blank.
pub fn emit_table(table: &ConvergenceTable, format: TableFormat) -> String {
    const HEADER: [&str; 11] = [
        "level", "h", "ndofs", "err_u_H1", "rate", "err_u_L2", "rate", "err_s1_L2", "rate",
        "err_s2_L2", "rate",
    ];
    let rows: Vec<[String; 11]> = table
        .results
        .iter()
        .zip(&table.rates)
        .map(|(r, rates)| {
            [
                r.level.to_string(),
                sci(r.h),
                r.n_dofs.to_string(),
                sci(r.err_u_h1),
                rate_str(rates[0]),
                sci(r.err_u_l2),
                rate_str(rates[1]),
                sci(r.err_sigma1_l2),
                rate_str(rates[2]),
                sci(r.err_sigma2_l2),
                rate_str(rates[3]),
            ]
        })
        .collect();

    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str(&HEADER.join(","));
            out.push('\n');
            for row in &rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        TableFormat::Markdown => {
            out.push_str("| ");
            out.push_str(&HEADER.join(" | "));
            out.push_str(" |\n|");
            out.push_str(&HEADER.map(|_| " --- |").concat());
            out.push('\n');
            for row in &rows {
                out.push_str("| ");
                out.push_str(&row.join(" | "));
                out.push_str(" |\n");
            }
        }
    }
    out
}
