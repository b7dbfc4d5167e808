//! Configuration handling and the convergence-study / single-solve drivers
//! behind the command-line binary.

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use crate::analysis::{
    convergence_rates, emit_table, error_grad_component, error_l2, error_h1, ConvergenceTable,
    LevelResult, TableFormat,
};
use crate::assembly::{
    assemble_galerkin, assemble_two_field, find_problem, AssembledSystem, ManufacturedProblem,
    SigmaSpaceKind, TwoFieldProblem,
};
use crate::error::{Error, Result};
use crate::linalg::cg_solve;
use crate::mesh::{build_rect_mesh, TriangleMesh};
use crate::space::{build_space, Continuity, FeFunction};

/// Cells per side of the initial grid; the level-1 mesh has 32 triangles.
pub const INITIAL_CELLS_PER_SIDE: usize = 4;

/// Which discrete problem to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    TwoField,
    Galerkin,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_field" => Ok(Method::TwoField),
            "galerkin" => Ok(Method::Galerkin),
            other => Err(Error::InvalidArgument(format!(
                "unknown method '{other}'; expected two_field or galerkin"
            ))),
        }
    }
}

impl FromStr for SigmaSpaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal_order" => Ok(SigmaSpaceKind::EqualOrderContinuous),
            "dg" => Ok(SigmaSpaceKind::Discontinuous),
            other => Err(Error::InvalidArgument(format!(
                "unknown sigma space '{other}'; expected equal_order or dg"
            ))),
        }
    }
}

impl FromStr for TableFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "markdown" => Ok(TableFormat::Markdown),
            other => Err(Error::InvalidArgument(format!(
                "unknown format '{other}'; expected csv or markdown"
            ))),
        }
    }
}

/// Fully resolved run configuration. The defaults reproduce the benchmark
/// study: the Gaussian problem, 6 levels, linear elements, equal-order
/// continuous sigma, weights (2, -4).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: String,
    pub levels: u32,
    pub degree: u32,
    pub sigma_space: SigmaSpaceKind,
    pub alpha: f64,
    pub gamma: f64,
    pub method: Method,
    pub tol: f64,
    pub format: TableFormat,
    pub vtk_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: "gaussian".to_string(),
            levels: 6,
            degree: 1,
            sigma_space: SigmaSpaceKind::EqualOrderContinuous,
            alpha: 2.0,
            gamma: -4.0,
            method: Method::TwoField,
            tol: 1e-12,
            format: TableFormat::Csv,
            vtk_dir: None,
        }
    }
}

/// Optional values from the command line; `None` keeps the config-file or
/// default value.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub problem: Option<String>,
    pub levels: Option<u32>,
    pub degree: Option<u32>,
    pub sigma_space: Option<String>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub method: Option<String>,
    pub tol: Option<f64>,
    pub format: Option<String>,
    pub vtk_dir: Option<PathBuf>,
}

fn apply_key_value(config: &mut RunConfig, key: &str, value: &str) -> Result<()> {
    let bad_num = |key: &str, value: &str| {
        Error::Config(format!("invalid numeric value '{value}' for key '{key}'"))
    };
    match key {
        "problem" => config.problem = value.to_string(),
        "levels" => config.levels = value.parse().map_err(|_| bad_num(key, value))?,
        "degree" => config.degree = value.parse().map_err(|_| bad_num(key, value))?,
        "sigma-space" => config.sigma_space = value.parse()?,
        "alpha" => config.alpha = value.parse().map_err(|_| bad_num(key, value))?,
        "gamma" => config.gamma = value.parse().map_err(|_| bad_num(key, value))?,
        "method" => config.method = value.parse()?,
        "tol" => config.tol = value.parse().map_err(|_| bad_num(key, value))?,
        "format" => config.format = value.parse()?,
        "vtk-dir" => config.vtk_dir = Some(PathBuf::from(value)),
        other => return Err(Error::Config(format!("unknown config key '{other}'"))),
    }
    Ok(())
}

fn load_config_file(config: &mut RunConfig, path: &std::path::Path) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {} is not key=value: '{raw}'", lineno + 1))
        })?;
        apply_key_value(config, key.trim(), value.trim())?;
    }
    Ok(())
}

/// Resolve the final configuration: defaults, then the config file, then
/// command-line overrides, then validation.
pub fn build_config(file: Option<&std::path::Path>, overrides: &Overrides) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    if let Some(path) = file {
        load_config_file(&mut config, path)?;
    }
    if let Some(v) = &overrides.problem {
        config.problem = v.clone();
    }
    if let Some(v) = overrides.levels {
        config.levels = v;
    }
    if let Some(v) = overrides.degree {
        config.degree = v;
    }
    if let Some(v) = &overrides.sigma_space {
        config.sigma_space = v.parse()?;
    }
    if let Some(v) = overrides.alpha {
        config.alpha = v;
    }
    if let Some(v) = overrides.gamma {
        config.gamma = v;
    }
    if let Some(v) = &overrides.method {
        config.method = v.parse()?;
    }
    if let Some(v) = overrides.tol {
        config.tol = v;
    }
    if let Some(v) = &overrides.format {
        config.format = v.parse()?;
    }
    if let Some(v) = &overrides.vtk_dir {
        config.vtk_dir = Some(v.clone());
    }
    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<()> {
    find_problem(&config.problem)?;
    if config.levels < 1 {
        return Err(Error::InvalidArgument("levels must be at least 1".into()));
    }
    if !(1..=2).contains(&config.degree) {
        return Err(Error::InvalidArgument(format!(
            "unsupported polynomial degree {}; supported degrees are 1 and 2",
            config.degree
        )));
    }
    if config.alpha.is_nan() || config.alpha <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "alpha must be positive, got {}",
            config.alpha
        )));
    }
    if config.tol.is_nan() || config.tol <= 0.0 || config.tol >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "tol must lie in (0, 1), got {}",
            config.tol
        )));
    }
    Ok(())
}

fn assemble(
    config: &RunConfig,
    manufactured: &ManufacturedProblem,
    mesh: &Arc<TriangleMesh>,
) -> Result<AssembledSystem> {
    let u_space = Arc::new(build_space(mesh.clone(), config.degree, Continuity::Continuous)?);
    match config.method {
        Method::Galerkin => assemble_galerkin(manufactured, mesh, &u_space),
        Method::TwoField => {
            let problem = TwoFieldProblem::new(
                config.alpha,
                config.gamma,
                u_space,
                config.sigma_space,
                *manufactured,
            )?;
            assemble_two_field(&problem, mesh)
        }
    }
}

/// Table row plus the finite element functions behind it, for VTK output.
type SolvedLevel = (LevelResult, FeFunction, Option<(FeFunction, FeFunction)>);

/// Solve one level and measure its errors. For the Galerkin method the
/// sigma columns report the componentwise gradient error of u_h.
fn solve_level(
    config: &RunConfig,
    manufactured: &ManufacturedProblem,
    mesh: &Arc<TriangleMesh>,
) -> Result<SolvedLevel> {
    let started = Instant::now();
    let system = assemble(config, manufactured, mesh)?;
    let (x, report) = cg_solve(&system.matrix, &system.rhs, config.tol, 10 * system.dim())?;
    if !report.converged {
        return Err(Error::SolverDidNotConverge {
            iterations: report.iterations,
            residual: report.residual,
        });
    }
    let (u, sigma) = system.split_solution(&x)?;

    let exact_u = manufactured.exact_u;
    let exact_grad = manufactured.exact_grad;
    let err_u_h1 = error_h1(&u, exact_u, exact_grad);
    let err_u_l2 = error_l2(&u, exact_u);
    let (err_s1, err_s2) = match &sigma {
        Some((s1, s2)) => (
            error_l2(s1, |p| exact_grad(p)[0]),
            error_l2(s2, |p| exact_grad(p)[1]),
        ),
        None => (
            error_grad_component(&u, exact_grad, 0),
            error_grad_component(&u, exact_grad, 1),
        ),
    };

    let result = LevelResult {
        level: mesh.level,
        h: mesh.mesh_size(),
        n_dofs: system.dim(),
        err_u_h1,
        err_u_l2,
        err_sigma1_l2: err_s1,
        err_sigma2_l2: err_s2,
        solver_iterations: report.iterations,
        wall_time: started.elapsed().as_secs_f64(),
    };
    Ok((result, u, sigma))
}

fn build_level_mesh(manufactured: &ManufacturedProblem, level: u32) -> Result<Arc<TriangleMesh>> {
    let mut mesh = build_rect_mesh(manufactured.bbox, INITIAL_CELLS_PER_SIDE)?;
    for _ in 1..level {
        mesh = mesh.refine_uniform();
    }
    Ok(Arc::new(mesh))
}

/// Run the full refinement study, print the table, and return it. A level
/// whose solve fails aborts the study after printing the levels finished so
/// far, flagged with a trailing comment line.
pub fn run_convergence_study(config: &RunConfig) -> Result<ConvergenceTable> {
    let manufactured = find_problem(&config.problem)?;
    let mut mesh = build_level_mesh(&manufactured, 1)?;
    let mut results = Vec::new();
    for level in 1..=config.levels {
        if level > 1 {
            mesh = Arc::new(mesh.refine_uniform());
        }
        match solve_level(config, &manufactured, &mesh) {
            Ok((result, _, _)) => results.push(result),
            Err(err) => {
                let table = convergence_rates(results);
                print!("{}", emit_table(&table, config.format));
                println!("# study aborted at level {level}: {err}");
                return Err(err);
            }
        }
    }
    let table = convergence_rates(results);
    print!("{}", emit_table(&table, config.format));
    Ok(table)
}

/// Solve a single level, print its one-row table, optionally write VTK
/// output, and return the level data.
pub fn run_single(config: &RunConfig, level: u32) -> Result<LevelResult> {
    if level < 1 {
        return Err(Error::InvalidArgument("level must be at least 1".into()));
    }
    let manufactured = find_problem(&config.problem)?;
    let mesh = build_level_mesh(&manufactured, level)?;
    let (result, u, sigma) = solve_level(config, &manufactured, &mesh)?;

    if let Some(dir) = &config.vtk_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}_level{}.vtk", config.problem, level));
        let file = std::fs::File::create(&path)?;
        let mut writer = std::io::BufWriter::new(file);
        let u_values = vertex_values(&u, &mesh);
        let err_values: Vec<f64> = mesh
            .vertices
            .iter()
            .zip(&u_values)
            .map(|(&p, &v)| (v - (manufactured.exact_u)(p)).abs())
            .collect();
        let mut fields: Vec<(&str, Vec<f64>)> =
            vec![("u", u_values.clone()), ("err_u", err_values)];
        if let Some((s1, s2)) = &sigma {
            fields.push(("sigma1", vertex_values(s1, &mesh)));
            fields.push(("sigma2", vertex_values(s2, &mesh)));
        }
        let borrowed: Vec<(&str, &[f64])> =
            fields.iter().map(|(n, v)| (*n, v.as_slice())).collect();
        mesh.write_vtk(&mut writer, &format!("{} level {}", config.problem, level), &borrowed)?;
    }

    let table = convergence_rates(vec![result.clone()]);
    print!("{}", emit_table(&table, config.format));
    Ok(result)
}

/// Per-vertex samples of a finite element function, averaging the values
/// from all incident triangles (they differ only for discontinuous spaces).
fn vertex_values(fe: &FeFunction, mesh: &TriangleMesh) -> Vec<f64> {
    let mut sums = vec![0.0; mesh.vertex_count()];
    let mut counts = vec![0usize; mesh.vertex_count()];
    const CORNERS: [(f64, f64); 3] = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for (local, &(xr, yr)) in CORNERS.iter().enumerate() {
            sums[tri[local]] += fe.eval(t, xr, yr).0;
            counts[tri[local]] += 1;
        }
    }
    sums.iter().zip(&counts).map(|(&s, &c)| s / c as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    #[test]
    fn defaults_reproduce_benchmark_setup() {
        let config = RunConfig::default();
        assert_eq!(config.problem, "gaussian");
        assert_eq!(config.levels, 6);
        assert_eq!(config.degree, 1);
        assert_eq!(config.sigma_space, SigmaSpaceKind::EqualOrderContinuous);
        assert_eq!(config.alpha, 2.0);
        assert_eq!(config.gamma, -4.0);
        assert_eq!(config.method, Method::TwoField);
        assert_eq!(config.tol, 1e-12);
        assert_eq!(config.format, TableFormat::Csv);
        assert!(config.vtk_dir.is_none());
    }

    #[test]
    fn enum_parsing() {
        assert_eq!("two_field".parse::<Method>().unwrap(), Method::TwoField);
        assert_eq!("galerkin".parse::<Method>().unwrap(), Method::Galerkin);
        assert!("poisson".parse::<Method>().is_err());
        assert_eq!(
            "equal_order".parse::<SigmaSpaceKind>().unwrap(),
            SigmaSpaceKind::EqualOrderContinuous
        );
        assert_eq!("dg".parse::<SigmaSpaceKind>().unwrap(), SigmaSpaceKind::Discontinuous);
        assert!("cg".parse::<SigmaSpaceKind>().is_err());
        assert_eq!("markdown".parse::<TableFormat>().unwrap(), TableFormat::Markdown);
        assert!("json".parse::<TableFormat>().is_err());
    }

    fn temp_file(name: &str, content: &str) -> PathBuf {
        let path = std::env::temp_dir().join(format!("poisson2d_{}_{name}", std::process::id()));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn config_file_and_flag_precedence() {
        let path = temp_file(
            "precedence.cfg",
            "# study setup\nproblem = quadratic\nlevels = 3\ndegree=2\nformat = markdown\n",
        );
        let config = build_config(Some(&path), &Overrides::default()).unwrap();
        assert_eq!(config.problem, "quadratic");
        assert_eq!(config.levels, 3);
        assert_eq!(config.degree, 2);
        assert_eq!(config.format, TableFormat::Markdown);
        assert_eq!(config.alpha, 2.0);

        let overrides = Overrides {
            levels: Some(4),
            format: Some("csv".into()),
            ..Overrides::default()
        };
        let config = build_config(Some(&path), &overrides).unwrap();
        assert_eq!(config.levels, 4);
        assert_eq!(config.format, TableFormat::Csv);
        assert_eq!(config.problem, "quadratic");
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn config_file_errors() {
        let path = temp_file("unknown_key.cfg", "colour = blue\n");
        assert!(matches!(
            build_config(Some(&path), &Overrides::default()),
            Err(Error::Config(_))
        ));
        std::fs::remove_file(path).ok();

        let path = temp_file("bad_line.cfg", "just a line\n");
        assert!(matches!(
            build_config(Some(&path), &Overrides::default()),
            Err(Error::Config(_))
        ));
        std::fs::remove_file(path).ok();

        let path = temp_file("bad_value.cfg", "alpha = trouble\n");
        assert!(matches!(
            build_config(Some(&path), &Overrides::default()),
            Err(Error::Config(_))
        ));
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn invalid_settings_rejected_before_running() {
        let bad = |o: Overrides| build_config(None, &o);
        assert!(matches!(
            bad(Overrides { problem: Some("missing".into()), ..Default::default() }),
            Err(Error::UnknownProblem { .. })
        ));
        assert!(bad(Overrides { levels: Some(0), ..Default::default() }).is_err());
        assert!(bad(Overrides { degree: Some(3), ..Default::default() }).is_err());
        assert!(bad(Overrides { alpha: Some(-1.0), ..Default::default() }).is_err());
        assert!(bad(Overrides { tol: Some(0.0), ..Default::default() }).is_err());
    }

    #[test]
    fn patch_study_is_exact() {
        let config = RunConfig {
            problem: "linear_patch".into(),
            levels: 2,
            ..RunConfig::default()
        };
        let table = run_convergence_study(&config).unwrap();
        assert_eq!(table.results.len(), 2);
        for r in &table.results {
            assert!(r.err_u_h1 <= 1e-9, "H1 {:e}", r.err_u_h1);
            assert!(r.err_u_l2 <= 1e-9);
            assert!(r.err_sigma1_l2 <= 1e-9);
            assert!(r.err_sigma2_l2 <= 1e-9);
        }
    }

    #[test]
    fn single_solve_writes_vtk() {
        let dir = std::env::temp_dir().join(format!("poisson2d_vtk_{}", std::process::id()));
        std::fs::remove_dir_all(&dir).ok();
        let config = RunConfig { vtk_dir: Some(dir.clone()), ..RunConfig::default() };
        let result = run_single(&config, 1).unwrap();
        assert_eq!(result.n_dofs, 59);
        assert_eq!(result.level, 1);
        let path = dir.join("gaussian_level1.vtk");
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# vtk DataFile Version"));
        assert!(text.contains("SCALARS u double 1"));
        assert!(text.contains("SCALARS sigma1 double 1"));
        assert!(text.contains("SCALARS err_u double 1"));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn galerkin_single_level_runs() {
        let config = RunConfig {
            method: Method::Galerkin,
            problem: "quadratic".into(),
            degree: 2,
            ..RunConfig::default()
        };
        let result = run_single(&config, 1).unwrap();
        assert!(result.err_u_l2 <= 1e-9, "quadratic with k=2 is exact, got {:e}", result.err_u_l2);
        assert!(result.err_sigma1_l2 <= 1e-9);
    }
}
