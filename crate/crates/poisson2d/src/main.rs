use std::path::PathBuf;

use clap::Parser;

use poisson2d::cli::{build_config, run_convergence_study, run_single, Overrides};
use poisson2d::error::Error;

/// Finite element convergence studies for the Poisson equation, solving for
/// the solution and its gradient simultaneously from one coercive
/// variational problem.
#[derive(Debug, Parser)]
#[command(name = "poisson2d", version)]
struct Args {
    /// Built-in problem name (gaussian, linear_patch, quadratic)
    #[arg(long)]
    problem: Option<String>,

    /// Number of refinement levels in the study
    #[arg(long)]
    levels: Option<u32>,

    /// Polynomial degree of the elements (1 or 2)
    #[arg(long)]
    degree: Option<u32>,

    /// Discretisation of the gradient variable: equal_order or dg
    #[arg(long)]
    sigma_space: Option<String>,

    /// Gradient weight in the two-field form (positive)
    #[arg(long)]
    alpha: Option<f64>,

    /// Load weight in the two-field form
    #[arg(long)]
    gamma: Option<f64>,

    /// two_field or galerkin
    #[arg(long)]
    method: Option<String>,

    /// Relative residual tolerance of the linear solver
    #[arg(long)]
    tol: Option<f64>,

    /// Table output format: csv or markdown
    #[arg(long)]
    format: Option<String>,

    /// Write legacy VTK output of the solution fields to this directory
    #[arg(long)]
    vtk_dir: Option<PathBuf>,

    /// Flat key=value config file; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,

    /// Solve only this level instead of running the full study
    #[arg(long)]
    single_level: Option<u32>,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::SolverDidNotConverge { .. } | Error::NotPositiveDefinite { .. } => 3,
        _ => 2,
    }
}

fn main() {
    let args = Args::parse();
    let overrides = Overrides {
        problem: args.problem,
        levels: args.levels,
        degree: args.degree,
        sigma_space: args.sigma_space,
        alpha: args.alpha,
        gamma: args.gamma,
        method: args.method,
        tol: args.tol,
        format: args.format,
        vtk_dir: args.vtk_dir,
    };
    let outcome = build_config(args.config.as_deref(), &overrides).and_then(|config| {
        match args.single_level {
            Some(level) => run_single(&config, level).map(|_| ()),
            None => run_convergence_study(&config).map(|_| ()),
        }
    });
    if let Err(err) = outcome {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
