use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use iga_majorant::linsolve::SolverKind;
use iga_majorant::majorant::FluxCase;
use iga_majorant::problems::{get_example_by_name, ExampleId};
use iga_majorant::study::{
    emit_reports, example5_schedule, run_adaptive_study, run_uniform_study, StudyConfig,
};
use iga_majorant::Result;

/// Isogeometric Galerkin solver with a guaranteed functional error majorant.
#[derive(Debug, Parser)]
#[command(name = "iga-majorant", version)]
struct Cli {
    /// Benchmark id: 1, 2, 3, 4a, 4b, 5, 6 or 7.
    #[arg(long)]
    example: String,

    /// Flux space: 0 or K,k (1 = "1,1", 2 = "2,2", 3 = "4,4").
    #[arg(long, default_value = "1,1")]
    case: String,

    /// Uniform refinements after the initial mesh.
    #[arg(long, default_value_t = 3)]
    levels: usize,

    /// Adaptive steps.
    #[arg(long, default_value_t = 5)]
    steps: usize,

    #[arg(long)]
    adaptive: bool,

    /// Percentage of cells to mark.
    #[arg(long, default_value_t = 20.0)]
    psi: f64,

    #[arg(long = "c-plus", default_value_t = 5.0)]
    c_plus: f64,

    /// Interleaved flux/beta iterations.
    #[arg(long, default_value_t = 2)]
    iters: usize,

    #[arg(long, default_value_t = 0.01)]
    beta0: f64,

    /// Quadrature points per direction for all volume integrals.
    #[arg(long)]
    quad: Option<usize>,

    /// Override the domain constant C_Omega.
    #[arg(long = "c-omega")]
    c_omega: Option<f64>,

    /// Use Jacobi-PCG instead of sparse Cholesky for symmetric systems.
    #[arg(long)]
    iterative: bool,

    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<()> {
    let problem = get_example_by_name(&cli.example)?;
    let case: FluxCase = cli.case.parse()?;
    let cfg = StudyConfig {
        psi: cli.psi,
        c_plus: cli.c_plus,
        iterations: cli.iters,
        beta0: cli.beta0,
        quad: cli.quad,
        c_omega: cli.c_omega,
        solver: if cli.iterative {
            SolverKind::Iterative
        } else {
            SolverKind::Direct
        },
    };
    let levels = if cli.adaptive {
        let schedule = if problem.id == ExampleId::E5 {
            example5_schedule(cli.steps)
        } else {
            vec![case; cli.steps]
        };
        run_adaptive_study(&problem, &schedule, cli.steps, &cfg)?
    } else {
        run_uniform_study(&problem, case, cli.levels, &cfg)?
    };
    for l in &levels {
        let r = &l.row;
        let ieff = r
            .ieff
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:>3} {:>4}x{:<4} dof_u={:<7} dof_y={:<7} a1B1={:.3e} a2B2={:.3e} M={:.4e} Ieff={} ratio={:.2} {}",
            r.level,
            r.spans[0],
            r.spans[1],
            r.dof_u,
            r.dof_y,
            r.a1b1,
            r.a2b2,
            r.majorant,
            ieff,
            r.ratio,
            if r.criterion { "holds" } else { "fails" },
        );
    }
    let rows: Vec<_> = levels.iter().map(|l| l.row.clone()).collect();
    let maps: Vec<_> = levels.iter().map(|l| l.map.clone()).collect();
    emit_reports(&rows, &maps, &cli.out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
