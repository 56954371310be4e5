//! `mvfield`: analyze first-order field theories from a problem file.

mod commands;
mod problem;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Options;
use problem::{parse_assignments, Problem};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
}

#[derive(Parser)]
#[command(name = "mvfield", version, about = "Multivector-field analysis of first-order field theories")]
struct Cli {
    /// Emit the machine-readable JSON report.
    #[arg(long, global = true)]
    json: bool,
    /// Residual tolerance for `verify`.
    #[arg(long, global = true, default_value_t = 1e-4)]
    tol: f64,
    /// Parameter assignments `name=expr`, comma separated or repeated.
    #[arg(long, global = true, value_delimiter = ',')]
    assign: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hessian, regularity and field equations.
    Analyze { file: PathBuf },
    /// Solve for the multivector-field family and count free functions.
    Solve { file: PathBuf },
    /// Curvature of an assigned family member.
    Curvature { file: PathBuf },
    /// Legendre map and Hamiltonian of a regular Lagrangian.
    Legendre {
        file: PathBuf,
        /// Check FL-relatedness of a solution member and its image.
        #[arg(long)]
        check_fl: bool,
    },
    /// Grid residuals of a section against the field equations.
    Verify {
        file: PathBuf,
        /// Columnar grid file to check instead of the problem's section.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Section expression `y<A>=expr`, overriding the problem file.
        #[arg(long)]
        section: Vec<String>,
        /// Integrate the assigned flat member and check the result.
        #[arg(long)]
        integrate: bool,
    },
}

fn run(cli: &Cli) -> Result<report::Report, CliError> {
    let file = match &cli.command {
        Command::Analyze { file }
        | Command::Solve { file }
        | Command::Curvature { file }
        | Command::Legendre { file, .. }
        | Command::Verify { file, .. } => file,
    };
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(CliError::Input(format!("--tol must be positive, got {}", cli.tol)));
    }
    let problem = Problem::load(file)?;
    let mut opts = Options {
        tol: cli.tol,
        assign: parse_assignments(&cli.assign, problem.chart, &problem.parameters)?,
        ..Options::default()
    };
    match &cli.command {
        Command::Analyze { .. } => commands::analyze(&problem, &opts),
        Command::Solve { .. } => commands::solve(&problem, &opts),
        Command::Curvature { .. } => commands::curvature_cmd(&problem, &opts),
        Command::Legendre { check_fl, .. } => {
            opts.check_fl = *check_fl;
            commands::legendre(&problem, &opts)
        }
        Command::Verify {
            grid,
            section,
            integrate,
            ..
        } => {
            opts.grid = grid.clone();
            opts.section = section.clone();
            opts.integrate = *integrate;
            commands::verify(&problem, &opts)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            if cli.json {
                print!("{}", report.to_json());
            } else {
                print!("{}", report.to_human());
            }
            ExitCode::from(report.status.exit_code())
        }
        Err(err) => {
            if cli.json {
                let doc = serde_json::json!({"schema": 1, "status": "error", "error": err.to_string()});
                println!("{}", serde_json::to_string_pretty(&doc).expect("JSON values serialize"));
            }
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
