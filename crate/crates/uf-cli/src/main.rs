//! Batch front-end for the stage-calculus library.
//!
//! Exit codes: 0 success, 2 bad input, 3 support-margin violation,
//! 4 non-finite state. `UF_THREADS` caps internal parallelism; results
//! are byte-identical for any thread count.

mod commands;
mod expr;
mod manifest;
mod specfiles;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Margin(String),
    NonFinite(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Margin(_) => 3,
            CliError::NonFinite(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Margin(m) | CliError::NonFinite(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "uf",
    version,
    about = "Grid-stage calculus: projection, antisymmetric derivatives, divergence checks, conservative transport"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project an expression or a measure file onto a grid.
    Project(commands::project::ProjectArgs),
    /// Differentiate a stage function along one axis.
    Derive(commands::derive::DeriveArgs),
    /// Check the divergence identities for a field and a region.
    GaussCheck(commands::gauss::GaussArgs),
    /// Regularized characteristic values at a point.
    Lebesgue(commands::lebesgue::LebesgueArgs),
    /// Run the conservation-law solver and write a trace directory.
    Solve(commands::solve::SolveArgs),
    /// Evaluate a functional along a chain of refined stages.
    Refine(commands::refine::RefineArgs),
    /// Run the dense-oracle verification suites.
    Verify(commands::verify::VerifyArgs),
}

fn configure_threads() {
    if let Ok(value) = std::env::var("UF_THREADS") {
        if let Ok(n) = value.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() {
    configure_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Project(args) => commands::project::run(args),
        Command::Derive(args) => commands::derive::run(args),
        Command::GaussCheck(args) => commands::gauss::run(args),
        Command::Lebesgue(args) => commands::lebesgue::run(args),
        Command::Solve(args) => commands::solve::run(args),
        Command::Refine(args) => commands::refine::run(args),
        Command::Verify(args) => commands::verify::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
