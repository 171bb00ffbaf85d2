//! `uf verify`: run the dense-oracle verification suites.

use clap::{Args, ValueEnum};

use uf_core::oracle;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Projection,
    Derivative,
    Gauss,
    Lebesgue,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    #[arg(long, default_value_t = 25)]
    pub trials: usize,
}

pub fn run(args: &VerifyArgs) -> Result<(), CliError> {
    let report = match args.suite {
        Suite::All => oracle::all_suites(args.seed),
        Suite::Projection => oracle::projection_suite(args.seed, args.trials),
        Suite::Derivative => oracle::derivative_suite(),
        Suite::Gauss => oracle::gauss_suite(args.seed, args.trials),
        Suite::Lebesgue => oracle::lebesgue_suite(),
    };
    for check in &report.checks {
        println!(
            "{} {} — {}",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Input("verification failed".into()))
    }
}
