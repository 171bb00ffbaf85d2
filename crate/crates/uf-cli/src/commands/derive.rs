//! `uf derive`: apply the stage derivative along one axis.

use std::path::PathBuf;

use clap::Args;

use uf_core::io::{ultrafunction_to_csv, UltrafunctionJson};
use uf_core::DerivOperator;

use crate::commands::{read_json, write_json, write_text};
use crate::CliError;

#[derive(Debug, Args)]
pub struct DeriveArgs {
    /// Input stage function (JSON).
    #[arg(long)]
    pub input: PathBuf,
    /// Axis to differentiate along.
    #[arg(long, default_value_t = 0)]
    pub axis: usize,
    /// Output JSON path.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional CSV export.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn run(args: &DeriveArgs) -> Result<(), CliError> {
    let uj: UltrafunctionJson = read_json(&args.input)?;
    let u = uj.build().map_err(|e| CliError::Input(e.to_string()))?;
    if u.support_reaches_margin(1, 0.0) {
        eprintln!(
            "warning: support touches the grid box; the derivative treats the outside as zero"
        );
    }
    let op = DerivOperator::new(u.grid().clone(), args.axis)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let du = op.apply(&u).map_err(|e| CliError::Input(e.to_string()))?;
    write_json(&args.out, &UltrafunctionJson::of(&du))?;
    if let Some(csv) = &args.csv {
        write_text(csv, &ultrafunction_to_csv(&du))?;
    }
    Ok(())
}
