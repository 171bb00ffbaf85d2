//! `uf gauss-check`: the divergence identities for one field and region.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use uf_core::io::{RegionJson, VectorFieldJson};
use uf_core::{gauss_check, GaussReport};

use crate::commands::{read_json, write_json};
use crate::CliError;

#[derive(Debug, Args)]
pub struct GaussArgs {
    /// Vector field file (grid + one coefficient array per axis).
    #[arg(long)]
    pub phi: PathBuf,
    /// Region file.
    #[arg(long)]
    pub region: PathBuf,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Residuals {
    lemma: f64,
    pointwise: f64,
    tv: f64,
}

#[derive(Debug, Serialize)]
struct ReportJson {
    lhs: f64,
    mid: f64,
    rhs_tv: f64,
    rhs_pointwise: f64,
    residuals: Residuals,
    corner_discrepancy: f64,
    scale: f64,
}

impl From<&GaussReport> for ReportJson {
    fn from(r: &GaussReport) -> ReportJson {
        ReportJson {
            lhs: r.lhs,
            mid: r.mid,
            rhs_tv: r.rhs_tv,
            rhs_pointwise: r.rhs_pointwise,
            residuals: Residuals {
                lemma: r.residual_lemma,
                pointwise: r.residual_pointwise,
                tv: r.residual_tv,
            },
            corner_discrepancy: r.corner_discrepancy,
            scale: r.scale,
        }
    }
}

pub fn run(args: &GaussArgs) -> Result<(), CliError> {
    let phi_json: VectorFieldJson = read_json(&args.phi)?;
    let phi = phi_json.build().map_err(|e| CliError::Input(e.to_string()))?;
    let region_json: RegionJson = read_json(&args.region)?;
    let region = region_json
        .build()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let report = gauss_check(&phi, &region).map_err(|e| CliError::Input(e.to_string()))?;
    let shaped = ReportJson::from(&report);
    println!("{}", serde_json::to_string_pretty(&shaped).expect("report"));
    if let Some(out) = &args.out {
        write_json(out, &shaped)?;
    }
    Ok(())
}
