//! `uf lebesgue`: regularized values of a region's characteristic at a
//! point, both the exact trace rule and the finite-radius ball average.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use uf_core::io::RegionJson;
use uf_core::lebesgue::{lebesgue_average_piecewise, EtaRadius, RegularizedCharacteristic};

use crate::commands::read_json;
use crate::specfiles::parse_point;
use crate::CliError;

#[derive(Debug, Args)]
pub struct LebesgueArgs {
    /// Region file.
    #[arg(long)]
    pub region: PathBuf,
    /// Evaluation point, e.g. "0.5,0.25".
    #[arg(long)]
    pub point: String,
    /// Ball radius; defaults to h/4.
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Serialize)]
struct LebesgueOutput {
    point: Vec<f64>,
    eta: f64,
    trace_value: f64,
    ball_average: f64,
}

pub fn run(args: &LebesgueArgs) -> Result<(), CliError> {
    let region_json: RegionJson = read_json(&args.region)?;
    let region = region_json
        .build()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let point = parse_point(&args.point).map_err(CliError::Input)?;
    if point.len() != region.grid().dim() {
        return Err(CliError::Input(format!(
            "point has {} coordinates, grid has {} axes",
            point.len(),
            region.grid().dim()
        )));
    }
    if !region.grid().contains_point(&point) {
        return Err(CliError::Input("point lies outside the grid box".into()));
    }
    let eta = EtaRadius::new(args.eta.unwrap_or(region.grid().h() / 4.0))
        .map_err(|e| CliError::Input(e.to_string()))?;
    eta.validate_for(region.grid())
        .map_err(|e| CliError::Input(e.to_string()))?;

    let chi = RegularizedCharacteristic::new(region);
    let trace_value = chi.eval(&point);
    let ball_average = lebesgue_average_piecewise(chi.values(), &point, eta)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let out = LebesgueOutput {
        point,
        eta: eta.value(),
        trace_value,
        ball_average,
    };
    println!("{}", serde_json::to_string_pretty(&out).expect("output"));
    Ok(())
}
