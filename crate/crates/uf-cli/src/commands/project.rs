//! `uf project`: orthogonal projection of an expression or a measure file
//! onto a grid.

use std::path::PathBuf;

use clap::Args;

use uf_core::io::{ultrafunction_to_csv, GridSpecJson, UltrafunctionJson};
use uf_core::quadrature::QuadratureSpec;
use uf_core::ultraspace::{project_function, project_measure, Projection};

use crate::commands::{read_json, write_json, write_text};
use crate::expr::{parse, Bindings, Var};
use crate::specfiles::MeasureFileJson;
use crate::CliError;

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Expression in x, y, z to project as a density.
    #[arg(long, conflicts_with = "measure")]
    pub expr: Option<String>,
    /// Measure file (grid + density/surface/atoms) to project.
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// Grid file; required with --expr.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Output JSON path.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional CSV export (cell centers + values).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Relative quadrature tolerance per cell.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

pub fn run(args: &ProjectArgs) -> Result<(), CliError> {
    let spec = QuadratureSpec {
        rel_tol: args.tol,
        ..QuadratureSpec::default()
    };
    let projection: Projection = match (&args.expr, &args.measure) {
        (Some(src), None) => {
            let grid_path = args
                .grid
                .as_ref()
                .ok_or_else(|| CliError::Input("--expr requires --grid".into()))?;
            let grid_spec: GridSpecJson = read_json(grid_path)?;
            let grid = grid_spec.build().map_err(|e| CliError::Input(e.to_string()))?;
            let e = parse(src).map_err(|e| CliError::Input(e.to_string()))?;
            if e.uses(Var::U) || e.uses(Var::T) {
                return Err(CliError::Input(
                    "projection expressions may only use x, y, z".into(),
                ));
            }
            if let Some(axis) = e.max_axis() {
                if axis >= grid.dim() {
                    return Err(CliError::Input(format!(
                        "expression uses coordinate {} on a {}-dimensional grid",
                        ["x", "y", "z"][axis],
                        grid.dim()
                    )));
                }
            }
            project_function(
                &move |x: &[f64]| e.eval(&Bindings { t: 0.0, x, u: 0.0 }),
                &grid,
                &spec,
            )
            .map_err(|e| CliError::Input(format!("quadrature: {e}")))?
        }
        (None, Some(path)) => {
            let file: MeasureFileJson = read_json(path)?;
            let (grid, mu) = file.build().map_err(CliError::Input)?;
            project_measure(&mu, &grid).map_err(|e| CliError::Input(e.to_string()))?
        }
        _ => {
            return Err(CliError::Input(
                "exactly one of --expr or --measure is required".into(),
            ))
        }
    };

    if !projection.unconverged_cells.is_empty() {
        eprintln!(
            "warning: quadrature hit the depth cap in {} cells (total error estimate {:.3e})",
            projection.unconverged_cells.len(),
            projection.error_estimate
        );
    }
    let u = projection.into_values();
    write_json(&args.out, &UltrafunctionJson::of(&u))?;
    if let Some(csv) = &args.csv {
        write_text(csv, &ultrafunction_to_csv(&u))?;
    }
    Ok(())
}
