//! `uf refine`: evaluate a functional along a chain of nested stages and
//! report per-stage values, successive differences, and observed rates.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, ValueEnum};

use uf_core::conservation::{solve, SolverConfig};
use uf_core::io::format_f64;
use uf_core::lebesgue::{lebesgue_average_piecewise, EtaRadius, RegularizedCharacteristic};
use uf_core::quadrature::QuadratureSpec;
use uf_core::ultraspace::project_function;
use uf_core::{gauss_check, DerivOperator, FluxModel, Grid, Region, VectorUltrafunction};

use crate::commands::write_text;
use crate::expr::{parse, Bindings, Var};
use crate::manifest::RunManifest;
use crate::specfiles::parse_point;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Functional {
    /// Integral of a projected expression over a box region.
    RegionIntegral,
    /// Pointwise divergence-theorem residual for the coordinate field.
    GaussResidual,
    /// Max interior error of the derivative of projected sin against cos.
    DerivConsistency,
    /// Origin-cell value of projected 1/|x| in 2D (grows like 1/h).
    SingularPeak,
    /// Ball average of a box characteristic at a point, eta tied to h.
    LebesgueAverage,
    /// Max |u| after a fixed-time quadratic-flux run in 1D.
    BurgersMax,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[arg(long, value_enum)]
    pub functional: Functional,
    /// Number of stages; each stage halves h.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    /// Grid dimension for functionals that allow a choice.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Coarse per-axis cell count.
    #[arg(long, default_value_t = 8)]
    pub extent: usize,
    /// Coarse cell edge.
    #[arg(long, default_value_t = 0.125)]
    pub h0: f64,
    /// Box origin, e.g. "0,0"; defaults to all zeros.
    #[arg(long)]
    pub origin: Option<String>,
    /// Expression for region-integral.
    #[arg(long)]
    pub expr: Option<String>,
    /// Region box "lo0,lo1:hi0,hi1" for region-integral / gauss-residual.
    #[arg(long, value_name = "LO:HI")]
    pub region_box: Option<String>,
    /// Evaluation point for lebesgue-average.
    #[arg(long)]
    pub point: Option<String>,
    /// eta / h ratio for lebesgue-average.
    #[arg(long, default_value_t = 0.25)]
    pub eta_ratio: f64,
    /// Write table.csv and a manifest into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct StageRow {
    level: usize,
    h: f64,
    value: f64,
}

fn parse_box(s: &str, dim: usize) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| CliError::Input("region box must look like lo0,lo1:hi0,hi1".into()))?;
    let lo = parse_point(lo).map_err(CliError::Input)?;
    let hi = parse_point(hi).map_err(CliError::Input)?;
    if lo.len() != dim || hi.len() != dim {
        return Err(CliError::Input(format!(
            "region box must have {dim} coordinates per corner"
        )));
    }
    Ok((lo, hi))
}

pub fn run(args: &RefineArgs) -> Result<(), CliError> {
    if args.levels < 2 {
        return Err(CliError::Input("refinement chains need at least 2 stages".into()));
    }
    let started = Instant::now();
    let rows = match args.functional {
        Functional::RegionIntegral => region_integral_chain(args)?,
        Functional::GaussResidual => gauss_residual_chain(args)?,
        Functional::DerivConsistency => deriv_consistency_chain(args)?,
        Functional::SingularPeak => singular_peak_chain(args)?,
        Functional::LebesgueAverage => lebesgue_average_chain(args)?,
        Functional::BurgersMax => burgers_max_chain(args)?,
    };

    let mut table = String::from("level,h,value,diff,rate\n");
    for (i, row) in rows.iter().enumerate() {
        let diff = if i > 0 {
            format_f64(row.value - rows[i - 1].value)
        } else {
            String::new()
        };
        // observed order from successive differences, or from the values
        // themselves when they measure an error directly
        let rate = if i >= 2 {
            let d1 = (rows[i - 1].value - rows[i - 2].value).abs();
            let d2 = (row.value - rows[i - 1].value).abs();
            if d1 > 0.0 && d2 > 0.0 {
                format_f64((d1 / d2).log2())
            } else {
                String::new()
            }
        } else if i == 1 && matches!(args.functional, Functional::DerivConsistency) {
            let (a, b) = (rows[0].value, row.value);
            if a > 0.0 && b > 0.0 {
                format_f64((a / b).log2())
            } else {
                String::new()
            }
        } else {
            String::new()
        };
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            row.level,
            format_f64(row.h),
            format_f64(row.value),
            diff,
            rate
        ));
    }
    print!("{table}");

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
        write_text(&dir.join("table.csv"), &table)?;
        let mut manifest = RunManifest::new("refine", dir);
        manifest
            .param("functional", format!("{:?}", args.functional))
            .param("levels", args.levels)
            .param("extent", args.extent)
            .param("h0", format_f64(args.h0))
            .param("dim", args.dim);
        manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
        manifest
            .write_atomic(dir)
            .map_err(|e| CliError::Input(format!("cannot write manifest: {e}")))?;
    }
    Ok(())
}

fn origin_of(args: &RefineArgs, dim: usize) -> Result<Vec<f64>, CliError> {
    match &args.origin {
        Some(s) => {
            let o = parse_point(s).map_err(CliError::Input)?;
            if o.len() != dim {
                return Err(CliError::Input(format!("origin needs {dim} coordinates")));
            }
            Ok(o)
        }
        None => Ok(vec![0.0; dim]),
    }
}

fn stage_grids(args: &RefineArgs, dim: usize) -> Result<Vec<Arc<Grid>>, CliError> {
    let origin = origin_of(args, dim)?;
    let base = Grid::shared(vec![args.extent; dim], origin, args.h0)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let mut grids = vec![base.clone()];
    for level in 1..args.levels {
        grids.push(Arc::new(base.refined(1 << level)));
    }
    Ok(grids)
}

fn region_integral_chain(args: &RefineArgs) -> Result<Vec<StageRow>, CliError> {
    let dim = args.dim;
    let src = args
        .expr
        .as_ref()
        .ok_or_else(|| CliError::Input("region-integral needs --expr".into()))?;
    let e = parse(src).map_err(|e| CliError::Input(e.to_string()))?;
    if e.uses(Var::U) || e.uses(Var::T) {
        return Err(CliError::Input("the integrand may only use x, y, z".into()));
    }
    let box_spec = args
        .region_box
        .as_ref()
        .ok_or_else(|| CliError::Input("region-integral needs --region-box".into()))?;
    let (lo, hi) = parse_box(box_spec, dim)?;
    let mut rows = Vec::new();
    for (level, grid) in stage_grids(args, dim)?.into_iter().enumerate() {
        let u = project_function(
            &|x: &[f64]| e.eval(&Bindings { t: 0.0, x, u: 0.0 }),
            &grid,
            &QuadratureSpec::default(),
        )
        .map_err(|e| CliError::Input(e.to_string()))?
        .into_values();
        let region = Region::from_box(grid.clone(), &lo, &hi);
        let value = uf_core::region_integral(&u, &region)
            .map_err(|e| CliError::Input(e.to_string()))?;
        rows.push(StageRow {
            level,
            h: grid.h(),
            value,
        });
    }
    Ok(rows)
}

fn gauss_residual_chain(args: &RefineArgs) -> Result<Vec<StageRow>, CliError> {
    let dim = args.dim;
    let (lo, hi) = match &args.region_box {
        Some(s) => parse_box(s, dim)?,
        None => {
            let o = origin_of(args, dim)?;
            let side = args.extent as f64 * args.h0;
            (
                o.iter().map(|v| v + 0.25 * side).collect(),
                o.iter().map(|v| v + 0.75 * side).collect(),
            )
        }
    };
    let mut rows = Vec::new();
    for (level, grid) in stage_grids(args, dim)?.into_iter().enumerate() {
        let comps = (0..dim)
            .map(|axis| {
                project_function(&|x: &[f64]| x[axis], &grid, &QuadratureSpec::default())
                    .map(|p| p.into_values())
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Input(e.to_string()))?;
        let phi = VectorUltrafunction::new(comps).map_err(|e| CliError::Input(e.to_string()))?;
        let region = Region::from_box(grid.clone(), &lo, &hi);
        let report = gauss_check(&phi, &region).map_err(|e| CliError::Input(e.to_string()))?;
        rows.push(StageRow {
            level,
            h: grid.h(),
            value: report.residual_pointwise / report.scale,
        });
    }
    Ok(rows)
}

fn deriv_consistency_chain(args: &RefineArgs) -> Result<Vec<StageRow>, CliError> {
    // fixed setting: sin on [0, 1], axis 0, interior cells only
    let mut rows = Vec::new();
    for level in 0..args.levels {
        let n = args.extent.max(8) << level;
        let grid = Grid::shared(vec![n], vec![0.0], 1.0 / n as f64)
            .map_err(|e| CliError::Input(e.to_string()))?;
        let u = project_function(&|x: &[f64]| x[0].sin(), &grid, &QuadratureSpec::default())
            .map_err(|e| CliError::Input(e.to_string()))?
            .into_values();
        let d = DerivOperator::new(grid.clone(), 0)
            .map_err(|e| CliError::Input(e.to_string()))?
            .apply(&u)
            .map_err(|e| CliError::Input(e.to_string()))?;
        let mut err = 0.0f64;
        for c in 1..n - 1 {
            let x = grid.cell_center(c)[0];
            err = err.max((d.coeff(c) - x.cos()).abs());
        }
        rows.push(StageRow {
            level,
            h: grid.h(),
            value: err,
        });
    }
    Ok(rows)
}

fn singular_peak_chain(args: &RefineArgs) -> Result<Vec<StageRow>, CliError> {
    // 2D, one cell centered at the origin on every stage
    let mut rows = Vec::new();
    for level in 0..args.levels {
        let n = args.extent << level;
        let h = args.h0 / (1 << level) as f64;
        let origin = -(n as f64 / 2.0 + 0.5) * h;
        let grid = Grid::shared(vec![n, n], vec![origin, origin], h)
            .map_err(|e| CliError::Input(e.to_string()))?;
        let u = project_function(
            &|x: &[f64]| 1.0 / (x[0] * x[0] + x[1] * x[1]).sqrt(),
            &grid,
            &QuadratureSpec::default(),
        )
        .map_err(|e| CliError::Input(e.to_string()))?
        .into_values();
        let center = grid
            .locate(&[-h * 0.01, -h * 0.01])
            .expect("origin cell exists by construction");
        rows.push(StageRow {
            level,
            h,
            value: u.coeff(center),
        });
    }
    Ok(rows)
}

fn lebesgue_average_chain(args: &RefineArgs) -> Result<Vec<StageRow>, CliError> {
    let dim = args.dim;
    let point = match &args.point {
        Some(s) => parse_point(s).map_err(CliError::Input)?,
        None => {
            let o = origin_of(args, dim)?;
            let side = args.extent as f64 * args.h0;
            o.iter().map(|v| v + 0.5 * side).collect()
        }
    };
    if point.len() != dim {
        return Err(CliError::Input(format!("point needs {dim} coordinates")));
    }
    let (lo, hi) = match &args.region_box {
        Some(s) => parse_box(s, dim)?,
        None => {
            let o = origin_of(args, dim)?;
            let side = args.extent as f64 * args.h0;
            (
                o.iter().map(|v| v + 0.25 * side).collect(),
                o.iter().map(|v| v + 0.5 * side).collect(),
            )
        }
    };
    let mut rows = Vec::new();
    for (level, grid) in stage_grids(args, dim)?.into_iter().enumerate() {
        let region = Region::from_box(grid.clone(), &lo, &hi);
        let chi = RegularizedCharacteristic::new(region);
        let eta = EtaRadius::new(args.eta_ratio * grid.h())
            .map_err(|e| CliError::Input(e.to_string()))?;
        eta.validate_for(&grid)
            .map_err(|e| CliError::Input(e.to_string()))?;
        let value = lebesgue_average_piecewise(chi.values(), &point, eta)
            .map_err(|e| CliError::Input(e.to_string()))?;
        rows.push(StageRow {
            level,
            h: grid.h(),
            value,
        });
    }
    Ok(rows)
}

fn burgers_max_chain(args: &RefineArgs) -> Result<Vec<StageRow>, CliError> {
    // 1D quadratic-flux run past shock formation; reports max |u(T)|
    // without interpreting it
    let t_end = 0.35;
    let mut rows = Vec::new();
    for level in 0..args.levels {
        let n = args.extent.max(32) << level;
        let grid = Grid::shared(vec![n], vec![0.0], 1.0 / n as f64)
            .map_err(|e| CliError::Input(e.to_string()))?;
        let u0 = project_function(
            &|x: &[f64]| {
                let r = ((x[0] - 0.4) / 0.2).abs();
                if r < 1.0 {
                    (0.5 + 0.5 * (std::f64::consts::PI * r).cos()).powi(2)
                } else {
                    0.0
                }
            },
            &grid,
            &QuadratureSpec::default(),
        )
        .map_err(|e| CliError::Input(e.to_string()))?
        .into_values();
        let config = SolverConfig::new(t_end);
        let trace = solve(&u0, &FluxModel::burgers(1, 1.0), &config, None)
            .map_err(|e| CliError::Input(e.to_string()))?;
        rows.push(StageRow {
            level,
            h: grid.h(),
            value: trace.final_state().max_abs(),
        });
    }
    Ok(rows)
}
