//! `uf solve`: run the conservation-law solver and write a trace
//! directory with snapshots, a per-step mass ledger, and a manifest.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use uf_core::conservation::{solve, SolveError, SolverConfig};
use uf_core::io::{format_f64, RegionJson, UltrafunctionJson};

use crate::commands::{read_json, write_json};
use crate::manifest::RunManifest;
use crate::specfiles::parse_flux_spec;
use crate::CliError;

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Flux: burgers | advection:a[,b..] | expr:E1[;E2..].
    #[arg(long)]
    pub flux: String,
    /// Initial state (JSON).
    #[arg(long)]
    pub u0: PathBuf,
    /// Fixed time step; defaults to 0.2 h / max |dF/du|.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time.
    #[arg(long, value_name = "T")]
    pub t: f64,
    /// Keep a snapshot every this many steps.
    #[arg(long, default_value_t = 16)]
    pub snap_every: usize,
    /// Output directory for the trace.
    #[arg(long)]
    pub out: PathBuf,
    /// Region for the per-step flux residual; whole box when absent.
    #[arg(long)]
    pub region: Option<PathBuf>,
    /// Cells of clearance the support must keep from the box.
    #[arg(long, default_value_t = 2)]
    pub margin: usize,
    /// Relative support threshold for the margin check.
    #[arg(long, default_value_t = 1e-13)]
    pub support_tol: f64,
}

#[derive(Serialize)]
struct SnapshotJson<'a> {
    step: usize,
    t: f64,
    state: &'a UltrafunctionJson,
}

pub fn run(args: &SolveArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let u0_json: UltrafunctionJson = read_json(&args.u0)?;
    let u0 = u0_json.build().map_err(|e| CliError::Input(e.to_string()))?;
    let grid = u0.grid().clone();

    let region = match &args.region {
        Some(path) => {
            let rj: RegionJson = read_json(path)?;
            let r = rj.build().map_err(|e| CliError::Input(e.to_string()))?;
            if r.grid().as_ref() != grid.as_ref() {
                return Err(CliError::Input(
                    "ledger region lives on a different grid than u0".into(),
                ));
            }
            Some(r)
        }
        None => None,
    };

    let flux = parse_flux_spec(&args.flux, grid.dim(), u0.max_abs().max(1.0))
        .map_err(CliError::Input)?;

    let config = SolverConfig {
        dt: args.dt,
        t_final: args.t,
        snap_every: args.snap_every,
        support_margin: args.margin,
        support_tol: args.support_tol,
    };

    let trace = solve(&u0, &flux, &config, region.as_ref()).map_err(|e| match e {
        SolveError::MarginViolation { .. } => CliError::Margin(e.to_string()),
        SolveError::NonFiniteState { .. } | SolveError::NonFiniteFlux { .. } => {
            CliError::NonFinite(e.to_string())
        }
        other => CliError::Input(other.to_string()),
    })?;

    for w in &trace.flux_warnings {
        eprintln!("warning: {w}");
    }

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", args.out.display())))?;

    for (i, snap) in trace.snapshots.iter().enumerate() {
        let state = UltrafunctionJson::of(&snap.state);
        let body = SnapshotJson {
            step: snap.step,
            t: snap.t,
            state: &state,
        };
        write_json(&args.out.join(format!("snap_{i:06}.json")), &body)?;
    }

    // conservation.csv: one row per step, 17 significant digits
    let q0 = trace.q0();
    let mut csv = String::from("t,Q,dQ,region_flux_residual\n");
    for s in &trace.steps {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            format_f64(s.t),
            format_f64(s.q),
            format_f64(s.q - q0),
            format_f64(s.region_flux_residual),
        ));
    }
    fs::write(args.out.join("conservation.csv"), csv)
        .map_err(|e| CliError::Input(format!("cannot write conservation.csv: {e}")))?;

    let mut manifest = RunManifest::new("solve", &args.out);
    manifest.input(&args.u0);
    if let Some(r) = &args.region {
        manifest.input(r);
    }
    manifest
        .param("flux", &args.flux)
        .param("dt", args.dt.map(|v| format_f64(v)).unwrap_or_else(|| "auto".into()))
        .param("T", format_f64(args.t))
        .param("snap_every", args.snap_every)
        .param("margin", args.margin)
        .param("support_tol", format_f64(args.support_tol))
        .param("steps", trace.steps.len())
        .param("snapshots", trace.snapshots.len())
        .param("max_q_drift", format_f64(trace.max_q_drift()));
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest
        .write_atomic(&args.out)
        .map_err(|e| CliError::Input(format!("cannot write manifest: {e}")))?;
    Ok(())
}
