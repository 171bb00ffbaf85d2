//! CLI-level input formats: flux specifications and measure files.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;

use uf_core::io::GridSpecJson;
use uf_core::quadrature::QuadratureSpec;
use uf_core::ultraspace::{Atom, Density, RadonMeasureSpec};
use uf_core::{FaceKey, FluxModel, Grid};

use crate::expr::{parse, Bindings, Expr, Var};

/// `burgers`, `advection:a[,b,..]`, or `expr:E1[;E2[;E3]]`.
///
/// A single advection velocity or flux expression broadcasts to every
/// axis. Expressions may use `t`, `x`, `y`, `z`, `u`.
pub fn parse_flux_spec(spec: &str, dim: usize, u_scale: f64) -> Result<FluxModel, String> {
    if spec == "burgers" {
        return Ok(FluxModel::burgers(dim, u_scale));
    }
    if let Some(rest) = spec.strip_prefix("advection:") {
        let mut velocity: Vec<f64> = Vec::new();
        for part in rest.split(',') {
            velocity.push(
                part.trim()
                    .parse()
                    .map_err(|_| format!("invalid advection velocity '{part}'"))?,
            );
        }
        if velocity.len() == 1 && dim > 1 {
            velocity = vec![velocity[0]; dim];
        }
        if velocity.len() != dim {
            return Err(format!(
                "advection needs {dim} velocities, got {}",
                velocity.len()
            ));
        }
        return Ok(FluxModel::advection(velocity));
    }
    if let Some(rest) = spec.strip_prefix("expr:") {
        let mut exprs: Vec<Expr> = Vec::new();
        for part in rest.split(';') {
            exprs.push(parse(part.trim()).map_err(|e| format!("flux expression: {e}"))?);
        }
        if exprs.len() == 1 && dim > 1 {
            exprs = vec![exprs[0].clone(); dim];
        }
        if exprs.len() != dim {
            return Err(format!("flux needs {dim} components, got {}", exprs.len()));
        }
        for e in &exprs {
            if let Some(axis) = e.max_axis() {
                if axis >= dim {
                    return Err(format!(
                        "flux expression uses coordinate {} on a {dim}-dimensional grid",
                        ["x", "y", "z"][axis]
                    ));
                }
            }
        }
        let zero_at_zero = exprs.iter().all(sampled_zero_at_zero);
        // growth constants estimated by sampling over the expected range
        let mut c1 = 0.0f64;
        let mut c2 = 0.0f64;
        for e in &exprs {
            for i in 0..=16 {
                let u = -u_scale + 2.0 * u_scale * i as f64 / 16.0;
                for x in [[0.0, 0.0, 0.0], [0.5, 0.5, 0.5], [1.0, 0.3, 0.7]] {
                    let v = e
                        .eval(&Bindings { t: 0.0, x: &x, u })
                        .abs();
                    if u.abs() > 1e-9 {
                        c2 = c2.max((v - c1).max(0.0) / u.abs());
                    } else {
                        c1 = c1.max(v);
                    }
                }
            }
        }
        let compiled: Vec<_> = exprs
            .into_iter()
            .map(|e| {
                let f: Arc<dyn Fn(f64, &[f64], f64) -> f64 + Send + Sync> =
                    Arc::new(move |t, x: &[f64], u| e.eval(&Bindings { t, x, u }));
                f
            })
            .collect();
        return Ok(FluxModel::new(compiled, zero_at_zero, c1, c2 * 1.25));
    }
    Err(format!(
        "unknown flux spec '{spec}': expected burgers, advection:a[,b..], or expr:E1[;E2..]"
    ))
}

fn sampled_zero_at_zero(e: &Expr) -> bool {
    let probes = [[0.0, 0.0, 0.0], [0.3, 0.7, 0.1], [1.0, 2.0, 3.0]];
    probes.iter().all(|x| {
        [0.0, 0.5, 1.0].iter().all(|&t| {
            e.eval(&Bindings { t, x, u: 0.0 }).abs() <= 1e-14
        })
    })
}

#[derive(Debug, Deserialize)]
pub struct SurfaceWeightJson {
    pub axis: usize,
    pub at: Vec<usize>,
    pub weight: f64,
}

#[derive(Debug, Deserialize)]
pub struct AtomJson {
    pub point: Vec<f64>,
    pub mass: f64,
}

/// Measure file: a grid plus any of the three parts.
#[derive(Debug, Deserialize)]
pub struct MeasureFileJson {
    pub grid: GridSpecJson,
    #[serde(default)]
    pub density: Option<String>,
    #[serde(default)]
    pub surface: Vec<SurfaceWeightJson>,
    #[serde(default)]
    pub atoms: Vec<AtomJson>,
}

impl MeasureFileJson {
    pub fn build(&self) -> Result<(Arc<Grid>, RadonMeasureSpec), String> {
        let grid = self.grid.build().map_err(|e| e.to_string())?;
        let density = match &self.density {
            Some(src) => {
                let e = parse(src).map_err(|e| format!("density expression: {e}"))?;
                if e.uses(Var::U) || e.uses(Var::T) {
                    return Err("density expressions may only use x, y, z".into());
                }
                if let Some(axis) = e.max_axis() {
                    if axis >= grid.dim() {
                        return Err(format!(
                            "density uses coordinate {} on a {}-dimensional grid",
                            ["x", "y", "z"][axis],
                            grid.dim()
                        ));
                    }
                }
                Some(Density {
                    f: Arc::new(move |x: &[f64]| {
                        e.eval(&Bindings {
                            t: 0.0,
                            x,
                            u: 0.0,
                        })
                    }),
                    quadrature: QuadratureSpec::default(),
                })
            }
            None => None,
        };
        let mut surface = BTreeMap::new();
        for s in &self.surface {
            surface.insert(
                FaceKey {
                    axis: s.axis,
                    at: s.at.clone(),
                },
                s.weight,
            );
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                point: a.point.clone(),
                mass: a.mass,
            })
            .collect();
        let mu = RadonMeasureSpec {
            density,
            surface,
            atoms,
        };
        mu.validate(&grid).map_err(|e| e.to_string())?;
        Ok((grid, mu))
    }
}

/// `"0.5,0.25"` style point literals.
pub fn parse_point(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("invalid coordinate '{p}'"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_specs() {
        let f = parse_flux_spec("burgers", 1, 1.0).unwrap();
        assert!(f.zero_at_zero);
        assert_eq!(f.eval(0, 0.0, &[0.5], 2.0), 2.0);

        let f = parse_flux_spec("advection:1.5", 2, 1.0).unwrap();
        assert_eq!(f.eval(0, 0.0, &[0.0, 0.0], 2.0), 3.0);
        assert_eq!(f.eval(1, 0.0, &[0.0, 0.0], 2.0), 3.0);

        let f = parse_flux_spec("expr:u^2/2;u*0.5", 2, 1.0).unwrap();
        assert!(f.zero_at_zero);
        assert_eq!(f.eval(0, 0.0, &[0.0, 0.0], 2.0), 2.0);
        assert_eq!(f.eval(1, 0.0, &[0.0, 0.0], 2.0), 1.0);

        assert!(parse_flux_spec("expr:z*u", 2, 1.0).is_err());
        assert!(parse_flux_spec("nonsense", 1, 1.0).is_err());
        assert!(parse_flux_spec("advection:1,2,3", 2, 1.0).is_err());
    }

    #[test]
    fn measure_files() {
        let src = r#"{
            "grid": {"extent":[3,3],"h":0.5,"origin":[0.0,0.0]},
            "density": "x + 2*y",
            "surface": [{"axis":0,"at":[1,1],"weight":0.7}],
            "atoms": [{"point":[0.6,1.1],"mass":1.0}]
        }"#;
        let file: MeasureFileJson = serde_json::from_str(src).unwrap();
        let (grid, mu) = file.build().unwrap();
        assert_eq!(grid.dim(), 2);
        assert_eq!(mu.surface.len(), 1);
        assert_eq!(mu.atoms.len(), 1);
        assert!(mu.density.is_some());

        let bad = r#"{"grid": {"extent":[3],"h":0.5,"origin":[0.0]}, "density": "u"}"#;
        let file: MeasureFileJson = serde_json::from_str(bad).unwrap();
        assert!(file.build().is_err());
    }

    #[test]
    fn point_literals() {
        assert_eq!(parse_point("0.5, 0.25").unwrap(), vec![0.5, 0.25]);
        assert!(parse_point("a,b").is_err());
    }
}
