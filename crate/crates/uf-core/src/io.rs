//! File formats: JSON schemas for grids, regions, stage functions, and
//! vector fields, plus CSV export.
//!
//! All numeric JSON round-trips exactly (serde_json renders the shortest
//! representation that parses back to the same float). CSV uses 17
//! significant digits for the same reason.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::VectorUltrafunction;
use crate::grid::{Grid, GridError, Region, RegionError};
use crate::ultraspace::{SpaceError, Ultrafunction};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("vector field component count {got} does not match grid dimension {want}")]
    ComponentCount { got: usize, want: usize },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpecJson {
    pub extent: Vec<usize>,
    pub h: f64,
    pub origin: Vec<f64>,
}

impl GridSpecJson {
    pub fn of(grid: &Grid) -> GridSpecJson {
        GridSpecJson {
            extent: grid.extent().to_vec(),
            h: grid.h(),
            origin: grid.origin().to_vec(),
        }
    }

    pub fn build(&self) -> Result<Arc<Grid>, FormatError> {
        Ok(Grid::shared(
            self.extent.clone(),
            self.origin.clone(),
            self.h,
        )?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionJson {
    pub extent: Vec<usize>,
    pub h: f64,
    pub origin: Vec<f64>,
    pub cells: Vec<Vec<usize>>,
}

impl RegionJson {
    pub fn of(region: &Region) -> RegionJson {
        let grid = region.grid();
        RegionJson {
            extent: grid.extent().to_vec(),
            h: grid.h(),
            origin: grid.origin().to_vec(),
            cells: region.cells().map(|c| grid.coords(c)).collect(),
        }
    }

    pub fn build(&self) -> Result<Region, FormatError> {
        let grid = Grid::shared(self.extent.clone(), self.origin.clone(), self.h)?;
        Ok(Region::from_coords(grid, self.cells.iter())?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UltrafunctionJson {
    pub grid: GridSpecJson,
    /// Row-major cell order, last axis fastest.
    pub coeffs: Vec<f64>,
}

impl UltrafunctionJson {
    pub fn of(u: &Ultrafunction) -> UltrafunctionJson {
        UltrafunctionJson {
            grid: GridSpecJson::of(u.grid()),
            coeffs: u.coeffs().to_vec(),
        }
    }

    pub fn build(&self) -> Result<Ultrafunction, FormatError> {
        let grid = self.grid.build()?;
        Ok(Ultrafunction::new(grid, self.coeffs.clone())?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorFieldJson {
    pub grid: GridSpecJson,
    pub components: Vec<Vec<f64>>,
}

impl VectorFieldJson {
    pub fn of(phi: &VectorUltrafunction) -> VectorFieldJson {
        VectorFieldJson {
            grid: GridSpecJson::of(phi.grid()),
            components: phi
                .components()
                .iter()
                .map(|u| u.coeffs().to_vec())
                .collect(),
        }
    }

    pub fn build(&self) -> Result<VectorUltrafunction, FormatError> {
        let grid = self.grid.build()?;
        if self.components.len() != grid.dim() {
            return Err(FormatError::ComponentCount {
                got: self.components.len(),
                want: grid.dim(),
            });
        }
        let comps = self
            .components
            .iter()
            .map(|c| Ultrafunction::new(grid.clone(), c.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        VectorUltrafunction::new(comps).map_err(|_| FormatError::ComponentCount {
            got: self.components.len(),
            want: grid.dim(),
        })
    }
}

/// 17-significant-digit decimal rendering, the float round-trip format
/// shared by every CSV this crate writes.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with one row per cell: center coordinates then the value.
pub fn ultrafunction_to_csv(u: &Ultrafunction) -> String {
    let grid = u.grid();
    let mut out = String::new();
    let axis_names = ["x", "y", "z"];
    for k in 0..grid.dim() {
        let name = axis_names
            .get(k)
            .map(|s| s.to_string())
            .unwrap_or_else(|| format!("x{k}"));
        out.push_str(&name);
        out.push(',');
    }
    out.push_str("value\n");
    for c in 0..grid.cell_count() {
        for x in grid.cell_center(c) {
            out.push_str(&format_f64(x));
            out.push(',');
        }
        out.push_str(&format_f64(u.coeff(c)));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn region_literal_matches_documented_shape() {
        let grid = Grid::shared(vec![3, 3], vec![0.0, 0.0], 0.5).unwrap();
        let region = Region::from_coords(grid, [[0usize, 1usize], [2, 2]]).unwrap();
        let json = serde_json::to_string(&RegionJson::of(&region)).unwrap();
        assert!(json.starts_with(r#"{"extent":[3,3],"h":0.5,"origin":[0.0,0.0],"cells":"#));
        let back: RegionJson = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build().unwrap(), region);
    }

    #[test]
    fn csv_has_17_significant_digits() {
        let grid = Grid::shared(vec![2], vec![0.0], 1.0 / 3.0).unwrap();
        let u = Ultrafunction::new(grid, vec![std::f64::consts::PI, 0.1]).unwrap();
        let csv = ultrafunction_to_csv(&u);
        assert!(csv.contains("3.1415926535897931e0"));
        assert!(csv.contains("1.0000000000000001e-1"));
    }

    proptest! {
        #[test]
        fn ultrafunction_json_roundtrip(
            coeffs in proptest::collection::vec(-1e12f64..1e12, 6),
        ) {
            let grid = Grid::shared(vec![2, 3], vec![-0.5, 1.0], 0.125).unwrap();
            let u = Ultrafunction::new(grid, coeffs).unwrap();
            let json = serde_json::to_string(&UltrafunctionJson::of(&u)).unwrap();
            let back: UltrafunctionJson = serde_json::from_str(&json).unwrap();
            let v = back.build().unwrap();
            prop_assert_eq!(u.coeffs(), v.coeffs());
            prop_assert_eq!(u.grid().as_ref(), v.grid().as_ref());
        }
    }
}
