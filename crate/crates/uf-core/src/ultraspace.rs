//! The finite stage: piecewise-constant functions over a grid, the mass
//! inner product, and the projection of functions and measures.
//!
//! An [`Ultrafunction`] is a coefficient per cell in the basis of cell
//! characteristic functions. The mass matrix of that basis is diagonal
//! (`h^N` per cell), so the orthogonal projection of a density is the cell
//! average, and the projection of a general measure divides the pairing
//! with each regularized cell characteristic by the cell volume.
//!
//! Point evaluation uses the regularized value: the cell value at interior
//! points, and the mean over all cells whose closure contains the point
//! elsewhere, with the EXTERIOR counted as zero. On a face this is the
//! mean of the two adjacent values; the same rule gives the pairing of a
//! surface measure against a test function its 1/2 trace weights.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{FaceKey, Grid};
use crate::quadrature::{integrate_box, QuadratureError, QuadratureSpec};
use crate::summation::{pairwise_sum, pairwise_sum_by};

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("coefficient array has length {got}, grid has {want} cells")]
    CoefficientLength { got: usize, want: usize },
    #[error("coefficient {index} is not finite")]
    NonFiniteCoefficient { index: usize },
    #[error("grids are not nested stages")]
    NotNested,
}

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("surface weight on a face that does not belong to the grid: {0}")]
    FaceNotOnGrid(String),
    #[error("atom at {point:?} lies outside the grid box")]
    AtomOutsideBox { point: Vec<f64> },
    #[error("measure weight is not finite")]
    NonFiniteWeight,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// An element of the stage space: one coefficient per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Ultrafunction {
    grid: Arc<Grid>,
    coeffs: Vec<f64>,
}

impl Ultrafunction {
    pub fn new(grid: Arc<Grid>, coeffs: Vec<f64>) -> Result<Ultrafunction, SpaceError> {
        if coeffs.len() != grid.cell_count() {
            return Err(SpaceError::CoefficientLength {
                got: coeffs.len(),
                want: grid.cell_count(),
            });
        }
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(SpaceError::NonFiniteCoefficient { index });
        }
        Ok(Ultrafunction { grid, coeffs })
    }

    /// Constructor for internal hot paths; finiteness is checked by callers.
    pub(crate) fn from_raw(grid: Arc<Grid>, coeffs: Vec<f64>) -> Ultrafunction {
        debug_assert_eq!(coeffs.len(), grid.cell_count());
        Ultrafunction { grid, coeffs }
    }

    pub fn zero(grid: Arc<Grid>) -> Ultrafunction {
        let n = grid.cell_count();
        Ultrafunction {
            grid,
            coeffs: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, linear: usize) -> f64 {
        self.coeffs[linear]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// True when some coefficient within `margin` cells of the grid box
    /// boundary exceeds `tol` in magnitude.
    pub fn support_reaches_margin(&self, margin: usize, tol: f64) -> bool {
        let grid = self.grid.as_ref();
        (0..grid.cell_count()).any(|c| {
            if self.coeffs[c].abs() <= tol {
                return false;
            }
            (0..grid.dim()).any(|axis| {
                let i = grid.axis_coord(c, axis);
                i < margin || i + margin >= grid.extent()[axis]
            })
        })
    }

    /// Regularized point value: tensor mean over adjacent cells, zero
    /// extension outside the grid box.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.grid.dim());
        let options = axis_options(self.grid.as_ref(), x);
        let mut value = 0.0;
        let mut pick = vec![0usize; options.len()];
        'outer: loop {
            let mut weight = 1.0;
            let mut linear = 0usize;
            let mut inside = true;
            for (k, opts) in options.iter().enumerate() {
                let (cell, w) = opts[pick[k] % opts.len()];
                weight *= w;
                match cell {
                    Some(i) => linear += i * self.grid.strides_at(k),
                    None => inside = false,
                }
            }
            if inside && weight != 0.0 {
                value += weight * self.coeffs[linear];
            }
            // odometer over the per-axis options
            for k in 0..options.len() {
                pick[k] += 1;
                if pick[k] < options[k].len() {
                    continue 'outer;
                }
                pick[k] = 0;
            }
            break;
        }
        value
    }

    /// Cellwise product; the stage realization of the pointwise product of
    /// bounded functions of bounded variation.
    pub fn pointwise_multiply(&self, other: &Ultrafunction) -> Result<Ultrafunction, SpaceError> {
        if self.grid.as_ref() != other.grid.as_ref() {
            return Err(SpaceError::GridMismatch);
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Ultrafunction {
            grid: self.grid.clone(),
            coeffs,
        })
    }

    /// Mass inner product `h^N * sum_c u_c v_c`.
    pub fn inner_product(&self, other: &Ultrafunction) -> Result<f64, SpaceError> {
        if self.grid.as_ref() != other.grid.as_ref() {
            return Err(SpaceError::GridMismatch);
        }
        let vol = self.grid.cell_volume();
        Ok(vol * pairwise_sum_by(self.coeffs.len(), |i| self.coeffs[i] * other.coeffs[i]))
    }

    pub fn norm(&self) -> f64 {
        let vol = self.grid.cell_volume();
        (vol * pairwise_sum_by(self.coeffs.len(), |i| self.coeffs[i] * self.coeffs[i])).sqrt()
    }

    /// Integral over the whole box, `h^N * sum_c u_c`.
    pub fn total_integral(&self) -> f64 {
        self.grid.cell_volume() * pairwise_sum(&self.coeffs)
    }
}

// Per-axis evaluation options: a point strictly inside a cell slab yields
// that cell with weight 1; a point on a face plane yields the two adjacent
// slabs with weight 1/2 each (EXTERIOR slabs yield None).
fn axis_options(grid: &Grid, x: &[f64]) -> Vec<Vec<(Option<usize>, f64)>> {
    (0..grid.dim())
        .map(|k| {
            let o = grid.origin()[k];
            let h = grid.h();
            let e = grid.extent()[k];
            let t = (x[k] - o) / h;
            let plane = t.round();
            let on_plane = plane >= 0.0 && plane <= e as f64 && x[k] == o + plane * h;
            if on_plane {
                let p = plane as isize;
                let lower = p - 1;
                let upper = p;
                let as_cell = |i: isize| -> Option<usize> {
                    if i < 0 || i as usize >= e {
                        None
                    } else {
                        Some(i as usize)
                    }
                };
                vec![(as_cell(lower), 0.5), (as_cell(upper), 0.5)]
            } else if t < 0.0 || t >= e as f64 {
                vec![(None, 1.0)]
            } else {
                vec![(Some(t.floor() as usize), 1.0)]
            }
        })
        .collect()
}

/// Weight of one cell's regularized characteristic at a point: the tensor
/// product of per-axis weights (1 inside, 1/2 on the cell's face planes,
/// 0 elsewhere).
pub fn cell_weight_at_point(grid: &Grid, cell: usize, x: &[f64]) -> f64 {
    let options = axis_options(grid, x);
    let mut weight = 1.0;
    for (k, opts) in options.iter().enumerate() {
        let i = grid.axis_coord(cell, k);
        let mut w = 0.0;
        for &(c, cw) in opts {
            if c == Some(i) {
                w += cw;
            }
        }
        if w == 0.0 {
            return 0.0;
        }
        weight *= w;
    }
    weight
}

/// A finite signed measure presented in the three parts the stage pairing
/// understands: an integrable density, weights on grid faces, and point
/// masses.
pub struct RadonMeasureSpec {
    pub density: Option<Density>,
    pub surface: BTreeMap<FaceKey, f64>,
    pub atoms: Vec<Atom>,
}

pub struct Density {
    pub f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub quadrature: QuadratureSpec,
}

#[derive(Debug, Clone)]
pub struct Atom {
    pub point: Vec<f64>,
    pub mass: f64,
}

impl RadonMeasureSpec {
    pub fn from_density(
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        quadrature: QuadratureSpec,
    ) -> RadonMeasureSpec {
        RadonMeasureSpec {
            density: Some(Density {
                f: Arc::new(f),
                quadrature,
            }),
            surface: BTreeMap::new(),
            atoms: Vec::new(),
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<(), MeasureError> {
        for (key, w) in &self.surface {
            if !w.is_finite() {
                return Err(MeasureError::NonFiniteWeight);
            }
            grid.face_from_key(key)
                .map_err(|e| MeasureError::FaceNotOnGrid(e.to_string()))?;
        }
        for atom in &self.atoms {
            if !atom.mass.is_finite() {
                return Err(MeasureError::NonFiniteWeight);
            }
            if atom.point.len() != grid.dim() || !grid.contains_point(&atom.point) {
                return Err(MeasureError::AtomOutsideBox {
                    point: atom.point.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Projection output: the coefficients plus the quadrature ledger.
pub struct Projection {
    pub values: Ultrafunction,
    /// Sum of per-cell quadrature error estimates.
    pub error_estimate: f64,
    /// Cells whose adaptive quadrature hit the depth cap.
    pub unconverged_cells: Vec<usize>,
}

impl Projection {
    pub fn into_values(self) -> Ultrafunction {
        self.values
    }
}

/// Orthogonal projection of a pointwise-evaluable function: the cell
/// average, computed per cell by adaptive quadrature.
pub fn project_function<F: Fn(&[f64]) -> f64 + Sync + ?Sized>(
    f: &F,
    grid: &Arc<Grid>,
    spec: &QuadratureSpec,
) -> Result<Projection, QuadratureError> {
    let inv_vol = 1.0 / grid.cell_volume();
    let per_cell: Vec<Result<crate::quadrature::QuadResult, QuadratureError>> = (0..grid
        .cell_count())
        .into_par_iter()
        .map(|c| {
            let (lo, hi) = grid.cell_bounds(c);
            integrate_box(f, &lo, &hi, spec)
        })
        .collect();
    let mut coeffs = Vec::with_capacity(per_cell.len());
    let mut unconverged = Vec::new();
    let mut err_acc = 0.0;
    for (c, r) in per_cell.into_iter().enumerate() {
        let r = r?;
        coeffs.push(r.value * inv_vol);
        err_acc += r.error_estimate * inv_vol;
        if !r.converged {
            unconverged.push(c);
        }
    }
    Ok(Projection {
        values: Ultrafunction::from_raw(grid.clone(), coeffs),
        error_estimate: err_acc,
        unconverged_cells: unconverged,
    })
}

/// Projection of a measure: the unique stage element pairing like the
/// measure against every test function. With the diagonal mass matrix the
/// coefficient at a cell is the pairing of the measure with that cell's
/// regularized characteristic, divided by the cell volume: densities pair
/// against cell interiors, face weights against the 1/2 traces, atoms
/// against the regularized point value.
pub fn project_measure(
    mu: &RadonMeasureSpec,
    grid: &Arc<Grid>,
) -> Result<Projection, MeasureError> {
    mu.validate(grid)?;
    let n = grid.cell_count();
    let inv_vol = 1.0 / grid.cell_volume();

    let mut projection = match &mu.density {
        Some(d) => project_function(d.f.as_ref(), grid, &d.quadrature)?,
        None => Projection {
            values: Ultrafunction::zero(grid.clone()),
            error_estimate: 0.0,
            unconverged_cells: Vec::new(),
        },
    };
    let coeffs = &mut projection.values.coeffs;

    for (key, &w) in &mu.surface {
        let face = grid
            .face_from_key(key)
            .expect("validated face key");
        for cell in [face.minus, face.plus].into_iter().flatten() {
            coeffs[cell] += 0.5 * w * inv_vol;
        }
    }

    for atom in &mu.atoms {
        // at most 2^dim cells have nonzero weight at a point
        let options = axis_options(grid.as_ref(), &atom.point);
        let mut pick = vec![0usize; options.len()];
        'outer: loop {
            let mut weight = 1.0;
            let mut linear = 0usize;
            let mut inside = true;
            for (k, opts) in options.iter().enumerate() {
                let (cell, cw) = opts[pick[k] % opts.len()];
                weight *= cw;
                match cell {
                    Some(i) => linear += i * grid.strides_at(k),
                    None => inside = false,
                }
            }
            if inside && weight != 0.0 {
                coeffs[linear] += weight * atom.mass * inv_vol;
            }
            for k in 0..options.len() {
                pick[k] += 1;
                if pick[k] < options[k].len() {
                    continue 'outer;
                }
                pick[k] = 0;
            }
            break;
        }
    }

    debug_assert_eq!(coeffs.len(), n);
    Ok(projection)
}

/// Restriction onto a coarser nested stage: each coarse coefficient is the
/// mean of its `factor^N` children, which is the orthogonal projection of
/// the fine function onto the coarse space.
pub fn restrict_to_coarse(
    fine: &Ultrafunction,
    coarse: &Arc<Grid>,
) -> Result<Ultrafunction, SpaceError> {
    let factor = fine
        .grid()
        .refinement_factor_of(coarse)
        .ok_or(SpaceError::NotNested)?;
    let fgrid = fine.grid().as_ref();
    let dim = coarse.dim();
    let children_per_cell = factor.pow(dim as u32);
    let inv = 1.0 / children_per_cell as f64;
    let mut coeffs = vec![0.0; coarse.cell_count()];
    let mut child = vec![0usize; dim];
    for (c, slot) in coeffs.iter_mut().enumerate() {
        let base = coarse.coords(c);
        let mut vals = Vec::with_capacity(children_per_cell);
        child.iter_mut().for_each(|v| *v = 0);
        loop {
            let coords: Vec<usize> = base
                .iter()
                .zip(&child)
                .map(|(&b, &o)| b * factor + o)
                .collect();
            vals.push(fine.coeff(fgrid.linear(&coords)));
            let mut k = 0;
            loop {
                if k == dim {
                    *slot = pairwise_sum(&vals) * inv;
                    break;
                }
                child[k] += 1;
                if child[k] < factor {
                    break;
                }
                child[k] = 0;
                k += 1;
            }
            if child.iter().all(|&v| v == 0) {
                break;
            }
        }
    }
    Ok(Ultrafunction::from_raw(coarse.clone(), coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Region;

    fn grid_2d(n: usize, h: f64) -> Arc<Grid> {
        Grid::shared(vec![n, n], vec![0.0, 0.0], h).unwrap()
    }

    fn indicator(region: &Region) -> Ultrafunction {
        let grid = region.grid().clone();
        let mut coeffs = vec![0.0; grid.cell_count()];
        for c in region.cells() {
            coeffs[c] = 1.0;
        }
        Ultrafunction::from_raw(grid, coeffs)
    }

    #[test]
    fn rejects_bad_coefficients() {
        let g = grid_2d(2, 1.0);
        assert!(matches!(
            Ultrafunction::new(g.clone(), vec![0.0; 3]),
            Err(SpaceError::CoefficientLength { .. })
        ));
        assert!(matches!(
            Ultrafunction::new(g, vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(SpaceError::NonFiniteCoefficient { index: 1 })
        ));
    }

    #[test]
    fn project_constant_is_exact() {
        let g = grid_2d(3, 0.5);
        let p = project_function(&|_: &[f64]| 1.0, &g, &QuadratureSpec::default()).unwrap();
        assert!(p.values.coeffs().iter().all(|&c| c == 1.0));
        assert!(p.unconverged_cells.is_empty());
    }

    #[test]
    fn projection_fixes_stage_functions() {
        let g = grid_2d(4, 0.25);
        let u = Ultrafunction::new(
            g.clone(),
            (0..16).map(|i| (i as f64 * 0.37).sin()).collect(),
        )
        .unwrap();
        let back = project_function(&|x: &[f64]| u.eval(x), &g, &QuadratureSpec::default())
            .unwrap()
            .into_values();
        for (a, b) in u.coeffs().iter().zip(back.coeffs()) {
            assert_eq!(a, b, "projection must be the identity on the stage");
        }
    }

    #[test]
    fn project_affine_gives_cell_centers() {
        let g = Grid::shared(vec![5], vec![-1.0], 0.4).unwrap();
        let p = project_function(&|x: &[f64]| 2.0 * x[0] + 1.0, &g, &QuadratureSpec::default())
            .unwrap()
            .into_values();
        for c in 0..5 {
            let center = g.cell_center(c)[0];
            assert!((p.coeff(c) - (2.0 * center + 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn eval_conventions() {
        let g = Grid::shared(vec![2], vec![0.0], 1.0).unwrap();
        let u = Ultrafunction::new(g.clone(), vec![0.0, 1.0]).unwrap();
        assert_eq!(u.eval(&[0.5]), 0.0); // cell interior
        assert_eq!(u.eval(&[1.0]), 0.5); // face between 0 and 1
        assert_eq!(u.eval(&[2.0]), 0.5); // outer boundary: mean with EXTERIOR 0
        assert_eq!(u.eval(&[2.5]), 0.0); // outside the box
        let v = Ultrafunction::new(g, vec![3.0, 1.0]).unwrap();
        assert_eq!(v.eval(&[0.0]), 1.5); // outer boundary with inside value 3
    }

    #[test]
    fn eval_at_corner_averages_four_cells() {
        let g = grid_2d(2, 1.0);
        let u = Ultrafunction::new(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(u.eval(&[1.0, 1.0]), 2.5);
        // grid box corner: one real cell, three EXTERIOR quadrants
        let w = u.eval(&[0.0, 0.0]);
        assert_eq!(w, 0.25);
    }

    #[test]
    fn inner_products() {
        let g = grid_2d(3, 1.0);
        let chi = indicator(&Region::full(g.clone()));
        assert_eq!(chi.inner_product(&chi).unwrap(), 9.0);

        let a = Ultrafunction::new(g.clone(), {
            let mut v = vec![0.0; 9];
            v[0] = 2.0;
            v
        })
        .unwrap();
        let b = Ultrafunction::new(g.clone(), {
            let mut v = vec![0.0; 9];
            v[8] = 5.0;
            v
        })
        .unwrap();
        assert_eq!(a.inner_product(&b).unwrap(), 0.0);

        assert_eq!(Ultrafunction::zero(g.clone()).norm(), 0.0);
        assert!(a.norm() > 0.0);

        let other = grid_2d(3, 0.5);
        let c = Ultrafunction::zero(other);
        assert!(matches!(a.inner_product(&c), Err(SpaceError::GridMismatch)));
    }

    #[test]
    fn pointwise_multiply_is_cellwise_and_localizes() {
        let g = grid_2d(4, 0.5);
        let omega = Region::from_coords(
            g.clone(),
            [[0usize, 0usize], [0, 1], [1, 0], [1, 1], [2, 2]],
        )
        .unwrap();
        let theta = Region::from_coords(g.clone(), [[1usize, 1usize], [2, 2], [3, 3]]).unwrap();
        let chi_o = indicator(&omega);
        let chi_t = indicator(&theta);
        let both = chi_o.pointwise_multiply(&chi_t).unwrap();
        let inter = indicator(&omega.intersection(&theta).unwrap());
        assert_eq!(both.coeffs(), inter.coeffs());

        // restriction leaves functions supported inside the region alone
        let mut coeffs = vec![0.0; 16];
        coeffs[g.linear(&[1, 1])] = 7.0;
        let u = Ultrafunction::new(g.clone(), coeffs).unwrap();
        let restricted = u.pointwise_multiply(&chi_o).unwrap();
        assert_eq!(restricted.coeffs(), u.coeffs());
    }

    #[test]
    fn localized_inner_product_is_a_cell_sum() {
        // mass pairing of restricted functions equals the brute-force sum
        // over the intersection
        let g = grid_2d(4, 0.5);
        let mut seed = 1u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            (seed >> 33) as f64 / (1u64 << 31) as f64 - 1.0
        };
        let u = Ultrafunction::new(g.clone(), (0..16).map(|_| next()).collect()).unwrap();
        let v = Ultrafunction::new(g.clone(), (0..16).map(|_| next()).collect()).unwrap();
        let omega = Region::from_box(g.clone(), &[0.0, 0.0], &[1.0, 2.0]);
        let theta = Region::from_box(g.clone(), &[0.5, 0.5], &[2.0, 2.0]);
        let lhs = u
            .pointwise_multiply(&indicator(&omega))
            .unwrap()
            .inner_product(&v.pointwise_multiply(&indicator(&theta)).unwrap())
            .unwrap();
        let inter = omega.intersection(&theta).unwrap();
        let mut rhs = 0.0;
        for c in inter.cells() {
            rhs += u.coeff(c) * v.coeff(c) * g.cell_volume();
        }
        assert!((lhs - rhs).abs() <= 1e-15);
    }

    #[test]
    fn measure_projection_edge_errors() {
        let g = grid_2d(3, 1.0);
        let mut mu = RadonMeasureSpec {
            density: None,
            surface: BTreeMap::new(),
            atoms: vec![Atom {
                point: vec![5.0, 0.5],
                mass: 1.0,
            }],
        };
        assert!(matches!(
            project_measure(&mu, &g),
            Err(MeasureError::AtomOutsideBox { .. })
        ));
        mu.atoms.clear();
        mu.surface.insert(
            FaceKey {
                axis: 0,
                at: vec![7, 0],
            },
            1.0,
        );
        assert!(matches!(
            project_measure(&mu, &g),
            Err(MeasureError::FaceNotOnGrid(_))
        ));
    }

    #[test]
    fn dirac_atom_projects_to_scaled_indicator() {
        let g = grid_2d(3, 0.5);
        let mu = RadonMeasureSpec {
            density: None,
            surface: BTreeMap::new(),
            atoms: vec![Atom {
                point: vec![0.75, 1.25],
                mass: 1.0,
            }],
        };
        let p = project_measure(&mu, &g).unwrap().into_values();
        let target = g.linear(&[1, 2]);
        for c in 0..9 {
            if c == target {
                assert_eq!(p.coeff(c), 1.0 / g.cell_volume());
            } else {
                assert_eq!(p.coeff(c), 0.0);
            }
        }
    }

    #[test]
    fn interior_face_weight_splits_between_neighbors() {
        let g = grid_2d(3, 0.5);
        let mut surface = BTreeMap::new();
        surface.insert(
            FaceKey {
                axis: 1,
                at: vec![1, 2],
            },
            0.8,
        );
        let mu = RadonMeasureSpec {
            density: None,
            surface,
            atoms: vec![],
        };
        let p = project_measure(&mu, &g).unwrap().into_values();
        let expected = 0.8 / (2.0 * g.cell_volume());
        assert_eq!(p.coeff(g.linear(&[1, 1])), expected);
        assert_eq!(p.coeff(g.linear(&[1, 2])), expected);
        let total: f64 = p.coeffs().iter().filter(|c| **c != 0.0).count() as f64;
        assert_eq!(total, 2.0);
    }

    #[test]
    fn density_measure_matches_function_projection() {
        let g = grid_2d(3, 1.0);
        let f = |x: &[f64]| x[0] + 2.0 * x[1];
        let via_measure = project_measure(
            &RadonMeasureSpec::from_density(f, QuadratureSpec::default()),
            &g,
        )
        .unwrap()
        .into_values();
        let direct = project_function(&f, &g, &QuadratureSpec::default())
            .unwrap()
            .into_values();
        assert_eq!(via_measure.coeffs(), direct.coeffs());
    }

    #[test]
    fn nested_stage_restriction_commutes_with_projection() {
        let coarse = grid_2d(4, 0.25);
        let fine = Arc::new(coarse.refined(2));
        let f = |x: &[f64]| (3.0 * x[0]).sin() * (2.0 - x[1]);
        let spec = QuadratureSpec::default();
        let direct = project_function(&f, &coarse, &spec).unwrap().into_values();
        let fine_p = project_function(&f, &fine, &spec).unwrap().into_values();
        let restricted = restrict_to_coarse(&fine_p, &coarse).unwrap();
        for (a, b) in direct.coeffs().iter().zip(restricted.coeffs()) {
            assert!((a - b).abs() < 1e-9, "stage nesting violated: {a} vs {b}");
        }
    }

    #[test]
    fn singular_density_has_finite_growing_peak() {
        // cell average of 1/|x| in 2D on a cell centered at the origin
        // grows like 1/h; the constant is 4 ln(1+sqrt 2)
        let peak = |h: f64| {
            let n = 4usize;
            let origin = -(n as f64 / 2.0 + 0.5) * h;
            let g = Grid::shared(vec![n, n], vec![origin, origin], h).unwrap();
            let p = project_function(
                &|x: &[f64]| 1.0 / (x[0] * x[0] + x[1] * x[1]).sqrt(),
                &g,
                &QuadratureSpec::default(),
            )
            .unwrap()
            .into_values();
            let center = g
                .locate(&[-h * 0.01, -h * 0.01])
                .expect("origin cell exists");
            let center_val = p.coeff(center);
            let neighbor = p.coeff(g.neighbor(center, 0, 1).unwrap());
            assert!(center_val > 2.0 * neighbor);
            center_val
        };
        let exact = |h: f64| 4.0 * (1.0 + 2.0f64.sqrt()).ln() / h;
        for h in [0.1, 0.05] {
            let v = peak(h);
            assert!(
                (v - exact(h)).abs() < 1e-5 * exact(h),
                "peak {v} vs analytic {}",
                exact(h)
            );
        }
        let ratio = peak(0.05) / peak(0.1);
        assert!((ratio - 2.0).abs() < 0.2);
    }
}
