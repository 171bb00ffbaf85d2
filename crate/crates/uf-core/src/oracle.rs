//! Dense brute-force reference implementations.
//!
//! Everything here is deliberately slow, explicit, and independent of the
//! fast paths it validates: pairings are computed by looping over whole
//! bases, linear systems are solved by Gaussian elimination with partial
//! pivoting, and quadrature is plain midpoint refinement. Small grids
//! only.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::calculus::{gauss_check, DerivOperator, VectorUltrafunction};
use crate::grid::{FaceKey, Grid, Region};
use crate::ultraspace::{project_measure, Atom, RadonMeasureSpec, Ultrafunction};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("dense oracle limited to {limit} cells, grid has {got}")]
    TooLarge { got: usize, limit: usize },
    #[error("shape mismatch: {a} vs {b} entries")]
    ShapeMismatch { a: usize, b: usize },
    #[error("dense mass matrix reported singular; this cannot happen for a cell basis")]
    Singular,
}

const DENSE_CELL_LIMIT: usize = 4096;

/// A fully materialized linear map over all cells.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    grid: Arc<Grid>,
    n: usize,
    data: Vec<f64>, // row-major n x n
}

impl DenseOperator {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| (0..self.n).map(|c| self.entry(r, c) * v[c]).sum())
            .collect()
    }
}

// Literal per-axis weight of one cell's regularized characteristic at a
// point: 1 strictly inside, 1/2 on the cell's own face planes, 0 elsewhere.
// Written independently of the fast path on purpose.
fn literal_cell_weight(grid: &Grid, cell: usize, point: &[f64]) -> f64 {
    let mut weight = 1.0;
    for axis in 0..grid.dim() {
        let i = grid.axis_coord(cell, axis);
        let lo = grid.origin()[axis] + i as f64 * grid.h();
        let hi = lo + grid.h();
        let x = point[axis];
        let w = if x == lo || x == hi {
            0.5
        } else if x > lo && x < hi {
            1.0
        } else {
            0.0
        };
        if w == 0.0 {
            return 0.0;
        }
        weight *= w;
    }
    weight
}

// Midpoint rule with Richardson-style doubling, independent of the
// adaptive engine in `quadrature`.
pub fn oracle_cell_integral<F: Fn(&[f64]) -> f64 + ?Sized>(
    f: &F,
    lo: &[f64],
    hi: &[f64],
) -> f64 {
    let dim = lo.len();
    let rule = |pts: usize| -> f64 {
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        let mut weight = 1.0;
        for k in 0..dim {
            weight *= (hi[k] - lo[k]) / pts as f64;
        }
        let mut sum = 0.0;
        loop {
            for k in 0..dim {
                x[k] = lo[k] + (idx[k] as f64 + 0.5) * (hi[k] - lo[k]) / pts as f64;
            }
            sum += f(&x);
            let mut k = 0;
            loop {
                if k == dim {
                    return sum * weight;
                }
                idx[k] += 1;
                if idx[k] < pts {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    };
    let mut pts = 3usize;
    let mut prev = rule(pts);
    for _ in 0..8 {
        pts *= 2;
        let next = rule(pts);
        if (next - prev).abs() <= 1e-12 * next.abs().max(1.0) {
            return next;
        }
        prev = next;
    }
    prev
}

fn gaussian_elimination(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Result<Vec<f64>, OracleError> {
    for col in 0..n {
        // partial pivot
        let mut pivot = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * n + col] == 0.0 {
            return Err(OracleError::Singular);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}

/// Measure projection as an explicit linear solve: assembles the dense
/// mass matrix from cell overlaps, pairs the measure against every basis
/// characteristic by direct quadrature / trace / point evaluation, and
/// solves with Gaussian elimination.
pub fn dense_project_measure(
    mu: &RadonMeasureSpec,
    grid: &Arc<Grid>,
) -> Result<Ultrafunction, OracleError> {
    let n = grid.cell_count();
    if n > DENSE_CELL_LIMIT {
        return Err(OracleError::TooLarge {
            got: n,
            limit: DENSE_CELL_LIMIT,
        });
    }
    // mass matrix from axis-interval overlaps
    let mut mass = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let mut overlap = 1.0;
            for axis in 0..grid.dim() {
                let (ri, ci) = (grid.axis_coord(r, axis), grid.axis_coord(c, axis));
                let lo = (ri.max(ci)) as f64 * grid.h();
                let hi = (ri.min(ci) + 1) as f64 * grid.h();
                overlap *= (hi - lo).max(0.0);
            }
            mass[r * n + c] = overlap;
        }
    }

    let mut rhs = vec![0.0; n];
    if let Some(density) = &mu.density {
        for (v, slot) in rhs.iter_mut().enumerate() {
            let (lo, hi) = grid.cell_bounds(v);
            *slot += oracle_cell_integral(density.f.as_ref(), &lo, &hi);
        }
    }
    for (key, &w) in &mu.surface {
        grid.face_from_key(key).expect("face on grid");
        let center = grid.face_center(key);
        for (v, slot) in rhs.iter_mut().enumerate() {
            // the regularized trace of a basis characteristic on the face
            // plane is exactly its literal point weight at the face center
            let trace = literal_cell_weight(grid, v, &center);
            if trace != 0.0 {
                *slot += w * trace;
            }
        }
    }
    for atom in &mu.atoms {
        for (v, slot) in rhs.iter_mut().enumerate() {
            *slot += atom.mass * literal_cell_weight(grid, v, &atom.point);
        }
    }

    let coeffs = gaussian_elimination(mass, rhs, n)?;
    Ok(Ultrafunction::new(grid.clone(), coeffs).expect("finite solve"))
}

/// The derivative operator assembled entry by entry from the defining
/// pairing: the weak derivative of each basis function is its face-jump
/// measure, paired against every other basis characteristic's trace.
pub fn dense_derivative(grid: &Arc<Grid>, axis: usize) -> DenseOperator {
    let n = grid.cell_count();
    assert!(n <= DENSE_CELL_LIMIT, "dense oracle limited to small grids");
    let area = grid.face_area();
    let inv_vol = 1.0 / grid.cell_volume();
    let mut data = vec![0.0; n * n];

    // iterate every face of this axis via plane index + transverse coords
    let dim = grid.dim();
    let mut transverse = vec![0usize; dim];
    loop {
        for plane in 0..=grid.extent()[axis] {
            let mut at = transverse.clone();
            at[axis] = plane;
            let key = FaceKey { axis, at };
            let face = grid.face_from_key(&key).expect("enumerated face");
            let center = grid.face_center(&key);
            for col in 0..n {
                let chi_plus = if face.plus == Some(col) { 1.0 } else { 0.0 };
                let chi_minus = if face.minus == Some(col) { 1.0 } else { 0.0 };
                let jump = (chi_plus - chi_minus) * area;
                if jump == 0.0 {
                    continue;
                }
                for row in 0..n {
                    let trace = literal_cell_weight(grid, row, &center);
                    if trace != 0.0 {
                        data[row * n + col] += jump * trace * inv_vol;
                    }
                }
            }
        }
        // odometer over transverse coordinates (axis entry stays 0)
        let mut k = 0;
        loop {
            if k == dim {
                return DenseOperator {
                    grid: grid.clone(),
                    n,
                    data,
                };
            }
            if k == axis {
                k += 1;
                continue;
            }
            transverse[k] += 1;
            if transverse[k] < grid.extent()[k] {
                break;
            }
            transverse[k] = 0;
            k += 1;
        }
    }
}

/// Max-abs / max-relative comparison of two coefficient vectors.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub max_abs: f64,
    pub max_rel: f64,
    pub worst_index: Option<usize>,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn compare(a: &[f64], b: &[f64], tolerance: f64) -> Result<CompareReport, OracleError> {
    if a.len() != b.len() {
        return Err(OracleError::ShapeMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let mut max_abs = 0.0f64;
    let mut max_rel = 0.0f64;
    let mut worst = None;
    for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
        let dev = (x - y).abs();
        if dev > max_abs {
            max_abs = dev;
            worst = Some(i);
        }
        let scale = x.abs().max(y.abs());
        if scale > 0.0 {
            max_rel = max_rel.max(dev / scale);
        }
    }
    Ok(CompareReport {
        max_abs,
        max_rel,
        worst_index: worst,
        tolerance,
        pass: max_abs <= tolerance,
    })
}

/// One named check of a verification suite.
#[derive(Debug, Clone)]
pub struct SuiteCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub checks: Vec<SuiteCheck>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn push(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(SuiteCheck {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }
}

fn suite_grids() -> Vec<Arc<Grid>> {
    vec![
        Grid::shared(vec![4], vec![-0.5], 0.25).unwrap(),
        Grid::shared(vec![3, 3], vec![0.0, 0.0], 0.5).unwrap(),
        Grid::shared(vec![4, 3], vec![-1.0, 0.0], 0.25).unwrap(),
        Grid::shared(vec![2, 2, 2], vec![0.0, 0.0, 0.0], 0.5).unwrap(),
    ]
}

fn random_measure(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> RadonMeasureSpec {
    let dim = grid.dim();
    let coeff_a: f64 = rng.gen_range(-2.0..2.0);
    let coeffs: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut mu = RadonMeasureSpec::from_density(
        move |x: &[f64]| {
            let mut v = coeff_a;
            for (c, xi) in coeffs.iter().zip(x) {
                v += c * xi;
            }
            v
        },
        crate::quadrature::QuadratureSpec::default(),
    );
    // a few random faces
    for _ in 0..rng.gen_range(1..4) {
        let axis = rng.gen_range(0..dim);
        let mut at: Vec<usize> = (0..dim).map(|k| rng.gen_range(0..grid.extent()[k])).collect();
        at[axis] = rng.gen_range(0..=grid.extent()[axis]);
        mu.surface.insert(FaceKey { axis, at }, rng.gen_range(-1.0..1.0));
    }
    // atoms, some strictly inside cells and some exactly on face planes
    for i in 0..rng.gen_range(1..4) {
        let point: Vec<f64> = (0..dim)
            .map(|k| {
                let extent = grid.extent()[k];
                if i == 0 {
                    let plane = rng.gen_range(0..=extent);
                    grid.origin()[k] + plane as f64 * grid.h()
                } else {
                    let cell = rng.gen_range(0..extent);
                    grid.origin()[k] + (cell as f64 + rng.gen_range(0.1..0.9)) * grid.h()
                }
            })
            .collect();
        mu.atoms.push(Atom {
            point,
            mass: rng.gen_range(-1.0..1.0),
        });
    }
    mu
}

fn random_ultrafunction(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Ultrafunction {
    Ultrafunction::new(
        grid.clone(),
        (0..grid.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .expect("finite random coefficients")
}

/// Fast measure projection against the dense solve on every suite grid.
pub fn projection_suite(seed: u64, trials: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::default();
    for grid in suite_grids() {
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let mu = random_measure(&grid, &mut rng);
            let fast = project_measure(&mu, &grid).expect("valid random measure").into_values();
            let dense = dense_project_measure(&mu, &grid).expect("small grid");
            let cmp = compare(fast.coeffs(), dense.coeffs(), 1e-12).expect("same shape");
            worst = worst.max(cmp.max_abs);
        }
        report.push(
            format!("projection vs dense solve, grid {:?}", grid.extent()),
            worst <= 1e-12,
            format!("max |fast - dense| = {worst:.3e} over {trials} measures"),
        );
    }
    report
}

/// Sparse stencil against the dense pairing matrix, and the antisymmetry
/// of the mass-weighted matrix.
pub fn derivative_suite() -> SuiteReport {
    let mut report = SuiteReport::default();
    for grid in suite_grids() {
        let n = grid.cell_count();
        for axis in 0..grid.dim() {
            let dense = dense_derivative(&grid, axis);
            let sparse = DerivOperator::new(grid.clone(), axis).unwrap();
            let mut max_dev = 0.0f64;
            for r in 0..n {
                for c in 0..n {
                    max_dev = max_dev.max((dense.entry(r, c) - sparse.entry(r, c)).abs());
                }
            }
            report.push(
                format!("dense pairing = stencil, grid {:?} axis {axis}", grid.extent()),
                max_dev <= 1e-14,
                format!("entrywise deviation {max_dev:.3e}"),
            );

            // M D antisymmetric entrywise; M is vol * identity here
            let vol = grid.cell_volume();
            let mut max_asym = 0.0f64;
            for r in 0..n {
                for c in 0..n {
                    max_asym =
                        max_asym.max((vol * dense.entry(r, c) + vol * dense.entry(c, r)).abs());
                }
            }
            report.push(
                format!("mass-weighted antisymmetry, grid {:?} axis {axis}", grid.extent()),
                max_asym <= 1e-14,
                format!("max |(MD) + (MD)^T| = {max_asym:.3e}"),
            );
        }
    }
    report
}

/// Divergence identities on random fields and regions.
pub fn gauss_suite(seed: u64, trials: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::default();
    for grid in suite_grids().into_iter().filter(|g| g.dim() >= 2) {
        let mut worst_lemma = 0.0f64;
        let mut worst_pointwise = 0.0f64;
        let mut worst_corner_split = 0.0f64;
        for _ in 0..trials {
            let phi = VectorUltrafunction::new(
                (0..grid.dim()).map(|_| random_ultrafunction(&grid, &mut rng)).collect(),
            )
            .unwrap();
            let cells: Vec<usize> =
                (0..grid.cell_count()).filter(|_| rng.gen_bool(0.5)).collect();
            if cells.is_empty() {
                continue;
            }
            let region = Region::from_linear(grid.clone(), cells).unwrap();
            let r = gauss_check(&phi, &region).unwrap();
            worst_lemma = worst_lemma.max(r.residual_lemma / r.scale);
            worst_pointwise = worst_pointwise.max(r.residual_pointwise / r.scale);
            worst_corner_split = worst_corner_split
                .max((r.rhs_tv - r.rhs_pointwise - r.corner_discrepancy).abs() / r.scale);
        }
        report.push(
            format!("integration by parts, grid {:?}", grid.extent()),
            worst_lemma <= 1e-12,
            format!("max relative residual {worst_lemma:.3e}"),
        );
        report.push(
            format!("divergence theorem (pointwise), grid {:?}", grid.extent()),
            worst_pointwise <= 1e-12,
            format!("max relative residual {worst_pointwise:.3e}"),
        );
        report.push(
            format!("TV gap localized at corners, grid {:?}", grid.extent()),
            worst_corner_split <= 1e-12,
            format!("max relative residual {worst_corner_split:.3e}"),
        );
    }
    report
}

/// The 1 / 0 / one-half values of regularized characteristics.
pub fn lebesgue_suite() -> SuiteReport {
    use crate::lebesgue::{lebesgue_average_piecewise, EtaRadius, RegularizedCharacteristic};
    let mut report = SuiteReport::default();
    let grid = Grid::shared(vec![4, 4], vec![0.0, 0.0], 0.25).unwrap();
    let half: Vec<Vec<usize>> = (0..4)
        .flat_map(|j| (0..2).map(move |i| vec![i, j]))
        .collect();
    let region = Region::from_coords(grid.clone(), half).unwrap();
    let chi = RegularizedCharacteristic::new(region);
    let eta = EtaRadius::new(0.06).unwrap();

    let interior = chi.eval(&[0.3, 0.6]);
    let exterior = chi.eval(&[0.8, 0.6]);
    let on_face = chi.eval(&[0.5, 0.6]);
    report.push(
        "characteristic point values",
        interior == 1.0 && exterior == 0.0 && on_face == 0.5,
        format!("inside {interior}, outside {exterior}, face {on_face}"),
    );

    let avg_face = lebesgue_average_piecewise(chi.values(), &[0.5, 0.6], eta).unwrap();
    let avg_in = lebesgue_average_piecewise(chi.values(), &[0.3, 0.6], eta).unwrap();
    report.push(
        "ball averages across the jump",
        avg_face == 0.5 && avg_in == 1.0,
        format!("face average {avg_face}, interior average {avg_in}"),
    );
    report
}

/// Everything, in a fixed order.
pub fn all_suites(seed: u64) -> SuiteReport {
    let mut report = SuiteReport::default();
    report.checks.extend(projection_suite(seed, 25).checks);
    report.checks.extend(derivative_suite().checks);
    report.checks.extend(gauss_suite(seed ^ 0x9e3779b9, 20).checks);
    report.checks.extend(lebesgue_suite().checks);
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_reports() {
        let a = vec![1.0, 2.0, 3.0];
        let r = compare(&a, &a, 1e-12).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_abs, 0.0);

        let mut b = a.clone();
        b[1] += 1e-9;
        let r = compare(&a, &b, 1e-12).unwrap();
        assert!(!r.pass);
        assert_eq!(r.worst_index, Some(1));

        assert!(matches!(
            compare(&a, &b[..2], 1e-12),
            Err(OracleError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn dense_derivative_1d_rows() {
        let h = 0.2;
        let g = Grid::shared(vec![5], vec![0.0], h).unwrap();
        let d = dense_derivative(&g, 0);
        for r in 1..4 {
            for c in 0..5 {
                let expect = if c == r + 1 {
                    1.0 / (2.0 * h)
                } else if c + 1 == r {
                    -1.0 / (2.0 * h)
                } else {
                    0.0
                };
                assert!(
                    (d.entry(r, c) - expect).abs() <= 1e-14,
                    "row {r} col {c}: {}",
                    d.entry(r, c)
                );
            }
        }
        // boundary rows keep the zero extension
        assert!((d.entry(0, 1) - 1.0 / (2.0 * h)).abs() <= 1e-14);
        assert!(d.entry(0, 0).abs() <= 1e-14);
    }

    #[test]
    fn interior_row_sums_vanish_2d() {
        let g = Grid::shared(vec![3, 3], vec![0.0, 0.0], 1.0).unwrap();
        for axis in 0..2 {
            let d = dense_derivative(&g, axis);
            let center = g.linear(&[1, 1]);
            let sum: f64 = (0..9).map(|c| d.entry(center, c)).sum();
            assert!(sum.abs() <= 1e-14);
        }
    }

    #[test]
    fn dirac_density_surface_match_fast_path() {
        let g = Grid::shared(vec![3, 3], vec![0.0, 0.0], 0.5).unwrap();

        let dirac = RadonMeasureSpec {
            density: None,
            surface: Default::default(),
            atoms: vec![Atom {
                point: vec![0.6, 1.1],
                mass: 1.0,
            }],
        };
        let dense = dense_project_measure(&dirac, &g).unwrap();
        let fast = project_measure(&dirac, &g).unwrap().into_values();
        assert!(compare(dense.coeffs(), fast.coeffs(), 1e-12).unwrap().pass);

        let density = RadonMeasureSpec::from_density(
            |x: &[f64]| 1.0 + x[0] - 0.5 * x[1],
            crate::quadrature::QuadratureSpec::default(),
        );
        let dense = dense_project_measure(&density, &g).unwrap();
        let fast = project_measure(&density, &g).unwrap().into_values();
        assert!(compare(dense.coeffs(), fast.coeffs(), 1e-12).unwrap().pass);

        let mut surface = RadonMeasureSpec {
            density: None,
            surface: Default::default(),
            atoms: vec![],
        };
        surface.surface.insert(
            FaceKey {
                axis: 0,
                at: vec![1, 1],
            },
            0.7,
        );
        let dense = dense_project_measure(&surface, &g).unwrap();
        let fast = project_measure(&surface, &g).unwrap().into_values();
        assert!(compare(dense.coeffs(), fast.coeffs(), 1e-12).unwrap().pass);
        // closed form: w / (2 h^N) on both neighbors
        let expect = 0.7 / (2.0 * g.cell_volume());
        assert!((dense.coeff(g.linear(&[0, 1])) - expect).abs() <= 1e-12);
        assert!((dense.coeff(g.linear(&[1, 1])) - expect).abs() <= 1e-12);
    }

    #[test]
    fn suites_pass() {
        let report = all_suites(0xc0ffee);
        for check in &report.checks {
            assert!(check.pass, "{}: {}", check.name, check.detail);
        }
    }
}
