//! Ball-average regularization with a finite radius.
//!
//! The regularization of a function at a point is its mean over the ball
//! of radius `eta`. The radius is constrained to `eta < h/2` on any grid
//! it touches, so the ball meets at most one face plane per axis. For
//! piecewise-constant data the average is then analytic whenever at most
//! one plane cuts the ball (the cap-volume fraction on each side), and is
//! computed by recursive slicing otherwise: the innermost direction is an
//! exact chord integral, and the outer directions are adaptive midpoint
//! quadrature in an angular variable that removes the rim singularity,
//! split at the known face planes.
//!
//! On a jump surface the average is the mean of the two one-sided values;
//! that is the 1/2 rule carried by [`RegularizedCharacteristic`] and by
//! point evaluation of stage functions.

use std::cell::RefCell;

use thiserror::Error;

use crate::grid::{FaceKey, Grid, Region};
use crate::quadrature::{adaptive_midpoint_1d, QuadratureError};
use crate::ultraspace::Ultrafunction;

#[derive(Debug, Error)]
pub enum EtaError {
    #[error("regularization radius must be positive and finite, got {eta}")]
    NotPositive { eta: f64 },
    #[error("radius {eta} must stay below h/2 = {limit} of the grid")]
    TooLargeForGrid { eta: f64, limit: f64 },
}

/// The regularization radius; a finite stand-in for a fixed infinitesimal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaRadius {
    eta: f64,
}

impl EtaRadius {
    pub fn new(eta: f64) -> Result<EtaRadius, EtaError> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(EtaError::NotPositive { eta });
        }
        Ok(EtaRadius { eta })
    }

    pub fn value(&self) -> f64 {
        self.eta
    }

    /// Balls must never span more than one face plane per axis.
    pub fn validate_for(&self, grid: &Grid) -> Result<(), EtaError> {
        let limit = 0.5 * grid.h();
        if self.eta >= limit {
            return Err(EtaError::TooLargeForGrid {
                eta: self.eta,
                limit,
            });
        }
        Ok(())
    }
}

/// Volume of the unit ball in `dim` dimensions.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(dim - 2) * 2.0 * std::f64::consts::PI / dim as f64,
    }
}

// int_a^b cos^k(phi) dphi by the standard reduction formula.
fn cos_power_integral(k: usize, a: f64, b: f64) -> f64 {
    match k {
        0 => b - a,
        1 => b.sin() - a.sin(),
        _ => {
            let boundary = (b.cos().powi(k as i32 - 1) * b.sin()
                - a.cos().powi(k as i32 - 1) * a.sin())
                / k as f64;
            boundary + (k - 1) as f64 / k as f64 * cos_power_integral(k - 2, a, b)
        }
    }
}

/// Fraction of the unit ball's volume lying at signed distance `>= t`
/// from the center along one axis, `t` in `[-1, 1]`.
pub fn cap_fraction(t: f64, dim: usize) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let num = cos_power_integral(dim, t.asin(), half_pi);
    let den = cos_power_integral(dim, -half_pi, half_pi);
    num / den
}

enum Integrand<'a> {
    Callable(&'a dyn Fn(&[f64]) -> f64),
    Piecewise(&'a Ultrafunction),
}

struct BallQuad<'a> {
    dim: usize,
    integrand: Integrand<'a>,
    // face planes are known only for the piecewise integrand
    grid: Option<&'a Grid>,
    max_depth: usize,
}

impl<'a> BallQuad<'a> {
    // planes of one axis strictly inside (lo, hi), as absolute positions
    fn planes_in(&self, axis: usize, lo: f64, hi: f64) -> Vec<f64> {
        let Some(grid) = self.grid else {
            return Vec::new();
        };
        let o = grid.origin()[axis];
        let h = grid.h();
        let extent = grid.extent()[axis] as isize;
        let k_lo = ((lo - o) / h).ceil() as isize;
        let k_hi = ((hi - o) / h).floor() as isize;
        let mut out = Vec::new();
        for k in k_lo.max(0)..=k_hi.min(extent) {
            let p = o + k as f64 * h;
            if p > lo && p < hi {
                out.push(p);
            }
        }
        out
    }

    fn sample(&self, point: &[f64]) -> Result<f64, QuadratureError> {
        let v = match &self.integrand {
            Integrand::Callable(f) => f(point),
            Integrand::Piecewise(u) => u.eval(point),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFiniteSample {
                point: point.to_vec(),
            })
        }
    }

    // integral over the ball of `radius` in axes `axis..dim`, the earlier
    // coordinates of `point` held fixed
    fn integral(
        &self,
        point: &mut Vec<f64>,
        radius: f64,
        axis: usize,
        tol: f64,
    ) -> Result<f64, QuadratureError> {
        let center = point[axis];
        if axis + 1 == self.dim {
            return self.chord_integral(point, center - radius, center + radius, tol);
        }
        // y = radius sin(theta) removes the rim square root
        let err: RefCell<Option<QuadratureError>> = RefCell::new(None);
        let eval_theta = |theta: f64| -> f64 {
            let mut p = point.clone();
            p[axis] = center + radius * theta.sin();
            let slice_radius = radius * theta.cos();
            match self.integral(&mut p, slice_radius, axis + 1, tol * 0.25) {
                Ok(v) => v * radius * theta.cos(),
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        };
        let half_pi = std::f64::consts::FRAC_PI_2;
        let mut cuts = vec![-half_pi];
        for p in self.planes_in(axis, center - radius, center + radius) {
            cuts.push(((p - center) / radius).clamp(-1.0, 1.0).asin());
        }
        cuts.push(half_pi);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut total = 0.0;
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                let piece = adaptive_midpoint_1d(&eval_theta, w[0], w[1], tol, self.max_depth)?;
                total += piece.value;
            }
        }
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        Ok(total)
    }

    fn chord_integral(
        &self,
        point: &mut Vec<f64>,
        lo: f64,
        hi: f64,
        tol: f64,
    ) -> Result<f64, QuadratureError> {
        let axis = self.dim - 1;
        match &self.integrand {
            Integrand::Piecewise(_) => {
                // exact: constant on every open segment between face planes
                let mut stops = vec![lo];
                stops.extend(self.planes_in(axis, lo, hi));
                stops.push(hi);
                let mut total = 0.0;
                for w in stops.windows(2) {
                    let len = w[1] - w[0];
                    if len > 0.0 {
                        point[axis] = 0.5 * (w[0] + w[1]);
                        total += len * self.sample(point)?;
                    }
                }
                Ok(total)
            }
            Integrand::Callable(_) => {
                let err: RefCell<Option<QuadratureError>> = RefCell::new(None);
                let f = |s: f64| -> f64 {
                    let mut p = point.clone();
                    p[axis] = s;
                    match self.sample(&p) {
                        Ok(v) => v,
                        Err(e) => {
                            err.borrow_mut().get_or_insert(e);
                            0.0
                        }
                    }
                };
                let r = adaptive_midpoint_1d(&f, lo, hi, tol, self.max_depth)?;
                if let Some(e) = err.into_inner() {
                    return Err(e);
                }
                Ok(r.value)
            }
        }
    }
}

/// Mean of a pointwise-evaluable function over the ball of radius `eta`.
///
/// `rel_tol` controls the quadrature; non-finite samples are reported as
/// errors.
pub fn lebesgue_average<F: Fn(&[f64]) -> f64 + ?Sized>(
    f: &F,
    x: &[f64],
    eta: EtaRadius,
    rel_tol: f64,
) -> Result<f64, QuadratureError> {
    let dim = x.len();
    let volume = unit_ball_volume(dim) * eta.value().powi(dim as i32);
    let center_sample = f(x);
    if !center_sample.is_finite() {
        return Err(QuadratureError::NonFiniteSample { point: x.to_vec() });
    }
    let scale = center_sample.abs().max(1.0);
    let quad = BallQuad {
        dim,
        integrand: Integrand::Callable(&f),
        grid: None,
        max_depth: 48,
    };
    let mut point = x.to_vec();
    let tol = (rel_tol * volume * scale).max(1e-300);
    let integral = quad.integral(&mut point, eta.value(), 0, tol)?;
    Ok(integral / volume)
}

/// Mean of a stage function over the ball of radius `eta`.
///
/// Exact (up to rounding) when at most one face plane cuts the ball; the
/// corner cases fall back to the sliced quadrature with the face planes as
/// known breakpoints.
pub fn lebesgue_average_piecewise(
    u: &Ultrafunction,
    x: &[f64],
    eta: EtaRadius,
) -> Result<f64, EtaError> {
    let grid = u.grid().as_ref();
    eta.validate_for(grid)?;
    let dim = grid.dim();
    assert_eq!(x.len(), dim);
    let r = eta.value();

    // at most one plane per axis can be closer than eta
    let mut crossings: Vec<(usize, f64)> = Vec::new();
    for axis in 0..dim {
        let o = grid.origin()[axis];
        let h = grid.h();
        let k = ((x[axis] - o) / h).round();
        if k < 0.0 || k > grid.extent()[axis] as f64 {
            continue;
        }
        let plane = o + k * h;
        if (x[axis] - plane).abs() < r {
            crossings.push((axis, plane));
        }
    }

    let cell_value = |override_axis: Option<(usize, isize)>| -> f64 {
        // cell with one axis coordinate forced, the others strictly inside
        let mut idx = 0usize;
        for axis in 0..dim {
            let i: isize = match override_axis {
                Some((a, ci)) if a == axis => ci,
                _ => {
                    let t = (x[axis] - grid.origin()[axis]) / grid.h();
                    if t < 0.0 || t >= grid.extent()[axis] as f64 {
                        return 0.0;
                    }
                    t.floor() as isize
                }
            };
            if i < 0 || i as usize >= grid.extent()[axis] {
                return 0.0; // EXTERIOR side
            }
            idx += (i as usize) * grid.strides_at(axis);
        }
        u.coeff(idx)
    };

    match crossings.len() {
        0 => Ok(cell_value(None)),
        1 => {
            let (axis, plane) = crossings[0];
            let plane_index = ((plane - grid.origin()[axis]) / grid.h()).round() as isize;
            let d = x[axis] - plane;
            // cells adjacent to the plane: plane_index - 1 below, plane_index above;
            // with d == 0 both halves weigh 1/2 and the orientation cancels
            let (near_cell, far_cell) = if d >= 0.0 {
                (plane_index, plane_index - 1)
            } else {
                (plane_index - 1, plane_index)
            };
            let far_fraction = cap_fraction(d.abs() / r, dim);
            let near = cell_value(Some((axis, near_cell)));
            let far = cell_value(Some((axis, far_cell)));
            Ok(near * (1.0 - far_fraction) + far * far_fraction)
        }
        _ => {
            let volume = unit_ball_volume(dim) * r.powi(dim as i32);
            let block_scale = u.max_abs().max(1.0);
            let quad = BallQuad {
                dim,
                integrand: Integrand::Piecewise(u),
                grid: Some(grid),
                max_depth: 48,
            };
            let mut point = x.to_vec();
            let tol = (1e-13 * volume * block_scale).max(1e-300);
            let integral = quad
                .integral(&mut point, r, 0, tol)
                .expect("stage functions are finite");
            Ok(integral / volume)
        }
    }
}

/// A region's characteristic function together with its regularized
/// traces: 1 on inside cells, 0 outside, 1/2 on boundary faces.
#[derive(Debug, Clone)]
pub struct RegularizedCharacteristic {
    region: Region,
    values: Ultrafunction,
}

impl RegularizedCharacteristic {
    pub fn new(region: Region) -> RegularizedCharacteristic {
        let grid = region.grid().clone();
        let mut coeffs = vec![0.0; grid.cell_count()];
        for c in region.cells() {
            coeffs[c] = 1.0;
        }
        RegularizedCharacteristic {
            region,
            values: Ultrafunction::new(grid, coeffs).expect("finite indicator"),
        }
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn values(&self) -> &Ultrafunction {
        &self.values
    }

    pub fn into_values(self) -> Ultrafunction {
        self.values
    }

    pub fn cell_value(&self, linear: usize) -> f64 {
        self.values.coeff(linear)
    }

    /// Trace on a face: the mean of the two adjacent cell values, the
    /// EXTERIOR side reading zero.
    pub fn face_value(&self, key: &FaceKey) -> f64 {
        let grid = self.region.grid();
        let face = grid.face_from_key(key).expect("face on grid");
        let side = |c: Option<usize>| c.map_or(0.0, |c| self.values.coeff(c));
        0.5 * (side(face.minus) + side(face.plus))
    }

    /// Regularized point value (1 / 0 / one-half rule).
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.values.eval(x)
    }
}

/// One sampled point of the double-average comparison.
#[derive(Debug, Clone)]
pub struct IdempotenceSample {
    pub point: Vec<f64>,
    pub single: f64,
    pub double: f64,
    pub deviation: f64,
}

/// Compares the regularization applied once and twice at sample points.
#[derive(Debug, Clone)]
pub struct IdempotenceReport {
    pub samples: Vec<IdempotenceSample>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub violations: Vec<usize>,
}

/// Applies the ball average once and twice to a stage function at the
/// given points and reports the deviations against `tolerance`.
///
/// The double average differs from the single one only for points closer
/// than `2 eta` to a face plane, where the finite radius is visible; at
/// face centers the two agree by symmetry, and strictly inside cells they
/// agree exactly.
pub fn check_idempotence(
    u: &Ultrafunction,
    points: &[Vec<f64>],
    eta: EtaRadius,
    tolerance: f64,
) -> Result<IdempotenceReport, EtaError> {
    eta.validate_for(u.grid())?;
    let mut samples = Vec::with_capacity(points.len());
    let mut violations = Vec::new();
    let mut max_dev = 0.0f64;
    for (i, point) in points.iter().enumerate() {
        let single = lebesgue_average_piecewise(u, point, eta)?;
        let once = |y: &[f64]| -> f64 {
            lebesgue_average_piecewise(u, y, eta).expect("eta validated")
        };
        let double = lebesgue_average(&once, point, eta, 1e-11)
            .expect("stage averages are finite");
        let deviation = (double - single).abs();
        if deviation > tolerance {
            violations.push(i);
        }
        max_dev = max_dev.max(deviation);
        samples.push(IdempotenceSample {
            point: point.clone(),
            single,
            double,
            deviation,
        });
    }
    Ok(IdempotenceReport {
        samples,
        max_deviation: max_dev,
        tolerance,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::sync::Arc;

    fn grid_2d(n: usize, h: f64) -> Arc<Grid> {
        Grid::shared(vec![n, n], vec![0.0, 0.0], h).unwrap()
    }

    #[test]
    fn cap_fraction_closed_forms() {
        for dim in 1..=4 {
            assert!((cap_fraction(-1.0, dim) - 1.0).abs() < 1e-15);
            assert!(cap_fraction(1.0, dim).abs() < 1e-15);
            assert!((cap_fraction(0.0, dim) - 0.5).abs() < 1e-15);
        }
        for t in [-0.8, -0.3, 0.2, 0.7] {
            let one_d = (1.0 - t) / 2.0;
            assert!((cap_fraction(t, 1) - one_d).abs() < 1e-14);
            let three_d = (1.0 - t) * (1.0 - t) * (2.0 + t) / 4.0;
            assert!((cap_fraction(t, 3) - three_d).abs() < 1e-14);
            // 2D circular segment
            let two_d = (t.acos() - t * (1.0 - t * t).sqrt()) / std::f64::consts::PI;
            assert!((cap_fraction(t, 2) - two_d).abs() < 1e-14);
        }
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn constant_averages_to_itself() {
        let eta = EtaRadius::new(0.01).unwrap();
        let c = 4.25;
        for x in [[0.3, 0.4], [0.5, 0.5], [0.05, 0.99]] {
            let avg = lebesgue_average(&|_: &[f64]| c, &x, eta, 1e-11).unwrap();
            assert!((avg - c).abs() < 1e-10, "avg {avg}");
        }
        // piecewise path, including a corner point where slicing kicks in
        let g = grid_2d(4, 0.25);
        let u = Ultrafunction::new(g, vec![c; 16]).unwrap();
        let interior = lebesgue_average_piecewise(&u, &[0.375, 0.6], eta).unwrap();
        assert_eq!(interior, c);
        let corner = lebesgue_average_piecewise(&u, &[0.25, 0.5], eta).unwrap();
        assert!((corner - c).abs() < 1e-10);
    }

    #[test]
    fn half_space_jump_averages_to_one_half() {
        let g = grid_2d(4, 0.25);
        let half: Vec<f64> = (0..16)
            .map(|c| if g.axis_coord(c, 0) < 2 { 1.0 } else { 0.0 })
            .collect();
        let u = Ultrafunction::new(g, half).unwrap();
        let eta = EtaRadius::new(0.05).unwrap();
        let v = lebesgue_average_piecewise(&u, &[0.5, 0.6], eta).unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn affine_average_is_the_point_value() {
        let eta = EtaRadius::new(0.01).unwrap();
        let avg = lebesgue_average(&|x: &[f64]| x[0], &[0.3], eta, 1e-12).unwrap();
        assert!((avg - 0.3).abs() < 1e-13);
    }

    #[test]
    fn interior_points_read_the_cell_value() {
        let g = grid_2d(3, 1.0);
        let coeffs: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let u = Ultrafunction::new(g.clone(), coeffs).unwrap();
        let eta = EtaRadius::new(0.2).unwrap();
        for c in 0..9 {
            let center = g.cell_center(c);
            assert_eq!(
                lebesgue_average_piecewise(&u, &center, eta).unwrap(),
                u.coeff(c)
            );
        }
    }

    #[test]
    fn eta_validation() {
        assert!(EtaRadius::new(0.0).is_err());
        assert!(EtaRadius::new(-1.0).is_err());
        let g = grid_2d(3, 0.1);
        let eta = EtaRadius::new(0.05).unwrap();
        assert!(matches!(
            eta.validate_for(&g),
            Err(EtaError::TooLargeForGrid { .. })
        ));
        assert!(EtaRadius::new(0.049).unwrap().validate_for(&g).is_ok());
    }

    #[test]
    fn characteristic_values_and_traces() {
        let g = grid_2d(4, 0.25);
        let region =
            Region::from_coords(g.clone(), [[1usize, 1usize], [2, 1], [1, 2], [2, 2]]).unwrap();
        let chi = RegularizedCharacteristic::new(region);
        assert_eq!(chi.cell_value(g.linear(&[1, 1])), 1.0);
        assert_eq!(chi.cell_value(g.linear(&[0, 0])), 0.0);
        // interior face of the region
        assert_eq!(
            chi.face_value(&FaceKey {
                axis: 0,
                at: vec![2, 1]
            }),
            1.0
        );
        // boundary face
        assert_eq!(
            chi.face_value(&FaceKey {
                axis: 0,
                at: vec![1, 1]
            }),
            0.5
        );
        // face away from the region
        assert_eq!(
            chi.face_value(&FaceKey {
                axis: 0,
                at: vec![0, 0]
            }),
            0.0
        );
        // point evaluation agrees with the trace rule
        assert_eq!(chi.eval(&[0.375, 0.375]), 1.0);
        assert_eq!(chi.eval(&[0.25, 0.375]), 0.5);
        assert_eq!(chi.eval(&[0.1, 0.1]), 0.0);
    }

    #[test]
    fn characteristic_is_idempotent_as_a_map() {
        let g = grid_2d(4, 0.25);
        let region = Region::from_coords(g.clone(), [[1usize, 1usize], [2, 1]]).unwrap();
        let chi = RegularizedCharacteristic::new(region.clone());
        // rebuilding from the support recovers identical values and traces
        let support: Vec<usize> = (0..16).filter(|&c| chi.cell_value(c) == 1.0).collect();
        let rebuilt = RegularizedCharacteristic::new(
            Region::from_linear(g.clone(), support).unwrap(),
        );
        assert_eq!(chi.values().coeffs(), rebuilt.values().coeffs());
        for axis in 0..2 {
            for at0 in 0..=4usize {
                for at1 in 0..4usize {
                    let at = if axis == 0 {
                        vec![at0, at1]
                    } else {
                        vec![at1, at0]
                    };
                    let key = FaceKey { axis, at };
                    assert_eq!(chi.face_value(&key), rebuilt.face_value(&key));
                }
            }
        }
    }

    #[test]
    fn double_average_matches_single() {
        let g = grid_2d(4, 0.25);
        let region = Region::from_coords(g.clone(), [[1usize, 1usize], [2, 1]]).unwrap();
        let chi = RegularizedCharacteristic::new(region).into_values();
        let eta = EtaRadius::new(0.04).unwrap();

        // interior point, exact agreement
        let report = check_idempotence(&chi, &[vec![0.375, 0.375]], eta, 1e-9).unwrap();
        assert!(report.violations.is_empty());
        assert_eq!(report.samples[0].single, 1.0);

        // face center: both averages are exactly 1/2 by symmetry
        let report = check_idempotence(&chi, &[vec![0.25, 0.375]], eta, 1e-9).unwrap();
        assert_eq!(report.samples[0].single, 0.5);
        assert!(
            report.samples[0].deviation <= 1e-9,
            "face-center deviation {}",
            report.samples[0].deviation
        );

        // a spread of points at least 2 eta from every face plane
        let mut points = Vec::new();
        let mut s = 11u64;
        while points.len() < 40 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            let a = (s >> 33) as f64 / (1u64 << 31) as f64;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            let b = (s >> 33) as f64 / (1u64 << 31) as f64;
            let p = vec![a.clamp(0.0, 0.999), b.clamp(0.0, 0.999)];
            let clear = p.iter().all(|&x| {
                let t = (x / 0.25).round() * 0.25;
                (x - t).abs() > 2.0 * eta.value()
            });
            if clear {
                points.push(p);
            }
        }
        let report = check_idempotence(&chi, &points, eta, 1e-9).unwrap();
        assert!(
            report.violations.is_empty(),
            "max deviation {}",
            report.max_deviation
        );
    }

    #[test]
    fn equal_cellwise_functions_average_identically() {
        let g = grid_2d(3, 0.5);
        let coeffs: Vec<f64> = (0..9).map(|i| (i as f64).cos()).collect();
        let u = Ultrafunction::new(g.clone(), coeffs.clone()).unwrap();
        let v = Ultrafunction::new(g, coeffs).unwrap();
        let eta = EtaRadius::new(0.1).unwrap();
        for p in [[0.3, 0.2], [0.5, 0.74], [1.0, 1.0], [1.49, 0.5]] {
            let a = lebesgue_average_piecewise(&u, &p, eta).unwrap();
            let b = lebesgue_average_piecewise(&v, &p, eta).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn corner_average_weights_quadrants() {
        // ball across a corner where 4 cells meet: the average approaches
        // the mean of the four adjacent values as the sliced quadrature
        // resolves the quadrants
        let g = grid_2d(2, 0.5);
        let u = Ultrafunction::new(g, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let eta = EtaRadius::new(0.2).unwrap();
        let v = lebesgue_average_piecewise(&u, &[0.5, 0.5], eta).unwrap();
        assert!((v - 1.5).abs() < 1e-9, "corner mean {v}");
    }
}
