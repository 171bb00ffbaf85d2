//! Finite-stage calculus on uniform Cartesian grids.
//!
//! Functions are piecewise constant over the cells of one grid (one
//! "stage"); refining the grid walks up a chain of nested stages. On each
//! stage the crate provides:
//!
//! - regions as cell sets with exact volume and perimeter ([`grid`]);
//! - the ball-average regularization that assigns 1/2 values on jump
//!   surfaces ([`lebesgue`]);
//! - orthogonal projection of functions and of signed measures with
//!   density, surface, and atomic parts ([`ultraspace`]);
//! - a derivative operator that is antisymmetric with respect to the mass
//!   inner product, built by pairing face jumps against regularized
//!   traces, together with region and surface integrals and a divergence
//!   theorem that holds to round-off on every cell region ([`calculus`]);
//! - a method-of-lines solver for scalar conservation laws whose total
//!   mass is conserved to round-off ([`conservation`]);
//! - slow dense reference implementations used to validate every fast
//!   path ([`oracle`]).
//!
//! All types are immutable after construction and safe to share across
//! threads. Reductions use fixed-order pairwise summation so results never
//! depend on thread count.

pub mod calculus;
pub mod conservation;
pub mod grid;
pub mod io;
pub mod lebesgue;
pub mod oracle;
pub mod quadrature;
pub mod summation;
pub mod ultraspace;

pub use grid::{Face, FaceKey, Grid, Region};
pub use lebesgue::{EtaRadius, RegularizedCharacteristic};
pub use quadrature::{QuadratureError, QuadratureSpec};
pub use ultraspace::{
    project_function, project_measure, Atom, Projection, RadonMeasureSpec, Ultrafunction,
};

pub use calculus::{
    divergence, gauss_check, gradient, normal_field, region_integral, surface_density,
    surface_integral, DerivOperator, GaussReport, VectorUltrafunction,
};
pub use conservation::{
    conservation_report, semidiscrete_rhs, solve, step_rk4, FluxModel, SolutionTrace, SolverConfig,
};
