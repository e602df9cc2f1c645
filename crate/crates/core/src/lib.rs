//! Numerical core for the weighted ultrafast diffusion equation
//!
//! ```text
//! ∂t f = −r div( f ∇( ρ / f^{r+1} ) ),   r > 1
//! ```
//!
//! on a periodic interval, a truncated interval with zero-flux walls, or a
//! square tensor box. The crate is `no_std` (it needs `alloc`) and contains
//! no IO; the `ultrafast-lab` crate carries configuration, CSV output and the
//! command line.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`grid`] | uniform cell-centred grids, faces, midpoint quadrature |
//! | [`weights`] | weights ρ, the equilibrium m = γρ^{1/(r+1)}, initial data |
//! | [`functionals`] | free energy, energy gap, dissipation, χ², bound constants |
//! | [`poincare`] | discrete weighted Dirichlet form and its spectral gap |
//! | [`solver`] | conservative explicit finite-volume time stepping, rate fits |
//! | [`localization`] | truncation ladder on balls B(0,k) |
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod banded;
mod error;
pub mod functionals;
pub mod grid;
pub mod localization;
pub(crate) mod math;
pub mod poincare;
pub mod solver;
pub mod weights;

pub use error::{Error, ErrorClass, Result};
pub use functionals::{FunctionalReport, BoundReport};
pub use grid::{Face, Grid, GridKind};
pub use poincare::{SpectralGapResult, WeightedOperators};
pub use solver::{RunRecord, SolverConfig};
pub use weights::{DensityField, Equilibrium, InitialData, Potential, Weight};
