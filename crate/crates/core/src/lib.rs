//! Discretization, minimization and regularity diagnostics for nonlocal
//! double phase energies
//!
//! ```text
//! E(v) = ∬ (1/p)|v(x)-v(y)|^p K_sp(x,y) + a(x,y)(1/q)|v(x)-v(y)|^q K_tq(x,y) dx dy
//! ```
//!
//! over all pairs that are not both outside the domain, with Dirichlet data
//! prescribed outside the domain.
//!
//! The crate is organised bottom-up:
//!
//! - [`params`]: exponents, the modulating coefficient and the kernel pair,
//!   together with sampled validation of their structural hypotheses.
//! - [`grid`]: uniform cell-centred grids on a truncation box, pair weights and
//!   the analytic closure for the part of a tail integral beyond the box.
//! - [`energy`]: the pointwise densities, modular, Gagliardo seminorms, the
//!   discrete energy, its gradient and nonlocal tails.
//! - [`solver`]: gradient descent with backtracking, a dense direct solver for
//!   the quadratic case, and a discrete maximum principle check.
//! - [`regularity`]: numerical instances of the estimates used in the local
//!   boundedness and Hölder continuity arguments.
//! - [`io`]: CSV and JSON serialization shared with the command line front end.

pub mod energy;
mod error;
pub mod grid;
pub mod io;
pub mod params;
pub mod regularity;
pub mod solver;

pub use energy::{EnergyContext, TailReport};
pub use error::{Error, Result};
pub use grid::{DiscreteFunction, Grid, OmegaSpec, Point};
pub use params::{Coefficient, ExponentConfig, HolderData, KernelPair};
pub use regularity::{HolderConstants, InequalityReport, OscillationTrace};
pub use solver::{SolveOptions, SolveReport};
