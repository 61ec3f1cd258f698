//! Numerical laboratory for entropy methods in conservation laws.
//!
//! - [`grid`]: periodic grids, fields and trajectories with midpoint quadrature.
//! - [`scalar`]: vanishing-viscosity and monotone solvers for scalar laws,
//!   Kruzhkov entropy pairs and the discrete entropy inequality.
//! - [`young`]: empirical generalized Young measures with concentration
//!   bookkeeping and the averaged contraction functional.
//! - [`euler`]: isentropic Euler solver, compressible and incompressible
//!   relative entropies, Gronwall checks.
//! - [`renewal`]: renewal equation eigenproblems and relative-entropy decay.
//! - [`io`]: CSV exports.

pub mod error;
pub mod euler;
pub mod grid;
pub mod io;
pub mod renewal;
pub mod scalar;
pub mod young;

pub use error::{Error, Result};

// Runs the guide's snippets as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/scalar.md")]
    mod scalar {}
    #[doc = include_str!("../../../book/src/young.md")]
    mod young {}
    #[doc = include_str!("../../../book/src/euler.md")]
    mod euler {}
    #[doc = include_str!("../../../book/src/renewal.md")]
    mod renewal {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
