//! Numerical verification: integration of flat sections around loops,
//! monodromy comparison up to conjugation, and growth exponents.

mod conjugacy;
mod growth;
mod loops;
mod monodromy;
pub mod ode;

#[cfg(test)]
mod tests;

pub use conjugacy::{conjugacy_compare, Conjugacy, INVERTIBILITY_TOL};
pub use growth::{growth_exponent, growth_exponent_at, GrowthEstimate, MIN_DECADES, MIN_RADII};
pub use loops::{standard_loops, LoopPath, PathPiece, StandardLoops};
pub use monodromy::{integrate_fuchsian, monodromy, verify_monodromy, Monodromy, MonodromyReport};
pub use ode::{integrate_linear, OdeOptions, OdeSolution};
