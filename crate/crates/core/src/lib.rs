//! Local normal forms of logarithmic connections on the punctured Riemann
//! sphere, weighted flat bundles, constructive Fuchsian synthesis and
//! numerical monodromy verification.

pub mod algebra;
pub mod bundles;
pub mod error;
pub mod localforms;
pub mod spectral;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};
