//! Dense complex matrices, truncated matrix power series and integer weight
//! diagonals.

pub mod matrix;
pub mod series;
pub mod weights;

pub use matrix::{c64, CMatrix};
pub use series::{MatrixSeries, Twisted};
pub use weights::{WeightBlock, WeightDiagonal};
