//! Deutsch (D-CTC) and post-selected (P-CTC) closed-timelike-curve channels
//! simulated on dense density matrices.

pub mod circuits;
pub mod dctc;
pub mod error;
pub mod experiments;
pub mod pctc;
pub mod qmat;
pub mod random;
pub mod states;

pub use error::{Error, Result};
pub use qmat::{ComplexMatrix, DimensionSplit, C64};
