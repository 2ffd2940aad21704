//! Generalized Takagi functions: exact partial sums, level-set covers,
//! joint spectral radius bounds, extremal constructions and random models.

pub mod cli;
pub mod constructions;
pub mod dyadic;
pub mod error;
pub mod levelsets;
pub mod piecewise;
pub mod randomsim;
pub mod rng;
pub mod signs;
pub mod spectra;

pub use dyadic::{format_rational, parse_rational, DyadicValue};
pub use error::{Error, Result};
pub use piecewise::{Cell, CellFront, GridFunction};
pub use rng::Probability;
pub use signs::{ExplicitTree, Sign, SignProvider};
