//! Ordered k-median: LP-rounding approximations, an exact oracle and the
//! tooling to compare them.

pub mod error;
pub mod format;
pub mod gen;
pub mod instance;
pub mod lp;
pub mod matrix;
pub mod oracle;
pub mod reductions;
pub mod rounding;
pub mod solvers;

pub use error::{Error, Result};
pub use instance::{Instance, SolutionSet};
pub use matrix::Matrix;
