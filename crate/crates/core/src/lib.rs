//! Local Metropolis chains on convex polytopes.

pub mod builtin;
pub mod chain;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod linalg;
pub mod lp;
pub mod quadrature;
pub mod spectral;
pub mod vecops;

pub use error::{Error, Result};
pub use exec::Execution;
