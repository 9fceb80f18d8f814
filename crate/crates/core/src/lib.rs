//! Numerical toolkit for one-dimensional non-Hermitian lattices with flat bands.

pub mod degeneracy;
pub mod error;
pub mod exact;
pub mod expr;
pub mod flatband;
pub mod linalg;
pub mod model;
pub mod nonbloch;
pub mod response;
pub mod spectra;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
