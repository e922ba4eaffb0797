pub mod assembly;
pub mod error;
pub mod geometry;
pub mod linsolve;
pub mod majorant;
pub mod problems;
pub mod splines;
pub mod study;

pub use error::{Error, Result};
