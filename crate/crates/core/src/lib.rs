//! Dyadic harmonic analysis over arbitrary measures at finite resolution.
//!
//! The universe is a single root cube carrying a [`MeasureTree`](measure::MeasureTree)
//! of finite depth. Functions are constant on the leaves of some generation,
//! Haar systems are stored by their values on children, and every norm is
//! computed exactly from those values.

pub mod czd;
pub mod error;
pub mod func;
pub mod grid;
pub mod haar;
pub mod measure;
pub mod ops;
mod rng;

pub use error::{Error, Result};
pub use func::{CoefficientSequence, Patch, SimpleFunction};
pub use grid::CubeId;
pub use haar::{HaarFunction, HaarSystem};
pub use measure::MeasureTree;
