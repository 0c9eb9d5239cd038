//! Twistor geometry of cubic surfaces.
//!
//! The crate computes the discriminant locus of a cubic surface in `CP^3`
//! relative to the twistor fibration `CP^3 -> S^4`, finds the fibers that lie
//! inside the surface, and reconstructs the topology of the locus from a
//! sweep of three-dimensional slices.

pub mod checks;
pub mod complex;
pub mod discriminant;
pub mod error;
pub mod lines;
pub mod numeric;
pub mod poly;
pub mod presets;
pub mod quaternion;
pub mod ring;
pub mod symmetry;
pub mod topology;
pub mod tracer;
pub mod twistor;

pub use error::{Error, Result};
