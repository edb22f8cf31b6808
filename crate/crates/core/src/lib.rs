//! Factor graphs with unknown factors: potential transfer between
//! structurally indistinguishable factors, colour passing, exact inference
//! and an experiment harness.

pub mod colour;
pub mod error;
pub mod fixtures;
pub mod inference;
pub mod lifg;
pub mod model;
pub mod synth;

pub use error::{Error, Result};
