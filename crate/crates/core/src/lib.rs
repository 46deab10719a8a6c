//! Harmonic analysis on bounded Vilenkin groups.

pub mod error;
pub mod group;
pub mod kernels;
pub mod report;
pub mod spaces;
pub mod system;
pub mod theorems;

pub use error::{Error, Result};
pub use group::{GroupSpec, Point, Region};
pub use system::{Characters, Signal, Spectrum};
