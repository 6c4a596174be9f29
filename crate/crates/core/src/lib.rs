pub mod averaging;
pub mod basic_complex;
pub mod endomorphism;
pub mod error;
pub mod exact;
pub mod fixed_point;
pub mod geometry;
pub mod lattice;
pub mod mollifier;
pub mod report;
pub mod scenario;
pub mod symbolic;
pub mod torus_group;

pub use error::{Error, Result};
