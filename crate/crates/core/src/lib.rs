//! Stress-aligned truss design on tetrahedral meshes: linear elastic analysis,
//! frame-field fitting, volumetric parametrization, isocurve truss extraction,
//! simplification, geometry export and frame-element verification.

pub mod error;
pub mod extract;
pub mod fem;
pub mod fixtures;
pub mod frame;
pub mod mesh;
pub mod param;
pub mod pipeline;
pub mod post;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
