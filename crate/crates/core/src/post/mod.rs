//! Graph simplification, fabrication geometry and stress-alignment checks.

pub mod alignment;
pub mod geometry;
pub mod simplify;

pub use alignment::{stress_alignment, AlignmentReport};
pub use geometry::{emit_geometry, write_line_obj, write_obj, write_ply, GeometryConfig, GeometryReport, RadiusPolicy, TriMesh};
pub use simplify::{simplify, SimplifyConfig, SimplifyReport};
