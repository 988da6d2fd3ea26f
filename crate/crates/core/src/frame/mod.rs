//! Stress-aligned frame fields parameterized by per-vertex angular velocities.

pub mod energy;
pub mod fit;
pub mod lbfgs;
pub mod rotation;

pub use energy::{data_energy, frame_from_omega, smooth_energy, tensor_norm, FrameEnergy};
pub use fit::{fit_frame_field, FitConfig, FrameField};
