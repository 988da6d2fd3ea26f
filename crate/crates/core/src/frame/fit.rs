//! Annealed frame-field fitting.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::energy::{flatten, unflatten, FrameEnergy};
use super::lbfgs::{minimize, LbfgsParams, Termination};
use crate::error::{Error, Result};
use crate::fem::StressField;
use crate::mesh::{DiscreteOperators, TetMesh, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub outer_iterations: usize,
    /// `α₀ = alpha0_factor · |T|`.
    pub alpha0_factor: f64,
    pub alpha_decay: f64,
    /// Stop once the data energy improves by less than `early_stop_tol`
    /// (relative) for `early_stop_patience` consecutive outer iterations.
    pub early_stop: bool,
    pub early_stop_tol: f64,
    pub early_stop_patience: usize,
    pub lbfgs: LbfgsParams,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            outer_iterations: 30,
            alpha0_factor: 10.0,
            alpha_decay: 2.0 / 3.0,
            early_stop: true,
            early_stop_tol: 1e-10,
            early_stop_patience: 3,
            lbfgs: LbfgsParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub alpha: f64,
    /// `Σ E_data` after this outer iteration.
    pub data_energy: f64,
    pub inner_iterations: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone)]
pub struct FrameField {
    /// Per-vertex angular velocity (rad).
    pub omega: Vec<Vec3>,
    /// Per-tet rotation; columns are `r₁, r₂, r₃`.
    pub frames: Vec<Matrix3<f64>>,
    pub alpha_history: Vec<OuterRecord>,
}

impl FrameField {
    pub fn from_omega(mesh: &TetMesh, omega: Vec<Vec3>) -> Self {
        let frames = mesh
            .tets
            .iter()
            .map(|t| super::energy::frame_from_omega(&t.map(|v| omega[v])))
            .collect();
        Self { omega, frames, alpha_history: Vec::new() }
    }

    /// Largest `‖RᵀR − I‖_F` over all frames.
    pub fn orthonormality_error(&self) -> f64 {
        self.frames
            .iter()
            .map(|r| (r.transpose() * r - Matrix3::identity()).norm())
            .fold(0.0, f64::max)
    }
}

pub fn fit_frame_field(
    mesh: &TetMesh,
    ops: &DiscreteOperators,
    stress: &StressField,
    config: &FitConfig,
) -> Result<FrameField> {
    let sigma_plus = stress.spd()?;
    if sigma_plus.len() != mesh.n_tets() {
        return Err(Error::InvalidInput(format!(
            "stress field has {} tensors for {} tets",
            sigma_plus.len(),
            mesh.n_tets()
        )));
    }
    if !(config.alpha_decay > 0.0 && config.alpha_decay < 1.0) || !(config.alpha0_factor > 0.0) {
        return Err(Error::InvalidInput("alpha schedule needs alpha0_factor > 0 and 0 < alpha_decay < 1".into()));
    }
    let energy = FrameEnergy { tets: &mesh.tets, sigma_plus, laplacian: &ops.laplacian };
    let mut x = vec![0.0; 3 * mesh.n_vertices()];
    let mut alpha = config.alpha0_factor * mesh.n_tets() as f64;
    let mut history = Vec::with_capacity(config.outer_iterations);
    let mut prev_data: Option<f64> = None;
    let mut flat_streak = 0usize;
    for outer in 0..config.outer_iterations {
        let res = minimize(
            |x: &[f64]| {
                let (e, g) = energy.total_grad(&unflatten(x), alpha);
                (e, flatten(&g))
            },
            x,
            &config.lbfgs,
        )
        .map_err(|e| match e {
            Error::LineSearch(msg) => Error::LineSearch(format!("outer iteration {outer} (alpha = {alpha:e}): {msg}")),
            other => other,
        })?;
        x = res.x;
        let data = energy.data(&unflatten(&x));
        log::debug!(
            "frame fit outer {outer}: alpha {alpha:.4e} data {data:.10e} inner {} ({:?})",
            res.iterations,
            res.termination
        );
        history.push(OuterRecord { alpha, data_energy: data, inner_iterations: res.iterations, termination: res.termination });
        if let Some(p) = prev_data {
            if p - data < config.early_stop_tol * p.abs() {
                flat_streak += 1;
            } else {
                flat_streak = 0;
            }
        }
        prev_data = Some(data);
        alpha *= config.alpha_decay;
        if config.early_stop && flat_streak >= config.early_stop_patience {
            log::info!("frame fit converged after {} outer iterations", outer + 1);
            break;
        }
    }
    let omega = unflatten(&x);
    let frames = energy.frames(&omega);
    Ok(FrameField { omega, frames, alpha_history: history })
}
