//! Agreement between truss element directions and principal stress axes.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{Family, TrussGraph};
use crate::fem::StressField;
use crate::mesh::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub max_angle_deg: f64,
    /// Interior elements measured (iso-line elements tagged with a tet).
    pub elements: usize,
    pub aligned: usize,
    pub fraction: f64,
    pub median_angle_deg: f64,
}

/// Eigenvalues closer than this (relative to the largest magnitude) span a
/// shared eigenspace.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// Angle in degrees between `d` and the closest eigenvector of a symmetric
/// tensor with eigenvalues `lambda` and eigenvector columns `q`. Directions
/// inside a repeated eigenspace count as eigenvectors; `lambda` must be
/// sorted.
pub fn angle_to_eigenvectors(q: &Matrix3<f64>, lambda: &Vec3, d: &Vec3) -> f64 {
    let n = d.norm();
    if n == 0.0 {
        return 90.0;
    }
    let u = d / n;
    let tol = DEGENERACY_TOL * lambda.amax();
    let proj: [f64; 3] = std::array::from_fn(|k| q.column(k).dot(&u));
    // Eigenvalues are sorted, so repeated ones are adjacent.
    let mut best: f64 = 0.0;
    let mut start = 0;
    for k in 0..3 {
        if k + 1 == 3 || (lambda[k] - lambda[k + 1]).abs() > tol {
            let c = (start..=k).map(|i| proj[i] * proj[i]).sum::<f64>().sqrt();
            best = best.max(c);
            start = k + 1;
        }
    }
    best.min(1.0).acos().to_degrees()
}

/// Share of interior elements whose direction lies within `max_angle_deg` of
/// an eigenvector of the stress in the tet that contains them.
pub fn stress_alignment(graph: &TrussGraph, stress: &StressField, max_angle_deg: f64) -> Result<AlignmentReport> {
    if !(max_angle_deg > 0.0 && max_angle_deg <= 90.0) {
        return Err(Error::InvalidInput(format!("alignment angle must be in (0, 90], got {max_angle_deg}")));
    }
    let mut angles = Vec::new();
    for e in &graph.elements {
        let (Some(t), Family::Iso1 | Family::Iso2 | Family::Iso3) = (e.tet, e.family) else {
            continue;
        };
        let (Some(q), Some(l)) = (stress.eigenvectors.get(t), stress.eigenvalues.get(t)) else {
            return Err(Error::InvalidInput(format!("element refers to tet {t}, stress field has {}", stress.len())));
        };
        let d = graph.nodes[e.nodes[1]].position - graph.nodes[e.nodes[0]].position;
        angles.push(angle_to_eigenvectors(q, l, &d));
    }
    let aligned = angles.iter().filter(|&&a| a <= max_angle_deg).count();
    angles.sort_by(f64::total_cmp);
    let median = if angles.is_empty() { 0.0 } else { angles[angles.len() / 2] };
    Ok(AlignmentReport {
        max_angle_deg,
        elements: angles.len(),
        aligned,
        fraction: if angles.is_empty() { 0.0 } else { aligned as f64 / angles.len() as f64 },
        median_angle_deg: median,
    })
}
