//! Moving vertex parameters off integer values.

use crate::error::{Error, Result};
use crate::mesh::{Topology, Vec3};
use crate::param::Parametrization;

/// Distance to an integer below which a parameter value counts as integral.
pub const INTEGER_TOL: f64 = 1e-9;
pub const DEFAULT_EPSILON: f64 = 1e-7;

/// Nearest integer when `v` is within [`INTEGER_TOL`] of it.
pub fn near_integer(v: f64) -> Option<f64> {
    let n = v.round();
    ((v - n).abs() <= INTEGER_TOL).then_some(n)
}

/// Integers strictly between `a` and `b`, ignoring ones within
/// [`INTEGER_TOL`] of either end. Ascending.
pub fn integers_between(a: f64, b: f64) -> impl DoubleEndedIterator<Item = f64> {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let first = (lo + INTEGER_TOL).floor() + 1.0;
    let last = (hi - INTEGER_TOL).ceil() - 1.0;
    let count = if last >= first { (last - first) as usize + 1 } else { 0 };
    (0..count).map(move |i| first + i as f64)
}

/// Replace every near-integer component `n` with `n − ε`, or `n + ε` when the
/// vertex is a one-ring minimum of that component. Other values are copied
/// bit for bit.
pub fn perturb_values<const N: usize>(
    values: &[[f64; N]],
    neighbors: &[Vec<usize>],
    epsilon: f64,
) -> Result<Vec<[f64; N]>> {
    if !(epsilon > 2.0 * INTEGER_TOL && epsilon < 0.5) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon:e} outside ({:e}, 0.5)", 2.0 * INTEGER_TOL)));
    }
    if values.len() != neighbors.len() {
        return Err(Error::InvalidInput("one neighbor list per vertex required".into()));
    }
    let mut out = values.to_vec();
    for (v, ring) in neighbors.iter().enumerate() {
        for k in 0..N {
            let x = values[v][k];
            if let Some(n) = near_integer(x) {
                let is_min = ring.iter().all(|&u| x <= values[u][k]);
                out[v][k] = if is_min { n + epsilon } else { n - epsilon };
            }
        }
    }
    Ok(out)
}

/// Perturb `φ̃` of a parametrization over the mesh one-rings.
pub fn perturb_parametrization(mut p: Parametrization, topology: &Topology, epsilon: f64) -> Result<Parametrization> {
    let vals: Vec<[f64; 3]> = p.tilde()?.iter().map(|v| [v.x, v.y, v.z]).collect();
    let out = perturb_values(&vals, &topology.vertex_neighbors, epsilon)?;
    p.phi_tilde = Some(out.into_iter().map(Vec3::from).collect());
    Ok(p)
}

/// Error if any component is within [`INTEGER_TOL`] of an integer.
pub fn check_perturbed<const N: usize>(values: &[[f64; N]]) -> Result<()> {
    for (v, x) in values.iter().enumerate() {
        for (k, c) in x.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::Perturbation(format!("vertex {v} parameter {} is not finite", k + 1)));
            }
            if near_integer(*c).is_some() {
                return Err(Error::Perturbation(format!(
                    "vertex {v} parameter {} = {c} lies on an integer isocurve",
                    k + 1
                )));
            }
        }
    }
    Ok(())
}
