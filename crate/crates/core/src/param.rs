//! Volumetric parametrization whose coordinate lines follow a frame field.

use nalgebra::Matrix3;
use nalgebra_sparse::CsrMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{DiscreteOperators, TetMesh, Vec3};
use crate::sparse::{mul_vec, norm2, principal_submatrix, LdlSolver, Triplets};

/// Relative residual required of the normal equations.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamConfig {
    pub beta: f64,
    pub rho: f64,
}

impl Default for ParamConfig {
    fn default() -> Self {
        Self { beta: 1.0, rho: 10.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Parametrization {
    /// Per-vertex texture coordinates, each component with zero mean.
    pub phi: Vec<Vec3>,
    /// `ρ·s·(φ − min φ)` once normalized.
    pub phi_tilde: Option<Vec<Vec3>>,
    pub beta: f64,
    pub rho: f64,
    /// Uniform normalization scale `s`.
    pub scale: f64,
    /// Relative residual of each component's normal equations.
    pub residuals: [f64; 3],
}

impl Parametrization {
    pub fn tilde(&self) -> Result<&[Vec3]> {
        self.phi_tilde
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("parametrization has not been normalized".into()))
    }
}

/// Per-tet directional derivative operator `Σ_axis v_axis G_axis`.
pub fn directional_gradient(ops: &DiscreteOperators, v: &[Vec3]) -> CsrMatrix<f64> {
    let nt = ops.basis_gradients.len();
    let nv = ops.gx.ncols();
    let mut trip = Triplets::with_capacity(nt, nv, 4 * nt);
    for axis in 0..3 {
        let g = ops.g(axis);
        for (t, row) in g.row_iter().enumerate() {
            for (&j, &val) in row.col_indices().iter().zip(row.values()) {
                trip.push(t, j, v[t][axis] * val);
            }
        }
    }
    trip.to_csr()
}

/// Per-tet derivatives of each vertex basis function along the frame columns:
/// `d[t][k][a] = r_k · ∇λ_a`.
fn frame_derivatives(ops: &DiscreteOperators, frames: &[Matrix3<f64>]) -> Vec<[[f64; 4]; 3]> {
    ops.basis_gradients
        .iter()
        .zip(frames)
        .map(|(g, r)| {
            let mut d = [[0.0; 4]; 3];
            for k in 0..3 {
                let rk = r.column(k);
                for a in 0..4 {
                    d[k][a] = rk.dot(&g[a]);
                }
            }
            d
        })
        .collect()
}

/// `β Σ_k ‖G_k φ_k − 1‖² + Σ_k Σ_{j≠k} ‖G_j φ_k‖²` with `G_k` the derivative
/// along frame column `k`.
pub fn objective(mesh: &TetMesh, ops: &DiscreteOperators, frames: &[Matrix3<f64>], beta: f64, phi: &[Vec3]) -> f64 {
    let d = frame_derivatives(ops, frames);
    let mut e = 0.0;
    for (t, tet) in mesh.tets.iter().enumerate() {
        for k in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..4).map(|a| d[t][j][a] * phi[tet[a]][k]).sum();
                e += if j == k { beta * (v - 1.0).powi(2) } else { v * v };
            }
        }
    }
    e
}

/// System matrix and right-hand side of the normal equations for component `k`.
fn normal_equations(mesh: &TetMesh, d: &[[[f64; 4]; 3]], beta: f64, k: usize) -> (CsrMatrix<f64>, Vec<f64>) {
    let nv = mesh.n_vertices();
    let mut trip = Triplets::with_capacity(nv, nv, 16 * mesh.n_tets());
    let mut rhs = vec![0.0; nv];
    for (t, tet) in mesh.tets.iter().enumerate() {
        for a in 0..4 {
            rhs[tet[a]] += beta * d[t][k][a];
            for b in 0..4 {
                let mut v = 0.0;
                for j in 0..3 {
                    let w = if j == k { beta } else { 1.0 };
                    v += w * (d[t][j][a] * d[t][j][b]);
                }
                trip.push(tet[a], tet[b], v);
            }
        }
    }
    (trip.to_csr(), rhs)
}

/// Minimize the frame-following objective over per-vertex `φ`, fixing the
/// translation gauge to zero mean per component.
pub fn solve_parametrization(
    mesh: &TetMesh,
    ops: &DiscreteOperators,
    frames: &[Matrix3<f64>],
    beta: f64,
) -> Result<Parametrization> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    if frames.len() != mesh.n_tets() {
        return Err(Error::InvalidInput(format!("{} frames for {} tets", frames.len(), mesh.n_tets())));
    }
    let components = mesh.connected_components();
    if components != 1 {
        return Err(Error::InvalidMesh(format!(
            "parametrization needs a connected mesh, found {components} components"
        )));
    }
    let nv = mesh.n_vertices();
    let d = frame_derivatives(ops, frames);
    let keep: Vec<usize> = (1..nv).collect();
    let mut phi = vec![Vec3::zeros(); nv];
    let mut residuals = [0.0; 3];
    for k in 0..3 {
        let (m, rhs) = normal_equations(mesh, &d, beta, k);
        // Pin vertex 0, then shift to zero mean; the null space is exactly the
        // constants, so both gauges give the same minimizer up to translation.
        let sub = principal_submatrix(&m, &keep);
        let solver = LdlSolver::factor(&sub).map_err(|e| match e {
            Error::Singular { equations } => Error::Numerical(format!(
                "parametrization system for component {} singular beyond translation at vertices {:?}",
                k + 1,
                equations.iter().take(8).map(|&i| i + 1).collect::<Vec<_>>()
            )),
            other => other,
        })?;
        let (x, _) = solver.solve_refined(&sub, &rhs[1..], 3);
        let mut full = Vec::with_capacity(nv);
        full.push(0.0);
        full.extend_from_slice(&x);
        let mean = full.iter().sum::<f64>() / nv as f64;
        for v in full.iter_mut() {
            *v -= mean;
        }
        let r = mul_vec(&m, &full);
        let res: Vec<f64> = r.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let rel = norm2(&res) / norm2(&rhs).max(f64::MIN_POSITIVE);
        if !(rel <= RESIDUAL_TOL) {
            return Err(Error::Numerical(format!(
                "parametrization residual {rel:e} for component {} exceeds {RESIDUAL_TOL:e}",
                k + 1
            )));
        }
        residuals[k] = rel;
        for (p, v) in phi.iter_mut().zip(&full) {
            p[k] = *v;
        }
    }
    Ok(Parametrization { phi, phi_tilde: None, beta, rho: 0.0, scale: 0.0, residuals })
}

/// `φ̃ = ρ s (φ − min φ)` with one uniform `s = 1 / max component range`.
pub fn normalize_and_scale(mut p: Parametrization, rho: f64) -> Result<Parametrization> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidInput(format!("rho must be positive, got {rho}")));
    }
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for v in &p.phi {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    let range = (hi - lo).max();
    let magnitude = lo.abs().max().max(hi.abs().max());
    if !(range > f64::EPSILON * magnitude) || !range.is_finite() {
        return Err(Error::ConstantParametrization);
    }
    let s = 1.0 / range;
    p.phi_tilde = Some(p.phi.iter().map(|v| (v - lo) * (s * rho)).collect());
    p.scale = s;
    p.rho = rho;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::{box_mesh, jitter_vertices};
    use crate::mesh::operators::build_operators;
    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube() -> TetMesh {
        jitter_vertices(&box_mesh(Vec3::zeros(), Vec3::repeat(1.0), [3, 3, 3]).unwrap(), 0.2, 5).unwrap()
    }

    #[test]
    fn directional_gradient_examples() {
        let m = cube();
        let ops = build_operators(&m).unwrap();
        let f: Vec<f64> = m.vertices.iter().map(|p| p.x).collect();
        let dx = mul_vec(&directional_gradient(&ops, &vec![Vec3::x(); m.n_tets()]), &f);
        let dy = mul_vec(&directional_gradient(&ops, &vec![Vec3::y(); m.n_tets()]), &f);
        assert!(dx.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(dy.iter().all(|v| v.abs() < 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Vec3::new(0.3, -1.2, 2.0);
        let dirs: Vec<Vec3> = (0..m.n_tets())
            .map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize())
            .collect();
        let f: Vec<f64> = m.vertices.iter().map(|p| a.dot(p)).collect();
        let dv = mul_vec(&directional_gradient(&ops, &dirs), &f);
        for (t, v) in dv.iter().enumerate() {
            assert!((v - a.dot(&dirs[t])).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_frames_fit_exactly() {
        let m = cube();
        let ops = build_operators(&m).unwrap();
        let frames = vec![Matrix3::identity(); m.n_tets()];
        let p = solve_parametrization(&m, &ops, &frames, 1.0).unwrap();
        assert!(objective(&m, &ops, &frames, 1.0, &p.phi) <= 1e-10);
        let centroid: Vec3 = m.vertices.iter().sum::<Vec3>() / m.n_vertices() as f64;
        for (x, phi) in m.vertices.iter().zip(&p.phi) {
            assert!((phi - (x - centroid)).norm() < 1e-9);
        }
        for k in 0..3 {
            let mean: f64 = p.phi.iter().map(|v| v[k]).sum::<f64>() / m.n_vertices() as f64;
            assert!(mean.abs() < 1e-10);
        }
        let p = normalize_and_scale(p, 4.0).unwrap();
        let tilde = p.tilde().unwrap();
        for k in 0..3 {
            let f: Vec<f64> = tilde.iter().map(|v| v[k]).collect();
            for g in ops.gradient(&m, &f) {
                assert!((g[k] - 4.0 * p.scale).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rotated_frames_are_equivariant() {
        let m = cube();
        let ops = build_operators(&m).unwrap();
        let r0 = Rotation3::from_euler_angles(0.3, 0.5, -0.4).into_inner();
        let p = solve_parametrization(&m, &ops, &vec![r0; m.n_tets()], 1.0).unwrap();
        let centroid: Vec3 = m.vertices.iter().sum::<Vec3>() / m.n_vertices() as f64;
        for (x, phi) in m.vertices.iter().zip(&p.phi) {
            assert!((phi - r0.transpose() * (x - centroid)).norm() < 1e-9);
        }
    }

    fn curl_frames(m: &TetMesh) -> Vec<Matrix3<f64>> {
        // Frames twisting about z with height cannot be integrated exactly.
        (0..m.n_tets())
            .map(|t| Rotation3::from_axis_angle(&Vec3::z_axis(), 1.2 * m.centroid(t).x).into_inner())
            .collect()
    }

    #[test]
    fn beta_trades_spacing_against_orthogonality() {
        let m = cube();
        let ops = build_operators(&m).unwrap();
        let frames = curl_frames(&m);
        let d = frame_derivatives(&ops, &frames);
        let parts = |phi: &[Vec3]| {
            let (mut spacing, mut ortho) = (0.0, 0.0);
            for (t, tet) in m.tets.iter().enumerate() {
                for k in 0..3 {
                    for j in 0..3 {
                        let v: f64 = (0..4).map(|a| d[t][j][a] * phi[tet[a]][k]).sum();
                        if j == k {
                            spacing += (v - 1.0).powi(2);
                        } else {
                            ortho += v * v;
                        }
                    }
                }
            }
            (spacing, ortho)
        };
        let results: Vec<(f64, f64)> = [0.1, 1.0, 10.0]
            .iter()
            .map(|&b| parts(&solve_parametrization(&m, &ops, &frames, b).unwrap().phi))
            .collect();
        for w in results.windows(2) {
            assert!(w[1].0 < w[0].0, "{results:?}");
            assert!(w[1].1 > w[0].1, "{results:?}");
        }
    }

    #[test]
    fn solution_is_a_minimum() {
        let m = cube();
        let ops = build_operators(&m).unwrap();
        let frames = curl_frames(&m);
        let p = solve_parametrization(&m, &ops, &frames, 1.0).unwrap();
        let e0 = objective(&m, &ops, &frames, 1.0, &p.phi);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let phi: Vec<Vec3> = p
                .phi
                .iter()
                .map(|v| v + Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 1e-3)
                .collect();
            assert!(objective(&m, &ops, &frames, 1.0, &phi) > e0);
        }
    }

    #[test]
    fn normalization_rules() {
        let base = Parametrization {
            phi: vec![Vec3::new(2.0, 0.0, 1.0), Vec3::new(5.0, 1.0, 2.0), Vec3::new(3.0, 0.5, 1.5)],
            phi_tilde: None,
            beta: 1.0,
            rho: 0.0,
            scale: 0.0,
            residuals: [0.0; 3],
        };
        let p = normalize_and_scale(base.clone(), 10.0).unwrap();
        assert!((p.scale - 1.0 / 3.0).abs() < 1e-15);
        let t = p.tilde().unwrap();
        assert!((t[1] - Vec3::new(10.0, 10.0 / 3.0, 10.0 / 3.0)).norm() < 1e-12);
        assert_eq!(t[0], Vec3::zeros());
        let p2 = normalize_and_scale(base.clone(), 20.0).unwrap();
        for (a, b) in t.iter().zip(p2.tilde().unwrap()) {
            assert!((b - a * 2.0).norm() < 1e-12);
        }
        let unit = Parametrization {
            phi: vec![Vec3::new(0.2, 0.1, 0.3), Vec3::new(1.2, 0.6, 0.4)],
            ..base.clone()
        };
        let u = normalize_and_scale(unit.clone(), 1.0).unwrap();
        for (a, b) in unit.phi.iter().zip(u.tilde().unwrap()) {
            assert!((b - (a - Vec3::new(0.2, 0.1, 0.3))).norm() < 1e-15);
        }
        let flat = Parametrization { phi: vec![Vec3::repeat(1.0); 3], ..base };
        assert!(matches!(normalize_and_scale(flat, 1.0), Err(Error::ConstantParametrization)));
    }

    #[test]
    fn disconnected_mesh_is_rejected() {
        let v = vec![
            Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z(),
            Vec3::new(5.0, 0.0, 0.0), Vec3::new(6.0, 0.0, 0.0), Vec3::new(5.0, 1.0, 0.0), Vec3::new(5.0, 0.0, 1.0),
        ];
        let m = TetMesh::new(v, vec![[0, 1, 2, 3], [4, 5, 6, 7]]).unwrap();
        let ops = build_operators(&m).unwrap();
        assert!(solve_parametrization(&m, &ops, &vec![Matrix3::identity(); 2], 1.0).is_err());
    }
}
