//! Per-tet gradient operators and the P1 (cotangent) Laplacian.

use std::collections::BTreeMap;

use nalgebra::Matrix3;
use nalgebra_sparse::CsrMatrix;

use super::{TetMesh, Vec3, DEGENERATE_VOLUME};
use crate::error::{Error, Result};
use crate::sparse::Triplets;

#[derive(Debug, Clone)]
pub struct DiscreteOperators {
    /// `|T| × |V|` directional derivative operators.
    pub gx: CsrMatrix<f64>,
    pub gy: CsrMatrix<f64>,
    pub gz: CsrMatrix<f64>,
    /// `|V| × |V|` positive semi-definite Laplacian, `Σ_t V_t ∇λ_a·∇λ_b`.
    pub laplacian: CsrMatrix<f64>,
    /// Barycentric gradients of the four tet vertices.
    pub basis_gradients: Vec<[Vec3; 4]>,
}

impl DiscreteOperators {
    pub fn g(&self, axis: usize) -> &CsrMatrix<f64> {
        match axis {
            0 => &self.gx,
            1 => &self.gy,
            _ => &self.gz,
        }
    }

    /// Per-tet gradient of a per-vertex scalar, computed directly.
    pub fn gradient(&self, mesh: &TetMesh, f: &[f64]) -> Vec<Vec3> {
        mesh.tets
            .iter()
            .zip(&self.basis_gradients)
            .map(|(tet, g)| (0..4).map(|i| g[i] * f[tet[i]]).sum())
            .collect()
    }
}

/// Barycentric gradients of a tet with the given vertex positions.
pub fn tet_basis_gradients(p: &[Vec3; 4]) -> Option<[Vec3; 4]> {
    let d = Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]);
    let inv = d.try_inverse()?;
    let g1: Vec3 = inv.row(0).transpose();
    let g2: Vec3 = inv.row(1).transpose();
    let g3: Vec3 = inv.row(2).transpose();
    Some([-(g1 + g2 + g3), g1, g2, g3])
}

pub fn build_operators(mesh: &TetMesh) -> Result<DiscreteOperators> {
    let nt = mesh.n_tets();
    let nv = mesh.n_vertices();
    let mut gx = Triplets::with_capacity(nt, nv, 4 * nt);
    let mut gy = Triplets::with_capacity(nt, nv, 4 * nt);
    let mut gz = Triplets::with_capacity(nt, nv, 4 * nt);
    let mut basis_gradients = Vec::with_capacity(nt);
    // Off-diagonal weights accumulated once per undirected pair so that the
    // assembled matrix is exactly symmetric.
    let mut off: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (t, tet) in mesh.tets.iter().enumerate() {
        let vol = mesh.volumes[t];
        if vol.abs() < DEGENERATE_VOLUME {
            return Err(Error::DegenerateTet { tet: t, volume: vol });
        }
        let p = mesh.tet_positions(t);
        let g = tet_basis_gradients(&p).ok_or(Error::DegenerateTet { tet: t, volume: vol })?;
        for i in 0..4 {
            gx.push(t, tet[i], g[i].x);
            gy.push(t, tet[i], g[i].y);
            gz.push(t, tet[i], g[i].z);
            for j in i + 1..4 {
                let (a, b) = if tet[i] < tet[j] { (tet[i], tet[j]) } else { (tet[j], tet[i]) };
                *off.entry((a, b)).or_insert(0.0) += vol * g[i].dot(&g[j]);
            }
        }
        basis_gradients.push(g);
    }
    let mut diag = vec![0.0; nv];
    let mut lap = Triplets::with_capacity(nv, nv, 2 * off.len() + nv);
    for (&(a, b), &w) in &off {
        lap.push(a, b, w);
        lap.push(b, a, w);
        diag[a] -= w;
        diag[b] -= w;
    }
    for (v, &d) in diag.iter().enumerate() {
        lap.push(v, v, d);
    }
    Ok(DiscreteOperators {
        gx: gx.to_csr(),
        gy: gy.to_csr(),
        gz: gz.to_csr(),
        laplacian: lap.to_csr(),
        basis_gradients,
    })
}
