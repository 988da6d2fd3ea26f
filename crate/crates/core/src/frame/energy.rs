//! Frame–tensor matching energy, smoothness energy and their gradients.

use nalgebra::Matrix3;
use nalgebra_sparse::CsrMatrix;

use super::rotation::{exp_so3, right_jacobian, skew};
use crate::error::{Error, Result};
use crate::mesh::Vec3;

/// Offset applied to exactly-zero per-vertex angular velocities before the
/// data term is evaluated.
pub fn zero_offset() -> Vec3 {
    Vec3::repeat(f64::EPSILON.sqrt() / 3f64.sqrt())
}

#[inline]
fn perturbed(w: &Vec3) -> Vec3 {
    if w.norm_squared() == 0.0 {
        zero_offset()
    } else {
        *w
    }
}

/// `(|vᵀ M v|)^½` for a unit vector `v`.
pub fn tensor_norm(v: &Vec3, m: &Matrix3<f64>) -> Result<f64> {
    if (v.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("tensor_norm needs a unit vector, |v| = {}", v.norm())));
    }
    Ok(v.dot(&(m * v)).abs().sqrt())
}

/// Tet rotation from the four vertex angular velocities, zero entries being
/// replaced by [`zero_offset`].
pub fn frame_from_omega(omega: &[Vec3; 4]) -> Matrix3<f64> {
    exp_so3(&omega.iter().map(perturbed).sum())
}

/// `‖r₂‖_M + ‖r₃‖_M` for the frame columns of `r`.
pub fn data_energy(r: &Matrix3<f64>, m: &Matrix3<f64>) -> f64 {
    (1..3)
        .map(|k| {
            let c = r.column(k);
            c.dot(&(m * c)).abs().sqrt()
        })
        .sum()
}

/// Data energy of one tet and its gradient with respect to `s = Σ ω`.
pub fn data_energy_grad(s: &Vec3, m: &Matrix3<f64>) -> (f64, Vec3) {
    let r = exp_so3(s);
    let jr = right_jacobian(s);
    let mut e = 0.0;
    let mut g = Vec3::zeros();
    for k in 1..3 {
        let rk: Vec3 = r.column(k).into_owned();
        let mr = m * rk;
        let q = rk.dot(&mr);
        let f = q.abs().sqrt();
        e += f;
        if f > 0.0 {
            // d r_k / d s = -R [e_k] J_r
            let ek = Vec3::ith(k, 1.0);
            let drk = -(r * skew(&ek) * jr);
            g += drk.transpose() * mr * (q.signum() / f);
        }
    }
    (e, g)
}

/// `½ Σ_c ω_cᵀ L ω_c + ½ ωᵀω` with `ω` stored per vertex.
pub fn smooth_energy(omega: &[Vec3], laplacian: &CsrMatrix<f64>) -> f64 {
    smooth_energy_grad(omega, laplacian).0
}

pub fn smooth_energy_grad(omega: &[Vec3], laplacian: &CsrMatrix<f64>) -> (f64, Vec<Vec3>) {
    let mut grad: Vec<Vec3> = omega.to_vec();
    for (i, row) in laplacian.row_iter().enumerate() {
        let mut acc = Vec3::zeros();
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            acc += omega[j] * v;
        }
        grad[i] += acc;
    }
    let e = 0.5 * omega.iter().zip(&grad).map(|(w, g)| w.dot(g)).sum::<f64>();
    (e, grad)
}

/// Frame-fitting objective over a fixed mesh and SPD tensor field.
#[derive(Debug, Clone, Copy)]
pub struct FrameEnergy<'a> {
    pub tets: &'a [[usize; 4]],
    pub sigma_plus: &'a [Matrix3<f64>],
    pub laplacian: &'a CsrMatrix<f64>,
}

impl<'a> FrameEnergy<'a> {
    fn tet_sum(&self, omega: &[Vec3], t: usize) -> Vec3 {
        self.tets[t].iter().map(|&v| perturbed(&omega[v])).sum()
    }

    pub fn frames(&self, omega: &[Vec3]) -> Vec<Matrix3<f64>> {
        (0..self.tets.len()).map(|t| exp_so3(&self.tet_sum(omega, t))).collect()
    }

    /// `Σ_t E_data` only.
    pub fn data(&self, omega: &[Vec3]) -> f64 {
        (0..self.tets.len())
            .map(|t| data_energy(&exp_so3(&self.tet_sum(omega, t)), &self.sigma_plus[t]))
            .sum()
    }

    /// `E_α = Σ_t E_data + α E_smooth` and its per-vertex gradient.
    pub fn total_grad(&self, omega: &[Vec3], alpha: f64) -> (f64, Vec<Vec3>) {
        let (es, mut grad) = smooth_energy_grad(omega, self.laplacian);
        for g in grad.iter_mut() {
            *g *= alpha;
        }
        let mut e = alpha * es;
        for (t, tet) in self.tets.iter().enumerate() {
            let (ed, gs) = data_energy_grad(&self.tet_sum(omega, t), &self.sigma_plus[t]);
            e += ed;
            for &v in tet {
                grad[v] += gs;
            }
        }
        (e, grad)
    }
}

pub fn flatten(v: &[Vec3]) -> Vec<f64> {
    v.iter().flat_map(|w| [w.x, w.y, w.z]).collect()
}

pub fn unflatten(x: &[f64]) -> Vec<Vec3> {
    x.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
}
