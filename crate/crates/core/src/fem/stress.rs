use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use super::material::Material;
use crate::error::{Error, Result};
use crate::mesh::operators::tet_basis_gradients;
use crate::mesh::{TetMesh, Vec3};

/// Bounds of the rescaled absolute eigenvalues of `σ₊`.
pub const SPD_RANGE: (f64, f64) = (1.0, 30.0);

/// Per-tet Cauchy stress with its eigen-decomposition and, once
/// [`stress_spd`] has run, the positive-definite surrogate `σ₊`.
#[derive(Debug, Clone)]
pub struct StressField {
    pub sigma: Vec<Matrix3<f64>>,
    /// Eigenvalues sorted in decreasing order.
    pub eigenvalues: Vec<Vector3<f64>>,
    /// Matching unit eigenvectors as columns, `det = +1`.
    pub eigenvectors: Vec<Matrix3<f64>>,
    pub sigma_plus: Option<Vec<Matrix3<f64>>>,
}

/// Eigenpairs of a symmetric matrix, eigenvalues decreasing, right-handed
/// eigenvector basis.
pub fn sorted_eigen(m: &Matrix3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let vals = Vector3::new(eig.eigenvalues[idx[0]], eig.eigenvalues[idx[1]], eig.eigenvalues[idx[2]]);
    let mut q = Matrix3::from_columns(&[
        eig.eigenvectors.column(idx[0]).into_owned(),
        eig.eigenvectors.column(idx[1]).into_owned(),
        eig.eigenvectors.column(idx[2]).into_owned(),
    ]);
    if q.determinant() < 0.0 {
        let c = -q.column(2).into_owned();
        q.set_column(2, &c);
    }
    (vals, q)
}

impl StressField {
    /// Build from raw tensors (symmetrized), computing eigenpairs.
    pub fn from_tensors(tensors: Vec<Matrix3<f64>>) -> Self {
        let sigma: Vec<Matrix3<f64>> = tensors.into_iter().map(|s| (s + s.transpose()) * 0.5).collect();
        let (eigenvalues, eigenvectors) = sigma.iter().map(sorted_eigen).unzip();
        Self {
            sigma,
            eigenvalues,
            eigenvectors,
            sigma_plus: None,
        }
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// `σ₊`, or an error if [`stress_spd`] has not been applied.
    pub fn spd(&self) -> Result<&[Matrix3<f64>]> {
        self.sigma_plus
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("stress field has no SPD surrogate".into()))
    }

    /// Von Mises equivalent stress per tet.
    pub fn von_mises(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|l| (0.5 * ((l[0] - l[1]).powi(2) + (l[1] - l[2]).powi(2) + (l[2] - l[0]).powi(2))).sqrt())
            .collect()
    }
}

/// Displacement gradient `∂u_i/∂x_j` of a P1 field on tet `t`.
pub fn displacement_gradient(mesh: &TetMesh, t: usize, u: &[Vec3]) -> Result<Matrix3<f64>> {
    let g = tet_basis_gradients(&mesh.tet_positions(t)).ok_or(Error::DegenerateTet {
        tet: t,
        volume: mesh.volumes[t],
    })?;
    Ok((0..4).map(|a| u[mesh.tets[t][a]] * g[a].transpose()).sum())
}

/// Constant per-tet Cauchy stress `σ = C : ε(u)` for a P1 displacement field.
pub fn cauchy_stress(mesh: &TetMesh, material: &Material, u: &[Vec3]) -> Result<StressField> {
    if u.len() != mesh.n_vertices() {
        return Err(Error::InvalidInput(format!(
            "displacement has {} entries for {} vertices",
            u.len(),
            mesh.n_vertices()
        )));
    }
    let mut tensors = Vec::with_capacity(mesh.n_tets());
    for t in 0..mesh.n_tets() {
        let du = displacement_gradient(mesh, t, u)?;
        let strain = (du + du.transpose()) * 0.5;
        tensors.push(material.stress(&strain));
    }
    Ok(StressField::from_tensors(tensors))
}

/// Populate `σ₊ = Q λ′ Qᵀ` where `λ′` is `|λ|` mapped by one field-wide affine
/// map onto `[1, 30]`.
pub fn stress_spd(mut field: StressField) -> Result<StressField> {
    let abs_all = field.eigenvalues.iter().flat_map(|l| l.iter().map(|x| x.abs()));
    let (lo, hi) = abs_all.fold((f64::INFINITY, 0.0_f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if !(hi > 0.0) || !hi.is_finite() {
        return Err(Error::NullStressField);
    }
    let (a, b) = SPD_RANGE;
    let map = |x: f64| -> f64 {
        if hi - lo < 1e-12 * hi {
            0.5 * (a + b)
        } else {
            (a + (b - a) * (x.abs() - lo) / (hi - lo)).clamp(a, b)
        }
    };
    let plus = field
        .eigenvalues
        .iter()
        .zip(&field.eigenvectors)
        .map(|(l, q)| {
            let d = Matrix3::from_diagonal(&l.map(map));
            let s = q * d * q.transpose();
            (s + s.transpose()) * 0.5
        })
        .collect();
    field.sigma_plus = Some(plus);
    Ok(field)
}

/// Rescaled eigenvalue `λ′` of `σ₊` for each eigenvalue of `σ`, same order.
pub fn spd_eigenvalues(field: &StressField) -> Result<Vec<Vector3<f64>>> {
    let plus = field.spd()?;
    Ok(plus
        .iter()
        .zip(&field.eigenvectors)
        .map(|(s, q)| Vector3::from_fn(|k, _| q.column(k).dot(&(s * q.column(k)))))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::box_mesh;
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    #[test]
    fn spd_of_single_tensor() {
        let f = StressField::from_tensors(vec![Matrix3::from_diagonal(&Vector3::new(3.0, -2.0, 1.0))]);
        let f = stress_spd(f).unwrap();
        let s = f.spd().unwrap()[0];
        // |λ| range [1,3]: 3 → 30, 2 → 1 + 29/2 = 15.5, 1 → 1.
        let expect = Matrix3::from_diagonal(&Vector3::new(30.0, 15.5, 1.0));
        assert!((s - expect).norm() < 1e-12);
    }

    #[test]
    fn degenerate_range_maps_to_midpoint() {
        let r = Rotation3::from_euler_angles(0.3, -0.2, 1.1).into_inner();
        let t = r * Matrix3::from_diagonal(&Vector3::new(2.0, -2.0, 2.0)) * r.transpose();
        let f = stress_spd(StressField::from_tensors(vec![t, t])).unwrap();
        for s in f.spd().unwrap() {
            assert!((s - Matrix3::identity() * 15.5).norm() < 1e-12);
        }
    }

    #[test]
    fn null_field_is_rejected() {
        let f = StressField::from_tensors(vec![Matrix3::zeros(); 3]);
        assert!(matches!(stress_spd(f), Err(Error::NullStressField)));
    }

    #[test]
    fn zero_displacement_zero_stress() {
        let m = box_mesh(Vec3::zeros(), Vec3::repeat(1.0), [1, 1, 1]).unwrap();
        let f = cauchy_stress(&m, &Material::default(), &vec![Vec3::zeros(); m.n_vertices()]).unwrap();
        assert!(f.sigma.iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn finite_rotation_stress_is_second_order() {
        let m = box_mesh(Vec3::zeros(), Vec3::repeat(1.0), [2, 2, 2]).unwrap();
        let mat = Material::default();
        let theta = 1e-6;
        let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vec3::new(1.0, 2.0, 3.0)), theta);
        let u: Vec<Vec3> = m.vertices.iter().map(|p| r * p - p).collect();
        let f = cauchy_stress(&m, &mat, &u).unwrap();
        // Strain of a finite rotation is (RᵀR - I)/2 - ... = O(θ²); allow a
        // generous constant.
        let bound = 10.0 * theta * theta * mat.young_modulus;
        for s in &f.sigma {
            assert!(s.norm() <= bound, "{} > {bound}", s.norm());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn spd_preserves_eigenvectors(entries in prop::array::uniform6(-1e6f64..1e6), other in prop::array::uniform6(-1e6f64..1e6)) {
            let mk = |e: [f64; 6]| Matrix3::new(e[0], e[3], e[4], e[3], e[1], e[5], e[4], e[5], e[2]);
            let f = stress_spd(StressField::from_tensors(vec![mk(entries), mk(other)])).unwrap();
            let lp = spd_eigenvalues(&f).unwrap();
            for t in 0..2 {
                let s = f.spd().unwrap()[t];
                let (vals, _) = sorted_eigen(&s);
                prop_assert!(vals[2] >= 1.0 - 1e-9);
                prop_assert!(vals[0] <= 30.0 + 1e-9);
                for k in 0..3 {
                    let v = f.eigenvectors[t].column(k).into_owned();
                    prop_assert!((s * v - v * lp[t][k]).norm() <= 1e-8);
                }
                // Order of |λ| is preserved by the map.
                let abs = f.eigenvalues[t].map(f64::abs);
                for i in 0..3 { for j in 0..3 {
                    if abs[i] < abs[j] { prop_assert!(lp[t][i] <= lp[t][j] + 1e-12); }
                }}
            }
        }
    }
}
