use nalgebra::{Matrix3, SymmetricEigen, Matrix6};
use nalgebra_sparse::CsrMatrix;

use super::bc::{load_vector, prescribed_dofs, BoundaryConditions};
use super::material::Material;
use crate::error::{Error, Result};
use crate::mesh::operators::tet_basis_gradients;
use crate::mesh::{TetMesh, Vec3, DEGENERATE_VOLUME};
use crate::sparse::{mul_vec, principal_submatrix, LdlSolver, Triplets};

/// Relative residual required of the static solve on free DOFs.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct StaticSolution {
    /// Per-vertex displacement (m).
    pub displacement: Vec<Vec3>,
    /// Per-vertex reaction force (N); zero where nothing is prescribed.
    pub reactions: Vec<Vec3>,
    /// Applied nodal loads (N).
    pub loads: Vec<Vec3>,
    /// Relative residual on free DOFs.
    pub residual: f64,
}

/// 12×12 element stiffness `V Bᵀ C B` written block-wise for vertex pair
/// `(a, b)` as `V (λ g_a g_bᵀ + μ g_b g_aᵀ + μ (g_a·g_b) I)`.
pub fn element_stiffness(g: &[Vec3; 4], volume: f64, material: &Material) -> [[f64; 12]; 12] {
    let (lambda, mu) = material.lame();
    let mut k = [[0.0; 12]; 12];
    for a in 0..4 {
        for b in a..4 {
            let block: Matrix3<f64> = (g[a] * g[b].transpose()) * lambda
                + (g[b] * g[a].transpose()) * mu
                + Matrix3::identity() * (mu * g[a].dot(&g[b]));
            for i in 0..3 {
                for j in 0..3 {
                    let v = volume * block[(i, j)];
                    k[3 * a + i][3 * b + j] = v;
                    k[3 * b + j][3 * a + i] = v;
                }
            }
        }
    }
    // Diagonal blocks: enforce exact symmetry within the block.
    for a in 0..4 {
        for i in 0..3 {
            for j in i + 1..3 {
                k[3 * a + j][3 * a + i] = k[3 * a + i][3 * a + j];
            }
        }
    }
    k
}

/// Global `3|V| × 3|V|` stiffness matrix, exactly symmetric.
pub fn assemble_stiffness(mesh: &TetMesh, material: &Material) -> Result<CsrMatrix<f64>> {
    let n = 3 * mesh.n_vertices();
    let mut trip = Triplets::with_capacity(n, n, 144 * mesh.n_tets());
    for (t, tet) in mesh.tets.iter().enumerate() {
        let vol = mesh.volumes[t];
        if vol < DEGENERATE_VOLUME {
            return Err(Error::DegenerateTet { tet: t, volume: vol });
        }
        let g = tet_basis_gradients(&mesh.tet_positions(t))
            .ok_or(Error::DegenerateTet { tet: t, volume: vol })?;
        let k = element_stiffness(&g, vol, material);
        for r in 0..12 {
            for c in 0..12 {
                trip.push(3 * tet[r / 3] + r % 3, 3 * tet[c / 3] + c % 3, k[r][c]);
            }
        }
    }
    Ok(trip.to_csr())
}

const MODE_NAMES: [&str; 6] = [
    "translation along x",
    "translation along y",
    "translation along z",
    "rotation about x",
    "rotation about y",
    "rotation about z",
];

/// Check that the prescribed DOFs remove all six rigid-body modes. Returns a
/// description of the first unconstrained mode.
pub fn check_rigid_modes(mesh: &TetMesh, prescribed: &[usize]) -> Result<()> {
    let (lo, hi) = mesh.bounds();
    let center = (lo + hi) / 2.0;
    let scale = ((hi - lo).norm() / 2.0).max(f64::MIN_POSITIVE);
    // Gram matrix of the rigid modes restricted to constrained DOFs; rotations
    // are normalized by the mesh half-diagonal.
    let mut gram = Matrix6::<f64>::zeros();
    for &dof in prescribed {
        let (v, a) = (dof / 3, dof % 3);
        let r = (mesh.vertices[v] - center) / scale;
        let mut row = [0.0; 6];
        row[a] = 1.0;
        for (axis, slot) in row[3..].iter_mut().enumerate() {
            // (e_axis × r)_a
            let rot = Vec3::ith(axis, 1.0).cross(&r);
            *slot = rot[a];
        }
        for i in 0..6 {
            for j in 0..6 {
                gram[(i, j)] += row[i] * row[j];
            }
        }
    }
    let eig = SymmetricEigen::new(gram);
    let max = eig.eigenvalues.amax().max(1.0);
    let mut free = Vec::new();
    for k in 0..6 {
        if eig.eigenvalues[k] <= 1e-12 * max {
            let v = eig.eigenvectors.column(k);
            let dominant = v.iamax();
            free.push(MODE_NAMES[dominant]);
        }
    }
    if free.is_empty() {
        Ok(())
    } else {
        Err(Error::RigidMode(free.join(", ")))
    }
}

/// Linear static solve `K u = f` with Dirichlet elimination.
pub fn solve_static(mesh: &TetMesh, material: &Material, bcs: &BoundaryConditions) -> Result<StaticSolution> {
    material.validate()?;
    let prescribed = prescribed_dofs(mesh, bcs)?;
    let pdofs: Vec<usize> = prescribed.iter().map(|p| p.0).collect();
    check_rigid_modes(mesh, &pdofs)?;

    let n = 3 * mesh.n_vertices();
    let k = assemble_stiffness(mesh, material)?;
    let f = load_vector(mesh, material.density, bcs)?;

    let mut u = vec![0.0; n];
    let mut is_fixed = vec![false; n];
    for &(dof, val) in &prescribed {
        u[dof] = val;
        is_fixed[dof] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
    let ku_p = mul_vec(&k, &u);
    let rhs: Vec<f64> = free.iter().map(|&i| f[i] - ku_p[i]).collect();

    let mut residual = 0.0;
    if !free.is_empty() {
        let kff = principal_submatrix(&k, &free);
        let solver = LdlSolver::factor(&kff).map_err(|e| match e {
            Error::Singular { equations } => {
                let dofs: Vec<String> = equations
                    .iter()
                    .take(8)
                    .map(|&i| format!("vertex {} axis {}", free[i] / 3, free[i] % 3))
                    .collect();
                Error::RigidMode(format!("stiffness singular at {}", dofs.join(", ")))
            }
            other => other,
        })?;
        let (x, rel) = solver.solve_refined(&kff, &rhs, 3);
        if !(rel <= RESIDUAL_TOL) {
            return Err(Error::Numerical(format!(
                "static solve residual {rel:e} exceeds {RESIDUAL_TOL:e}"
            )));
        }
        residual = rel;
        for (j, &i) in free.iter().enumerate() {
            u[i] = x[j];
        }
    }

    let ku = mul_vec(&k, &u);
    let to_vec3 = |x: &[f64], v: usize| Vec3::new(x[3 * v], x[3 * v + 1], x[3 * v + 2]);
    let mut reactions = vec![Vec3::zeros(); mesh.n_vertices()];
    for &(dof, _) in &prescribed {
        reactions[dof / 3][dof % 3] = ku[dof] - f[dof];
    }
    Ok(StaticSolution {
        displacement: (0..mesh.n_vertices()).map(|v| to_vec3(&u, v)).collect(),
        reactions,
        loads: (0..mesh.n_vertices()).map(|v| to_vec3(&f, v)).collect(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::bc::{Dirichlet, Neumann, Selector};
    use crate::mesh::generate::{box_mesh, jitter_vertices};
    use crate::sparse::is_symmetric;

    fn plane(axis: usize, value: f64) -> Selector {
        let mut min = [-1e9; 3];
        let mut max = [1e9; 3];
        min[axis] = value;
        max[axis] = value;
        Selector::Box { min, max }
    }

    fn roller(axis: usize, value: f64) -> Dirichlet {
        let mut axes = [false; 3];
        axes[axis] = true;
        Dirichlet {
            selector: plane(axis, value),
            axes,
            displacement: [0.0; 3],
        }
    }

    #[test]
    fn element_stiffness_annihilates_rigid_motion() {
        let p = [Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::new(0.2, 0.3, 1.0)];
        let g = tet_basis_gradients(&p).unwrap();
        let k = element_stiffness(&g, 0.1, &Material::default());
        let w = Vec3::new(0.3, -0.2, 0.5);
        let mut u = [0.0; 12];
        for a in 0..4 {
            let d = Vec3::new(1.0, 2.0, 3.0) + w.cross(&p[a]);
            u[3 * a..3 * a + 3].copy_from_slice(d.as_slice());
        }
        for row in k {
            let s: f64 = row.iter().zip(&u).map(|(a, b)| a * b).sum();
            assert!(s.abs() < 1e-6 * 2.4e9);
        }
    }

    #[test]
    fn global_stiffness_is_symmetric() {
        let m = jitter_vertices(&box_mesh(Vec3::zeros(), Vec3::repeat(1.0), [2, 2, 2]).unwrap(), 0.2, 3).unwrap();
        let k = assemble_stiffness(&m, &Material::default()).unwrap();
        assert!(is_symmetric(&k));
    }

    #[test]
    fn fixed_face_without_load_gives_zero() {
        let m = box_mesh(Vec3::zeros(), Vec3::repeat(1.0), [2, 2, 2]).unwrap();
        let bcs = BoundaryConditions {
            dirichlet: vec![Dirichlet::fixed(plane(0, 0.0))],
            ..Default::default()
        };
        let s = solve_static(&m, &Material::default(), &bcs).unwrap();
        assert!(s.displacement.iter().all(|u| u.norm() == 0.0));
    }

    #[test]
    fn uniaxial_patch_test() {
        let mat = Material::default();
        let (lx, ly, lz) = (2.0, 1.0, 0.5);
        let m = jitter_vertices(&box_mesh(Vec3::zeros(), Vec3::new(lx, ly, lz), [4, 2, 2]).unwrap(), 0.2, 11).unwrap();
        let t = 1e6;
        let bcs = BoundaryConditions {
            dirichlet: vec![roller(0, 0.0), roller(1, 0.0), roller(2, 0.0)],
            neumann: vec![Neumann {
                selector: plane(0, lx),
                force: [t * ly * lz, 0.0, 0.0],
            }],
            gravity: None,
        };
        let s = solve_static(&m, &mat, &bcs).unwrap();
        assert!(s.residual <= RESIDUAL_TOL);
        let (e, nu) = (mat.young_modulus, mat.poisson_ratio);
        for (p, u) in m.vertices.iter().zip(&s.displacement) {
            let exact = Vec3::new(t * p.x / e, -nu * t * p.y / e, -nu * t * p.z / e);
            assert!((u - exact).norm() <= 1e-6 * (t * lx / e), "{u:?} vs {exact:?}");
        }
        // Reactions balance the applied load.
        let r: Vec3 = s.reactions.iter().sum();
        let l: Vec3 = s.loads.iter().sum();
        assert!((r + l).norm() <= 1e-8 * l.norm());
    }

    #[test]
    fn prescribed_translation_is_reproduced() {
        let m = box_mesh(Vec3::zeros(), Vec3::repeat(1.0), [3, 3, 3]).unwrap();
        let d = [1e-3, -2e-3, 5e-4];
        let boundary: Vec<usize> = m.boundary.vertex_set();
        let bcs = BoundaryConditions {
            dirichlet: vec![Dirichlet {
                selector: Selector::Vertices { indices: boundary },
                axes: [true; 3],
                displacement: d,
            }],
            ..Default::default()
        };
        let s = solve_static(&m, &Material::default(), &bcs).unwrap();
        for u in &s.displacement {
            assert!((u - Vec3::from(d)).norm() < 1e-12);
        }
    }

    #[test]
    fn missing_constraints_name_the_mode() {
        let m = box_mesh(Vec3::zeros(), Vec3::repeat(1.0), [2, 2, 2]).unwrap();
        // x and y fixed on the bottom face, z free: translation along z remains.
        let bcs = BoundaryConditions {
            dirichlet: vec![Dirichlet {
                selector: plane(2, 0.0),
                axes: [true, true, false],
                displacement: [0.0; 3],
            }],
            ..Default::default()
        };
        match solve_static(&m, &Material::default(), &bcs).unwrap_err() {
            Error::RigidMode(msg) => assert!(msg.contains("translation along z"), "{msg}"),
            e => panic!("unexpected {e}"),
        }
        // A single pinned vertex leaves all three rotations free.
        let bcs = BoundaryConditions {
            dirichlet: vec![Dirichlet::fixed(Selector::Vertices { indices: vec![0] })],
            ..Default::default()
        };
        match solve_static(&m, &Material::default(), &bcs).unwrap_err() {
            Error::RigidMode(msg) => assert!(msg.contains("rotation"), "{msg}"),
            e => panic!("unexpected {e}"),
        }
    }
}
