//! Small analysis scenarios used by tests, examples and the CLI.

use nalgebra::{Matrix6, Rotation3};

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::fem::{BoundaryConditions, Dirichlet, Material, Neumann, Selector};
use crate::mesh::generate::box_mesh;
use crate::mesh::io::write_medit;
use crate::mesh::{TetMesh, Vec3};
use crate::pipeline::PipelineConfig;

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub mesh: TetMesh,
    pub bcs: BoundaryConditions,
    pub material: Material,
}

/// Three-point bending: a 0.2 × 0.04 × 0.04 m bar on two line supports
/// along the bottom edges of its end faces, loaded with 400 N downward on a
/// strip of the top face at mid-span. 1920 tets.
pub fn bending_bar() -> Result<Fixture> {
    let (l, w, h) = (0.2, 0.04, 0.04);
    let mesh = box_mesh(Vec3::zeros(), Vec3::new(l, w, h), [20, 4, 4])?;
    let line = |x: f64| Selector::Box { min: [x, -1.0, 0.0], max: [x, 1.0, 0.0] };
    let bcs = BoundaryConditions {
        dirichlet: vec![Dirichlet::fixed(line(0.0)), Dirichlet::fixed(line(l))],
        neumann: vec![Neumann {
            selector: Selector::Box { min: [0.45 * l, -1.0, h], max: [0.55 * l, 1.0, h] },
            force: [0.0, 0.0, -400.0],
        }],
        gravity: None,
    };
    Ok(Fixture { name: "bending_bar", mesh, bcs, material: Material::default() })
}

/// Bar axis of [`uniaxial_bar`].
pub fn uniaxial_axis() -> Vec3 {
    uniaxial_rotation() * Vec3::x()
}

fn uniaxial_rotation() -> Rotation3<f64> {
    Rotation3::from_euler_angles(0.3, -0.4, 0.5)
}

/// A 0.2 × 0.04 × 0.04 m bar with an oblique axis, pulled by 100 N
/// tractions on its end faces and held by a statically determinate
/// six-constraint support, so the stress is uniform uniaxial tension.
pub fn uniaxial_bar() -> Result<Fixture> {
    let (l, w) = (0.2, 0.04);
    let base = box_mesh(Vec3::zeros(), Vec3::new(l, w, w), [10, 2, 2])?;
    let find = |p: Vec3| {
        (0..base.n_vertices())
            .min_by(|&a, &b| (base.vertices[a] - p).norm().total_cmp(&(base.vertices[b] - p).norm()))
            .expect("non-empty mesh")
    };
    let (a, b, c) = (find(Vec3::zeros()), find(Vec3::new(l, 0.0, 0.0)), find(Vec3::new(0.0, w, 0.0)));
    let rot = uniaxial_rotation();
    let mesh = TetMesh::new(base.vertices.iter().map(|v| rot * v).collect(), base.tets.clone())?;
    let d = uniaxial_axis();

    let end = |sign: f64| -> Vec<usize> {
        (0..mesh.boundary.n_triangles()).filter(|&f| mesh.boundary.normals[f].dot(&d) * sign > 0.99).collect()
    };
    let force = 100.0;
    let neumann = vec![
        Neumann { selector: Selector::Faces { indices: end(-1.0) }, force: (-d * force).into() },
        Neumann { selector: Selector::Faces { indices: end(1.0) }, force: (d * force).into() },
    ];

    // Choose global axes at B (two) and C (one) that remove the rotations.
    let pa = mesh.vertices[a];
    let rows = |p: Vec3, axis: usize| -> [f64; 6] {
        let r = p - pa;
        let mut row = [0.0; 6];
        row[axis] = 1.0;
        // Component `axis` of ω × r for unit ω along each axis.
        for (k, e) in [Vec3::x(), Vec3::y(), Vec3::z()].iter().enumerate() {
            row[3 + k] = e.cross(&r)[axis];
        }
        row
    };
    let mut best = (0.0, [0, 1], 0);
    for pair in [[0, 1], [0, 2], [1, 2]] {
        for m in 0..3 {
            let mut mat = Matrix6::zeros();
            for axis in 0..3 {
                mat.row_mut(axis).copy_from_slice(&rows(pa, axis));
            }
            mat.row_mut(3).copy_from_slice(&rows(mesh.vertices[b], pair[0]));
            mat.row_mut(4).copy_from_slice(&rows(mesh.vertices[b], pair[1]));
            mat.row_mut(5).copy_from_slice(&rows(mesh.vertices[c], m));
            let det = mat.determinant().abs();
            if det > best.0 {
                best = (det, pair, m);
            }
        }
    }
    let (_, pair, m) = best;
    let axes = |list: &[usize]| [0, 1, 2].map(|k| list.contains(&k));
    let pin = |v: usize, list: &[usize]| Dirichlet { selector: Selector::Vertices { indices: vec![v] }, axes: axes(list), displacement: [0.0; 3] };
    let bcs = BoundaryConditions { dirichlet: vec![pin(a, &[0, 1, 2]), pin(b, &pair), pin(c, &[m])], neumann, gravity: None };
    Ok(Fixture { name: "uniaxial_bar", mesh, bcs, material: Material::default() })
}

impl Fixture {
    /// Pipeline config for this fixture with a mesh path relative to the
    /// config file.
    pub fn config(&self) -> PipelineConfig {
        let mut c = PipelineConfig::new(format!("{}.mesh", self.name));
        c.material = self.material;
        c.boundary_conditions = self.bcs.clone();
        c.output_dir = PathBuf::from(format!("{}_out", self.name));
        c
    }

    /// Write `<name>.mesh` and `<name>.json` into `dir`; returns the config
    /// path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        write_medit(&self.mesh, &dir.join(format!("{}.mesh", self.name)))?;
        let path = dir.join(format!("{}.json", self.name));
        self.config().save(&path)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{cauchy_stress, solve_static};

    #[test]
    fn bending_bar_sizes() {
        let f = bending_bar().unwrap();
        assert_eq!(f.mesh.n_vertices(), 525);
        assert_eq!(f.mesh.n_tets(), 1920);
        let sol = solve_static(&f.mesh, &f.material, &f.bcs).unwrap();
        let total: Vec3 = sol.reactions.iter().sum();
        assert!((total - Vec3::new(0.0, 0.0, 400.0)).norm() < 1e-6);
    }

    #[test]
    fn written_fixture_reloads_identically() {
        let dir = tempfile::tempdir().unwrap();
        let f = uniaxial_bar().unwrap();
        let path = f.write(dir.path()).unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        let mesh = crate::mesh::load_tet_mesh(&cfg.mesh_path(), cfg.mesh_format().unwrap()).unwrap();
        assert_eq!(mesh.tets, f.mesh.tets);
        assert_eq!(mesh.boundary.triangles, f.mesh.boundary.triangles);
        assert!(mesh.vertices.iter().zip(&f.mesh.vertices).all(|(a, b)| a == b));
        assert_eq!(cfg.boundary_conditions, f.bcs);
    }

    #[test]
    fn uniaxial_stress_is_uniform() {
        let f = uniaxial_bar().unwrap();
        let sol = solve_static(&f.mesh, &f.material, &f.bcs).unwrap();
        let stress = cauchy_stress(&f.mesh, &f.material, &sol.displacement).unwrap();
        let d = uniaxial_axis();
        let want = (d * d.transpose()) * (100.0 / (0.04 * 0.04));
        for s in &stress.sigma {
            assert!((s - want).norm() <= 1e-6 * want.norm());
        }
        // Determinate supports carry no reaction.
        assert!(sol.reactions.iter().all(|r| r.norm() < 1e-6));
    }
}
