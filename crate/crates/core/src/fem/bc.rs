use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{TetMesh, Vec3};

/// Region selector for boundary conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Selector {
    /// Inclusive axis-aligned box.
    Box { min: [f64; 3], max: [f64; 3] },
    Sphere { center: [f64; 3], radius: f64 },
    Vertices { indices: Vec<usize> },
    /// Boundary triangle indices.
    Faces { indices: Vec<usize> },
}

impl Selector {
    fn contains(&self, p: &Vec3, tol: f64) -> bool {
        match self {
            Selector::Box { min, max } => (0..3).all(|a| p[a] >= min[a] - tol && p[a] <= max[a] + tol),
            Selector::Sphere { center, radius } => (p - Vec3::from(*center)).norm() <= radius + tol,
            _ => false,
        }
    }

    /// Whether a point lies inside a geometric selector (never for index
    /// selectors).
    pub fn contains_point(&self, p: &Vec3, tol: f64) -> bool {
        self.contains(p, tol)
    }

    /// Selected mesh vertices, sorted. Box and sphere select by position,
    /// face lists select the face vertices.
    pub fn vertices(&self, mesh: &TetMesh) -> Result<Vec<usize>> {
        let tol = geometric_tolerance(mesh);
        let set: BTreeSet<usize> = match self {
            Selector::Box { .. } | Selector::Sphere { .. } => mesh
                .vertices
                .iter()
                .enumerate()
                .filter(|(_, p)| self.contains(p, tol))
                .map(|(i, _)| i)
                .collect(),
            Selector::Vertices { indices } => {
                if let Some(&bad) = indices.iter().find(|&&i| i >= mesh.n_vertices()) {
                    return Err(Error::InvalidInput(format!("vertex index {bad} out of range")));
                }
                indices.iter().copied().collect()
            }
            Selector::Faces { .. } => self
                .faces(mesh)?
                .into_iter()
                .flat_map(|f| mesh.boundary.triangles[f])
                .collect(),
        };
        if set.is_empty() {
            return Err(Error::InvalidInput(format!("selector {self:?} selects no vertices")));
        }
        Ok(set.into_iter().collect())
    }

    /// Selected boundary triangles, sorted. Box and sphere select by face
    /// centroid; vertex lists select faces with all three vertices listed.
    pub fn faces(&self, mesh: &TetMesh) -> Result<Vec<usize>> {
        let b = &mesh.boundary;
        let tol = geometric_tolerance(mesh);
        let out: Vec<usize> = match self {
            Selector::Box { .. } | Selector::Sphere { .. } => (0..b.n_triangles())
                .filter(|&f| self.contains(&b.centroid(&mesh.vertices, f), tol))
                .collect(),
            Selector::Vertices { indices } => {
                let set: BTreeSet<usize> = indices.iter().copied().collect();
                (0..b.n_triangles())
                    .filter(|&f| b.triangles[f].iter().all(|v| set.contains(v)))
                    .collect()
            }
            Selector::Faces { indices } => {
                if let Some(&bad) = indices.iter().find(|&&i| i >= b.n_triangles()) {
                    return Err(Error::InvalidInput(format!("boundary face index {bad} out of range")));
                }
                let set: BTreeSet<usize> = indices.iter().copied().collect();
                set.into_iter().collect()
            }
        };
        if out.is_empty() {
            return Err(Error::InvalidInput(format!("selector {self:?} selects no boundary faces")));
        }
        Ok(out)
    }
}

/// Absolute slack for geometric selectors, relative to the mesh size.
pub fn geometric_tolerance(mesh: &TetMesh) -> f64 {
    let (lo, hi) = mesh.bounds();
    1e-9 * (hi - lo).norm()
}

fn all_axes() -> [bool; 3] {
    [true; 3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dirichlet {
    pub selector: Selector,
    /// Which displacement components are fixed.
    #[serde(default = "all_axes")]
    pub axes: [bool; 3],
    /// Prescribed displacement (m) for the fixed components.
    #[serde(default)]
    pub displacement: [f64; 3],
}

impl Dirichlet {
    pub fn fixed(selector: Selector) -> Self {
        Self {
            selector,
            axes: [true; 3],
            displacement: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neumann {
    pub selector: Selector,
    /// Total force (N) spread over the selected faces.
    pub force: [f64; 3],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConditions {
    #[serde(default)]
    pub dirichlet: Vec<Dirichlet>,
    #[serde(default)]
    pub neumann: Vec<Neumann>,
    /// Gravitational acceleration (m/s²).
    #[serde(default)]
    pub gravity: Option<[f64; 3]>,
}

/// Prescribed scalar DOFs `(3·vertex + axis, value)`, sorted by DOF.
pub fn prescribed_dofs(mesh: &TetMesh, bcs: &BoundaryConditions) -> Result<Vec<(usize, f64)>> {
    let mut map = std::collections::BTreeMap::new();
    for d in &bcs.dirichlet {
        for v in d.selector.vertices(mesh)? {
            for a in 0..3 {
                if !d.axes[a] {
                    continue;
                }
                let dof = 3 * v + a;
                let val = d.displacement[a];
                if let Some(old) = map.insert(dof, val) {
                    if old != val {
                        return Err(Error::InvalidInput(format!(
                            "conflicting prescribed displacements {old} and {val} at vertex {v} axis {a}"
                        )));
                    }
                }
            }
        }
    }
    Ok(map.into_iter().collect())
}

/// Consistent nodal load vector of length `3|V|`.
pub fn load_vector(mesh: &TetMesh, density: f64, bcs: &BoundaryConditions) -> Result<Vec<f64>> {
    let mut f = vec![0.0; 3 * mesh.n_vertices()];
    let b = &mesh.boundary;
    for n in &bcs.neumann {
        let faces = n.selector.faces(mesh)?;
        let total: f64 = faces.iter().map(|&i| b.areas[i]).sum();
        for &i in &faces {
            let share = b.areas[i] / total / 3.0;
            for &v in &b.triangles[i] {
                for a in 0..3 {
                    f[3 * v + a] += share * n.force[a];
                }
            }
        }
    }
    if let Some(g) = bcs.gravity {
        for (t, tet) in mesh.tets.iter().enumerate() {
            let w = density * mesh.volumes[t] / 4.0;
            for &v in tet {
                for a in 0..3 {
                    f[3 * v + a] += w * g[a];
                }
            }
        }
    }
    Ok(f)
}
