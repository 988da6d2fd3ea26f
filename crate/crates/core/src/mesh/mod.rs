//! Tetrahedral mesh data model, boundary extraction and file ingestion.

pub mod generate;
pub mod io;
pub mod operators;
pub mod topology;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use io::{load_tet_mesh, MeshFormat};
pub use operators::{build_operators, DiscreteOperators};
pub use topology::Topology;

pub type Vec3 = Vector3<f64>;

/// Tets with `|volume|` below this are degenerate (m³).
pub const DEGENERATE_VOLUME: f64 = 1e-14;

/// Signed volume of the tet `(a, b, c, d)`.
#[inline]
pub fn signed_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}

/// A tetrahedral mesh with positively oriented tets and its boundary surface.
#[derive(Debug, Clone)]
pub struct TetMesh {
    pub vertices: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
    pub volumes: Vec<f64>,
    pub boundary: SurfaceMesh,
}

/// Boundary edge of the surface with its two incident boundary triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceEdge {
    pub vertices: [usize; 2],
    pub faces: [usize; 2],
    /// Angle between the two face normals in `[0, π]`; zero for coplanar faces.
    pub dihedral: f64,
}

/// Outward-oriented boundary triangles, referencing the parent mesh vertices.
#[derive(Debug, Clone, Default)]
pub struct SurfaceMesh {
    pub triangles: Vec<[usize; 3]>,
    /// Tet owning each boundary triangle.
    pub face_tet: Vec<usize>,
    pub normals: Vec<Vec3>,
    pub areas: Vec<f64>,
    pub edges: Vec<SurfaceEdge>,
}

impl TetMesh {
    /// Validate and orient a tet soup. Negatively oriented tets are flipped,
    /// zero-volume tets are rejected.
    pub fn new(vertices: Vec<Vec3>, mut tets: Vec<[usize; 4]>) -> Result<Self> {
        if tets.is_empty() {
            return Err(Error::InvalidMesh("mesh has no tetrahedra".into()));
        }
        let nv = vertices.len();
        let mut seen = BTreeSet::new();
        let mut volumes = Vec::with_capacity(tets.len());
        for (t, tet) in tets.iter_mut().enumerate() {
            if let Some(&bad) = tet.iter().find(|&&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "tet {t} references vertex {bad} but mesh has {nv} vertices"
                )));
            }
            let mut key = *tet;
            key.sort_unstable();
            if key.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::DegenerateTet { tet: t, volume: 0.0 });
            }
            if !seen.insert(key) {
                return Err(Error::InvalidMesh(format!("duplicate tet {t}")));
            }
            let [a, b, c, d] = *tet;
            let mut vol = signed_volume(&vertices[a], &vertices[b], &vertices[c], &vertices[d]);
            if vol.abs() < DEGENERATE_VOLUME || !vol.is_finite() {
                return Err(Error::DegenerateTet { tet: t, volume: vol });
            }
            if vol < 0.0 {
                tet.swap(2, 3);
                vol = -vol;
            }
            volumes.push(vol);
        }
        let boundary = SurfaceMesh::from_tets(&vertices, &tets)?;
        Ok(Self {
            vertices,
            tets,
            volumes,
            boundary,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    pub fn tet_positions(&self, t: usize) -> [Vec3; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn centroid(&self, t: usize) -> Vec3 {
        let p = self.tet_positions(t);
        (p[0] + p[1] + p[2] + p[3]) / 4.0
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Barycentric coordinates of `p` in tet `t`.
    pub fn barycentric(&self, t: usize, p: &Vec3) -> [f64; 4] {
        let [a, b, c, d] = self.tet_positions(t);
        let vol = signed_volume(&a, &b, &c, &d);
        [
            signed_volume(p, &b, &c, &d) / vol,
            signed_volume(&a, p, &c, &d) / vol,
            signed_volume(&a, &b, p, &d) / vol,
            signed_volume(&a, &b, &c, p) / vol,
        ]
    }

    /// Number of connected components of the tet adjacency (shared vertices),
    /// counting unreferenced vertices as their own components.
    pub fn connected_components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for tet in &self.tets {
            let r0 = find(&mut parent, tet[0]);
            for &v in &tet[1..] {
                let r = find(&mut parent, v);
                if r != r0 {
                    parent[r] = r0;
                }
            }
        }
        (0..self.vertices.len())
            .filter(|&v| find(&mut parent, v) == v)
            .count()
    }
}

/// Faces of a positively oriented tet `(a, b, c, d)`, each wound outward,
/// face `i` being opposite vertex `i`.
#[inline]
pub fn tet_faces(t: &[usize; 4]) -> [[usize; 3]; 4] {
    let [a, b, c, d] = *t;
    [[b, c, d], [a, d, c], [a, b, d], [a, c, b]]
}

fn sorted3(f: [usize; 3]) -> [usize; 3] {
    let mut k = f;
    k.sort_unstable();
    k
}

impl SurfaceMesh {
    /// Unpaired tet faces, oriented outward.
    pub fn from_tets(vertices: &[Vec3], tets: &[[usize; 4]]) -> Result<Self> {
        let mut faces: BTreeMap<[usize; 3], Vec<(usize, [usize; 3])>> = BTreeMap::new();
        for (t, tet) in tets.iter().enumerate() {
            for f in tet_faces(tet) {
                faces.entry(sorted3(f)).or_default().push((t, f));
            }
        }
        let mut triangles = Vec::new();
        let mut face_tet = Vec::new();
        for (key, owners) in &faces {
            match owners.len() {
                1 => {
                    triangles.push(owners[0].1);
                    face_tet.push(owners[0].0);
                }
                2 => {}
                n => {
                    return Err(Error::InvalidMesh(format!(
                        "face {key:?} shared by {n} tets"
                    )))
                }
            }
        }
        let mut normals = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let n = (vertices[tri[1]] - vertices[tri[0]]).cross(&(vertices[tri[2]] - vertices[tri[0]]));
            let len = n.norm();
            areas.push(0.5 * len);
            normals.push(n / len);
        }

        // Directed half-edges: a consistently oriented closed surface sees each
        // undirected edge once in each direction.
        let mut half: BTreeMap<[usize; 2], Vec<(usize, bool)>> = BTreeMap::new();
        for (f, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                let key = if u < v { [u, v] } else { [v, u] };
                half.entry(key).or_default().push((f, u < v));
            }
        }
        let mut edges = Vec::with_capacity(half.len());
        for (key, inc) in half {
            if inc.len() != 2 {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge {key:?} has {} incident boundary faces",
                    inc.len()
                )));
            }
            if inc[0].1 == inc[1].1 {
                return Err(Error::InvalidMesh(format!(
                    "boundary orientation inconsistent across edge {key:?}"
                )));
            }
            let (f0, f1) = (inc[0].0, inc[1].0);
            let c = normals[f0].dot(&normals[f1]).clamp(-1.0, 1.0);
            edges.push(SurfaceEdge {
                vertices: key,
                faces: [f0, f1],
                dihedral: c.acos(),
            });
        }
        Ok(Self {
            triangles,
            face_tet,
            normals,
            areas,
            edges,
        })
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Distinct vertices referenced by the surface, sorted.
    pub fn vertex_set(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.triangles.iter().flatten().copied().collect();
        set.into_iter().collect()
    }

    /// `V - E + F` of the boundary complex.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_set().len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    /// Connected components of the boundary (by shared edges).
    pub fn components(&self) -> usize {
        let n = self.triangles.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.faces[0]), find(&mut parent, e.faces[1]));
            if a != b {
                parent[a] = b;
            }
        }
        (0..n).filter(|&f| find(&mut parent, f) == f).count()
    }

    pub fn centroid(&self, vertices: &[Vec3], f: usize) -> Vec3 {
        let t = self.triangles[f];
        (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0
    }
}

/// Boundary edges whose two adjacent face normals have dot product strictly
/// below `cos_threshold` (indices into `surface.edges`).
pub fn feature_edges(surface: &SurfaceMesh, cos_threshold: f64) -> Result<Vec<usize>> {
    if !(cos_threshold > -1.0 && cos_threshold <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "feature cosine threshold {cos_threshold} outside (-1, 1]"
        )));
    }
    Ok(surface
        .edges
        .iter()
        .enumerate()
        .filter(|(_, e)| surface.normals[e.faces[0]].dot(&surface.normals[e.faces[1]]) < cos_threshold)
        .map(|(i, _)| i)
        .collect())
}
