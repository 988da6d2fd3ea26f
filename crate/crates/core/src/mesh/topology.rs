//! Edge/face incidence tables for a tet mesh.

use std::collections::{BTreeMap, HashMap};

use super::TetMesh;

/// Local vertex pairs of the six tet edges.
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local vertex triples of the four tet faces (face `i` opposite vertex `i`),
/// sorted ascending by local index.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Global edges, faces and their incidences. Edges and faces are stored with
/// sorted vertex indices and numbered in lexicographic order.
#[derive(Debug, Clone)]
pub struct Topology {
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<[usize; 3]>,
    pub tet_edges: Vec<[usize; 6]>,
    pub tet_faces: Vec<[usize; 4]>,
    /// One or two tets per face.
    pub face_tets: Vec<Vec<usize>>,
    pub face_edges: Vec<[usize; 3]>,
    /// Tets incident to each edge.
    pub edge_tets: Vec<Vec<usize>>,
    /// Sorted one-ring vertex neighbors.
    pub vertex_neighbors: Vec<Vec<usize>>,
    /// Index into `mesh.boundary.triangles` for boundary faces.
    pub face_boundary: Vec<Option<usize>>,
    /// Index into `mesh.boundary.edges` for boundary edges.
    pub edge_boundary: Vec<Option<usize>>,
    edge_index: HashMap<[usize; 2], usize>,
    face_index: HashMap<[usize; 3], usize>,
}

fn sort2(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn sort3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

impl Topology {
    pub fn new(mesh: &TetMesh) -> Self {
        let mut edge_map: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        let mut face_map: BTreeMap<[usize; 3], usize> = BTreeMap::new();
        for tet in &mesh.tets {
            for [a, b] in TET_EDGES {
                edge_map.insert(sort2(tet[a], tet[b]), 0);
            }
            for [a, b, c] in TET_FACES {
                face_map.insert(sort3([tet[a], tet[b], tet[c]]), 0);
            }
        }
        for (i, v) in edge_map.values_mut().enumerate() {
            *v = i;
        }
        for (i, v) in face_map.values_mut().enumerate() {
            *v = i;
        }
        let edges: Vec<[usize; 2]> = edge_map.keys().copied().collect();
        let faces: Vec<[usize; 3]> = face_map.keys().copied().collect();
        let edge_index: HashMap<_, _> = edge_map.into_iter().collect();
        let face_index: HashMap<_, _> = face_map.into_iter().collect();

        let mut tet_edges = Vec::with_capacity(mesh.n_tets());
        let mut tet_faces = Vec::with_capacity(mesh.n_tets());
        let mut face_tets = vec![Vec::new(); faces.len()];
        let mut edge_tets = vec![Vec::new(); edges.len()];
        for (t, tet) in mesh.tets.iter().enumerate() {
            let te = TET_EDGES.map(|[a, b]| edge_index[&sort2(tet[a], tet[b])]);
            let tf = TET_FACES.map(|[a, b, c]| face_index[&sort3([tet[a], tet[b], tet[c]])]);
            for &e in &te {
                edge_tets[e].push(t);
            }
            for &f in &tf {
                face_tets[f].push(t);
            }
            tet_edges.push(te);
            tet_faces.push(tf);
        }
        let face_edges = faces
            .iter()
            .map(|&[a, b, c]| [edge_index[&[a, b]], edge_index[&[a, c]], edge_index[&[b, c]]])
            .collect();

        let mut vertex_neighbors = vec![Vec::new(); mesh.n_vertices()];
        for &[a, b] in &edges {
            vertex_neighbors[a].push(b);
            vertex_neighbors[b].push(a);
        }
        for n in &mut vertex_neighbors {
            n.sort_unstable();
        }

        let mut face_boundary = vec![None; faces.len()];
        for (i, tri) in mesh.boundary.triangles.iter().enumerate() {
            face_boundary[face_index[&sort3(*tri)]] = Some(i);
        }
        let mut edge_boundary = vec![None; edges.len()];
        for (i, e) in mesh.boundary.edges.iter().enumerate() {
            edge_boundary[edge_index[&e.vertices]] = Some(i);
        }

        Self {
            edges,
            faces,
            tet_edges,
            tet_faces,
            face_tets,
            face_edges,
            edge_tets,
            vertex_neighbors,
            face_boundary,
            edge_boundary,
            edge_index,
            face_index,
        }
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&sort2(a, b)).copied()
    }

    pub fn face(&self, a: usize, b: usize, c: usize) -> Option<usize> {
        self.face_index.get(&sort3([a, b, c])).copied()
    }

    pub fn is_boundary_vertex(&self, mesh: &TetMesh) -> Vec<bool> {
        let mut flags = vec![false; mesh.n_vertices()];
        for tri in &mesh.boundary.triangles {
            for &v in tri {
                flags[v] = true;
            }
        }
        flags
    }
}
