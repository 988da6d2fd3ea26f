//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use michell::extract::{extract_truss, perturb_parametrization, Provenance, TrussGraph};
use michell::mesh::generate::{box_mesh, jitter_vertices};
use michell::mesh::{feature_edges, TetMesh, Topology, Vec3};
use michell::param::Parametrization;
use nalgebra::Matrix3;

/// Jittered unit cube, with cube faces, edges and corners kept in place.
pub fn unit_cube(n: usize, seed: u64) -> TetMesh {
    let base = box_mesh(Vec3::zeros(), Vec3::repeat(1.0), [n; 3]).unwrap();
    jitter_vertices(&base, 0.25, seed).unwrap()
}

/// A normalized parametrization whose texture coordinates are `f(x)`.
pub fn given_tilde(mesh: &TetMesh, f: impl FnMut(&Vec3) -> Vec3) -> Parametrization {
    let tilde: Vec<Vec3> = mesh.vertices.iter().map(f).collect();
    Parametrization {
        phi: tilde.clone(),
        phi_tilde: Some(tilde),
        beta: 1.0,
        rho: 1.0,
        scale: 1.0,
        residuals: [0.0; 3],
    }
}

/// Full extraction (perturbation, interior, boundary and features).
pub fn extract_affine(mesh: &TetMesh, f: impl Fn(&Vec3) -> Vec3) -> TrussGraph {
    let topo = Topology::new(mesh);
    let p = perturb_parametrization(given_tilde(mesh, f), &topo, 1e-7).unwrap();
    let features = feature_edges(&mesh.boundary, 0.5).unwrap();
    extract_truss(mesh, &topo, p.tilde().unwrap(), &features).unwrap().0
}

pub fn grid_nodes(g: &TrussGraph) -> Vec<usize> {
    (0..g.nodes.len()).filter(|&i| g.nodes[i].provenance == Provenance::InteriorGrid).collect()
}

/// Pairs of interior grid nodes joined by an element or by a chain of
/// degree-two hit nodes.
pub fn grid_adjacency(g: &TrussGraph) -> BTreeSet<[usize; 2]> {
    let adj = g.adjacency();
    let mut out = BTreeSet::new();
    for s in grid_nodes(g) {
        for &first in &adj[s] {
            let (mut prev, mut cur) = (s, first);
            while g.nodes[cur].provenance.is_hit() && adj[cur].len() == 2 {
                let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
                prev = cur;
                cur = next;
            }
            if g.nodes[cur].provenance == Provenance::InteriorGrid && cur != s {
                out.insert([s.min(cur), s.max(cur)]);
            }
        }
    }
    out
}

/// Integer points `n` with `a⁻¹(n − b)` strictly inside the unit cube (at
/// least `margin` from its faces), keyed by `n`.
pub fn affine_preimages(a: &Matrix3<f64>, b: &Vec3, margin: f64) -> BTreeMap<[i64; 3], Vec3> {
    let inv = a.try_inverse().unwrap();
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for c in 0..8 {
        let x = Vec3::new((c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64);
        let y = a * x + b;
        lo = lo.inf(&y);
        hi = hi.sup(&y);
    }
    let mut out = BTreeMap::new();
    for i in lo.x.floor() as i64..=hi.x.ceil() as i64 {
        for j in lo.y.floor() as i64..=hi.y.ceil() as i64 {
            for k in lo.z.floor() as i64..=hi.z.ceil() as i64 {
                let n = Vec3::new(i as f64, j as f64, k as f64);
                let x = inv * (n - b);
                if x.iter().all(|&c| c > margin && c < 1.0 - margin) {
                    out.insert([i, j, k], x);
                }
            }
        }
    }
    out
}

/// Match every expected grid point to an extracted interior grid node within
/// `tol`; returns the node index per key, or a description of the mismatch.
pub fn match_grid(g: &TrussGraph, want: &BTreeMap<[i64; 3], Vec3>, tol: f64) -> Result<BTreeMap<[i64; 3], usize>, String> {
    let nodes = grid_nodes(g);
    if nodes.len() != want.len() {
        return Err(format!("{} interior grid nodes, expected {}", nodes.len(), want.len()));
    }
    let mut out = BTreeMap::new();
    for (key, x) in want {
        let best = nodes
            .iter()
            .copied()
            .min_by(|&a, &b| (g.nodes[a].position - x).norm().total_cmp(&(g.nodes[b].position - x).norm()))
            .unwrap();
        let d = (g.nodes[best].position - x).norm();
        if d > tol {
            return Err(format!("grid point {key:?} missed by {d:e}"));
        }
        out.insert(*key, best);
    }
    Ok(out)
}

/// Expected adjacency: keys differing by one unit in one coordinate.
pub fn expected_adjacency(index: &BTreeMap<[i64; 3], usize>) -> BTreeSet<[usize; 2]> {
    let mut out = BTreeSet::new();
    for (key, &a) in index {
        for axis in 0..3 {
            let mut k = *key;
            k[axis] += 1;
            if let Some(&b) = index.get(&k) {
                out.insert([a.min(b), a.max(b)]);
            }
        }
    }
    out
}

/// The affine map used for the oblique oracle: a scaled rotation plus shift.
pub fn oblique_map() -> (Matrix3<f64>, Vec3) {
    let r = nalgebra::Rotation3::from_euler_angles(0.4, -0.3, 0.7);
    (r.matrix() * 3.7, Vec3::new(0.31, 0.17, 0.43))
}
