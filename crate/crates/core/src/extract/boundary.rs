//! Boundary extraction: level curves of each parameter on the surface,
//! split where a second parameter is integral, plus feature-edge chains.

use std::collections::{BTreeSet, HashMap};

use super::perturb::{check_perturbed, integers_between, near_integer};
use super::{edge_crossing, face_points, sorted3, Builder, Family, Node, NodeKey, Provenance, TrussGraph, FACE_TOL, PAIRS};
use crate::error::{Error, Result};
use crate::mesh::{TetMesh, Vec3};

/// Boundary truss graph. `features` indexes `mesh.boundary.edges`.
///
/// On each boundary triangle the curve `φ̃_k = n` runs between two edge
/// crossings and is split at the points where one of the other parameters is
/// also an integer, which are exactly the points where interior isolines
/// leave the volume. The result is the common refinement of the three
/// pairwise surface extractions.
pub fn extract_boundary(mesh: &TetMesh, phi: &[Vec3], features: &[usize]) -> Result<TrussGraph> {
    if phi.len() != mesh.n_vertices() {
        return Err(Error::InvalidInput(format!("{} parameter values for {} vertices", phi.len(), mesh.n_vertices())));
    }
    let surface = &mesh.boundary;
    let used: BTreeSet<usize> = surface.vertex_set().into_iter().collect();
    let vals: Vec<[f64; 3]> = used.iter().map(|&v| phi[v].into()).collect();
    check_perturbed(&vals)?;
    if let Some(&e) = features.iter().find(|&&e| e >= surface.edges.len()) {
        return Err(Error::InvalidInput(format!("feature edge {e} out of range")));
    }
    let feature: BTreeSet<usize> = features.iter().copied().collect();
    let edge_index: HashMap<[usize; 2], usize> = surface.edges.iter().enumerate().map(|(i, e)| (e.vertices, i)).collect();
    let x = &mesh.vertices;
    let mut b: Builder<NodeKey> = Builder::new();

    let crossing = |b: &mut Builder<NodeKey>, e: usize, k: usize, n: f64| -> (usize, f64) {
        let [u, v] = surface.edges[e].vertices;
        let (pos, mut par, t) = edge_crossing(&x[u], &x[v], &phi[u], &phi[v], k, n);
        let mut provenance = Provenance::EdgeHit;
        for q in (0..3).filter(|&q| q != k) {
            if let Some(m) = near_integer(par[q]) {
                par[q] = m;
                provenance = Provenance::Boundary;
            }
        }
        if feature.contains(&e) {
            provenance = Provenance::Feature;
        }
        let i = b.node(NodeKey::Edge { edge: e, k, n: n as i64 }, || Node { position: pos, params: par, provenance });
        (i, t)
    };

    for (f, tri) in surface.triangles.iter().enumerate() {
        let verts = sorted3(*tri);
        let tri_edges = [[verts[0], verts[1]], [verts[0], verts[2]], [verts[1], verts[2]]].map(|e| edge_index[&e]);
        let splits = face_points(verts, x, phi, &[0, 1, 2], -FACE_TOL);
        for k in 0..3 {
            let lo = verts.iter().map(|&v| phi[v][k]).fold(f64::INFINITY, f64::min);
            let hi = verts.iter().map(|&v| phi[v][k]).fold(f64::NEG_INFINITY, f64::max);
            for n in integers_between(lo, hi) {
                let mut ends = Vec::with_capacity(2);
                for &e in &tri_edges {
                    let [u, v] = surface.edges[e].vertices;
                    if integers_between(phi[u][k], phi[v][k]).any(|m| m == n) {
                        ends.push(crossing(&mut b, e, k, n).0);
                    }
                }
                if ends.len() != 2 {
                    return Err(Error::Extraction(format!(
                        "surface curve {} = {n} meets boundary triangle {f} in {} edges",
                        k + 1,
                        ends.len()
                    )));
                }
                let p0 = b.graph.nodes[ends[0]].position;
                let dir = b.graph.nodes[ends[1]].position - p0;
                let mut mids: Vec<(f64, usize)> = splits
                    .iter()
                    .filter(|s| {
                        let [i, j] = PAIRS[s.pair];
                        (i == k && s.n[0] as f64 == n) || (j == k && s.n[1] as f64 == n)
                    })
                    .map(|s| {
                        let node = b.node(NodeKey::Face { face: f, pair: s.pair, n: s.n }, || Node {
                            position: s.position,
                            params: s.params,
                            provenance: Provenance::Boundary,
                        });
                        ((s.position - p0).dot(&dir), node)
                    })
                    .collect();
                mids.sort_by(|a, c| a.0.total_cmp(&c.0).then(a.1.cmp(&c.1)));
                let mut chain = vec![ends[0]];
                chain.extend(mids.iter().map(|m| m.1));
                chain.push(ends[1]);
                b.chain(&chain, Family::Boundary, None);
            }
        }
    }

    for &e in &feature {
        let [u, v] = surface.edges[e].vertices;
        let corner = |b: &mut Builder<NodeKey>, w: usize| {
            b.node(NodeKey::Vertex(w), || Node { position: x[w], params: phi[w], provenance: Provenance::Feature })
        };
        let mut pts = vec![(0.0, corner(&mut b, u)), (1.0, corner(&mut b, v))];
        for k in 0..3 {
            for n in integers_between(phi[u][k], phi[v][k]) {
                let (i, t) = crossing(&mut b, e, k, n);
                pts.push((t, i));
            }
        }
        pts.sort_by(|a, c| a.0.total_cmp(&c.0).then(a.1.cmp(&c.1)));
        let chain: Vec<usize> = pts.iter().map(|p| p.1).collect();
        b.chain(&chain, Family::Feature, None);
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::perturb::perturb_values;
    use crate::mesh::generate::{ball_mesh, box_mesh, jitter_vertices};
    use crate::mesh::{feature_edges, Topology};

    fn perturbed(mesh: &TetMesh, f: impl Fn(&Vec3) -> Vec3) -> Vec<Vec3> {
        let topo = Topology::new(mesh);
        let raw: Vec<[f64; 3]> = mesh.vertices.iter().map(|v| f(v).into()).collect();
        perturb_values(&raw, &topo.vertex_neighbors, 1e-7).unwrap().into_iter().map(Vec3::from).collect()
    }

    #[test]
    fn cube_faces_carry_grid_lines() {
        let mesh = jitter_vertices(&box_mesh(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0), [4, 4, 4]).unwrap(), 0.25, 5).unwrap();
        let phi = perturbed(&mesh, |v| v * 3.0 + Vec3::new(0.5, 0.5, 0.5));
        let features = feature_edges(&mesh.boundary, 0.5f64.sqrt()).unwrap();
        assert_eq!(features.iter().map(|&e| mesh.boundary.edges[e].vertices).count(), 4 * 12);
        let g = extract_boundary(&mesh, &phi, &features).unwrap();
        // Each cube face holds 3 + 3 grid lines meeting at 9 boundary grid
        // points; lines end on the cube edges at 3 crossings per edge.
        let split = g.nodes.iter().filter(|n| n.provenance == Provenance::Boundary).count();
        assert_eq!(split, 6 * 9);
        let on_edges = g.nodes.iter().filter(|n| n.provenance == Provenance::Feature).count();
        assert_eq!(on_edges, 12 * 3 + 8 + 12 * 3);
        for n in g.nodes.iter().filter(|n| n.provenance == Provenance::Boundary) {
            let on_face = (0..3).any(|a| n.position[a].abs() < 1e-12 || (n.position[a] - 1.0).abs() < 1e-12);
            assert!(on_face);
            let ints = (0..3).filter(|&a| n.params[a] == n.params[a].round()).count();
            assert_eq!(ints, 2);
        }
        let len: f64 = (0..g.elements.len()).filter(|&e| g.elements[e].family == Family::Feature).map(|e| g.element_length(e)).sum();
        assert!((len - 12.0).abs() < 1e-9);
        let grid_len: f64 = (0..g.elements.len()).filter(|&e| g.elements[e].family == Family::Boundary).map(|e| g.element_length(e)).sum();
        assert!((grid_len - 6.0 * 6.0).abs() < 1e-6, "{grid_len}");
    }

    #[test]
    fn ball_has_no_feature_elements() {
        let mesh = ball_mesh(1.0, 3).unwrap();
        let phi = perturbed(&mesh, |v| v * 2.5);
        let features = feature_edges(&mesh.boundary, 0.5).unwrap();
        assert!(features.is_empty());
        let g = extract_boundary(&mesh, &phi, &features).unwrap();
        assert!(g.elements.iter().all(|e| e.family == Family::Boundary));
        assert!(!g.elements.is_empty());
    }
}
