//! Interior extraction: isolines `γ_ij` traced tet by tet.

use std::collections::BTreeMap;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::graph::MERGE_TOL;
use super::perturb::{check_perturbed, integers_between};
use super::{face_points, Builder, FacePoint, Family, Node, NodeKey, Provenance, TrussGraph, FACE_TOL, PAIRS, THIRD};
use crate::error::{Error, Result};
use crate::mesh::{TetMesh, Topology, Vec3};

/// Fraction of tets allowed to have inconsistent face intersections.
pub const MAX_INCONSISTENT_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    /// `γ_ij` segments traced through tets.
    pub segments: usize,
    /// Isolines that only touch a tet at a single face point.
    pub touch_skipped: usize,
    /// Tets where an isoline met more than two faces.
    pub inconsistent_tets: usize,
}

/// Interior truss graph: face crossings of every `γ_ij`, integer grid points
/// where the third parameter is integral, and elements between them.
pub fn extract_3d(mesh: &TetMesh, topology: &Topology, phi: &[Vec3]) -> Result<(TrussGraph, VolumeReport)> {
    if phi.len() != mesh.n_vertices() {
        return Err(Error::InvalidInput(format!("{} parameter values for {} vertices", phi.len(), mesh.n_vertices())));
    }
    let vals: Vec<[f64; 3]> = phi.iter().map(|v| [v.x, v.y, v.z]).collect();
    check_perturbed(&vals)?;
    let x = &mesh.vertices;
    let per_face: Vec<Vec<FacePoint>> = topology
        .faces
        .iter()
        .map(|f| face_points(*f, x, phi, &[0, 1, 2], -FACE_TOL))
        .collect();

    let mut b: Builder<NodeKey> = Builder::new();
    let mut report = VolumeReport::default();
    for t in 0..mesh.n_tets() {
        let mut inconsistent = false;
        for (p, &[i, j]) in PAIRS.iter().enumerate() {
            let k = THIRD[p];
            let mut groups: BTreeMap<[i64; 2], Vec<(usize, usize)>> = BTreeMap::new();
            for &f in &topology.tet_faces[t] {
                for (q, fp) in per_face[f].iter().enumerate().filter(|(_, fp)| fp.pair == p) {
                    let list = groups.entry(fp.n).or_default();
                    let dup = list.iter().any(|&(g, r)| (per_face[g][r].position - fp.position).norm() <= MERGE_TOL);
                    if !dup {
                        list.push((f, q));
                    }
                }
            }
            for (nm, pts) in groups {
                match pts.len() {
                    2 => {}
                    1 => {
                        report.touch_skipped += 1;
                        log::debug!("isoline ({}, {}) = {nm:?} touches tet {t} at one face", i + 1, j + 1);
                        continue;
                    }
                    _ => {
                        inconsistent = true;
                        continue;
                    }
                }
                report.segments += 1;
                let ends: Vec<usize> = pts
                    .iter()
                    .map(|&(f, q)| {
                        let fp = per_face[f][q];
                        let provenance = if topology.face_boundary[f].is_some() { Provenance::Boundary } else { Provenance::FaceHit };
                        b.node(NodeKey::Face { face: f, pair: p, n: fp.n }, || Node { position: fp.position, params: fp.params, provenance })
                    })
                    .collect();
                let (a, c) = (per_face[pts[0].0][pts[0].1], per_face[pts[1].0][pts[1].1]);
                let mut chain = vec![ends[0]];
                let levels: Vec<f64> = if a.params[k] <= c.params[k] {
                    integers_between(a.params[k], c.params[k]).collect()
                } else {
                    integers_between(c.params[k], a.params[k]).rev().collect()
                };
                for l in levels {
                    let mut target = Vec3::zeros();
                    target[i] = nm[0] as f64;
                    target[j] = nm[1] as f64;
                    target[k] = l;
                    let s = (l - a.params[k]) / (c.params[k] - a.params[k]);
                    let fallback = a.position + (c.position - a.position) * s;
                    let position = grid_point(mesh, phi, t, &target).unwrap_or(fallback);
                    let key = NodeKey::Grid { tet: t, n: [0, 1, 2].map(|q| target[q] as i64) };
                    chain.push(b.node(key, || Node { position, params: target, provenance: Provenance::InteriorGrid }));
                }
                chain.push(ends[1]);
                b.chain(&chain, Family::iso(k), Some(t));
            }
        }
        if inconsistent {
            report.inconsistent_tets += 1;
            log::warn!("tet {t}: an isoline crosses more than two faces");
        }
    }
    if report.touch_skipped > 0 {
        log::warn!("{} isoline segments touch a tet at a single face and were skipped", report.touch_skipped);
    }
    let limit = MAX_INCONSISTENT_FRACTION * mesh.n_tets() as f64;
    if report.inconsistent_tets as f64 > limit {
        return Err(Error::Extraction(format!(
            "{} of {} tets have inconsistent face intersections",
            report.inconsistent_tets,
            mesh.n_tets()
        )));
    }
    Ok((b.finish(), report))
}

/// Preimage of `target` under the tet's affine parameter map.
fn grid_point(mesh: &TetMesh, phi: &[Vec3], t: usize, target: &Vec3) -> Option<Vec3> {
    let [v0, v1, v2, v3] = mesh.tets[t];
    let m = Matrix3::from_columns(&[phi[v1] - phi[v0], phi[v2] - phi[v0], phi[v3] - phi[v0]]);
    let lam = m.lu().solve(&(target - phi[v0]))?;
    let slack = 1e-6;
    if !lam.iter().all(|l| l.is_finite() && *l >= -slack) || lam.sum() > 1.0 + slack {
        return None;
    }
    let x = &mesh.vertices;
    Some(x[v0] + (x[v1] - x[v0]) * lam[0] + (x[v2] - x[v0]) * lam[1] + (x[v3] - x[v0]) * lam[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::perturb::perturb_values;
    use crate::mesh::generate::{box_mesh, jitter_vertices};

    fn perturbed(mesh: &TetMesh, topo: &Topology, f: impl Fn(&Vec3) -> Vec3) -> Vec<Vec3> {
        let raw: Vec<[f64; 3]> = mesh.vertices.iter().map(|v| f(v).into()).collect();
        perturb_values(&raw, &topo.vertex_neighbors, 1e-7).unwrap().into_iter().map(Vec3::from).collect()
    }

    #[test]
    fn single_tet_without_integers() {
        let mesh = TetMesh::new(
            vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)],
            vec![[0, 1, 2, 3]],
        )
        .unwrap();
        let topo = Topology::new(&mesh);
        let phi: Vec<Vec3> = mesh.vertices.iter().map(|v| v * 0.8 + Vec3::new(0.1, 0.1, 0.1)).collect();
        let (g, r) = extract_3d(&mesh, &topo, &phi).unwrap();
        assert!(g.nodes.is_empty());
        assert_eq!(r.segments, 0);
    }

    #[test]
    fn affine_cube_grid() {
        let mesh = jitter_vertices(&box_mesh(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0), [5, 5, 5]).unwrap(), 0.25, 11).unwrap();
        let topo = Topology::new(&mesh);
        let phi = perturbed(&mesh, &topo, |v| v * 4.0);
        let (g, r) = extract_3d(&mesh, &topo, &phi).unwrap();
        assert_eq!(r.inconsistent_tets, 0);
        let grid: Vec<&Node> = g.nodes.iter().filter(|n| n.provenance == Provenance::InteriorGrid).collect();
        assert_eq!(grid.len(), 27);
        for n in &grid {
            let want = n.params / 4.0;
            assert!((n.position - want).norm() < 1e-7);
        }
        for e in &g.elements {
            let (pa, pb) = (g.nodes[e.nodes[0]].params, g.nodes[e.nodes[1]].params);
            let k = e.family.iso_index().unwrap();
            for q in (0..3).filter(|&q| q != k) {
                assert_eq!(pa[q], pb[q]);
                assert_eq!(pa[q], pa[q].round());
            }
            assert!((pa[k] - pb[k]).abs() <= 1.0 + 1e-9);
        }
    }
}
