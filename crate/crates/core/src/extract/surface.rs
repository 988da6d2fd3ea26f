//! Isocurve extraction on triangle complexes with two parameters.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::perturb::{check_perturbed, integers_between, near_integer};
use super::{edge_crossing, face_points, sorted3, Builder, Family, Node, NodeKey, Provenance, TrussGraph, FACE_TOL};
use crate::error::{Error, Result};
use crate::mesh::Vec3;

/// Triangles over a vertex set embedded in 3D (planar inputs use `z = 0`).
#[derive(Debug, Clone)]
pub struct TriangleComplex {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleComplex {
    pub fn planar(points: &[[f64; 2]], triangles: Vec<[usize; 3]>) -> Self {
        Self { vertices: points.iter().map(|p| Vec3::new(p[0], p[1], 0.0)).collect(), triangles }
    }

    /// Sorted edges with their incident triangles, and per-triangle edge ids
    /// in the order `[v0v1, v1v2, v2v0]`.
    pub fn edges(&self) -> Result<(Vec<([usize; 2], Vec<usize>)>, Vec<[usize; 3]>)> {
        let mut map: BTreeMap<[usize; 2], Vec<usize>> = BTreeMap::new();
        for (f, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= self.vertices.len()) {
                return Err(Error::InvalidMesh(format!("triangle {f} references a missing vertex")));
            }
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if a == b {
                    return Err(Error::InvalidMesh(format!("triangle {f} repeats vertex {a}")));
                }
                map.entry([a.min(b), a.max(b)]).or_default().push(f);
            }
        }
        let edges: Vec<_> = map.into_iter().collect();
        if let Some((e, fs)) = edges.iter().find(|(_, fs)| fs.len() > 2) {
            return Err(Error::InvalidMesh(format!("edge {e:?} shared by {} triangles", fs.len())));
        }
        let index: BTreeMap<[usize; 2], usize> = edges.iter().enumerate().map(|(i, (e, _))| (*e, i)).collect();
        let tri_edges = self
            .triangles
            .iter()
            .map(|t| [0, 1, 2].map(|k| {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                index[&[a.min(b), a.max(b)]]
            }))
            .collect();
        Ok((edges, tri_edges))
    }

    /// One-ring neighbors of every vertex, sorted.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![BTreeSet::new(); self.vertices.len()];
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                sets[a].insert(b);
                sets[b].insert(a);
            }
        }
        sets.into_iter().map(|s| s.into_iter().collect()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SurfaceReport {
    /// End-to-end curves traced per family (`iso1`, `iso2`).
    pub curves: [usize; 2],
    pub closed_loops: usize,
}

/// Truss graph of the integer isocurves of `params` on the complex.
pub fn extract_2d(complex: &TriangleComplex, params: &[[f64; 2]]) -> Result<(TrussGraph, SurfaceReport)> {
    if params.len() != complex.vertices.len() {
        return Err(Error::InvalidInput(format!(
            "{} parameter values for {} vertices",
            params.len(),
            complex.vertices.len()
        )));
    }
    check_perturbed(params)?;
    let phi: Vec<Vec3> = params.iter().map(|p| Vec3::new(p[0], p[1], 0.0)).collect();
    let x = &complex.vertices;
    let (edges, tri_edges) = complex.edges()?;
    let mut b: Builder<NodeKey> = Builder::new();

    let crossing = |b: &mut Builder<NodeKey>, e: usize, k: usize, n: f64| -> (usize, f64) {
        let ([u, v], faces) = &edges[e];
        let (pos, mut par, t) = edge_crossing(&x[*u], &x[*v], &phi[*u], &phi[*v], k, n);
        let provenance = if faces.len() == 1 {
            Provenance::Boundary
        } else if let Some(m) = near_integer(par[1 - k]) {
            par[1 - k] = m;
            Provenance::InteriorGrid
        } else {
            Provenance::EdgeHit
        };
        let i = b.node(NodeKey::Edge { edge: e, k, n: n as i64 }, || Node { position: pos, params: par, provenance });
        (i, t)
    };

    for (f, tri) in complex.triangles.iter().enumerate() {
        let verts = sorted3(*tri);
        let inner = face_points(verts, x, &phi, &[0], FACE_TOL);
        for k in 0..2 {
            let o = 1 - k;
            let vals = tri.map(|v| phi[v][k]);
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for n in integers_between(lo, hi) {
                let mut ends = Vec::with_capacity(2);
                for &e in &tri_edges[f] {
                    let [u, v] = edges[e].0;
                    if integers_between(phi[u][k], phi[v][k]).any(|m| m == n) {
                        ends.push(crossing(&mut b, e, k, n).0);
                    }
                }
                if ends.len() != 2 {
                    return Err(Error::Extraction(format!(
                        "isocurve {} = {n} meets triangle {f} in {} edges",
                        k + 1,
                        ends.len()
                    )));
                }
                let start = b.graph.nodes[ends[0]].params[o];
                let end = b.graph.nodes[ends[1]].params[o];
                let mut mids: Vec<(f64, usize)> = inner
                    .iter()
                    .filter(|p| p.n[k] as f64 == n)
                    .map(|p| {
                        let node = b.node(NodeKey::Face { face: f, pair: 0, n: p.n }, || Node {
                            position: p.position,
                            params: p.params,
                            provenance: Provenance::InteriorGrid,
                        });
                        (p.params[o], node)
                    })
                    .collect();
                let dir = if end >= start { 1.0 } else { -1.0 };
                mids.sort_by(|a, c| (dir * a.0).total_cmp(&(dir * c.0)).then(a.1.cmp(&c.1)));
                let mut chain = vec![ends[0]];
                chain.extend(mids.iter().map(|m| m.1));
                chain.push(ends[1]);
                b.chain(&chain, Family::iso(o), None);
            }
        }
    }

    for (e, ([u, v], faces)) in edges.iter().enumerate() {
        if faces.len() != 1 {
            continue;
        }
        let mut pts = vec![(0.0, vertex_node(&mut b, *u, x, &phi)), (1.0, vertex_node(&mut b, *v, x, &phi))];
        for k in 0..2 {
            for n in integers_between(phi[*u][k], phi[*v][k]) {
                let (i, t) = crossing(&mut b, e, k, n);
                pts.push((t, i));
            }
        }
        pts.sort_by(|a, c| a.0.total_cmp(&c.0).then(a.1.cmp(&c.1)));
        let chain: Vec<usize> = pts.iter().map(|p| p.1).collect();
        b.chain(&chain, Family::Boundary, None);
    }

    let graph = b.finish();
    let report = trace(&graph);
    if report.closed_loops > 0 {
        log::warn!("{} closed isocurve loops traced", report.closed_loops);
    }
    Ok((graph, report))
}

fn vertex_node(b: &mut Builder<NodeKey>, v: usize, x: &[Vec3], phi: &[Vec3]) -> usize {
    b.node(NodeKey::Vertex(v), || Node { position: x[v], params: phi[v], provenance: Provenance::Boundary })
}

/// Walk each interior family from boundary seeds, consuming both ends of
/// every traced curve; leftover elements form closed loops.
fn trace(g: &TrussGraph) -> SurfaceReport {
    let mut report = SurfaceReport::default();
    for (slot, family) in [Family::Iso1, Family::Iso2].into_iter().enumerate() {
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); g.nodes.len()];
        for (i, e) in g.elements.iter().enumerate().filter(|(_, e)| e.family == family) {
            adj[e.nodes[0]].push((e.nodes[1], i));
            adj[e.nodes[1]].push((e.nodes[0], i));
        }
        let mut used = vec![false; g.elements.len()];
        let mut seeded = vec![false; g.nodes.len()];
        let mut queue: VecDeque<usize> = (0..g.nodes.len())
            .filter(|&v| g.nodes[v].provenance == Provenance::Boundary && !adj[v].is_empty())
            .collect();
        while let Some(s) = queue.pop_front() {
            if seeded[s] {
                continue;
            }
            let Some(&(_, first)) = adj[s].iter().find(|(_, e)| !used[*e]) else { continue };
            seeded[s] = true;
            let mut cur = s;
            let mut next_edge = Some(first);
            while let Some(e) = next_edge {
                used[e] = true;
                let [a, c] = g.elements[e].nodes;
                cur = if a == cur { c } else { a };
                next_edge = adj[cur].iter().find(|(_, e)| !used[*e]).map(|p| p.1);
                if g.nodes[cur].provenance == Provenance::Boundary {
                    break;
                }
            }
            seeded[cur] = true;
            report.curves[slot] += 1;
        }
        // Remaining elements of the family: count loops by component.
        let mut visited = used;
        for start in 0..g.elements.len() {
            if visited[start] || g.elements[start].family != family {
                continue;
            }
            report.closed_loops += 1;
            let mut stack = vec![start];
            while let Some(e) = stack.pop() {
                if std::mem::replace(&mut visited[e], true) {
                    continue;
                }
                for v in g.elements[e].nodes {
                    stack.extend(adj[v].iter().map(|p| p.1).filter(|&f| !visited[f]));
                }
            }
        }
    }
    report
}
