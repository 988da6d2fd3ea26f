//! Integer-isocurve truss extraction from a perturbed parametrization.

pub mod boundary;
pub mod graph;
pub mod perturb;
pub mod surface;
pub mod volume;

use std::collections::HashMap;
use std::hash::Hash;

pub use boundary::extract_boundary;
pub use graph::{merge_graphs, Element, Family, Node, Provenance, TrussGraph};
pub use perturb::{perturb_parametrization, perturb_values, DEFAULT_EPSILON, INTEGER_TOL};
pub use surface::{extract_2d, SurfaceReport, TriangleComplex};
pub use volume::{extract_3d, VolumeReport};

use crate::error::Result;
use crate::mesh::{TetMesh, Topology, Vec3};

/// Parameter pairs `(i, j)` and the remaining index `k`.
pub(crate) const PAIRS: [[usize; 2]; 3] = [[0, 1], [0, 2], [1, 2]];
pub(crate) const THIRD: [usize; 3] = [2, 1, 0];

/// Barycentric slack for points on the edge of a face.
pub(crate) const FACE_TOL: f64 = 1e-12;

/// Interior and boundary extraction merged into one graph.
pub fn extract_truss(mesh: &TetMesh, topology: &Topology, phi: &[Vec3], features: &[usize]) -> Result<(TrussGraph, VolumeReport)> {
    let (interior, report) = extract_3d(mesh, topology, phi)?;
    let bnd = extract_boundary(mesh, phi, features)?;
    Ok((merge_graphs(&[interior, bnd]), report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum NodeKey {
    Vertex(usize),
    Edge { edge: usize, k: usize, n: i64 },
    Face { face: usize, pair: usize, n: [i64; 2] },
    Grid { tet: usize, n: [i64; 3] },
}

/// Graph under construction with keyed node deduplication.
pub(crate) struct Builder<K> {
    graph: TrussGraph,
    index: HashMap<K, usize>,
}

impl<K: Eq + Hash> Builder<K> {
    pub fn new() -> Self {
        Self { graph: TrussGraph::default(), index: HashMap::new() }
    }

    /// Existing node for `key`, or a new one. A repeated key keeps the higher
    /// provenance.
    pub fn node(&mut self, key: K, make: impl FnOnce() -> Node) -> usize {
        if let Some(&i) = self.index.get(&key) {
            let n = make();
            if n.provenance > self.graph.nodes[i].provenance {
                self.graph.nodes[i].provenance = n.provenance;
            }
            return i;
        }
        let i = self.graph.nodes.len();
        self.graph.nodes.push(make());
        self.index.insert(key, i);
        i
    }

    pub fn chain(&mut self, nodes: &[usize], family: Family, tet: Option<usize>) {
        for w in nodes.windows(2) {
            if w[0] != w[1] {
                self.graph.elements.push(Element { nodes: [w[0], w[1]], family, tet });
            }
        }
    }

    pub fn finish(self) -> TrussGraph {
        merge_graphs(&[self.graph])
    }
}

/// Point where parameter `k` equals `n` on the segment `a → b`, given with
/// canonical (ascending) vertex order.
pub(crate) fn edge_crossing(pa: &Vec3, pb: &Vec3, fa: &Vec3, fb: &Vec3, k: usize, n: f64) -> (Vec3, Vec3, f64) {
    let t = (n - fa[k]) / (fb[k] - fa[k]);
    let mut params = fa + (fb - fa) * t;
    params[k] = n;
    (pa + (pb - pa) * t, params, t)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct FacePoint {
    pub pair: usize,
    pub n: [i64; 2],
    pub position: Vec3,
    pub params: Vec3,
}

/// All points of a triangle (ascending vertex indices) where both parameters
/// of a pair are integers. `pairs` limits the pairs considered.
pub(crate) fn face_points(verts: [usize; 3], x: &[Vec3], phi: &[Vec3], pairs: &[usize], min_bary: f64) -> Vec<FacePoint> {
    let [a, b, c] = verts;
    let (fa, fb, fc) = (phi[a], phi[b], phi[c]);
    let mut out = Vec::new();
    for &p in pairs {
        let [i, j] = PAIRS[p];
        let m00 = fb[i] - fa[i];
        let m01 = fc[i] - fa[i];
        let m10 = fb[j] - fa[j];
        let m11 = fc[j] - fa[j];
        let det = m00 * m11 - m01 * m10;
        if det == 0.0 || !det.is_finite() {
            continue;
        }
        let range = |q: usize| {
            let lo = fa[q].min(fb[q]).min(fc[q]);
            let hi = fa[q].max(fb[q]).max(fc[q]);
            perturb::integers_between(lo, hi)
        };
        for ni in range(i) {
            for nj in range(j) {
                let ri = ni - fa[i];
                let rj = nj - fa[j];
                let lb = (ri * m11 - m01 * rj) / det;
                let lc = (m00 * rj - ri * m10) / det;
                let la = 1.0 - lb - lc;
                if la.min(lb).min(lc) < min_bary {
                    continue;
                }
                let mut params = fa * la + fb * lb + fc * lc;
                params[i] = ni;
                params[j] = nj;
                out.push(FacePoint {
                    pair: p,
                    n: [ni as i64, nj as i64],
                    position: x[a] * la + x[b] * lb + x[c] * lc,
                    params,
                });
            }
        }
    }
    out
}

pub(crate) fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}
