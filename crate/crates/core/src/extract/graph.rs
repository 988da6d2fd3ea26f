//! Embedded truss graph and coincident-node merging.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::mesh::Vec3;

/// Distance below which nodes are considered coincident (m).
pub const MERGE_TOL: f64 = 1e-9;

/// How a node was produced. Ordered by increasing rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Integer isocurve crossing a mesh edge.
    EdgeHit,
    /// Integer isocurve pair crossing an interior mesh face.
    FaceHit,
    /// Point where all parameters are integers.
    InteriorGrid,
    Boundary,
    Feature,
}

impl Provenance {
    pub fn rank(self) -> u8 {
        self as u8
    }

    pub fn is_hit(self) -> bool {
        matches!(self, Provenance::EdgeHit | Provenance::FaceHit)
    }
}

/// Element family. `Iso(k)` elements run along a curve where the other
/// parameters are integer constants and parameter `k` varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Iso1,
    Iso2,
    Iso3,
    Boundary,
    Feature,
}

impl Family {
    pub fn iso(k: usize) -> Self {
        match k {
            0 => Family::Iso1,
            1 => Family::Iso2,
            _ => Family::Iso3,
        }
    }

    /// Varying parameter index for interior families.
    pub fn iso_index(self) -> Option<usize> {
        match self {
            Family::Iso1 => Some(0),
            Family::Iso2 => Some(1),
            Family::Iso3 => Some(2),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Iso1 => "iso1",
            Family::Iso2 => "iso2",
            Family::Iso3 => "iso3",
            Family::Boundary => "boundary",
            Family::Feature => "feature",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// m
    pub position: Vec3,
    /// Parameter value `φ̃` at the node (unused trailing components are 0).
    pub params: Vec3,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub nodes: [usize; 2],
    pub family: Family,
    /// Tet containing the element, when it was traced inside one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tet: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrussGraph {
    pub nodes: Vec<Node>,
    pub elements: Vec<Element>,
}

impl TrussGraph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn element_length(&self, e: usize) -> f64 {
        let [a, b] = self.elements[e].nodes;
        (self.nodes[a].position - self.nodes[b].position).norm()
    }

    pub fn total_length(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.element_length(e)).sum()
    }

    /// Sorted neighbor lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.elements {
            adj[e.nodes[0]].push(e.nodes[1]);
            adj[e.nodes[1]].push(e.nodes[0]);
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// Connected components, isolated nodes included.
    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.nodes.len());
        for e in &self.elements {
            uf.union(e.nodes[0], e.nodes[1]);
        }
        (0..self.nodes.len()).filter(|&i| uf.find(i) == i).count()
    }

    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = self.nodes.first()?.position;
        Some(self.nodes.iter().fold((first, first), |(lo, hi), n| (lo.inf(&n.position), hi.sup(&n.position))))
    }

    /// Sort nodes by (parameters, position, rank) and elements by endpoint
    /// indices, dropping self-loops and duplicate elements. Duplicates keep the
    /// highest family and the first recorded tet.
    pub fn canonicalize(&mut self) {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        let key = |n: &Node| {
            let p = n.params;
            let x = n.position;
            (p.x, p.y, p.z, x.x, x.y, x.z, n.provenance)
        };
        order.sort_by(|&a, &b| {
            let (ka, kb) = (key(&self.nodes[a]), key(&self.nodes[b]));
            ka.0.total_cmp(&kb.0)
                .then(ka.1.total_cmp(&kb.1))
                .then(ka.2.total_cmp(&kb.2))
                .then(ka.3.total_cmp(&kb.3))
                .then(ka.4.total_cmp(&kb.4))
                .then(ka.5.total_cmp(&kb.5))
                .then(ka.6.cmp(&kb.6))
                .then(a.cmp(&b))
        });
        let mut remap = vec![0usize; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        self.nodes = order.iter().map(|&i| self.nodes[i].clone()).collect();
        let mut edges: BTreeMap<[usize; 2], (Family, Option<usize>)> = BTreeMap::new();
        for e in &self.elements {
            let (a, b) = (remap[e.nodes[0]], remap[e.nodes[1]]);
            if a == b {
                continue;
            }
            let k = if a < b { [a, b] } else { [b, a] };
            edges
                .entry(k)
                .and_modify(|v| {
                    if e.family > v.0 {
                        v.0 = e.family;
                    }
                    if v.1.is_none() {
                        v.1 = e.tet;
                    }
                })
                .or_insert((e.family, e.tet));
        }
        self.elements = edges
            .into_iter()
            .map(|(nodes, (family, tet))| Element { nodes, family, tet })
            .collect();
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Union of graphs with nodes closer than [`MERGE_TOL`] fused. The fused node
/// takes position and parameters from its highest-ranked member (lowest
/// index on ties) and that member's provenance.
pub fn merge_graphs(parts: &[TrussGraph]) -> TrussGraph {
    let mut nodes = Vec::new();
    let mut elements = Vec::new();
    for g in parts {
        let base = nodes.len();
        nodes.extend(g.nodes.iter().cloned());
        elements.extend(g.elements.iter().map(|e| Element {
            nodes: [e.nodes[0] + base, e.nodes[1] + base],
            family: e.family,
            tet: e.tet,
        }));
    }
    let n = nodes.len();
    let mut uf = UnionFind::new(n);
    let cell = |p: &Vec3| -> [i64; 3] { [0, 1, 2].map(|a| (p[a] / MERGE_TOL).floor() as i64) };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, node) in nodes.iter().enumerate() {
        let c = cell(&node.position);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        for &j in list {
                            if (nodes[j].position - node.position).norm() <= MERGE_TOL {
                                uf.union(i, j);
                            }
                        }
                    }
                }
            }
        }
        grid.entry(c).or_default().push(i);
    }
    // Representative: highest rank, then lowest index.
    let mut best: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let r = uf.find(i);
        let e = best.entry(r).or_insert(i);
        if nodes[i].provenance > nodes[*e].provenance {
            *e = i;
        }
    }
    let mut reps: Vec<usize> = best.values().copied().collect();
    reps.sort_unstable();
    let mut new_index = HashMap::with_capacity(reps.len());
    for (k, &r) in reps.iter().enumerate() {
        new_index.insert(uf.find(r), k);
    }
    let mut out = TrussGraph {
        nodes: reps.iter().map(|&r| nodes[r].clone()).collect(),
        elements: elements
            .into_iter()
            .map(|e| Element {
                nodes: e.nodes.map(|v| new_index[&uf.find(v)]),
                family: e.family,
                tet: e.tet,
            })
            .collect(),
    };
    out.canonicalize();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(x: f64, prov: Provenance) -> Node {
        Node { position: Vec3::new(x, 0.0, 0.0), params: Vec3::new(x, 0.0, 0.0), provenance: prov }
    }

    fn sample() -> TrussGraph {
        TrussGraph {
            nodes: vec![node(0.0, Provenance::Boundary), node(1.0, Provenance::EdgeHit), node(2.0, Provenance::InteriorGrid)],
            elements: vec![
                Element { nodes: [0, 1], family: Family::Iso1, tet: None },
                Element { nodes: [1, 2], family: Family::Iso1, tet: Some(3) },
            ],
        }
    }

    #[test]
    fn merge_is_idempotent() {
        let g = merge_graphs(&[sample()]);
        assert_eq!(merge_graphs(&[g.clone(), g.clone()]), g);
        assert_eq!(merge_graphs(&[g.clone()]), g);
        assert_eq!(merge_graphs(&[TrussGraph::default(), g.clone()]), g);
    }

    #[test]
    fn coincident_nodes_fuse_with_highest_rank() {
        let mut a = sample();
        a.nodes.push(Node { position: Vec3::new(1.0 + 1e-12, 0.0, 0.0), params: Vec3::new(9.0, 0.0, 0.0), provenance: Provenance::Feature });
        a.elements.push(Element { nodes: [3, 2], family: Family::Feature, tet: None });
        a.elements.push(Element { nodes: [1, 3], family: Family::Iso2, tet: None });
        let g = merge_graphs(&[a]);
        assert_eq!(g.nodes.len(), 3);
        let fused = g.nodes.iter().position(|n| n.provenance == Provenance::Feature).unwrap();
        assert_eq!(g.nodes[fused].params.x, 9.0);
        // The (1,2) element and its feature duplicate collapse to one, and the
        // element between the fused nodes vanishes.
        assert_eq!(g.elements.len(), 2);
        assert!(g.elements.iter().any(|e| e.family == Family::Feature));
    }

    #[test]
    fn components_and_length() {
        let g = sample();
        assert_eq!(g.component_count(), 1);
        assert!((g.total_length() - 2.0).abs() < 1e-15);
        let mut h = g.clone();
        h.nodes.push(node(5.0, Provenance::Boundary));
        assert_eq!(h.component_count(), 2);
    }

    #[test]
    fn json_roundtrip() {
        let g = merge_graphs(&[sample()]);
        let s = serde_json::to_string(&g).unwrap();
        let back: TrussGraph = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(s.contains("\"interior_grid\"") && s.contains("\"iso1\""));
    }
}
