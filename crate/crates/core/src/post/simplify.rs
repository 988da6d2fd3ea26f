//! Edge-contraction simplification of truss graphs.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{Element, Provenance, TrussGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimplifyConfig {
    /// Contract elements shorter than this (m). `None` uses
    /// `threshold_factor × median element length`.
    pub length_threshold: Option<f64>,
    pub threshold_factor: f64,
    /// Contract every edge-hit and face-hit node into a neighbor.
    pub remove_interior_hits: bool,
    /// Never contract an element whose endpoints are both feature nodes.
    pub preserve_features: bool,
}

impl Default for SimplifyConfig {
    fn default() -> Self {
        Self { length_threshold: None, threshold_factor: 0.05, remove_interior_hits: true, preserve_features: true }
    }
}

impl SimplifyConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.length_threshold {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("length_threshold {t} must be finite and non-negative")));
            }
        }
        if !(self.threshold_factor >= 0.0 && self.threshold_factor < 1.0) {
            return Err(Error::Config(format!("threshold_factor {} outside [0, 1)", self.threshold_factor)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimplifyReport {
    pub threshold: f64,
    pub contracted: usize,
    pub hits_removed: usize,
    /// Short elements kept because contracting them would lengthen the graph.
    pub kept_short: usize,
    /// Short elements kept because both ends are feature nodes.
    pub kept_features: usize,
}

/// Median element length, 0 for an empty graph.
pub fn median_length(g: &TrussGraph) -> f64 {
    let mut l: Vec<f64> = (0..g.elements.len()).map(|e| g.element_length(e)).collect();
    if l.is_empty() {
        return 0.0;
    }
    l.sort_by(f64::total_cmp);
    let m = l.len() / 2;
    if l.len() % 2 == 1 {
        l[m]
    } else {
        0.5 * (l[m - 1] + l[m])
    }
}

struct Work {
    g: TrussGraph,
    alive: Vec<bool>,
    live_el: Vec<bool>,
    incident: Vec<BTreeSet<usize>>,
}

impl Work {
    fn new(g: TrussGraph) -> Self {
        let mut incident = vec![BTreeSet::new(); g.nodes.len()];
        for (i, e) in g.elements.iter().enumerate() {
            incident[e.nodes[0]].insert(i);
            incident[e.nodes[1]].insert(i);
        }
        let alive = vec![true; g.nodes.len()];
        let live_el = vec![true; g.elements.len()];
        Self { g, alive, live_el, incident }
    }

    fn other(&self, e: usize, v: usize) -> usize {
        let [a, b] = self.g.elements[e].nodes;
        if a == v {
            b
        } else {
            a
        }
    }

    fn dist(&self, a: usize, b: usize) -> f64 {
        (self.g.nodes[a].position - self.g.nodes[b].position).norm()
    }

    /// Change in total length if `loser` is merged into `survivor`.
    fn delta(&self, loser: usize, survivor: usize) -> f64 {
        let mut d = 0.0;
        let mut seen = BTreeSet::new();
        for &e in &self.incident[survivor] {
            seen.insert(self.other(e, survivor));
        }
        for &e in &self.incident[loser] {
            let o = self.other(e, loser);
            d -= self.dist(loser, o);
            if o != survivor && !seen.contains(&o) {
                d += self.dist(survivor, o);
                seen.insert(o);
            }
        }
        d
    }

    /// Merge `loser` into `survivor`; returns the re-pointed elements.
    fn contract(&mut self, loser: usize, survivor: usize) -> Vec<usize> {
        let mut moved = Vec::new();
        let edges: Vec<usize> = self.incident[loser].iter().copied().collect();
        for e in edges {
            let o = self.other(e, loser);
            self.incident[o].remove(&e);
            if o == survivor {
                self.live_el[e] = false;
                continue;
            }
            let existing = self.incident[survivor].iter().copied().find(|&f| self.other(f, survivor) == o);
            if let Some(f) = existing {
                if self.g.elements[e].family > self.g.elements[f].family {
                    self.g.elements[f].family = self.g.elements[e].family;
                }
                self.live_el[e] = false;
                continue;
            }
            let el = &mut self.g.elements[e];
            el.nodes = [survivor, o];
            self.incident[survivor].insert(e);
            self.incident[o].insert(e);
            moved.push(e);
        }
        self.incident[loser].clear();
        self.alive[loser] = false;
        moved
    }

    fn finish(self) -> TrussGraph {
        let mut remap = vec![usize::MAX; self.g.nodes.len()];
        let mut nodes = Vec::new();
        for (i, n) in self.g.nodes.iter().enumerate() {
            if self.alive[i] {
                remap[i] = nodes.len();
                nodes.push(n.clone());
            }
        }
        let elements = self
            .g
            .elements
            .iter()
            .enumerate()
            .filter(|(i, _)| self.live_el[*i])
            .map(|(_, e)| Element { nodes: e.nodes.map(|v| remap[v]), family: e.family, tet: e.tet })
            .collect();
        let mut out = TrussGraph { nodes, elements };
        out.canonicalize();
        out
    }
}

/// Contract short elements toward the higher-provenance endpoint, then
/// optionally absorb all edge/face-hit nodes into their best neighbor.
pub fn simplify(g: &TrussGraph, config: &SimplifyConfig) -> Result<(TrussGraph, SimplifyReport)> {
    config.validate()?;
    let threshold = config.length_threshold.unwrap_or_else(|| config.threshold_factor * median_length(g));
    let mut report = SimplifyReport { threshold, ..Default::default() };
    let mut w = Work::new(g.clone());

    let key = |l: f64| Reverse(l.to_bits());
    let mut heap: BinaryHeap<(Reverse<u64>, Reverse<usize>)> =
        (0..w.g.elements.len()).map(|e| (key(w.g.element_length(e)), Reverse(e))).collect();
    while let Some((Reverse(bits), Reverse(e))) = heap.pop() {
        if !w.live_el[e] {
            continue;
        }
        let len = w.g.element_length(e);
        if len.to_bits() != bits {
            heap.push((key(len), Reverse(e)));
            continue;
        }
        if len >= threshold {
            break;
        }
        let [a, b] = w.g.elements[e].nodes;
        let (pa, pb) = (w.g.nodes[a].provenance, w.g.nodes[b].provenance);
        if config.preserve_features && pa == Provenance::Feature && pb == Provenance::Feature {
            report.kept_features += 1;
            continue;
        }
        let (loser, survivor) = if pa != pb {
            if pa > pb {
                (b, a)
            } else {
                (a, b)
            }
        } else {
            // Equal rank: keep whichever side shortens the graph more.
            let (da, db) = (w.delta(a, b), w.delta(b, a));
            if db < da || (db == da && a < b) {
                (b, a)
            } else {
                (a, b)
            }
        };
        if w.delta(loser, survivor) > 0.0 {
            report.kept_short += 1;
            continue;
        }
        for m in w.contract(loser, survivor) {
            heap.push((key(w.g.element_length(m)), Reverse(m)));
        }
        report.contracted += 1;
    }

    if config.remove_interior_hits {
        for v in 0..w.g.nodes.len() {
            if !w.alive[v] || !w.g.nodes[v].provenance.is_hit() || w.incident[v].is_empty() {
                continue;
            }
            let best = w.incident[v]
                .iter()
                .map(|&e| w.other(e, v))
                .max_by(|&x, &y| {
                    w.g.nodes[x]
                        .provenance
                        .cmp(&w.g.nodes[y].provenance)
                        .then(w.dist(v, y).total_cmp(&w.dist(v, x)))
                        .then(y.cmp(&x))
                })
                .expect("non-empty incidence");
            w.contract(v, best);
            report.hits_removed += 1;
        }
    }
    Ok((w.finish(), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::{Family, Node};
    use crate::mesh::Vec3;
    use proptest::prelude::*;

    fn node(p: [f64; 3], provenance: Provenance) -> Node {
        Node { position: Vec3::from(p), params: Vec3::from(p), provenance }
    }

    fn el(a: usize, b: usize) -> Element {
        Element { nodes: [a, b], family: Family::Iso1, tet: None }
    }

    #[test]
    fn zero_length_duplicate_merges() {
        let g = TrussGraph {
            nodes: vec![
                node([0.0, 0.0, 0.0], Provenance::Boundary),
                node([1.0, 0.0, 0.0], Provenance::InteriorGrid),
                node([1.0, 0.0, 0.0], Provenance::InteriorGrid),
            ],
            elements: vec![el(0, 1), el(1, 2), el(0, 2)],
        };
        let (s, r) = simplify(&g, &SimplifyConfig { length_threshold: Some(1e-6), remove_interior_hits: false, ..Default::default() }).unwrap();
        assert_eq!(s.nodes.len(), 2);
        assert_eq!(s.elements.len(), 1);
        assert_eq!(r.contracted, 1);
    }

    #[test]
    fn feature_node_survives() {
        let g = TrussGraph {
            nodes: vec![
                node([0.0, 0.0, 0.0], Provenance::InteriorGrid),
                node([0.01, 0.0, 0.0], Provenance::Feature),
                node([1.0, 0.0, 0.0], Provenance::InteriorGrid),
            ],
            elements: vec![el(0, 1), el(1, 2)],
        };
        let (s, _) = simplify(&g, &SimplifyConfig { length_threshold: Some(0.1), ..Default::default() }).unwrap();
        assert_eq!(s.nodes.len(), 2);
        assert!(s.nodes.iter().any(|n| n.provenance == Provenance::Feature && n.position.x == 0.01));
    }

    #[test]
    fn features_kept_when_both_ends_are_features() {
        let g = TrussGraph {
            nodes: vec![node([0.0, 0.0, 0.0], Provenance::Feature), node([0.01, 0.0, 0.0], Provenance::Feature)],
            elements: vec![el(0, 1)],
        };
        let (s, r) = simplify(&g, &SimplifyConfig { length_threshold: Some(0.1), ..Default::default() }).unwrap();
        assert_eq!(s.nodes.len(), 2);
        assert_eq!(r.kept_features, 1);
        let (s, _) = simplify(&g, &SimplifyConfig { length_threshold: Some(0.1), preserve_features: false, ..Default::default() }).unwrap();
        assert_eq!(s.nodes.len(), 1);
    }

    #[test]
    fn hit_chain_collapses_to_grid_edge() {
        let g = TrussGraph {
            nodes: vec![
                node([0.0, 0.0, 0.0], Provenance::InteriorGrid),
                node([0.3, 0.0, 0.0], Provenance::FaceHit),
                node([0.6, 0.0, 0.0], Provenance::EdgeHit),
                node([1.0, 0.0, 0.0], Provenance::InteriorGrid),
            ],
            elements: vec![el(0, 1), el(1, 2), el(2, 3)],
        };
        let (s, r) = simplify(&g, &SimplifyConfig { length_threshold: Some(0.0), ..Default::default() }).unwrap();
        assert_eq!(r.hits_removed, 2);
        assert_eq!(s.nodes.len(), 2);
        assert_eq!(s.elements.len(), 1);
        assert!((s.total_length() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn median() {
        let g = TrussGraph {
            nodes: vec![node([0.0; 3], Provenance::Boundary), node([1.0, 0.0, 0.0], Provenance::Boundary), node([3.0, 0.0, 0.0], Provenance::Boundary)],
            elements: vec![el(0, 1), el(1, 2)],
        };
        assert_eq!(median_length(&g), 1.5);
        assert_eq!(median_length(&TrussGraph::default()), 0.0);
    }

    fn arb_graph() -> impl Strategy<Value = TrussGraph> {
        (3usize..25).prop_flat_map(|n| {
            let nodes = proptest::collection::vec(((0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64), 0u8..5), n);
            let edges = proptest::collection::vec((0..n, 0..n), 0..40);
            (nodes, edges).prop_map(|(nodes, edges)| {
                let provs = [Provenance::EdgeHit, Provenance::FaceHit, Provenance::InteriorGrid, Provenance::Boundary, Provenance::Feature];
                let nodes = nodes.into_iter().map(|((x, y, z), p)| node([x, y, z], provs[p as usize])).collect();
                let elements = edges.into_iter().filter(|(a, b)| a != b).map(|(a, b)| el(a, b)).collect();
                let mut g = TrussGraph { nodes, elements };
                g.canonicalize();
                g
            })
        })
    }

    proptest! {
        #[test]
        fn components_and_length_invariants(g in arb_graph(), t in 0.0..0.6f64, hits in any::<bool>()) {
            let cfg = SimplifyConfig { length_threshold: Some(t), remove_interior_hits: false, preserve_features: true, ..Default::default() };
            let (s, _) = simplify(&g, &cfg).unwrap();
            prop_assert_eq!(s.component_count(), g.component_count());
            prop_assert!(s.total_length() <= g.total_length() + 1e-12);
            for e in &s.elements {
                prop_assert!(e.nodes[0] != e.nodes[1]);
            }
            let cfg = SimplifyConfig { remove_interior_hits: hits, ..cfg };
            let (s, _) = simplify(&g, &cfg).unwrap();
            prop_assert_eq!(s.component_count(), g.component_count());
            if hits {
                for (i, n) in s.nodes.iter().enumerate() {
                    let isolated = !s.elements.iter().any(|e| e.nodes.contains(&i));
                    prop_assert!(!n.provenance.is_hit() || isolated);
                }
            }
        }
    }
}
