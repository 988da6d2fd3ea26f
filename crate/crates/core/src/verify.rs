//! Linear frame-element analysis of extracted trusses.

use std::collections::BTreeSet;

use nalgebra::{Matrix3, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::graph::UnionFind;
use crate::extract::{Family, TrussGraph};
use crate::fem::bc::{geometric_tolerance, load_vector};
use crate::fem::{BoundaryConditions, Material, Selector};
use crate::mesh::{TetMesh, Vec3};
use crate::post::RadiusPolicy;
use crate::sparse::{mul_vec, principal_submatrix, LdlSolver, Triplets};

pub const RESIDUAL_TOL: f64 = 1e-8;

/// Elements shorter than this fraction of the median element length join
/// their end nodes rigidly instead of contributing a (near-singular) stiffness.
pub const WELD_FRACTION: f64 = 1e-3;

type Mat12 = SMatrix<f64, 12, 12>;
type Vec12 = SVector<f64, 12>;

/// Node constraint: DOFs `[ux, uy, uz, θx, θy, θz]` held at `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub node: usize,
    pub fixed: [bool; 6],
    #[serde(default)]
    pub value: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLoad {
    pub node: usize,
    /// N
    pub force: Vec3,
    /// N·m
    #[serde(default)]
    pub moment: Vec3,
}

#[derive(Debug, Clone)]
pub struct TrussModel {
    pub graph: TrussGraph,
    /// Per-element circular cross-section radius (m).
    pub radii: Vec<f64>,
    /// Per-element flag for axial-only (pin-ended) members.
    pub pinned: Vec<bool>,
    pub material: Material,
    pub supports: Vec<Support>,
    pub loads: Vec<NodeLoad>,
}

impl TrussModel {
    pub fn new(graph: TrussGraph, radius: &RadiusPolicy, material: Material) -> Self {
        let radii = graph.elements.iter().map(|e| radius.radius(e.family)).collect();
        let pinned = vec![false; graph.elements.len()];
        Self { graph, radii, pinned, material, supports: Vec::new(), loads: Vec::new() }
    }

    pub fn area(&self, e: usize) -> f64 {
        std::f64::consts::PI * self.radii[e].powi(2)
    }

    /// Second moment of area about a diameter.
    pub fn inertia(&self, e: usize) -> f64 {
        std::f64::consts::PI * self.radii[e].powi(4) / 4.0
    }

    pub fn polar_moment(&self, e: usize) -> f64 {
        2.0 * self.inertia(e)
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        let n = self.graph.nodes.len();
        let m = self.graph.elements.len();
        if self.radii.len() != m || self.pinned.len() != m {
            return Err(Error::InvalidInput("one radius and pin flag per element required".into()));
        }
        if let Some(r) = self.radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidInput(format!("element radius {r} must be positive")));
        }
        if let Some(s) = self.supports.iter().find(|s| s.node >= n) {
            return Err(Error::InvalidInput(format!("support on missing node {}", s.node)));
        }
        if let Some(l) = self.loads.iter().find(|l| l.node >= n) {
            return Err(Error::InvalidInput(format!("load on missing node {}", l.node)));
        }
        let constrained: usize = self.supports.iter().map(|s| s.fixed.iter().filter(|f| **f).count()).sum();
        if constrained < 6 {
            return Err(Error::InvalidInput(format!("{constrained} constrained DOFs; at least 6 required")));
        }
        Ok(())
    }
}

/// Unit vector perpendicular to `d`, chosen deterministically.
fn perpendicular(d: &Vec3) -> Vec3 {
    let a = d.abs();
    let helper = if a.x <= a.y && a.x <= a.z {
        Vec3::x()
    } else if a.y <= a.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    (helper - d * d.dot(&helper)).normalize()
}

/// Rows are the local axes `x'` (along the element), `y'`, `z'`.
pub fn local_axes(a: &Vec3, b: &Vec3) -> Matrix3<f64> {
    let x = (b - a).normalize();
    let y = perpendicular(&x);
    let z = x.cross(&y);
    Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()])
}

/// Local 12×12 stiffness of a prismatic Euler–Bernoulli frame element.
/// DOF order per end: `u, v, w, θx, θy, θz`.
pub fn local_stiffness(len: f64, area: f64, inertia: f64, polar: f64, material: &Material, pinned: bool) -> Mat12 {
    let e = material.young_modulus;
    let mut k = Mat12::zeros();
    let mut set = |i: usize, j: usize, v: f64| {
        k[(i, j)] = v;
        k[(j, i)] = v;
    };
    let ea = e * area / len;
    set(0, 0, ea);
    set(6, 6, ea);
    set(0, 6, -ea);
    if pinned {
        return k;
    }
    let gj = material.shear_modulus() * polar / len;
    set(3, 3, gj);
    set(9, 9, gj);
    set(3, 9, -gj);
    let ei = e * inertia;
    let (l2, l3) = (len * len, len * len * len);
    let (c12, c6, c4, c2) = (12.0 * ei / l3, 6.0 * ei / l2, 4.0 * ei / len, 2.0 * ei / len);
    // Bending in the x'y' plane (v, θz).
    set(1, 1, c12);
    set(7, 7, c12);
    set(1, 7, -c12);
    set(1, 5, c6);
    set(1, 11, c6);
    set(5, 7, -c6);
    set(7, 11, -c6);
    set(5, 5, c4);
    set(11, 11, c4);
    set(5, 11, c2);
    // Bending in the x'z' plane (w, θy).
    set(2, 2, c12);
    set(8, 8, c12);
    set(2, 8, -c12);
    set(2, 4, -c6);
    set(2, 10, -c6);
    set(4, 8, c6);
    set(8, 10, c6);
    set(4, 4, c4);
    set(10, 10, c4);
    set(4, 10, c2);
    k
}

fn rotation12(r: &Matrix3<f64>) -> Mat12 {
    let mut t = Mat12::zeros();
    for b in 0..4 {
        t.fixed_view_mut::<3, 3>(3 * b, 3 * b).copy_from(r);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementResult {
    /// Axial force, tension positive (N).
    pub axial_force: f64,
    /// `|N|/A` (Pa).
    pub axial_stress: f64,
    /// Largest end bending stress `r·|M|/I` (Pa).
    pub bending_stress: f64,
    pub combined_stress: f64,
}

#[derive(Debug, Clone)]
pub struct FrameSolution {
    pub displacement: Vec<Vec3>,
    pub rotation: Vec<Vec3>,
    pub elements: Vec<ElementResult>,
    /// Per-node reaction force and moment at constrained DOFs.
    pub reactions: Vec<[f64; 6]>,
    pub residual: f64,
    /// Nodes held fixed because their component has no support.
    pub ignored_nodes: usize,
    /// Elements treated as rigid joints (see [`WELD_FRACTION`]).
    pub welded_elements: usize,
}

impl FrameSolution {
    /// Element with the largest combined stress.
    pub fn max_stress(&self) -> Option<(usize, f64)> {
        self.elements
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.combined_stress))
            .fold(None, |best: Option<(usize, f64)>, (i, s)| match best {
                Some((_, b)) if b >= s => best,
                _ => Some((i, s)),
            })
    }
}

struct Element {
    t: Mat12,
    k_local: Mat12,
}

fn element(model: &TrussModel, e: usize) -> Element {
    let [a, b] = model.graph.elements[e].nodes;
    let (pa, pb) = (model.graph.nodes[a].position, model.graph.nodes[b].position);
    let len = (pb - pa).norm();
    let k_local = local_stiffness(len, model.area(e), model.inertia(e), model.polar_moment(e), &model.material, model.pinned[e]);
    Element { t: rotation12(&local_axes(&pa, &pb)), k_local }
}

fn dofs(rep: &[usize], model: &TrussModel, e: usize) -> [usize; 12] {
    let [a, b] = model.graph.elements[e].nodes.map(|v| rep[v]);
    std::array::from_fn(|i| if i < 6 { 6 * a + i } else { 6 * b + i - 6 })
}

/// Elements shorter than `WELD_FRACTION` × median element length.
pub fn welded_elements(g: &TrussGraph) -> Vec<bool> {
    let limit = WELD_FRACTION * crate::post::simplify::median_length(g);
    (0..g.elements.len()).map(|e| g.element_length(e) < limit).collect()
}

/// Representative node per node after merging the ends of welded elements.
fn weld_representatives(g: &TrussGraph, welded: &[bool]) -> Vec<usize> {
    let n = g.nodes.len();
    let mut uf = UnionFind::new(n);
    for (e, el) in g.elements.iter().enumerate() {
        if welded[e] {
            uf.union(el.nodes[0], el.nodes[1]);
        }
    }
    let mut rep: Vec<usize> = (0..n).collect();
    let mut first = vec![usize::MAX; n];
    for v in 0..n {
        let r = uf.find(v);
        if first[r] == usize::MAX {
            first[r] = v;
        }
        rep[v] = first[r];
    }
    rep
}

/// Static frame solution under the model's supports and loads.
pub fn frame_fem(model: &TrussModel) -> Result<FrameSolution> {
    model.validate()?;
    let g = &model.graph;
    let n = g.nodes.len();
    for e in 0..g.elements.len() {
        if g.element_length(e) < crate::post::geometry::MIN_ELEMENT_LENGTH {
            return Err(Error::InvalidInput(format!("element {e} has zero length")));
        }
    }
    let welded = welded_elements(g);
    let rep = weld_representatives(g, &welded);
    let ndof = 6 * n;
    let mut trip = Triplets::with_capacity(ndof, ndof, 144 * g.elements.len());
    let mut elems = Vec::with_capacity(g.elements.len());
    for e in 0..g.elements.len() {
        let el = element(model, e);
        if welded[e] {
            elems.push(el);
            continue;
        }
        let kg = el.t.transpose() * el.k_local * el.t;
        let d = dofs(&rep, model, e);
        for i in 0..12 {
            for j in 0..12 {
                if kg[(i, j)] != 0.0 {
                    trip.push(d[i], d[j], kg[(i, j)]);
                }
            }
        }
        elems.push(el);
    }
    let k = trip.to_csr();

    let mut fixed = vec![false; ndof];
    let mut u = vec![0.0; ndof];
    for s in &model.supports {
        let v = rep[s.node];
        for i in 0..6 {
            if s.fixed[i] {
                fixed[6 * v + i] = true;
                u[6 * v + i] = s.value[i];
            }
        }
    }
    // Rotations without any bending member are undefined; hold them.
    let mut has_frame = vec![false; n];
    let mut has_element = vec![false; n];
    let mut uf = UnionFind::new(n);
    for (i, e) in g.elements.iter().enumerate() {
        if welded[i] {
            continue;
        }
        for v in e.nodes.map(|v| rep[v]) {
            has_element[v] = true;
            has_frame[v] |= !model.pinned[i];
        }
        uf.union(rep[e.nodes[0]], rep[e.nodes[1]]);
    }
    let supported: BTreeSet<usize> = model.supports.iter().map(|s| uf.find(rep[s.node])).collect();
    let mut ignored = 0;
    let mut floating_loaded = Vec::new();
    let loaded = |v: usize| {
        model.loads.iter().any(|l| rep[l.node] == v && (l.force.norm() > 0.0 || l.moment.norm() > 0.0))
    };
    for v in 0..n {
        if rep[v] != v {
            // Welded into its representative; carries no equations.
            for i in 0..6 {
                fixed[6 * v + i] = true;
            }
            continue;
        }
        let live = has_element[v] && supported.contains(&uf.find(v));
        if !live {
            ignored += 1;
            for i in 0..6 {
                fixed[6 * v + i] = true;
            }
            if loaded(v) {
                floating_loaded.push(v);
            }
        } else if !has_frame[v] {
            for i in 3..6 {
                fixed[6 * v + i] = true;
            }
        }
    }
    if !floating_loaded.is_empty() {
        return Err(Error::Mechanism { nodes: floating_loaded });
    }
    if ignored > 0 {
        log::warn!("{ignored} nodes are not connected to a support and were left out");
    }

    let mut f = vec![0.0; ndof];
    for l in &model.loads {
        let v = rep[l.node];
        for a in 0..3 {
            f[6 * v + a] += l.force[a];
            f[6 * v + 3 + a] += l.moment[a];
        }
    }
    let free: Vec<usize> = (0..ndof).filter(|&i| !fixed[i]).collect();
    let ku_p = mul_vec(&k, &u);
    let mut residual = 0.0;
    if !free.is_empty() {
        let kff = principal_submatrix(&k, &free);
        // Symmetric diagonal scaling balances translational and rotational rows.
        let scale: Vec<f64> = (0..free.len())
            .map(|i| {
                let d = kff.get_entry(i, i).map(|e| e.into_value()).unwrap_or(0.0);
                if d > 0.0 {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let mut scaled = kff.clone();
        for (r, mut row) in scaled.row_iter_mut().enumerate() {
            let (cols, vals) = row.cols_and_values_mut();
            for (c, v) in cols.iter().zip(vals.iter_mut()) {
                *v *= scale[r] * scale[*c];
            }
        }
        let rhs: Vec<f64> = free.iter().enumerate().map(|(j, &i)| (f[i] - ku_p[i]) * scale[j]).collect();
        let solver = LdlSolver::factor(&scaled).map_err(|e| match e {
            Error::Singular { equations } => {
                let nodes: BTreeSet<usize> = equations.iter().map(|&i| free[i] / 6).collect();
                Error::Mechanism { nodes: nodes.into_iter().collect() }
            }
            other => other,
        })?;
        let (y, rel) = solver.solve_refined(&scaled, &rhs, 3);
        for (j, &i) in free.iter().enumerate() {
            u[i] = y[j] * scale[j];
        }
        // Residual of the unscaled free equations.
        let ku = mul_vec(&k, &u);
        let num: f64 = free.iter().map(|&i| (ku[i] - f[i]).powi(2)).sum::<f64>().sqrt();
        let den: f64 = free.iter().map(|&i| (f[i] - ku_p[i]).powi(2)).sum::<f64>().sqrt();
        residual = if den > 0.0 { num / den } else { num };
        if !(residual <= RESIDUAL_TOL) {
            return Err(Error::Numerical(format!("frame solve residual {residual:e} (scaled {rel:e}) exceeds {RESIDUAL_TOL:e}")));
        }
    }

    for v in 0..n {
        if rep[v] != v {
            for i in 0..6 {
                u[6 * v + i] = u[6 * rep[v] + i];
            }
        }
    }
    let ku = mul_vec(&k, &u);
    let mut reactions = vec![[0.0; 6]; n];
    for v in (0..n).filter(|&v| rep[v] == v) {
        for i in 0..6 {
            if fixed[6 * v + i] {
                reactions[v][i] = ku[6 * v + i] - f[6 * v + i];
            }
        }
    }
    let results = elems
        .iter()
        .enumerate()
        .map(|(e, el)| {
            if welded[e] {
                return ElementResult { axial_force: 0.0, axial_stress: 0.0, bending_stress: 0.0, combined_stress: 0.0 };
            }
            let d = dofs(&rep, model, e);
            let ue = Vec12::from_iterator(d.iter().map(|&i| u[i]));
            let fl = el.k_local * (el.t * ue);
            let axial = fl[6];
            let area = model.area(e);
            let r = model.radii[e];
            let m_end = |i: usize| (fl[i].powi(2) + fl[i + 1].powi(2)).sqrt();
            let moment = m_end(4).max(m_end(10));
            let axial_stress = axial.abs() / area;
            let bending_stress = r * moment / model.inertia(e);
            ElementResult { axial_force: axial, axial_stress, bending_stress, combined_stress: axial_stress + bending_stress }
        })
        .collect();
    let vec_at = |v: usize, o: usize| Vec3::new(u[6 * v + o], u[6 * v + o + 1], u[6 * v + o + 2]);
    Ok(FrameSolution {
        displacement: (0..n).map(|v| vec_at(v, 0)).collect(),
        rotation: (0..n).map(|v| vec_at(v, 3)).collect(),
        elements: results,
        reactions,
        residual,
        ignored_nodes: ignored,
        welded_elements: welded.iter().filter(|&&w| w).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capacity {
    /// Load multiplier at first yield.
    pub load_factor: f64,
    pub critical_element: usize,
    /// Combined stress of the critical element under the template load (Pa).
    pub template_stress: f64,
}

/// Factor `λ*` on the model's loads at which the most stressed element
/// reaches the yield strength.
pub fn capacity(model: &TrussModel, solution: &FrameSolution) -> Result<Capacity> {
    let (e, s) = solution.max_stress().ok_or(Error::ZeroStress)?;
    if !(s > 0.0) {
        return Err(Error::ZeroStress);
    }
    Ok(Capacity { load_factor: model.material.yield_strength / s, critical_element: e, template_stress: s })
}

/// Nodes belonging to at least one element.
fn connected_nodes(g: &TrussGraph) -> Vec<usize> {
    let set: BTreeSet<usize> = g.elements.iter().flat_map(|e| e.nodes).collect();
    set.into_iter().collect()
}

fn nearest(g: &TrussGraph, candidates: &[usize], p: &Vec3) -> Option<usize> {
    candidates
        .iter()
        .copied()
        .min_by(|&a, &b| (g.nodes[a].position - p).norm().total_cmp(&(g.nodes[b].position - p).norm()).then(a.cmp(&b)))
}

/// Node supports and loads equivalent to volumetric boundary conditions.
/// Geometric Dirichlet selectors constrain every graph node inside the
/// region, falling back to the node nearest each selected mesh vertex.
/// Nodal surface loads move to the nearest graph node; gravity is ignored.
pub fn map_boundary_conditions(g: &TrussGraph, mesh: &TetMesh, bcs: &BoundaryConditions) -> Result<(Vec<Support>, Vec<NodeLoad>)> {
    let candidates = connected_nodes(g);
    if candidates.is_empty() {
        return Err(Error::InvalidInput("graph has no elements".into()));
    }
    let tol = geometric_tolerance(mesh);
    let mut supports: std::collections::BTreeMap<usize, Support> = Default::default();
    for d in &bcs.dirichlet {
        let mut nodes: BTreeSet<usize> = match d.selector {
            Selector::Box { .. } | Selector::Sphere { .. } => candidates
                .iter()
                .copied()
                .filter(|&v| d.selector.contains_point(&g.nodes[v].position, tol))
                .collect(),
            _ => BTreeSet::new(),
        };
        if nodes.is_empty() {
            for v in d.selector.vertices(mesh)? {
                nodes.extend(nearest(g, &candidates, &mesh.vertices[v]));
            }
        }
        let all = d.axes.iter().all(|a| *a);
        for v in nodes {
            let s = supports.entry(v).or_insert(Support { node: v, fixed: [false; 6], value: [0.0; 6] });
            for a in 0..3 {
                if d.axes[a] {
                    s.fixed[a] = true;
                    s.value[a] = d.displacement[a];
                }
            }
            if all {
                for a in 3..6 {
                    s.fixed[a] = true;
                }
            }
        }
    }
    let surface_only = BoundaryConditions { gravity: None, ..bcs.clone() };
    let f = load_vector(mesh, 0.0, &surface_only)?;
    let mut loads: std::collections::BTreeMap<usize, Vec3> = Default::default();
    for v in 0..mesh.n_vertices() {
        let fv = Vec3::new(f[3 * v], f[3 * v + 1], f[3 * v + 2]);
        if fv.norm() == 0.0 {
            continue;
        }
        if let Some(node) = nearest(g, &candidates, &mesh.vertices[v]) {
            *loads.entry(node).or_insert_with(Vec3::zeros) += fv;
        }
    }
    Ok((
        supports.into_values().collect(),
        loads.into_iter().map(|(node, force)| NodeLoad { node, force, moment: Vec3::zeros() }).collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementReport {
    pub index: usize,
    pub nodes: [usize; 2],
    pub family: Family,
    pub length: f64,
    pub radius: f64,
    pub axial_force: f64,
    pub axial_stress: f64,
    pub bending_stress: f64,
    /// Combined stress over yield strength.
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub load_factor: f64,
    pub critical_element: usize,
    pub max_stress: f64,
    pub yield_strength: f64,
    pub max_displacement: f64,
    pub residual: f64,
    pub total_load: Vec3,
    pub total_reaction: Vec3,
    pub supported_nodes: usize,
    pub loaded_nodes: usize,
    pub ignored_nodes: usize,
    pub welded_elements: usize,
    pub elements: Vec<ElementReport>,
}

/// Solve, size capacity and tabulate per-element utilization.
pub fn verify(model: &TrussModel) -> Result<(FrameSolution, VerifyReport)> {
    let sol = frame_fem(model)?;
    let cap = capacity(model, &sol)?;
    let y = model.material.yield_strength;
    let elements = model
        .graph
        .elements
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let r = &sol.elements[i];
            ElementReport {
                index: i,
                nodes: e.nodes,
                family: e.family,
                length: model.graph.element_length(i),
                radius: model.radii[i],
                axial_force: r.axial_force,
                axial_stress: r.axial_stress,
                bending_stress: r.bending_stress,
                utilization: r.combined_stress / y,
            }
        })
        .collect();
    let total_load = model.loads.iter().fold(Vec3::zeros(), |s, l| s + l.force);
    let total_reaction = sol.reactions.iter().fold(Vec3::zeros(), |s, r| s + Vec3::new(r[0], r[1], r[2]));
    let report = VerifyReport {
        load_factor: cap.load_factor,
        critical_element: cap.critical_element,
        max_stress: cap.template_stress,
        yield_strength: y,
        max_displacement: sol.displacement.iter().map(|d| d.norm()).fold(0.0, f64::max),
        residual: sol.residual,
        total_load,
        total_reaction,
        supported_nodes: model.supports.len(),
        loaded_nodes: model.loads.len(),
        ignored_nodes: sol.ignored_nodes,
        welded_elements: sol.welded_elements,
        elements,
    };
    Ok((sol, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::{Element as GraphElement, Node, Provenance};

    fn graph(points: &[[f64; 3]], edges: &[[usize; 2]]) -> TrussGraph {
        TrussGraph {
            nodes: points
                .iter()
                .map(|p| Node { position: Vec3::from(*p), params: Vec3::zeros(), provenance: Provenance::InteriorGrid })
                .collect(),
            elements: edges.iter().map(|&nodes| GraphElement { nodes, family: Family::Iso1, tet: None }).collect(),
        }
    }

    fn clamp(node: usize) -> Support {
        Support { node, fixed: [true; 6], value: [0.0; 6] }
    }

    fn pin(node: usize) -> Support {
        Support { node, fixed: [true, true, true, false, false, false], value: [0.0; 6] }
    }

    #[test]
    fn local_stiffness_is_symmetric_with_rigid_modes() {
        let m = Material::default();
        let k = local_stiffness(0.7, 1e-4, 3e-9, 6e-9, &m, false);
        assert_eq!(k, k.transpose());
        // Rigid translation along y and rotation about z produce no force.
        let mut ty = Vec12::zeros();
        ty[1] = 1.0;
        ty[7] = 1.0;
        assert!((k * ty).norm() < 1e-9 * k.norm());
        let mut rz = Vec12::zeros();
        rz[5] = 1.0;
        rz[11] = 1.0;
        rz[7] = 0.7;
        assert!((k * rz).norm() < 1e-9 * k.norm());
        let mut ry = Vec12::zeros();
        ry[4] = 1.0;
        ry[10] = 1.0;
        ry[8] = -0.7;
        assert!((k * ry).norm() < 1e-9 * k.norm());
    }

    #[test]
    fn cantilever_tip_deflection() {
        for dir in [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.3, -0.5, 0.8).normalize()] {
            let len = 0.5;
            let mut model = TrussModel::new(graph(&[[0.0; 3], (dir * len).into()], &[[0, 1]]), &RadiusPolicy::uniform(0.004), Material::default());
            let load_dir = perpendicular(&dir);
            let f = 3.0;
            model.supports.push(clamp(0));
            model.loads.push(NodeLoad { node: 1, force: load_dir * f, moment: Vec3::zeros() });
            let sol = frame_fem(&model).unwrap();
            let want = f * len.powi(3) / (3.0 * model.material.young_modulus * model.inertia(0));
            let got = sol.displacement[1].dot(&load_dir);
            assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
            // Fixed-end moment F·L gives the bending stress.
            let want_sigma = f * len * 0.004 / model.inertia(0);
            assert!((sol.elements[0].bending_stress - want_sigma).abs() <= 1e-6 * want_sigma);
            let reaction = Vec3::new(sol.reactions[0][0], sol.reactions[0][1], sol.reactions[0][2]);
            assert!((reaction + load_dir * f).norm() <= 1e-8 * f);
        }
    }

    #[test]
    fn negligible_elements_are_welded() {
        let dir = Vec3::new(0.3, -0.5, 0.8).normalize();
        let (len, f) = (0.5, 3.0);
        let tip = dir * len;
        let stub = tip + perpendicular(&dir) * 1e-9;
        let g = graph(&[[0.0; 3], tip.into(), stub.into(), (dir * 0.2).into()], &[[0, 3], [3, 1], [1, 2]]);
        let mut model = TrussModel::new(g, &RadiusPolicy::uniform(0.004), Material::default());
        let load_dir = perpendicular(&dir);
        model.supports.push(clamp(0));
        model.loads.push(NodeLoad { node: 2, force: load_dir * f, moment: Vec3::zeros() });
        let sol = frame_fem(&model).unwrap();
        assert_eq!(sol.welded_elements, 1);
        assert_eq!(sol.elements[2].combined_stress, 0.0);
        let want = f * len.powi(3) / (3.0 * model.material.young_modulus * model.inertia(0));
        for v in [1, 2] {
            let got = sol.displacement[v].dot(&load_dir);
            assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
        }
    }

    fn two_bar(radius: f64) -> TrussModel {
        let g = graph(&[[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], &[[0, 2], [1, 2]]);
        let mut model = TrussModel::new(g, &RadiusPolicy::uniform(radius), Material::default());
        model.pinned = vec![true, true];
        model.supports = vec![pin(0), pin(1), Support { node: 2, fixed: [false, false, true, false, false, false], value: [0.0; 6] }];
        model.loads.push(NodeLoad { node: 2, force: Vec3::new(0.0, -1.0, 0.0), moment: Vec3::zeros() });
        model
    }

    #[test]
    fn two_bar_axial_force_and_capacity() {
        let model = two_bar(0.005);
        let sol = frame_fem(&model).unwrap();
        let want = 1.0 / 2f64.sqrt();
        for r in &sol.elements {
            assert!((r.axial_force + want).abs() <= 1e-6 * want);
            assert_eq!(r.bending_stress, 0.0);
        }
        let cap = capacity(&model, &sol).unwrap();
        let want_l = 48e6 * model.area(0) * 2f64.sqrt();
        assert!((cap.load_factor - want_l).abs() <= 1e-9 * want_l);
        // Linearity: scaled loads scale stresses exactly.
        let mut scaled = model.clone();
        scaled.loads[0].force *= cap.load_factor;
        let s2 = frame_fem(&scaled).unwrap();
        let peak = s2.max_stress().unwrap().1;
        assert!((peak - 48e6).abs() <= 1e-9 * 48e6);
        // Four times the area carries at least four times the load.
        let thick = two_bar(0.01);
        let c2 = capacity(&thick, &frame_fem(&thick).unwrap()).unwrap();
        assert!(c2.load_factor >= 4.0 * cap.load_factor * (1.0 - 1e-12));
    }

    #[test]
    fn zero_load_gives_zero_response() {
        let mut model = two_bar(0.005);
        model.loads.clear();
        let sol = frame_fem(&model).unwrap();
        assert!(sol.displacement.iter().all(|d| d.norm() == 0.0));
        assert!(matches!(capacity(&model, &sol), Err(Error::ZeroStress)));
    }

    #[test]
    fn mechanism_is_reported() {
        // Collinear pin-jointed bars cannot carry a transverse load.
        let g = graph(&[[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], &[[0, 1], [1, 2]]);
        let mut model = TrussModel::new(g, &RadiusPolicy::uniform(0.01), Material::default());
        model.pinned = vec![true, true];
        model.supports = vec![pin(0), pin(2)];
        model.loads.push(NodeLoad { node: 1, force: Vec3::new(0.0, -1.0, 0.0), moment: Vec3::zeros() });
        match frame_fem(&model) {
            Err(Error::Mechanism { nodes }) => assert_eq!(nodes, vec![1]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn needs_six_constraints() {
        let mut model = two_bar(0.005);
        model.supports = vec![pin(0)];
        assert!(matches!(frame_fem(&model), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn portal_frame_equilibrium() {
        let g = graph(&[[0.0; 3], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.5, 1.0, 0.7]], &[[0, 1], [1, 2], [2, 3], [1, 4], [2, 4]]);
        let mut model = TrussModel::new(g, &RadiusPolicy::uniform(0.01), Material::default());
        model.supports = vec![clamp(0), clamp(3)];
        model.loads = vec![
            NodeLoad { node: 4, force: Vec3::new(3.0, -10.0, 2.0), moment: Vec3::zeros() },
            NodeLoad { node: 1, force: Vec3::new(5.0, 0.0, 0.0), moment: Vec3::zeros() },
        ];
        let (sol, report) = verify(&model).unwrap();
        assert!(sol.residual <= 1e-8);
        assert!((report.total_load + report.total_reaction).norm() <= 1e-8 * report.total_load.norm());
        let (e, s) = sol.max_stress().unwrap();
        assert_eq!(report.critical_element, e);
        assert!((report.elements[e].utilization - s / 48e6).abs() < 1e-15);
    }

    #[test]
    fn boundary_condition_mapping() {
        use crate::fem::{Dirichlet, Neumann};
        use crate::mesh::generate::box_mesh;
        let mesh = box_mesh(Vec3::zeros(), Vec3::new(1.0, 0.2, 0.2), [5, 1, 1]).unwrap();
        let g = graph(&[[0.0, 0.1, 0.1], [0.5, 0.1, 0.1], [1.0, 0.1, 0.1], [3.0, 3.0, 3.0]], &[[0, 1], [1, 2]]);
        let bcs = BoundaryConditions {
            dirichlet: vec![Dirichlet::fixed(Selector::Box { min: [-1.0, -1.0, -1.0], max: [0.0, 1.0, 1.0] })],
            neumann: vec![Neumann { selector: Selector::Box { min: [1.0, -1.0, -1.0], max: [2.0, 1.0, 1.0] }, force: [0.0, 0.0, -7.0] }],
            gravity: Some([0.0, 0.0, -9.81]),
        };
        let (supports, loads) = map_boundary_conditions(&g, &mesh, &bcs).unwrap();
        assert_eq!(supports.len(), 1);
        assert_eq!(supports[0].node, 0);
        assert_eq!(supports[0].fixed, [true; 6]);
        assert_eq!(loads.len(), 1);
        assert_eq!(loads[0].node, 2);
        assert!((loads[0].force - Vec3::new(0.0, 0.0, -7.0)).norm() < 1e-12);
    }
}
