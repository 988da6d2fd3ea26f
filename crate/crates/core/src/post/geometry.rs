//! Cylinder-and-sphere geometry for a truss graph, and file writers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{Family, TrussGraph};
use crate::mesh::Vec3;

/// Elements shorter than this are not emitted (m).
pub const MIN_ELEMENT_LENGTH: f64 = 1e-12;
/// Triangles in each node sphere (once-subdivided octahedron).
pub const SPHERE_TRIANGLES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadiusPolicy {
    /// m
    pub default: f64,
    pub per_family: BTreeMap<Family, f64>,
}

impl Default for RadiusPolicy {
    fn default() -> Self {
        Self { default: 1e-3, per_family: BTreeMap::new() }
    }
}

impl RadiusPolicy {
    pub fn uniform(radius: f64) -> Self {
        Self { default: radius, per_family: BTreeMap::new() }
    }

    pub fn radius(&self, family: Family) -> f64 {
        self.per_family.get(&family).copied().unwrap_or(self.default)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |r: f64| r > 0.0 && r.is_finite();
        if !ok(self.default) || !self.per_family.values().all(|&r| ok(r)) {
            return Err(Error::Config("radii must be positive and finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryConfig {
    pub radius: RadiusPolicy,
    /// Facets per cylinder.
    pub sides: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { radius: RadiusPolicy::default(), sides: 8 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v))))
    }

    fn append(&mut self, verts: &[Vec3], tris: &[[usize; 3]]) {
        let base = self.vertices.len();
        self.vertices.extend_from_slice(verts);
        self.triangles.extend(tris.iter().map(|t| t.map(|i| (base + i) as u32)));
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub cylinders: usize,
    pub spheres: usize,
    pub skipped_zero_length: usize,
}

/// Triangles in one capped prism.
pub fn prism_triangles(sides: usize) -> usize {
    2 * sides + 2 * (sides - 2)
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

/// Closed prism around the segment `a → b`, outward oriented.
pub fn prism(a: &Vec3, b: &Vec3, radius: f64, sides: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let d = (b - a).normalize();
    let u = perpendicular(&d);
    let v = d.cross(&u);
    let mut verts = Vec::with_capacity(2 * sides);
    for end in [a, b] {
        for i in 0..sides {
            let t = std::f64::consts::TAU * i as f64 / sides as f64;
            verts.push(end + (u * t.cos() + v * t.sin()) * radius);
        }
    }
    let s = sides;
    let mut tris = Vec::with_capacity(prism_triangles(s));
    for i in 0..s {
        let j = (i + 1) % s;
        tris.push([i, j, s + j]);
        tris.push([i, s + j, s + i]);
    }
    for i in 1..s - 1 {
        tris.push([0, i + 1, i]);
        tris.push([s, s + i, s + i + 1]);
    }
    (verts, tris)
}

/// Once-subdivided octahedron, outward oriented.
pub fn sphere(center: &Vec3, radius: f64) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let mut verts = vec![Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y(), Vec3::z(), -Vec3::z()];
    let faces = [[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
    let mut mid: BTreeMap<[usize; 2], usize> = BTreeMap::new();
    let mut midpoint = |verts: &mut Vec<Vec3>, a: usize, b: usize| {
        *mid.entry([a.min(b), a.max(b)]).or_insert_with(|| {
            verts.push((verts[a] + verts[b]).normalize());
            verts.len() - 1
        })
    };
    let mut tris = Vec::with_capacity(SPHERE_TRIANGLES);
    for [a, b, c] in faces {
        let ab = midpoint(&mut verts, a, b);
        let bc = midpoint(&mut verts, b, c);
        let ca = midpoint(&mut verts, c, a);
        tris.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    (verts.into_iter().map(|p| center + p * radius).collect(), tris)
}

/// One prism per element and one sphere per node with elements, sized to
/// the largest incident radius. Primitives overlap; no boolean union.
pub fn emit_geometry(g: &TrussGraph, config: &GeometryConfig) -> Result<(TriMesh, GeometryReport)> {
    config.radius.validate()?;
    if config.sides < 3 {
        return Err(Error::Config(format!("cylinder sides {} < 3", config.sides)));
    }
    let mut mesh = TriMesh::default();
    let mut report = GeometryReport::default();
    let mut node_radius = vec![0.0f64; g.nodes.len()];
    for (i, e) in g.elements.iter().enumerate() {
        let [a, b] = e.nodes;
        let r = config.radius.radius(e.family);
        if g.element_length(i) < MIN_ELEMENT_LENGTH {
            report.skipped_zero_length += 1;
            continue;
        }
        let (v, t) = prism(&g.nodes[a].position, &g.nodes[b].position, r, config.sides);
        mesh.append(&v, &t);
        report.cylinders += 1;
        node_radius[a] = node_radius[a].max(r);
        node_radius[b] = node_radius[b].max(r);
    }
    if report.skipped_zero_length > 0 {
        log::warn!("skipped {} zero-length elements", report.skipped_zero_length);
    }
    for (n, &r) in g.nodes.iter().zip(&node_radius) {
        if r > 0.0 {
            let (v, t) = sphere(&n.position, r);
            mesh.append(&v, &t);
            report.spheres += 1;
        }
    }
    Ok((mesh, report))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_obj(mesh: &TriMesh, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}

/// Binary little-endian PLY with float32 vertices.
pub fn write_ply(mesh: &TriMesh, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nelement face {}\nproperty list uchar uint vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.triangles.len()
    )?;
    for v in &mesh.vertices {
        for c in [v.x, v.y, v.z] {
            w.write_all(&(c as f32).to_le_bytes())?;
        }
    }
    for t in &mesh.triangles {
        w.write_all(&[3u8])?;
        for i in t {
            w.write_all(&i.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Graph as OBJ line segments, one group per family.
pub fn write_line_obj(g: &TrussGraph, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for n in &g.nodes {
        writeln!(w, "v {} {} {}", n.position.x, n.position.y, n.position.z)?;
    }
    let mut by_family: BTreeMap<Family, Vec<[usize; 2]>> = BTreeMap::new();
    for e in &g.elements {
        by_family.entry(e.family).or_default().push(e.nodes);
    }
    for (family, list) in by_family {
        writeln!(w, "g {}", family.name())?;
        for [a, b] in list {
            writeln!(w, "l {} {}", a + 1, b + 1)?;
        }
    }
    w.flush()?;
    Ok(())
}
