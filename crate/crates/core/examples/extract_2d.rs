//! Integer isocurves of a two-parameter map on a planar triangle mesh.

use michell::extract::{extract_2d, perturb_values, Family, Provenance, TriangleComplex};

fn main() -> michell::Result<()> {
    // Unit square, 5 × 5 quads split into triangles.
    let n = 5;
    let mut points = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            points.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut tris = Vec::new();
    for j in 0..n {
        for i in 0..n {
            tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let complex = TriangleComplex::planar(&points, tris);
    // A sheared grid: u = 3x + y, v = 3y.
    let raw: Vec<[f64; 2]> = points.iter().map(|p| [3.0 * p[0] + p[1], 3.0 * p[1]]).collect();
    let params = perturb_values(&raw, &complex.vertex_neighbors(), 1e-7)?;
    let (g, report) = extract_2d(&complex, &params)?;
    println!("{} nodes, {} elements, curves per family {:?}, closed loops {}", g.nodes.len(), g.elements.len(), report.curves, report.closed_loops);
    for n in g.nodes.iter().filter(|n| n.provenance == Provenance::InteriorGrid) {
        println!("grid node ({:.4}, {:.4}) at parameters ({:.0}, {:.0})", n.position.x, n.position.y, n.params.x, n.params.y);
    }
    for fam in [Family::Iso1, Family::Iso2, Family::Boundary] {
        println!("{fam:?} elements: {}", g.elements.iter().filter(|e| e.family == fam).count());
    }
    Ok(())
}
