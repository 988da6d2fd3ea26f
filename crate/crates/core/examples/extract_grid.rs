//! Extract the truss of an affine parametrization of a cube and check the
//! interior nodes against the integer grid.

use michell::extract::{extract_truss, perturb_parametrization, Provenance};
use michell::mesh::generate::{box_mesh, jitter_vertices};
use michell::mesh::{feature_edges, Topology, Vec3};
use michell::param::Parametrization;

fn main() -> michell::Result<()> {
    let mesh = jitter_vertices(&box_mesh(Vec3::zeros(), Vec3::repeat(1.0), [6, 6, 6])?, 0.25, 3)?;
    let topo = Topology::new(&mesh);
    let tilde: Vec<Vec3> = mesh.vertices.iter().map(|v| v * 4.0).collect();
    let p = Parametrization { phi: tilde.clone(), phi_tilde: Some(tilde), beta: 1.0, rho: 4.0, scale: 1.0, residuals: [0.0; 3] };
    let p = perturb_parametrization(p, &topo, 1e-7)?;
    let features = feature_edges(&mesh.boundary, 0.5)?;
    let (g, report) = extract_truss(&mesh, &topo, p.tilde()?, &features)?;
    println!("{} nodes, {} elements, {} components, {report:?}", g.nodes.len(), g.elements.len(), g.component_count());
    for prov in [Provenance::InteriorGrid, Provenance::FaceHit, Provenance::EdgeHit, Provenance::Boundary, Provenance::Feature] {
        println!("{prov:?}: {}", g.nodes.iter().filter(|n| n.provenance == prov).count());
    }
    let worst = g
        .nodes
        .iter()
        .filter(|n| n.provenance == Provenance::InteriorGrid)
        .map(|n| (n.position - n.params.map(|c| c.round()) / 4.0).norm())
        .fold(0.0, f64::max);
    println!("largest distance of an interior grid node from its integer preimage: {worst:.2e} m");
    Ok(())
}
