//! Simplify an extracted truss and write printable geometry.
//!
//! `cargo run --example simplify_and_export -- <out dir>`

use std::path::PathBuf;

use michell::extract::{extract_truss, perturb_parametrization};
use michell::mesh::generate::ball_mesh;
use michell::mesh::{feature_edges, Topology, Vec3};
use michell::param::Parametrization;
use michell::post::{emit_geometry, simplify, write_line_obj, write_obj, write_ply, GeometryConfig, RadiusPolicy, SimplifyConfig};

fn main() -> michell::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "truss_out".into()));
    std::fs::create_dir_all(&out)?;
    let mesh = ball_mesh(0.05, 8)?;
    let topo = Topology::new(&mesh);
    // Slightly oblique grid with 1 cm spacing.
    let tilde: Vec<Vec3> = mesh.vertices.iter().map(|v| Vec3::new(v.x + 0.2 * v.y, v.y, v.z - 0.1 * v.x) * 100.0 + Vec3::repeat(10.0)).collect();
    let p = Parametrization { phi: tilde.clone(), phi_tilde: Some(tilde), beta: 1.0, rho: 1.0, scale: 1.0, residuals: [0.0; 3] };
    let p = perturb_parametrization(p, &topo, 1e-7)?;
    let (raw, _) = extract_truss(&mesh, &topo, p.tilde()?, &feature_edges(&mesh.boundary, 0.5)?)?;
    let (g, report) = simplify(&raw, &SimplifyConfig::default())?;
    println!("raw {} nodes / {} elements -> {} / {} ({report:?})", raw.nodes.len(), raw.elements.len(), g.nodes.len(), g.elements.len());
    let cfg = GeometryConfig { radius: RadiusPolicy::uniform(8e-4), sides: 8 };
    let (tri, geo) = emit_geometry(&g, &cfg)?;
    write_obj(&tri, &out.join("truss.obj"))?;
    write_ply(&tri, &out.join("truss.ply"))?;
    write_line_obj(&g, &out.join("graph_lines.obj"))?;
    println!("{} triangles ({geo:?}) written to {}", tri.triangles.len(), out.display());
    Ok(())
}
