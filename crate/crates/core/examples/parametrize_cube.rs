//! Parametrize a jittered cube with frames rotated about z and show how the
//! texture-coordinate gradients follow the frames.

use michell::mesh::generate::{box_mesh, jitter_vertices};
use michell::mesh::{build_operators, Vec3};
use michell::param::{normalize_and_scale, objective, solve_parametrization};
use nalgebra::Rotation3;

fn main() -> michell::Result<()> {
    let mesh = jitter_vertices(&box_mesh(Vec3::zeros(), Vec3::repeat(1.0), [6, 6, 6])?, 0.2, 1)?;
    let ops = build_operators(&mesh)?;
    let frames: Vec<_> = (0..mesh.n_tets())
        .map(|t| Rotation3::from_axis_angle(&Vec3::z_axis(), 0.6 * mesh.centroid(t).x).into_inner())
        .collect();
    for beta in [0.1, 1.0, 10.0] {
        let p = solve_parametrization(&mesh, &ops, &frames, beta)?;
        let e = objective(&mesh, &ops, &frames, beta, &p.phi);
        let p = normalize_and_scale(p, 8.0)?;
        let tilde = p.tilde()?;
        let u: Vec<f64> = tilde.iter().map(|v| v.x).collect();
        let grads = ops.gradient(&mesh, &u);
        let mean_angle = grads
            .iter()
            .zip(&frames)
            .map(|(g, r)| g.normalize().dot(&r.column(0)).abs().min(1.0).acos().to_degrees())
            .sum::<f64>()
            / grads.len() as f64;
        println!("beta {beta:>5}: objective {e:.4e}, scale {:.4}, mean angle between grad u and r1 {mean_angle:.2} deg", p.scale);
    }
    Ok(())
}
