//! Linear elastic analysis of a bar under uniform end traction: every tet
//! carries the same uniaxial stress.

use michell::fem::{cauchy_stress, solve_static, stress_spd};
use michell::fixtures::{uniaxial_axis, uniaxial_bar};

fn main() -> michell::Result<()> {
    let f = uniaxial_bar()?;
    let sol = solve_static(&f.mesh, &f.material, &f.bcs)?;
    let stress = stress_spd(cauchy_stress(&f.mesh, &f.material, &sol.displacement)?)?;
    let axis = uniaxial_axis();
    let sigma_axis: Vec<f64> = stress.sigma.iter().map(|s| axis.dot(&(s * axis))).collect();
    let (lo, hi) = sigma_axis.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    println!("{} vertices, {} tets, solver residual {:.2e}", f.mesh.n_vertices(), f.mesh.n_tets(), sol.residual);
    println!("axial stress range [{lo:.6e}, {hi:.6e}] Pa (expected {:.6e})", 100.0 / (0.04 * 0.04));
    println!("largest displacement {:.3e} m", sol.displacement.iter().map(|d| d.norm()).fold(0.0, f64::max));
    let plus = stress.spd()?;
    println!("sigma+ of tet 0:\n{:.3}", plus[0]);
    Ok(())
}
