//! Fit a smooth stress-aligned frame field to the bending bar and report the
//! annealing history.

use michell::fem::{cauchy_stress, solve_static, stress_spd};
use michell::fixtures::bending_bar;
use michell::frame::{fit_frame_field, FitConfig};
use michell::mesh::build_operators;
use michell::post::alignment::angle_to_eigenvectors;

fn main() -> michell::Result<()> {
    env_logger::init();
    let f = bending_bar()?;
    let sol = solve_static(&f.mesh, &f.material, &f.bcs)?;
    let stress = stress_spd(cauchy_stress(&f.mesh, &f.material, &sol.displacement)?)?;
    let ops = build_operators(&f.mesh)?;
    let field = fit_frame_field(&f.mesh, &ops, &stress, &FitConfig::default())?;
    for (i, r) in field.alpha_history.iter().enumerate() {
        println!("{i:>2}  alpha {:>10.3e}  data {:>12.6}  inner {:>4}  {:?}", r.alpha, r.data_energy, r.inner_iterations, r.termination);
    }
    for k in 0..3 {
        let aligned = (0..f.mesh.n_tets())
            .filter(|&t| {
                let r = field.frames[t].column(k).into_owned();
                angle_to_eigenvectors(&stress.eigenvectors[t], &stress.eigenvalues[t], &r) <= 15.0
            })
            .count();
        println!("frame axis {} within 15 deg of a stress direction in {aligned} of {} tets", k + 1, f.mesh.n_tets());
    }
    println!("orthonormality error {:.2e}", field.orthonormality_error());
    Ok(())
}
