//! Write the bundled fixtures as mesh + config pairs for the `michell` CLI.
//!
//! `cargo run --example write_fixtures -- <dir>`

use std::path::PathBuf;

use michell::fixtures::{bending_bar, uniaxial_bar};

fn main() -> michell::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    for f in [uniaxial_bar()?, bending_bar()?] {
        let path = f.write(&dir)?;
        println!("{}: {} tets -> {}", f.name, f.mesh.n_tets(), path.display());
    }
    Ok(())
}
