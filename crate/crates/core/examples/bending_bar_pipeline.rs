//! Run every pipeline stage on the bending bar and summarize the logs.
//!
//! `cargo run --release --example bending_bar_pipeline -- <work dir>`

use std::path::PathBuf;

use michell::fixtures::bending_bar;
use michell::pipeline::{run_stage, Stage};

fn main() -> michell::Result<()> {
    env_logger::Builder::new().filter_level(log::LevelFilter::Info).init();
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "bending_bar_work".into()));
    let config = bending_bar()?.write(&dir)?;
    let runner = run_stage(Stage::Pipeline, &config, None)?;
    let read = |name: &str| -> michell::Result<serde_json::Value> {
        Ok(serde_json::from_str(&std::fs::read_to_string(runner.path(name))?)?)
    };
    let extract = read("extract.log.json")?;
    let simplified = read("simplify.log.json")?;
    let verify = read("verify.log.json")?;
    println!("raw truss: {} nodes, {} elements", extract["nodes"], extract["elements"]);
    println!("simplified: {} nodes, {} elements, total length {} m", simplified["nodes"], simplified["elements"], simplified["total_length"]);
    println!("interior elements within 15 deg of a stress direction: {}", extract["alignment"]["fraction"]);
    println!("first yield at {} x the applied load", verify["load_factor"]);
    println!("artifacts in {}", runner.out.display());
    Ok(())
}
