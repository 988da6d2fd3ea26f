use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use michell::pipeline::{run_stage, Stage};

/// Stress-aligned truss design pipeline.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Pipeline configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// fea, frames, param, extract, simplify, geometry, verify or pipeline.
    #[arg(long, default_value = "pipeline")]
    stage: String,
    /// Output directory; overrides the one named in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// error, warn, info, debug or trace.
    #[arg(long, default_value = "info")]
    log_level: log::LevelFilter,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    env_logger::Builder::new().filter_level(args.log_level).format_timestamp(None).init();
    let result = args.stage.parse::<Stage>().and_then(|stage| run_stage(stage, &args.config, args.out));
    match result {
        Ok(runner) => {
            log::info!("artifacts in {}", runner.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
