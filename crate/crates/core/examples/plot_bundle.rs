//! Runs the full pipeline into a directory and renders the SVG charts.
//!
//! cargo run --example plot_bundle -- [out_dir]

use vaxalloc::pipeline::{cmd_plot, cmd_run, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "bundle".into());
    let mut cfg = RunConfig::synthetic(7, 200_000);
    cfg.supply_grid = "uniform:100".into();
    cfg.output_dir = Some(out.clone());

    let manifest = cmd_run(&cfg)?;
    println!("config hash {}", &manifest.config_sha256[..16]);
    for (file, digest) in &manifest.files {
        println!("  {file:<36} {}", &digest[..12]);
    }
    for svg in cmd_plot(out.as_ref())? {
        println!("  {}", svg.display());
    }
    Ok(())
}
