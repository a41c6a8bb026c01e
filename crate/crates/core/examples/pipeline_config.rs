//! Reads a run configuration from TOML, validates it and prints what it
//! resolves to.
//!
//! cargo run --example pipeline_config -- [config.toml]

use std::path::Path;

use vaxalloc::pipeline::RunConfig;

const EXAMPLE: &str = r#"
seed = 2021
supply_grid = "list:50000,100000,250000"
policies = ["cdc", "r=0.1,eligibility=high_adi", "r=0.05,eligibility=black_or_indigenous"]

[synthetic]
population_size = 250000
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => RunConfig::load(Path::new(&path))?,
        None => RunConfig::from_toml(EXAMPLE, Path::new("."))?,
    };
    cfg.validate()?;
    println!("seed {} hash {}", cfg.seed, cfg.hash());
    for pol in cfg.parsed_policies()? {
        println!("policy {}", pol.label());
    }
    println!("grid {:?}", cfg.parsed_grid()?);

    // the output directory does not enter the hash
    let mut moved = cfg.clone();
    moved.output_dir = Some("elsewhere".into());
    assert_eq!(moved.hash(), cfg.hash());
    Ok(())
}
