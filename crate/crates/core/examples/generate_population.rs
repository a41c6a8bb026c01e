//! Draws a synthetic weighted population and writes it as CSV.
//!
//! cargo run --example generate_population -- [size] [out_dir]

use std::fs::File;
use std::path::PathBuf;

use vaxalloc::population::{generate_synthetic, write_households, write_persons, Race, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let size: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100_000);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "synthetic_population".into()));

    let cfg = SyntheticConfig {
        population_size: size,
        ..SyntheticConfig::default()
    };
    let pop = generate_synthetic(&cfg)?;
    let total = pop.weighted_total();
    println!("{} records representing {total:.0} persons", pop.len());
    for race in Race::ALL {
        let share = pop.weighted_total_where(|p| p.race == *race) / total;
        println!("  {:<17} {:>6.2}%", race.as_str(), 100.0 * share);
    }
    let gq = pop.weighted_total_where(|p| p.group_quarters) / total;
    println!("  group quarters    {:>6.2}%", 100.0 * gq);

    std::fs::create_dir_all(&out)?;
    write_persons(File::create(out.join("persons.csv"))?, pop.persons())?;
    write_households(File::create(out.join("households.csv"))?, pop.households().unwrap_or(&[]))?;
    println!("wrote {}", out.display());
    Ok(())
}
