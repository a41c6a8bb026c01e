//! Assigns priority groups and prints the weighted census by rank.

use vaxalloc::pipeline::{prepare, RunConfig};
use vaxalloc::tiers::tier_census;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = prepare(&RunConfig::synthetic(42, 1_000_000))?;
    for d in &p.tiering.diagnostics {
        println!("note: {d}");
    }
    let rows = tier_census(
        &p.tiering.persons,
        &p.tiering.assignments,
        &p.augmented_high_adi(),
    );
    println!("{:<8} {:>12} {:>8} {:>8} {:>6}", "rank", "mass", "B+I", "hi-ADI", "age");
    let pct = |v: Option<f64>| v.map_or("-".into(), |v| format!("{:.1}%", 100.0 * v));
    for r in rows {
        println!(
            "{:<8} {:>12.0} {:>8} {:>8} {:>6}",
            r.rank.to_string(),
            r.weighted_mass,
            pct(r.share_black_indigenous),
            pct(r.share_high_adi),
            r.mean_age.map_or("-".into(), |a| format!("{a:.1}")),
        );
    }
    println!("\ngroup               realised    expected");
    for g in &p.tiering.reports {
        if g.external_size.is_some() {
            println!("{:<20} {:>8.0} {:>11.0}", g.id, g.realized_mass, g.expected_mass());
        }
    }
    Ok(())
}
