//! Cumulative recipient shares as supply grows, for plain priority and two
//! high-ADI reserves.

use vaxalloc::allocation::{sweep_supply, Cell, Eligibility, ReservePolicy, SupplyGrid};
use vaxalloc::pipeline::{prepare, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = prepare(&RunConfig::synthetic(42, 1_000_000))?;
    let s = &p.strata;
    let grid = SupplyGrid::Uniform(20).resolve(s.total(), s.total())?;
    let policies = [
        ReservePolicy::cdc(),
        ReservePolicy::new(0.2, Eligibility::HighAdi)?,
        ReservePolicy::new(0.4, Eligibility::HighAdi)?,
    ];
    let sweeps = policies
        .iter()
        .map(|pol| sweep_supply(s, pol, &grid))
        .collect::<Result<Vec<_>, _>>()?;

    println!(
        "population B+I share {:.4}, tier 1 ends at {:.0}",
        s.population_share(Cell::black_or_indigenous),
        s.tier1_mass()
    );
    print!("{:>10}", "supply");
    for pol in &policies {
        print!(" {:>14}", pol.label());
    }
    println!();
    for (i, x) in grid.iter().enumerate() {
        print!("{x:>10.0}");
        for sw in &sweeps {
            let share = sw[i].statistics(s).share_black_indigenous.unwrap_or(0.0);
            print!(" {share:>14.4}");
        }
        println!();
    }
    Ok(())
}
