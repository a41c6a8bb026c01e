//! Marginal high-ADI share of the next dose and the supply at which each
//! reserve runs out of eligible persons.

use vaxalloc::allocation::{exhaustion_supply, marginal_share, Eligibility, ReservePolicy};
use vaxalloc::pipeline::{prepare, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = prepare(&RunConfig::synthetic(42, 1_000_000))?;
    let s = &p.strata;
    let t1 = s.tier1_mass();
    let probes = [0.5 * t1, t1 + 0.05 * (s.total() - t1), t1 + 0.3 * (s.total() - t1)];

    for r in [0.0, 0.2, 0.4] {
        let pol = ReservePolicy::new(r, Eligibility::HighAdi)?;
        print!("r = {r:.1}:");
        for x in probes {
            print!("  {:.3} at {x:.0}", marginal_share(s, x, &pol, |c| c.high_adi)?);
        }
        if r > 0.0 {
            print!("  | exhausted at {:.0}", exhaustion_supply(s, &pol)?);
        }
        println!();
    }

    // the same identity on a direct Black and Indigenous reserve
    let race = ReservePolicy::new(0.05, Eligibility::BlackOrIndigenous)?;
    println!(
        "5% B+I reserve: marginal B+I share {:.3} just past tier 1",
        marginal_share(s, t1 + 1.0, &race, |c| c.black_or_indigenous())?
    );
    Ok(())
}
