//! State fair-share index: a state's share of vaccines over its share of
//! population, cases or deaths.
//!
//! cargo run --example fair_share -- [state_outcomes.csv]

use vaxalloc::allocation::{allocate, Eligibility, ReservePolicy};
use vaxalloc::metrics::{state_fair_share_index, Benchmark, FairShareIndex, StateOutcomeTable};
use vaxalloc::pipeline::{prepare, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = prepare(&RunConfig::synthetic(42, 1_000_000))?;
    let s = &p.strata;
    let mut outcomes = StateOutcomeTable::from_population(&p.population);
    let mut benchmarks = vec![Benchmark::Population];
    if let Some(path) = std::env::args().nth(1) {
        outcomes.load_outcomes(path.as_ref())?;
        benchmarks.extend([Benchmark::Cases, Benchmark::Deaths]);
    }

    // early supply is concentrated in the priority ranks, so states differ
    let supply = 0.1 * s.total();
    for pol in [ReservePolicy::cdc(), ReservePolicy::new(0.4, Eligibility::HighAdi)?] {
        let res = allocate(s, supply, &pol)?;
        for b in &benchmarks {
            let rows = state_fair_share_index(s, &res, &outcomes, *b);
            let finite: Vec<(&str, f64)> = rows
                .iter()
                .filter_map(|r| match r.index {
                    FairShareIndex::Finite(v) => Some((r.state.as_str(), v)),
                    _ => None,
                })
                .collect();
            let lo = finite.iter().min_by(|a, b| a.1.total_cmp(&b.1));
            let hi = finite.iter().max_by(|a, b| a.1.total_cmp(&b.1));
            if let (Some(lo), Some(hi)) = (lo, hi) {
                println!(
                    "{:<14} {:<10} lowest {} {:.3}, highest {} {:.3}",
                    pol.label(),
                    b.as_str(),
                    lo.0,
                    lo.1,
                    hi.0,
                    hi.1
                );
            }
        }
    }
    Ok(())
}
