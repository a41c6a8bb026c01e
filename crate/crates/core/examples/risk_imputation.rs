//! Builds a high-risk probability table from a survey and imputes flags.
//!
//! cargo run --example risk_imputation -- [survey.csv]

use std::path::Path;

use vaxalloc::population::{generate_synthetic, SyntheticConfig};
use vaxalloc::risk::{
    age_bin, build_risk_table, generate_survey, impute_high_risk, load_risk_survey,
    lookup_coverage, SyntheticSurveyConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let survey = match std::env::args().nth(1) {
        Some(p) => load_risk_survey(Path::new(&p))?,
        None => generate_survey(&SyntheticSurveyConfig::default()),
    };
    let table = build_risk_table(&survey)?;
    println!("{} respondents, {} cells", survey.len(), table.cells().count());

    let pop = generate_synthetic(&SyntheticConfig {
        population_size: 200_000,
        ..SyntheticConfig::default()
    })?;
    let flags = impute_high_risk(&pop, &table, 1);

    let total = pop.weighted_total();
    for (how, mass) in lookup_coverage(&pop, &table) {
        println!("lookup {how:<18} {:>6.2}% of mass", 100.0 * mass / total);
    }
    let mut by_bin = [(0.0f64, 0.0f64); 14];
    for (p, &f) in pop.persons().iter().zip(&flags) {
        if p.age < 18 {
            continue;
        }
        let b = &mut by_bin[age_bin(p.age)];
        b.1 += p.weight;
        if f {
            b.0 += p.weight;
        }
    }
    println!("age bin  high-risk share");
    for (i, (hit, all)) in by_bin.iter().enumerate() {
        if *all > 0.0 {
            println!("{i:>7}  {:.3}", hit / all);
        }
    }
    Ok(())
}
