//! Family deprivation scores, national deciles and the high-ADI flag.

use vaxalloc::adi::{compute_adi, AdiConfig, Component};
use vaxalloc::population::{generate_synthetic, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pop = generate_synthetic(&SyntheticConfig {
        population_size: 300_000,
        ..SyntheticConfig::default()
    })?;
    let cfg = AdiConfig::default();
    let adi = compute_adi(&pop, &cfg)?;

    println!("{} families", adi.families.len());
    for (d, m) in adi.decile_masses().iter().enumerate() {
        println!("decile {:>2}: {m:>10.1}", d + 1);
    }
    let high: f64 = pop
        .persons()
        .iter()
        .enumerate()
        .filter(|(i, _)| adi.person_high_adi(*i))
        .map(|(_, p)| p.weight)
        .sum();
    println!("high-ADI share of all persons: {:.4}", high / pop.weighted_total());

    // the most deprived family and what drives its score
    let worst = adi
        .assignments
        .iter()
        .max_by(|a, b| a.raw_score.total_cmp(&b.raw_score))
        .expect("at least one family");
    let fam = adi.families.iter().find(|f| f.id() == worst.family_id).unwrap();
    println!("highest score {:.2} ({})", worst.raw_score, worst.family_id);
    for c in Component::ALL {
        if let Some(v) = fam.components.get(c) {
            let term = v * cfg.coefficients.get(c);
            if term.abs() > 0.5 {
                println!("  {:<24} {v:>10.1} -> {term:>7.2}", c.name());
            }
        }
    }
    Ok(())
}
