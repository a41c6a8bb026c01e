//! Share of COVID-19 deaths borne by a set of race groups, from population
//! shares and crude or age-adjusted death rates.
//!
//! cargo run --example death_share -- race_deaths.csv
//!
//! The CSV has columns race,population_share,death_rate,age_adjusted_death_rate.
//! Without a file the example uses an equal-rate table, where every group's
//! death share is its population share.

use vaxalloc::metrics::{death_share_estimate, DeathRace, RaceDeathRow, RaceDeathTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = match std::env::args().nth(1) {
        Some(path) => RaceDeathTable::load(path.as_ref())?,
        None => {
            // illustrative shares, not published figures
            RaceDeathTable::new(DeathRace::ALL.map(|r| {
                let share = match r {
                    DeathRace::White => 0.60,
                    DeathRace::Latino => 0.19,
                    DeathRace::Black => 0.13,
                    DeathRace::Asian => 0.06,
                    DeathRace::Indigenous | DeathRace::PacificIslander => 0.01,
                };
                (
                    r,
                    RaceDeathRow {
                        population_share: share,
                        death_rate: 100.0,
                        age_adjusted_death_rate: 100.0,
                    },
                )
            }))?
        }
    };

    let bi = [DeathRace::Black, DeathRace::Indigenous];
    for race in DeathRace::ALL {
        let crude = death_share_estimate(&table, &[race], false)?;
        let adj = death_share_estimate(&table, &[race], true)?;
        println!(
            "{:<18} population {:.3}  deaths {:.3}  age-adjusted {:.3}",
            race.as_str(),
            table.get(race).population_share,
            crude,
            adj
        );
    }
    println!(
        "black + indigenous deaths {:.3} (age-adjusted {:.3})",
        death_share_estimate(&table, &bi, false)?,
        death_share_estimate(&table, &bi, true)?
    );
    Ok(())
}
