use std::io::Write;

use super::assign::TierAssignment;
use super::schedule::{Rank, RANK_COUNT};
use crate::population::{PersonRecord, Race, Sex};

pub const CENSUS_COLUMNS: [&str; 7] = [
    "tier",
    "subtier",
    "weighted_mass",
    "share_black_indigenous",
    "share_high_adi",
    "mean_age",
    "share_female",
];

/// Weighted composition of one rank. Shares are `None` when the rank is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusRow {
    pub rank: Rank,
    pub weighted_mass: f64,
    pub share_black_indigenous: Option<f64>,
    pub share_high_adi: Option<f64>,
    pub mean_age: Option<f64>,
    pub share_female: Option<f64>,
}

/// One row per rank, tier 1 subtiers first. `high_adi` is indexed like
/// `persons`.
pub fn tier_census(
    persons: &[PersonRecord],
    assignments: &[TierAssignment],
    high_adi: &[bool],
) -> Vec<CensusRow> {
    #[derive(Default, Clone, Copy)]
    struct Acc {
        mass: f64,
        bi: f64,
        adi: f64,
        age: f64,
        female: f64,
    }
    let mut acc = [Acc::default(); RANK_COUNT];
    for ((p, a), &h) in persons.iter().zip(assignments).zip(high_adi) {
        let c = &mut acc[a.highest.index()];
        let w = p.weight;
        c.mass += w;
        if matches!(p.race, Race::Black | Race::Indigenous) {
            c.bi += w;
        }
        if h {
            c.adi += w;
        }
        c.age += w * f64::from(p.age);
        if p.sex == Sex::Female {
            c.female += w;
        }
    }
    Rank::all()
        .map(|rank| {
            let c = acc[rank.index()];
            let share = |x: f64| (c.mass > 0.0).then(|| x / c.mass);
            CensusRow {
                rank,
                weighted_mass: c.mass,
                share_black_indigenous: share(c.bi),
                share_high_adi: share(c.adi),
                mean_age: share(c.age),
                share_female: share(c.female),
            }
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_census<W: Write>(out: W, rows: &[CensusRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CENSUS_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.rank.tier.to_string(),
            r.rank.subtier.map(|s| s.to_string()).unwrap_or_default(),
            r.weighted_mass.to_string(),
            opt(r.share_black_indigenous),
            opt(r.share_high_adi),
            opt(r.mean_age),
            opt(r.share_female),
        ])?;
    }
    w.flush()?;
    Ok(())
}
