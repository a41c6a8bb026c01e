use std::io::Write;

use rayon::prelude::*;

use super::{compute_raw_adi, derive_family_components, AdiConfig, AdiError, Family};
use crate::population::Population;

pub const HIGH_ADI_MIN_DECILE: u8 = 8;

pub const ADI_COLUMNS: [&str; 4] = ["family_id", "raw_score", "decile", "high_adi"];

/// The part of a family that falls in one decile. A family is split only
/// when a decile cut passes through it.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiAssignment {
    pub family_id: String,
    pub raw_score: f64,
    pub decile: Option<u8>,
    pub high_adi: bool,
    /// Weighted mass of the members in this decile.
    pub mass: f64,
}

pub fn flag_high_adi(decile: Option<u8>) -> bool {
    decile.is_some_and(|d| d >= HIGH_ADI_MIN_DECILE)
}

/// Family assignments plus a per-person view.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiResult {
    pub families: Vec<Family>,
    /// Ordered by family, then decile.
    pub assignments: Vec<AdiAssignment>,
    /// Family index per person; `None` for group-quarters residents.
    pub person_family: Vec<Option<usize>>,
    pub person_deciles: Vec<Option<u8>>,
}

impl AdiResult {
    pub fn person_decile(&self, person: usize) -> Option<u8> {
        self.person_deciles[person]
    }

    pub fn person_high_adi(&self, person: usize) -> bool {
        flag_high_adi(self.person_deciles[person])
    }

    pub fn high_adi_flags(&self) -> Vec<bool> {
        (0..self.person_deciles.len())
            .map(|i| self.person_high_adi(i))
            .collect()
    }

    /// Weighted mass per decile, index 0 holding decile 1.
    pub fn decile_masses(&self) -> [f64; 10] {
        let mut out = [0.0; 10];
        for a in &self.assignments {
            if let Some(d) = a.decile {
                out[usize::from(d) - 1] += a.mass;
            }
        }
        out
    }
}

/// Ranks persons by `(family raw score, person id)` and cuts the cumulative
/// weighted mass into tenths. A person straddling a cut belongs wholly to
/// the lower decile: their decile is fixed by the mass preceding them.
pub fn assign_national_deciles(
    population: &Population,
    families: Vec<Family>,
    raw_scores: &[f64],
) -> Result<AdiResult, AdiError> {
    assert_eq!(families.len(), raw_scores.len(), "one score per family");
    let persons = population.persons();
    let mut person_family = vec![None; persons.len()];
    for (fi, f) in families.iter().enumerate() {
        for &m in &f.members {
            person_family[m] = Some(fi);
        }
    }
    let mut order: Vec<(usize, usize)> = families
        .iter()
        .enumerate()
        .flat_map(|(fi, f)| f.members.iter().map(move |&m| (fi, m)))
        .collect();
    let total = crate::population::neumaier_sum(order.iter().map(|&(_, m)| persons[m].weight));
    if !(total > 0.0) {
        return Err(AdiError::NoMass);
    }
    order.sort_by(|&(fa, a), &(fb, b)| {
        raw_scores[fa]
            .total_cmp(&raw_scores[fb])
            .then_with(|| persons[a].person_id.cmp(&persons[b].person_id))
    });

    let mut person_deciles = vec![None; persons.len()];
    let mut before = 0.0f64;
    for &(_, m) in &order {
        let d = ((before * 10.0 / total).floor() as i64 + 1).clamp(1, 10);
        person_deciles[m] = Some(d as u8);
        before += persons[m].weight;
    }

    let mut assignments = Vec::with_capacity(families.len());
    for (f, &score) in families.iter().zip(raw_scores) {
        let mut pieces: Vec<(u8, f64)> = Vec::with_capacity(1);
        for &m in &f.members {
            let d = person_deciles[m].expect("family member has a decile");
            match pieces.iter_mut().find(|(pd, _)| *pd == d) {
                Some(p) => p.1 += persons[m].weight,
                None => pieces.push((d, persons[m].weight)),
            }
        }
        pieces.sort_by_key(|p| p.0);
        assignments.extend(pieces.into_iter().map(|(d, mass)| AdiAssignment {
            family_id: f.id().to_owned(),
            raw_score: score,
            decile: Some(d),
            high_adi: flag_high_adi(Some(d)),
            mass,
        }));
    }
    Ok(AdiResult {
        families,
        assignments,
        person_family,
        person_deciles,
    })
}

/// Components, raw scores and deciles in one pass.
pub fn compute_adi(population: &Population, cfg: &AdiConfig) -> Result<AdiResult, AdiError> {
    let families = derive_family_components(population, cfg)?;
    let scores: Vec<f64> = families
        .par_iter()
        .map(|f| compute_raw_adi(&f.components, &cfg.coefficients))
        .collect();
    assign_national_deciles(population, families, &scores)
}

/// Writes one row per family and decile, then one row per group-quarters
/// person with an empty score and decile.
pub fn write_assignments<W: Write>(
    out: W,
    result: &AdiResult,
    population: &Population,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ADI_COLUMNS)?;
    for a in &result.assignments {
        w.write_record([
            a.family_id.as_str(),
            &a.raw_score.to_string(),
            &a.decile.map(|d| d.to_string()).unwrap_or_default(),
            if a.high_adi { "1" } else { "0" },
        ])?;
    }
    for (i, p) in population.persons().iter().enumerate() {
        if result.person_family[i].is_none() {
            w.write_record([p.person_id.as_str(), "", "", "0"])?;
        }
    }
    w.flush()?;
    Ok(())
}
