use std::collections::BTreeMap;

use super::{AllocationError, Eligibility};
use crate::population::{neumaier_sum, PersonRecord, Race, Sex, StateCode};
use crate::tiers::{Rank, RANK_COUNT, TIER1_RANKS};

/// Persons sharing a rank and every reporting attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub rank: Rank,
    pub high_adi: bool,
    pub race: Race,
    pub hispanic: bool,
    pub sex: Sex,
    pub age: u16,
    pub state: StateCode,
    pub mass: f64,
}

impl Cell {
    pub fn black_or_indigenous(&self) -> bool {
        self.race.is_black_or_indigenous()
    }

    pub fn black_indigenous_or_hispanic(&self) -> bool {
        self.black_or_indigenous() || self.hispanic
    }
}

/// Attribute masses of one eligibility class within one rank.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClassAggregate {
    pub mass: f64,
    pub black_indigenous: f64,
    pub black_indigenous_hispanic: f64,
    pub high_adi: f64,
    pub female: f64,
    pub age_mass: f64,
}

impl ClassAggregate {
    fn add(&mut self, c: &Cell) {
        let w = c.mass;
        self.mass += w;
        if c.black_or_indigenous() {
            self.black_indigenous += w;
        }
        if c.black_indigenous_or_hispanic() {
            self.black_indigenous_hispanic += w;
        }
        if c.high_adi {
            self.high_adi += w;
        }
        if c.sex == Sex::Female {
            self.female += w;
        }
        self.age_mass += w * f64::from(c.age);
    }
}

/// Per-rank aggregates split into `[eligible, other]` for one eligibility.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTable {
    pub classes: [[ClassAggregate; 2]; RANK_COUNT],
}

impl ClassTable {
    pub fn rank_mass(&self, k: usize) -> f64 {
        self.classes[k][0].mass + self.classes[k][1].mass
    }

    pub fn eligible_mass(&self) -> f64 {
        self.classes.iter().map(|c| c[0].mass).sum()
    }
}

/// Immutable allocation input: one cell per distinct rank and attribute
/// combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Strata {
    cells: Vec<Cell>,
    tables: [ClassTable; 3],
    total: f64,
}

impl Strata {
    pub fn from_cells(cells: Vec<Cell>) -> Result<Self, AllocationError> {
        if let Some(c) = cells.iter().find(|c| !(c.mass >= 0.0 && c.mass.is_finite())) {
            return Err(AllocationError::Strata(format!(
                "cell mass {} is not a non-negative finite number",
                c.mass
            )));
        }
        let tables = Eligibility::ALL.map(|e| {
            let mut classes = [[ClassAggregate::default(); 2]; RANK_COUNT];
            for c in &cells {
                classes[c.rank.index()][usize::from(!e.matches(c))].add(c);
            }
            ClassTable { classes }
        });
        let total = neumaier_sum(cells.iter().map(|c| c.mass));
        Ok(Strata {
            cells,
            tables,
            total,
        })
    }

    /// Groups persons into cells. `ranks` and `high_adi` are indexed like
    /// `persons`. Cell order is deterministic.
    pub fn build(
        persons: &[PersonRecord],
        ranks: &[Rank],
        high_adi: &[bool],
    ) -> Result<Self, AllocationError> {
        if ranks.len() != persons.len() || high_adi.len() != persons.len() {
            return Err(AllocationError::Strata(format!(
                "{} persons, {} ranks, {} ADI flags",
                persons.len(),
                ranks.len(),
                high_adi.len()
            )));
        }
        type Key = (Rank, bool, Race, bool, Sex, u16, StateCode);
        let mut acc: BTreeMap<Key, Vec<f64>> = BTreeMap::new();
        for ((p, &rank), &h) in persons.iter().zip(ranks).zip(high_adi) {
            acc.entry((rank, h, p.race, p.hispanic, p.sex, p.age, p.state))
                .or_default()
                .push(p.weight);
        }
        let cells = acc
            .into_iter()
            .map(
                |((rank, high_adi, race, hispanic, sex, age, state), ws)| Cell {
                    rank,
                    high_adi,
                    race,
                    hispanic,
                    sex,
                    age,
                    state,
                    mass: neumaier_sum(ws),
                },
            )
            .collect();
        Strata::from_cells(cells)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn table(&self, eligibility: Eligibility) -> &ClassTable {
        &self.tables[eligibility.index()]
    }

    pub fn rank_mass(&self, rank: Rank) -> f64 {
        self.tables[0].rank_mass(rank.index())
    }

    pub fn tier1_mass(&self) -> f64 {
        (0..TIER1_RANKS).map(|k| self.tables[0].rank_mass(k)).sum()
    }

    pub fn eligible_mass(&self, eligibility: Eligibility) -> f64 {
        self.table(eligibility).eligible_mass()
    }

    /// Population-level statistic over all cells, weighted by mass.
    pub fn population_share(&self, pred: impl Fn(&Cell) -> bool) -> f64 {
        neumaier_sum(self.cells.iter().filter(|c| pred(c)).map(|c| c.mass)) / self.total
    }

    pub fn population_mean_age(&self) -> f64 {
        neumaier_sum(self.cells.iter().map(|c| c.mass * f64::from(c.age))) / self.total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::test_support::person;

    #[test]
    fn cells_merge_and_sum() {
        let mut a = person("a", 2.0);
        a.race = Race::Black;
        let b = person("b", 3.0);
        let c = person("c", 4.0);
        let strata = Strata::build(
            &[a, b, c],
            &[Rank::tier(2), Rank::tier(2), Rank::tier1(1)],
            &[true, false, false],
        )
        .unwrap();
        assert_eq!(strata.cells().len(), 3);
        assert_eq!(strata.total(), 9.0);
        assert_eq!(strata.tier1_mass(), 4.0);
        assert_eq!(strata.rank_mass(Rank::tier(2)), 5.0);
        let t = strata.table(Eligibility::HighAdi);
        assert_eq!(t.classes[Rank::tier(2).index()][0].mass, 2.0);
        assert_eq!(t.classes[Rank::tier(2).index()][0].black_indigenous, 2.0);
        assert_eq!(strata.eligible_mass(Eligibility::None), 0.0);
        assert_eq!(strata.population_share(|c| c.high_adi), 2.0 / 9.0);

        let d = person("d", 1.0);
        let e = person("e", 1.0);
        let merged = Strata::build(&[d, e], &[Rank::tier(5); 2], &[false; 2]).unwrap();
        assert_eq!(merged.cells().len(), 1);
        assert_eq!(merged.cells()[0].mass, 2.0);
    }

    #[test]
    fn bad_mass_rejected() {
        let mut cell = Strata::build(&[person("a", 1.0)], &[Rank::tier(5)], &[false])
            .unwrap()
            .cells()[0]
            .clone();
        cell.mass = -1.0;
        assert!(Strata::from_cells(vec![cell]).is_err());
    }
}
