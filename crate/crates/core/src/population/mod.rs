//! Weighted microdata: persons, households, ingestion and synthesis.

mod csv_io;
mod synthetic;
mod types;

use std::collections::HashMap;
use std::path::PathBuf;

use thiserror::Error;

pub use csv_io::{
    ingest_population, read_households, read_persons, write_households, write_persons,
    HOUSEHOLD_COLUMNS, PERSON_COLUMNS, PERSON_EXTENSION_COLUMNS,
};
pub use synthetic::{
    generate_synthetic, AgeBand, EconomicDistributions, IndustryShare, LogNormalSpec, Marginals,
    RaceProfile, SyntheticConfig,
};
pub use types::{
    Education, Employment, HouseholdRecord, MilitaryStatus, PersonRecord, Race, Sex, StateCode,
};

#[derive(Debug, Error)]
pub enum PopulationError {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{0} person(s) reference a household that does not exist: {1:?}")]
    Link(usize, Vec<String>),
    #[error("validation failed for {id}: {message}")]
    Validation { id: String, message: String },
    #[error("synthetic config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// An immutable weighted population.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    persons: Vec<PersonRecord>,
    households: Option<Vec<HouseholdRecord>>,
    household_index: HashMap<String, usize>,
}

impl Population {
    /// Validates invariants and resolves household links.
    pub fn new(
        persons: Vec<PersonRecord>,
        households: Option<Vec<HouseholdRecord>>,
    ) -> Result<Self, PopulationError> {
        let mut seen = std::collections::HashSet::with_capacity(persons.len());
        for p in &persons {
            if !(p.weight > 0.0) || !p.weight.is_finite() {
                return Err(PopulationError::Validation {
                    id: p.person_id.clone(),
                    message: format!("weight must be positive, got {}", p.weight),
                });
            }
            if p.group_quarters && p.household_id.is_some() {
                return Err(PopulationError::Validation {
                    id: p.person_id.clone(),
                    message: "group-quarters person carries a household link".into(),
                });
            }
            if !seen.insert(p.person_id.as_str()) {
                return Err(PopulationError::Validation {
                    id: p.person_id.clone(),
                    message: "duplicate person_id".into(),
                });
            }
        }

        let mut household_index = HashMap::new();
        if let Some(hh) = &households {
            for (i, h) in hh.iter().enumerate() {
                h.validate().map_err(|message| PopulationError::Validation {
                    id: h.household_id.clone(),
                    message,
                })?;
                if household_index.insert(h.household_id.clone(), i).is_some() {
                    return Err(PopulationError::Validation {
                        id: h.household_id.clone(),
                        message: "duplicate household_id".into(),
                    });
                }
            }
            let dangling: Vec<String> = persons
                .iter()
                .filter(|p| {
                    p.household_id
                        .as_ref()
                        .is_some_and(|h| !household_index.contains_key(h))
                })
                .map(|p| p.person_id.clone())
                .collect();
            if !dangling.is_empty() {
                let n = dangling.len();
                return Err(PopulationError::Link(
                    n,
                    dangling.into_iter().take(20).collect(),
                ));
            }
        }

        Ok(Self {
            persons,
            households,
            household_index,
        })
    }

    pub fn empty() -> Self {
        Self {
            persons: Vec::new(),
            households: Some(Vec::new()),
            household_index: HashMap::new(),
        }
    }

    pub fn persons(&self) -> &[PersonRecord] {
        &self.persons
    }

    pub fn len(&self) -> usize {
        self.persons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.persons.is_empty()
    }

    pub fn households(&self) -> Option<&[HouseholdRecord]> {
        self.households.as_deref()
    }

    pub fn has_households(&self) -> bool {
        self.households.is_some()
    }

    pub fn household(&self, id: &str) -> Option<&HouseholdRecord> {
        let hh = self.households.as_ref()?;
        self.household_index.get(id).map(|&i| &hh[i])
    }

    pub fn household_of(&self, person: &PersonRecord) -> Option<&HouseholdRecord> {
        person.household_id.as_deref().and_then(|h| self.household(h))
    }

    /// Sum of weights over every person.
    pub fn weighted_total(&self) -> f64 {
        self.weighted_total_where(|_| true)
    }

    /// Sum of weights over persons satisfying `pred`.
    pub fn weighted_total_where<F>(&self, pred: F) -> f64
    where
        F: Fn(&PersonRecord) -> bool,
    {
        neumaier_sum(self.persons.iter().filter(|p| pred(p)).map(|p| p.weight))
    }

    pub fn max_weight(&self) -> f64 {
        self.persons.iter().map(|p| p.weight).fold(0.0, f64::max)
    }
}

/// Compensated summation; keeps partition totals additive to ~1 ulp.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn person(id: &str, weight: f64) -> PersonRecord {
        PersonRecord {
            person_id: id.into(),
            household_id: None,
            weight,
            age: 40,
            sex: Sex::Female,
            race: Race::White,
            hispanic: false,
            industry_code: None,
            occupation_code: None,
            military_status: None,
            gave_birth_past_year: false,
            group_quarters: false,
            state: StateCode::new("MA").unwrap(),
            education: None,
            employment: None,
            personal_income: None,
        }
    }

    pub fn household(id: &str) -> HouseholdRecord {
        HouseholdRecord {
            household_id: id.into(),
            family_income: Some(60_000.0),
            property_value: None,
            gross_rent: Some(1_000.0),
            first_mortgage: None,
            owner_occupied: false,
            vehicle_available: true,
            telephone_or_data: true,
            complete_plumbing: true,
            persons_count: 1,
            rooms_count: 3,
            single_parent_with_children: false,
            poverty_ratio: Some(400.0),
        }
    }
}
