//! Shared builders for the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vaxalloc::allocation::{Cell, Strata};
use vaxalloc::population::{HouseholdRecord, PersonRecord, Race, Sex, StateCode};
use vaxalloc::tiers::{Rank, RANK_COUNT};

pub fn cell(rank: Rank, high_adi: bool, mass: f64) -> Cell {
    Cell {
        rank,
        high_adi,
        race: Race::White,
        hispanic: false,
        sex: Sex::Male,
        age: 40,
        state: StateCode::new("MA").unwrap(),
        mass,
    }
}

/// Random cells over every rank with a mix of races, sexes and ages.
pub fn random_cells(rng: &mut ChaCha8Rng, n: usize) -> Vec<Cell> {
    const RACES: [Race; 4] = [Race::White, Race::Black, Race::Indigenous, Race::Asian];
    const STATES: [&str; 3] = ["MA", "GA", "NM"];
    (0..n)
        .map(|_| Cell {
            rank: Rank::from_index(rng.random_range(0..RANK_COUNT)),
            high_adi: rng.random_bool(0.35),
            race: RACES[rng.random_range(0..RACES.len())],
            hispanic: rng.random_bool(0.2),
            sex: if rng.random_bool(0.5) { Sex::Female } else { Sex::Male },
            age: rng.random_range(0..95),
            state: StateCode::new(STATES[rng.random_range(0..STATES.len())]).unwrap(),
            mass: rng.random_range(0.5..50.0),
        })
        .collect()
}

pub fn random_strata(rng: &mut ChaCha8Rng, n: usize) -> Strata {
    Strata::from_cells(random_cells(rng, n)).unwrap()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

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

pub fn household(id: &str, persons: u32) -> HouseholdRecord {
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
        persons_count: persons,
        rooms_count: 4,
        single_parent_with_children: false,
        poverty_ratio: Some(300.0),
    }
}
