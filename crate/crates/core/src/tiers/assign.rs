use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

use super::schedule::{AssignmentMode, PersonContext, Rank, TierSchedule};
use super::TierError;
use crate::population::{neumaier_sum, PersonRecord, Population};
use crate::rng::{stable_hash, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InfantClass {
    UnderSixMonths,
    SixToElevenMonths,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupersetOutcome {
    pub probability: f64,
    /// Superset no larger than the external size: everyone joins.
    pub take_all: bool,
    /// Zero superset mass: nobody joins.
    pub empty: bool,
}

/// Probability that a superset member joins a group of `external_size`.
pub fn superset_probability(external_size: f64, superset_mass: f64) -> SupersetOutcome {
    if !(superset_mass > 0.0) {
        SupersetOutcome {
            probability: 0.0,
            take_all: false,
            empty: true,
        }
    } else if superset_mass <= external_size {
        SupersetOutcome {
            probability: 1.0,
            take_all: true,
            empty: false,
        }
    } else {
        SupersetOutcome {
            probability: external_size / superset_mass,
            take_all: false,
            empty: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    TakeAll {
        group: String,
        external_size: f64,
        superset_mass: f64,
    },
    EmptySuperset {
        group: String,
    },
    ResidualFallback {
        group: String,
        persons: usize,
        mass: f64,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::TakeAll {
                group,
                external_size,
                superset_mass,
            } => write!(
                f,
                "{group}: superset mass {superset_mass:.1} does not exceed external size \
                 {external_size:.1}; assigning the whole superset"
            ),
            Diagnostic::EmptySuperset { group } => {
                write!(f, "{group}: superset is empty; group has no members")
            }
            Diagnostic::ResidualFallback {
                group,
                persons,
                mass,
            } => write!(
                f,
                "{persons} record(s), mass {mass:.1}, matched no group and were placed in {group}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfantLabels {
    pub class: Vec<Option<InfantClass>>,
    pub household_contact: Vec<bool>,
}

/// Labels every age-0 person as 0-5 or 6-11 months with a fair coin, and
/// marks everyone else sharing a household with a 0-5 month infant.
pub fn split_infants(population: &Population, seed: u64) -> InfantLabels {
    let stream = Stream::new(seed, "infants");
    let persons = population.persons();
    let class: Vec<Option<InfantClass>> = persons
        .par_iter()
        .map(|p| {
            (p.age == 0).then(|| {
                if stream.bernoulli(stable_hash(&p.person_id), 0, 0.5) {
                    InfantClass::SixToElevenMonths
                } else {
                    InfantClass::UnderSixMonths
                }
            })
        })
        .collect();
    let mut young: HashMap<&str, u32> = HashMap::new();
    for (p, c) in persons.iter().zip(&class) {
        if let (Some(h), Some(InfantClass::UnderSixMonths)) = (&p.household_id, c) {
            *young.entry(h.as_str()).or_default() += 1;
        }
    }
    let household_contact = persons
        .iter()
        .zip(&class)
        .map(|(p, c)| {
            let own = u32::from(*c == Some(InfantClass::UnderSixMonths));
            p.household_id
                .as_deref()
                .and_then(|h| young.get(h))
                .is_some_and(|&n| n > own)
        })
        .collect();
    InfantLabels {
        class,
        household_contact,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Membership {
    pub group: usize,
    pub rank: Rank,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub id: String,
    pub rank: Rank,
    pub mode: AssignmentMode,
    /// External size after scaling to the population.
    pub external_size: Option<f64>,
    pub superset_mass: f64,
    pub probability: f64,
    pub take_all: bool,
    pub empty_superset: bool,
    pub realized_mass: f64,
    /// Sum of w^2 p (1 - p) over the superset.
    pub variance: f64,
}

impl GroupReport {
    pub fn expected_mass(&self) -> f64 {
        self.probability * self.superset_mass
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipDraft {
    pub memberships: Vec<Vec<Membership>>,
    pub reports: Vec<GroupReport>,
}

fn context<'a>(
    person: &'a PersonRecord,
    i: usize,
    high_risk: &[bool],
    infants: &InfantLabels,
) -> PersonContext<'a> {
    PersonContext {
        person,
        high_risk: high_risk[i],
        infant: infants.class[i],
        household_contact: infants.household_contact[i],
        pregnant: false,
    }
}

/// Processes every group except the pregnancy group, in schedule order.
/// Each superset member joins independently; the coin is keyed by
/// `(seed, group id, person id)`.
pub fn assign_group_membership(
    population: &Population,
    high_risk: &[bool],
    infants: &InfantLabels,
    schedule: &TierSchedule,
    seed: u64,
    size_scale: f64,
) -> MembershipDraft {
    let stream = Stream::new(seed, "groups");
    let persons = population.persons();
    let hashes: Vec<u64> = persons.par_iter().map(|p| stable_hash(&p.person_id)).collect();
    let mut memberships: Vec<Vec<Membership>> = vec![Vec::new(); persons.len()];
    let mut reports = Vec::new();

    for (gi, g) in schedule.groups.iter().enumerate() {
        if gi == schedule.pregnancy_group {
            continue;
        }
        let superset: Vec<usize> = (0..persons.len())
            .into_par_iter()
            .filter(|&i| {
                !memberships[i].iter().any(|m| g.exclude.contains(&m.group))
                    && g.superset.matches(&context(&persons[i], i, high_risk, infants))
            })
            .collect();
        let superset_mass = neumaier_sum(superset.iter().map(|&i| persons[i].weight));
        let external_size = g.def.external_size.map(|s| s * size_scale);
        let outcome = match g.def.mode {
            AssignmentMode::Probabilistic => {
                superset_probability(external_size.unwrap_or(0.0), superset_mass)
            }
            AssignmentMode::TakeAll | AssignmentMode::Demographic => SupersetOutcome {
                probability: 1.0,
                take_all: false,
                empty: !(superset_mass > 0.0),
            },
        };
        let p = outcome.probability;
        let gs = stream.substream(&g.def.id);
        let fs = gs.substream("frontline");
        let base = g.def.rank();
        let joined: Vec<(usize, Rank)> = superset
            .par_iter()
            .filter_map(|&i| {
                if !gs.bernoulli(hashes[i], 0, p) {
                    return None;
                }
                let ctx = context(&persons[i], i, high_risk, infants);
                let rank = g
                    .frontline
                    .iter()
                    .find(|r| r.when.matches(&ctx))
                    .map_or(base, |r| {
                        if fs.bernoulli(hashes[i], 0, r.fraction) {
                            r.rank
                        } else {
                            base
                        }
                    });
                Some((i, rank))
            })
            .collect();
        let realized_mass = neumaier_sum(joined.iter().map(|&(i, _)| persons[i].weight));
        let variance = superset
            .iter()
            .map(|&i| persons[i].weight.powi(2) * p * (1.0 - p))
            .sum();
        for (i, rank) in joined {
            memberships[i].push(Membership { group: gi, rank });
        }
        reports.push(GroupReport {
            id: g.def.id.clone(),
            rank: base,
            mode: g.def.mode,
            external_size,
            superset_mass,
            probability: p,
            take_all: outcome.take_all,
            empty_superset: outcome.empty,
            realized_mass,
            variance,
        });
    }
    MembershipDraft {
        memberships,
        reports,
    }
}

/// Selects persons for pregnancy duplication: gave birth in the past year,
/// in no group ranked above the pregnancy group, and heads on a coin with
/// the schedule's pregnancy probability.
pub fn synthesize_pregnancy_cohort(
    population: &Population,
    memberships: &[Vec<Membership>],
    schedule: &TierSchedule,
    seed: u64,
) -> Vec<usize> {
    let stream = Stream::new(seed, "pregnancy");
    let preg_rank = schedule.groups[schedule.pregnancy_group].def.rank();
    population
        .persons()
        .par_iter()
        .enumerate()
        .filter(|(i, p)| {
            p.gave_birth_past_year
                && memberships[*i].iter().all(|m| m.rank >= preg_rank)
                && stream.bernoulli(stable_hash(&p.person_id), 0, schedule.pregnancy_probability)
        })
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TierAssignment {
    pub person_id: String,
    /// Indices into the schedule's groups.
    pub member_groups: Vec<usize>,
    pub highest: Rank,
    pub pregnant_duplicate: bool,
    /// Matched no group and was placed in the residual group.
    pub residual_fallback: bool,
}

impl TierAssignment {
    pub fn group_ids<'a>(&'a self, schedule: &'a TierSchedule) -> impl Iterator<Item = &'a str> {
        self.member_groups
            .iter()
            .map(move |&g| schedule.groups[g].def.id.as_str())
    }
}

/// Highest rank per person. Persons without any membership go to the
/// residual group when one is configured.
pub fn resolve_highest_tier(
    persons: &[PersonRecord],
    memberships: &[Vec<Membership>],
    pregnant_duplicate: &[bool],
    schedule: &TierSchedule,
) -> Result<Vec<TierAssignment>, TierError> {
    persons
        .iter()
        .zip(memberships)
        .zip(pregnant_duplicate)
        .map(|((p, ms), &dup)| {
            if let Some(highest) = ms.iter().map(|m| m.rank).min() {
                let mut member_groups: Vec<usize> = ms.iter().map(|m| m.group).collect();
                member_groups.dedup();
                Ok(TierAssignment {
                    person_id: p.person_id.clone(),
                    member_groups,
                    highest,
                    pregnant_duplicate: dup,
                    residual_fallback: false,
                })
            } else if let Some(r) = schedule.residual_group {
                Ok(TierAssignment {
                    person_id: p.person_id.clone(),
                    member_groups: vec![r],
                    highest: schedule.groups[r].def.rank(),
                    pregnant_duplicate: dup,
                    residual_fallback: true,
                })
            } else {
                Err(TierError::Classification(p.person_id.clone()))
            }
        })
        .collect()
}

/// Suffix appended to a duplicated person's id.
pub const PREGNANT_SUFFIX: &str = "~pregnant";

#[derive(Debug, Clone, PartialEq)]
pub struct TieringOutcome {
    /// Originals followed by pregnancy duplicates.
    pub persons: Vec<PersonRecord>,
    /// Index of the original record for every augmented person.
    pub origin: Vec<usize>,
    pub high_risk: Vec<bool>,
    pub infants: InfantLabels,
    pub assignments: Vec<TierAssignment>,
    pub reports: Vec<GroupReport>,
    pub pregnancy_eligible_mass: f64,
    pub diagnostics: Vec<Diagnostic>,
}

impl TieringOutcome {
    pub fn weighted_total(&self) -> f64 {
        neumaier_sum(self.persons.iter().map(|p| p.weight))
    }

    pub fn pregnant_mass(&self) -> f64 {
        neumaier_sum(
            self.persons
                .iter()
                .zip(&self.assignments)
                .filter(|(_, a)| a.pregnant_duplicate)
                .map(|(p, _)| p.weight),
        )
    }

    pub fn report(&self, id: &str) -> Option<&GroupReport> {
        self.reports.iter().find(|r| r.id == id)
    }
}

/// Runs the labelling stages end to end and returns the augmented
/// population with one assignment per record.
pub fn run_tiering(
    population: &Population,
    high_risk: &[bool],
    schedule: &TierSchedule,
    seed: u64,
    size_scale: f64,
) -> Result<TieringOutcome, TierError> {
    if high_risk.len() != population.len() {
        return Err(TierError::Input(format!(
            "{} high-risk flags for {} persons",
            high_risk.len(),
            population.len()
        )));
    }
    let infants = split_infants(population, seed);
    let draft = assign_group_membership(population, high_risk, &infants, schedule, seed, size_scale);
    let selected = synthesize_pregnancy_cohort(population, &draft.memberships, schedule, seed);
    let preg_rank = schedule.groups[schedule.pregnancy_group].def.rank();
    let pregnancy_eligible_mass = neumaier_sum(
        population
            .persons()
            .iter()
            .zip(&draft.memberships)
            .filter(|(p, ms)| p.gave_birth_past_year && ms.iter().all(|m| m.rank >= preg_rank))
            .map(|(p, _)| p.weight),
    );

    let n = population.len();
    let mut persons = population.persons().to_vec();
    let mut origin: Vec<usize> = (0..n).collect();
    let mut memberships = draft.memberships;
    let mut flags = high_risk.to_vec();
    let mut dup = vec![false; n];
    for &i in &selected {
        let mut copy = persons[i].clone();
        copy.person_id.push_str(PREGNANT_SUFFIX);
        copy.age = copy.age.saturating_sub(1);
        persons.push(copy);
        origin.push(i);
        memberships.push(vec![Membership {
            group: schedule.pregnancy_group,
            rank: preg_rank,
        }]);
        flags.push(high_risk[i]);
        dup.push(true);
    }

    let assignments = resolve_highest_tier(&persons, &memberships, &dup, schedule)?;

    let mut diagnostics = Vec::new();
    for r in &draft.reports {
        if r.take_all {
            diagnostics.push(Diagnostic::TakeAll {
                group: r.id.clone(),
                external_size: r.external_size.unwrap_or(0.0),
                superset_mass: r.superset_mass,
            });
        }
        if r.empty_superset && r.mode != AssignmentMode::Demographic {
            diagnostics.push(Diagnostic::EmptySuperset { group: r.id.clone() });
        }
    }
    let fallback: Vec<usize> = assignments
        .iter()
        .enumerate()
        .filter(|(_, a)| a.residual_fallback)
        .map(|(i, _)| i)
        .collect();
    if let (Some(r), false) = (schedule.residual_group, fallback.is_empty()) {
        diagnostics.push(Diagnostic::ResidualFallback {
            group: schedule.groups[r].def.id.clone(),
            persons: fallback.len(),
            mass: neumaier_sum(fallback.iter().map(|&i| persons[i].weight)),
        });
    }

    Ok(TieringOutcome {
        persons,
        origin,
        high_risk: flags,
        infants,
        assignments,
        reports: draft.reports,
        pregnancy_eligible_mass,
        diagnostics,
    })
}
