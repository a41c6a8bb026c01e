use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use super::{AdiConfig, AdiError, Component, IncomeDisparity, COMPONENT_COUNT};
use crate::population::{
    Education, Employment, HouseholdRecord, PersonRecord, Population, StateCode,
};

/// SOC major groups counted as white-collar: management, business and
/// financial, computer, engineering, science, community service, legal,
/// education, arts and media, healthcare practitioners, sales, office.
const WHITE_COLLAR_MAJOR_GROUPS: [&str; 12] = [
    "11", "13", "15", "17", "19", "21", "23", "25", "27", "29", "41", "43",
];

pub fn is_white_collar(occupation_code: &str) -> bool {
    occupation_code
        .get(..2)
        .is_some_and(|g| WHITE_COLLAR_MAJOR_GROUPS.contains(&g))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyAdiComponents {
    pub family_id: String,
    values: [Option<f64>; COMPONENT_COUNT],
}

impl FamilyAdiComponents {
    pub fn empty(family_id: &str) -> Self {
        Self {
            family_id: family_id.to_owned(),
            values: [None; COMPONENT_COUNT],
        }
    }

    pub fn get(&self, c: Component) -> Option<f64> {
        self.values[c.index()]
    }

    pub fn set(&mut self, c: Component, v: Option<f64>) {
        self.values[c.index()] = v;
    }

    pub fn is_missing(&self, c: Component) -> bool {
        self.get(c).is_none()
    }

    /// Multiplies every present value by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            family_id: self.family_id.clone(),
            values: self.values.map(|v| v.map(|x| x * k)),
        }
    }
}

/// A scoring unit: a household with family income, or a single person.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub components: FamilyAdiComponents,
    /// Indices into the population's persons.
    pub members: Vec<usize>,
    pub mass: f64,
}

impl Family {
    pub fn id(&self) -> &str {
        &self.components.family_id
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        100.0
    } else {
        0.0
    }
}

fn percent(hits: f64, of: f64) -> Option<f64> {
    (of > 0.0).then(|| 100.0 * hits / of)
}

fn person_share<F, G>(members: &[&PersonRecord], in_base: F, is_hit: G) -> Option<f64>
where
    F: Fn(&PersonRecord) -> bool,
    G: Fn(&PersonRecord) -> bool,
{
    let base: Vec<_> = members.iter().filter(|p| in_base(p)).collect();
    let hits = base.iter().filter(|p| is_hit(p)).count();
    percent(hits as f64, base.len() as f64)
}

fn components_for(
    id: String,
    members: &[&PersonRecord],
    household: Option<&HouseholdRecord>,
    is_family: bool,
    cfg: &AdiConfig,
) -> FamilyAdiComponents {
    use Component::*;
    let mut c = FamilyAdiComponents::empty(&id);

    let adult = |p: &PersonRecord| p.age >= 25 && p.education.is_some();
    c.set(
        EducationBelowGrade9,
        person_share(members, adult, |p| p.education == Some(Education::BelowGrade9)),
    );
    c.set(
        HighSchoolOrMore,
        person_share(members, adult, |p| {
            p.education == Some(Education::HighSchoolOrMore)
        }),
    );
    c.set(
        WhiteCollar,
        person_share(
            members,
            |p| {
                p.age >= 16
                    && matches!(
                        p.employment,
                        Some(Employment::Employed | Employment::ArmedForces)
                    )
                    && p.occupation_code.is_some()
            },
            |p| p.occupation_code.as_deref().is_some_and(is_white_collar),
        ),
    );
    c.set(
        Unemployment,
        person_share(
            members,
            |p| {
                p.age >= 16
                    && matches!(p.employment, Some(Employment::Employed | Employment::Unemployed))
            },
            |p| p.employment == Some(Employment::Unemployed),
        ),
    );
    c.set(IncomeDisparity, Some(0.0));

    if is_family {
        let h = household.expect("families are households");
        c.set(FamilyIncome, h.family_income);
        c.set(BelowPoverty, h.poverty_ratio.map(|r| indicator(r < 100.0)));
        c.set(Below150Poverty, h.poverty_ratio.map(|r| indicator(r < 150.0)));
    } else {
        let p = members[0];
        c.set(FamilyIncome, p.personal_income);
        let threshold = cfg.poverty_thresholds.for_age(p.age);
        c.set(BelowPoverty, p.personal_income.map(|i| indicator(i < threshold)));
        c.set(
            Below150Poverty,
            p.personal_income.map(|i| indicator(i < 1.5 * threshold)),
        );
    }

    if let Some(h) = household {
        c.set(HomeValue, h.property_value.filter(|_| h.owner_occupied));
        c.set(GrossRent, h.gross_rent.filter(|_| !h.owner_occupied));
        c.set(MonthlyMortgage, h.first_mortgage.filter(|_| h.owner_occupied));
        c.set(OwnerOccupied, Some(indicator(h.owner_occupied)));
        c.set(
            SingleParent,
            Some(indicator(is_family && h.single_parent_with_children)),
        );
        c.set(NoVehicle, Some(indicator(!h.vehicle_available)));
        c.set(NoTelephone, Some(indicator(!h.telephone_or_data)));
        c.set(IncompletePlumbing, Some(indicator(!h.complete_plumbing)));
        c.set(Crowding, Some(indicator(h.persons_count > h.rooms_count)));
    }
    c
}

/// Groups non-group-quarters persons into families and computes their 17
/// components. Families appear in order of their first member.
pub fn derive_family_components(
    population: &Population,
    cfg: &AdiConfig,
) -> Result<Vec<Family>, AdiError> {
    if !population.has_households() {
        return Err(AdiError::NoHouseholds);
    }
    let persons = population.persons();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<(String, Vec<usize>, bool)> = Vec::new();
    for (i, p) in persons.iter().enumerate() {
        if p.group_quarters {
            continue;
        }
        let hh = population.household_of(p);
        match hh.filter(|h| h.family_income.is_some()) {
            Some(h) => {
                let slot = *index.entry(h.household_id.clone()).or_insert_with(|| {
                    groups.push((h.household_id.clone(), Vec::new(), true));
                    groups.len() - 1
                });
                groups[slot].1.push(i);
            }
            None => {
                let id = match &p.household_id {
                    Some(h) => format!("{h}/{}", p.person_id),
                    None => p.person_id.clone(),
                };
                groups.push((id, vec![i], false));
            }
        }
    }

    let mut families: Vec<Family> = groups
        .into_par_iter()
        .map(|(id, members, is_family)| {
            let refs: Vec<&PersonRecord> = members.iter().map(|&i| &persons[i]).collect();
            let household = population.household_of(refs[0]);
            let components = components_for(id, &refs, household, is_family, cfg);
            let mass = crate::population::neumaier_sum(refs.iter().map(|p| p.weight));
            Family {
                components,
                members,
                mass,
            }
        })
        .collect();

    if cfg.income_disparity == IncomeDisparity::StateLogRatio {
        apply_state_disparity(&mut families, persons);
    }
    Ok(families)
}

/// Singh's log ratio of low- to high-income units, computed per state over
/// family masses. States lacking either side leave the component missing.
fn apply_state_disparity(families: &mut [Family], persons: &[PersonRecord]) {
    let mut counts: BTreeMap<&StateCode, (f64, f64)> = BTreeMap::new();
    for f in families.iter() {
        let state = &persons[f.members[0]].state;
        if let Some(inc) = f.components.get(Component::FamilyIncome) {
            let e = counts.entry(state).or_default();
            if inc < 10_000.0 {
                e.0 += f.mass;
            } else if inc >= 50_000.0 {
                e.1 += f.mass;
            }
        }
    }
    let ratio: BTreeMap<StateCode, Option<f64>> = counts
        .into_iter()
        .map(|(s, (lo, hi))| {
            let v = (lo > 0.0 && hi > 0.0).then(|| (100.0 * lo / hi).ln());
            (s.clone(), v)
        })
        .collect();
    for f in families.iter_mut() {
        let state = &persons[f.members[0]].state;
        let v = ratio.get(state).copied().flatten();
        f.components.set(Component::IncomeDisparity, v);
    }
}
