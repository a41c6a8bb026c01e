//! Seeded synthetic populations calibrated to configurable marginals.
//!
//! Households are the sampling unit: members share a weight, a state, a race
//! and Hispanic origin. Group-quarters residents are generated as single
//! records without a household. The final unit's weight is trimmed so the
//! weighted total equals `population_size` exactly.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::{
    Education, Employment, HouseholdRecord, MilitaryStatus, PersonRecord, Population,
    PopulationError, Race, Sex, StateCode,
};

const PARTITION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeBand {
    pub min: u16,
    pub max: u16,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndustryShare {
    pub code: String,
    pub share: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalSpec {
    pub median: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Marginals {
    pub race: BTreeMap<Race, f64>,
    /// Default Hispanic rate, overridable per race.
    pub hispanic: f64,
    pub female: f64,
    pub age_bands: Vec<AgeBand>,
    /// State shares keyed by postal code; must sum to one.
    pub state: BTreeMap<String, f64>,
    pub group_quarters: f64,
    /// Birth-in-past-year rate among females aged 15-44.
    pub gave_birth: f64,
    /// Industry shares among employed civilians; the remainder is coded `OTHER`.
    pub industry: Vec<IndustryShare>,
    /// Occupation shares among employed persons; remainder coded `OTHER`.
    pub occupation: Vec<IndustryShare>,
    /// Industry shares among active-duty personnel; must sum to one.
    pub military_industry: Vec<IndustryShare>,
    /// Industry code given to reserve / guard members.
    pub reserve_industry: String,
    /// Among ages 19-64.
    pub active_duty: f64,
    pub reserve_or_guard: f64,
    /// Among ages 40 and over who are not serving.
    pub veteran: f64,
    /// Among ages 16-64: employed and unemployed shares; the rest are not in
    /// the labour force.
    pub employed: f64,
    pub unemployed: f64,
    pub employed_65_plus: f64,
    /// Among ages 25 and over, in `Education` order.
    pub education: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RaceProfile {
    pub age_bands: Option<Vec<AgeBand>>,
    pub hispanic: Option<f64>,
    pub income_multiplier: f64,
    pub gave_birth_multiplier: f64,
}

impl Default for RaceProfile {
    fn default() -> Self {
        Self {
            age_bands: None,
            hispanic: None,
            income_multiplier: 1.0,
            gave_birth_multiplier: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EconomicDistributions {
    pub family_income: LogNormalSpec,
    pub personal_income: LogNormalSpec,
    pub property_value: LogNormalSpec,
    pub gross_rent: LogNormalSpec,
    pub first_mortgage: LogNormalSpec,
    pub hispanic_income_multiplier: f64,
    /// Share of multi-person households that contain a family.
    pub family_household: f64,
    pub owner_occupied: f64,
    /// Among owners.
    pub mortgaged: f64,
    pub vehicle_available: f64,
    pub telephone_or_data: f64,
    pub complete_plumbing: f64,
    /// Among family households with a child under 18.
    pub single_parent: f64,
    /// Rooms = persons + uniform integer in this inclusive range (min 1).
    pub extra_rooms: [i32; 2],
    /// Poverty threshold = base + per_person * (persons - 1).
    pub poverty_threshold_base: f64,
    pub poverty_threshold_per_person: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub seed: u64,
    /// Target weighted total (persons represented).
    pub population_size: u64,
    /// Per-unit weight is uniform in `[lo, hi]`.
    pub weight_range: [f64; 2],
    /// `household_size_distribution[i]` = P(size = i + 1).
    pub household_size_distribution: Vec<f64>,
    pub marginals: Marginals,
    pub race_profiles: BTreeMap<Race, RaceProfile>,
    pub economic: EconomicDistributions,
}

fn band(min: u16, max: u16, share: f64) -> AgeBand {
    AgeBand { min, max, share }
}

fn shares(list: &[(&str, f64)]) -> Vec<IndustryShare> {
    list.iter()
        .map(|(c, s)| IndustryShare {
            code: (*c).to_owned(),
            share: *s,
        })
        .collect()
}

/// Approximate 2019 resident populations in millions.
const STATE_POPULATIONS: [(&str, f64); 51] = [
    ("AL", 4.90), ("AK", 0.73), ("AZ", 7.28), ("AR", 3.02), ("CA", 39.51),
    ("CO", 5.76), ("CT", 3.57), ("DE", 0.97), ("DC", 0.71), ("FL", 21.48),
    ("GA", 10.62), ("HI", 1.42), ("ID", 1.79), ("IL", 12.67), ("IN", 6.73),
    ("IA", 3.16), ("KS", 2.91), ("KY", 4.47), ("LA", 4.65), ("ME", 1.34),
    ("MD", 6.05), ("MA", 6.89), ("MI", 9.99), ("MN", 5.64), ("MS", 2.98),
    ("MO", 6.14), ("MT", 1.07), ("NE", 1.93), ("NV", 3.08), ("NH", 1.36),
    ("NJ", 8.88), ("NM", 2.10), ("NY", 19.45), ("NC", 10.49), ("ND", 0.76),
    ("OH", 11.69), ("OK", 3.96), ("OR", 4.22), ("PA", 12.80), ("RI", 1.06),
    ("SC", 5.15), ("SD", 0.88), ("TN", 6.83), ("TX", 29.00), ("UT", 3.21),
    ("VT", 0.62), ("VA", 8.54), ("WA", 7.61), ("WV", 1.79), ("WI", 5.82),
    ("WY", 0.58),
];

pub(crate) fn default_state_shares() -> BTreeMap<String, f64> {
    let total: f64 = STATE_POPULATIONS.iter().map(|(_, p)| p).sum();
    STATE_POPULATIONS
        .iter()
        .map(|(s, p)| ((*s).to_owned(), p / total))
        .collect()
}

impl Default for Marginals {
    fn default() -> Self {
        let race = BTreeMap::from([
            (Race::White, 0.705),
            (Race::Black, 0.135),
            (Race::Indigenous, 0.020),
            (Race::Asian, 0.057),
            (Race::PacificIslander, 0.002),
            (Race::Other, 0.049),
            (Race::Multiracial, 0.032),
        ]);
        // Supersets sized so each occupational group's calibrated share is
        // below its superset, except the national-guard and remaining
        // active-duty supersets, which undercount as in survey data.
        let industry = shares(&[
            ("928P", 0.009),
            ("622M", 0.041),
            ("6211", 0.016),
            ("6214", 0.007),
            ("6216", 0.009),
            ("6231", 0.012),
            ("623M", 0.009),
            ("6212", 0.006),
            ("62131", 0.002),
            ("62132", 0.001),
            ("6213ZM", 0.004),
            ("621M", 0.004),
            ("6222", 0.002),
            ("3254", 0.002),
            ("6241", 0.005),
            ("6242", 0.005),
            ("6243", 0.005),
            ("6244", 0.005),
            ("211", 0.0025),
            ("2211P", 0.0025),
            ("2212P", 0.0025),
            ("22132", 0.0025),
            ("2213M", 0.0025),
            ("221MP", 0.0025),
            ("22S", 0.0025),
            ("517311", 0.0025),
            ("517Z", 0.0025),
            ("522M", 0.0025),
            ("92113", 0.0035),
            ("92119", 0.0035),
            ("9211MP", 0.0035),
            ("923", 0.0035),
            ("92M1", 0.0035),
            ("92M2", 0.0035),
            ("92MP", 0.0035),
            ("5221M", 0.003),
            ("5241", 0.003),
            ("5242", 0.003),
            ("52M1", 0.003),
            ("52M2", 0.003),
            ("111", 0.003),
            ("112", 0.003),
            ("115", 0.002),
            ("481", 0.003),
            ("482", 0.002),
            ("483", 0.001),
            ("484", 0.006),
            ("4853", 0.001),
            ("485M", 0.002),
            ("486", 0.001),
            ("488", 0.002),
            ("491", 0.004),
            ("492", 0.003),
            ("493", 0.004),
            ("3252", 0.001),
            ("3253", 0.001),
            ("3255", 0.001),
            ("3256", 0.001),
            ("325M", 0.002),
        ]);
        let occupation = shares(&[
            ("291051", 0.0025),
            ("292052", 0.0045),
            ("292042", 0.0015),
            ("292043", 0.0005),
            ("533011", 0.0001),
            ("331011", 0.0003),
            ("331012", 0.0007),
            ("331021", 0.0004),
            ("333050", 0.006),
            ("333012", 0.0035),
            ("332011", 0.002),
            ("394031", 0.0003),
            ("3940XX", 0.0002),
            ("110000", 0.10),
            ("130000", 0.05),
            ("150000", 0.03),
            ("170000", 0.02),
            ("190000", 0.01),
            ("210000", 0.015),
            ("230000", 0.008),
            ("250000", 0.06),
            ("270000", 0.02),
            ("290000", 0.045),
            ("410000", 0.10),
            ("430000", 0.12),
            ("470000", 0.05),
            ("510000", 0.06),
            ("530000", 0.06),
        ]);
        let military_industry = shares(&[
            ("928110P1", 0.40),
            ("928110P2", 0.25),
            ("928110P3", 0.23),
            ("928110P4", 0.08),
            ("928110P5", 0.03),
            ("928110P6", 0.01),
        ]);
        Self {
            race,
            hispanic: 0.18,
            female: 0.508,
            age_bands: vec![
                band(0, 0, 0.012),
                band(1, 2, 0.024),
                band(3, 18, 0.200),
                band(19, 24, 0.085),
                band(25, 44, 0.265),
                band(45, 64, 0.255),
                band(65, 84, 0.140),
                band(85, 99, 0.019),
            ],
            state: default_state_shares(),
            group_quarters: 0.025,
            gave_birth: 0.055,
            industry,
            occupation,
            military_industry,
            reserve_industry: "928110P7".into(),
            active_duty: 0.0056,
            reserve_or_guard: 0.0004,
            veteran: 0.08,
            employed: 0.70,
            unemployed: 0.04,
            employed_65_plus: 0.19,
            education: [0.05, 0.07, 0.88],
        }
    }
}

impl Default for EconomicDistributions {
    fn default() -> Self {
        Self {
            family_income: LogNormalSpec {
                median: 78_000.0,
                sigma: 0.75,
            },
            personal_income: LogNormalSpec {
                median: 36_000.0,
                sigma: 0.9,
            },
            property_value: LogNormalSpec {
                median: 230_000.0,
                sigma: 0.7,
            },
            gross_rent: LogNormalSpec {
                median: 1_050.0,
                sigma: 0.45,
            },
            first_mortgage: LogNormalSpec {
                median: 1_400.0,
                sigma: 0.5,
            },
            hispanic_income_multiplier: 0.75,
            family_household: 0.85,
            owner_occupied: 0.64,
            mortgaged: 0.62,
            vehicle_available: 0.91,
            telephone_or_data: 0.975,
            complete_plumbing: 0.996,
            single_parent: 0.28,
            extra_rooms: [-2, 4],
            poverty_threshold_base: 13_064.0,
            poverty_threshold_per_person: 4_400.0,
        }
    }
}

fn younger_profile(income_multiplier: f64, hispanic: f64) -> RaceProfile {
    RaceProfile {
        age_bands: Some(vec![
            band(0, 0, 0.014),
            band(1, 2, 0.028),
            band(3, 18, 0.235),
            band(19, 24, 0.095),
            band(25, 44, 0.270),
            band(45, 64, 0.240),
            band(65, 84, 0.105),
            band(85, 99, 0.013),
        ]),
        hispanic: Some(hispanic),
        income_multiplier,
        gave_birth_multiplier: 1.1,
    }
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            population_size: 1_000_000,
            weight_range: [5.0, 15.0],
            household_size_distribution: vec![0.28, 0.34, 0.15, 0.13, 0.06, 0.04],
            marginals: Marginals::default(),
            race_profiles: BTreeMap::from([
                (Race::Black, younger_profile(0.62, 0.04)),
                (Race::Indigenous, younger_profile(0.60, 0.10)),
                (
                    Race::White,
                    RaceProfile {
                        hispanic: Some(0.17),
                        ..RaceProfile::default()
                    },
                ),
                (
                    Race::Other,
                    RaceProfile {
                        hispanic: Some(0.85),
                        income_multiplier: 0.8,
                        ..RaceProfile::default()
                    },
                ),
            ]),
            economic: EconomicDistributions::default(),
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<(), PopulationError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(PopulationError::Config(format!(
            "{name} = {v} is not a proportion in [0, 1]"
        )))
    }
}

fn check_partition<'a, I>(name: &str, values: I) -> Result<(), PopulationError>
where
    I: IntoIterator<Item = &'a f64>,
{
    let mut total = 0.0;
    for v in values {
        check_unit(name, *v)?;
        total += v;
    }
    if (total - 1.0).abs() > PARTITION_TOL {
        return Err(PopulationError::Config(format!(
            "{name} proportions sum to {total}, expected 1"
        )));
    }
    Ok(())
}

fn check_subpartition(name: &str, list: &[IndustryShare]) -> Result<(), PopulationError> {
    let mut total = 0.0;
    for s in list {
        check_unit(&format!("{name}.{}", s.code), s.share)?;
        total += s.share;
    }
    if total > 1.0 + PARTITION_TOL {
        return Err(PopulationError::Config(format!(
            "{name} shares sum to {total}, exceeding 1"
        )));
    }
    Ok(())
}

fn check_bands(name: &str, bands: &[AgeBand]) -> Result<(), PopulationError> {
    for b in bands {
        if b.min > b.max {
            return Err(PopulationError::Config(format!(
                "{name}: band {}..{} is empty",
                b.min, b.max
            )));
        }
    }
    check_partition(name, bands.iter().map(|b| &b.share))
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), PopulationError> {
        let m = &self.marginals;
        let e = &self.economic;
        let [lo, hi] = self.weight_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(PopulationError::Config(format!(
                "weight_range [{lo}, {hi}] must satisfy 0 < lo <= hi"
            )));
        }
        check_partition("household_size_distribution", &self.household_size_distribution)?;
        check_partition("race", m.race.values())?;
        check_bands("age_bands", &m.age_bands)?;
        check_partition("state", m.state.values())?;
        for code in m.state.keys() {
            StateCode::new(code).map_err(PopulationError::Config)?;
        }
        check_partition("education", &m.education)?;
        check_partition(
            "military_industry",
            m.military_industry.iter().map(|s| &s.share),
        )?;
        check_subpartition("industry", &m.industry)?;
        check_subpartition("occupation", &m.occupation)?;
        check_unit("employed + unemployed", m.employed + m.unemployed)?;
        check_unit("active_duty + reserve_or_guard", m.active_duty + m.reserve_or_guard)?;
        for (name, v) in [
            ("hispanic", m.hispanic),
            ("female", m.female),
            ("group_quarters", m.group_quarters),
            ("gave_birth", m.gave_birth),
            ("veteran", m.veteran),
            ("employed_65_plus", m.employed_65_plus),
            ("family_household", e.family_household),
            ("owner_occupied", e.owner_occupied),
            ("mortgaged", e.mortgaged),
            ("vehicle_available", e.vehicle_available),
            ("telephone_or_data", e.telephone_or_data),
            ("complete_plumbing", e.complete_plumbing),
            ("single_parent", e.single_parent),
        ] {
            check_unit(name, v)?;
        }
        for (race, profile) in &self.race_profiles {
            if let Some(b) = &profile.age_bands {
                check_bands(&format!("race_profiles.{race}.age_bands"), b)?;
            }
            if let Some(h) = profile.hispanic {
                check_unit(&format!("race_profiles.{race}.hispanic"), h)?;
            }
            if !(profile.income_multiplier > 0.0) || !(profile.gave_birth_multiplier >= 0.0) {
                return Err(PopulationError::Config(format!(
                    "race_profiles.{race}: multipliers must be positive"
                )));
            }
        }
        for (name, d) in [
            ("family_income", e.family_income),
            ("personal_income", e.personal_income),
            ("property_value", e.property_value),
            ("gross_rent", e.gross_rent),
            ("first_mortgage", e.first_mortgage),
        ] {
            if !(d.median > 0.0 && d.sigma >= 0.0) {
                return Err(PopulationError::Config(format!(
                    "{name}: median must be positive and sigma non-negative"
                )));
            }
        }
        if e.extra_rooms[0] > e.extra_rooms[1] {
            return Err(PopulationError::Config("extra_rooms range is empty".into()));
        }
        Ok(())
    }

    /// Expected weighted share of Black or Indigenous persons.
    pub fn black_indigenous_share(&self) -> f64 {
        self.marginals
            .race
            .iter()
            .filter(|(r, _)| r.is_black_or_indigenous())
            .map(|(_, s)| s)
            .sum()
    }
}

/// Inverse-CDF categorical draw over 64-bit integer thresholds.
#[derive(Debug, Clone)]
struct Categorical {
    thresholds: Vec<u64>,
}

impl Categorical {
    /// `weights` need not sum to one; any remainder maps to index `len`.
    fn new<I: IntoIterator<Item = f64>>(weights: I) -> Self {
        let mut cum = 0.0f64;
        let thresholds = weights
            .into_iter()
            .map(|w| {
                cum += w;
                if cum >= 1.0 {
                    u64::MAX
                } else {
                    (cum * 18_446_744_073_709_551_616.0) as u64
                }
            })
            .collect();
        Self { thresholds }
    }

    fn sample<R: RngCore>(&self, rng: &mut R) -> usize {
        let u = rng.next_u64();
        self.thresholds
            .iter()
            .position(|&t| u < t)
            .unwrap_or(self.thresholds.len())
    }
}

fn bernoulli<R: RngCore>(rng: &mut R, p: f64) -> bool {
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        rng.next_u64() < (p * 18_446_744_073_709_551_616.0) as u64
    }
}

struct AgeSampler {
    bands: Vec<AgeBand>,
    pick: Categorical,
}

impl AgeSampler {
    fn new(bands: &[AgeBand]) -> Self {
        Self {
            pick: Categorical::new(bands.iter().map(|b| b.share)),
            bands: bands.to_vec(),
        }
    }

    fn sample<R: RngCore>(&self, rng: &mut R) -> u16 {
        let i = self.pick.sample(rng).min(self.bands.len() - 1);
        let b = &self.bands[i];
        let span = u64::from(b.max - b.min) + 1;
        b.min + (rng.next_u64() % span) as u16
    }
}

struct Samplers {
    race: Vec<Race>,
    race_pick: Categorical,
    states: Vec<StateCode>,
    state_pick: Categorical,
    size_pick: Categorical,
    ages: BTreeMap<Race, AgeSampler>,
    education: Categorical,
    industry: Categorical,
    occupation: Categorical,
    military: Categorical,
    family_income: LogNormal<f64>,
    personal_income: LogNormal<f64>,
    property_value: LogNormal<f64>,
    gross_rent: LogNormal<f64>,
    first_mortgage: LogNormal<f64>,
}

fn lognormal(spec: LogNormalSpec) -> LogNormal<f64> {
    // validated: median > 0, sigma >= 0
    LogNormal::new(spec.median.ln(), spec.sigma).expect("validated lognormal parameters")
}

impl Samplers {
    fn new(cfg: &SyntheticConfig) -> Self {
        let m = &cfg.marginals;
        let race: Vec<Race> = m.race.keys().copied().collect();
        let states: Vec<StateCode> = m
            .state
            .keys()
            .map(|s| StateCode::new(s).expect("validated state code"))
            .collect();
        let ages = Race::ALL
            .iter()
            .map(|r| {
                let bands = cfg
                    .race_profiles
                    .get(r)
                    .and_then(|p| p.age_bands.as_deref())
                    .unwrap_or(&m.age_bands);
                (*r, AgeSampler::new(bands))
            })
            .collect();
        Self {
            race_pick: Categorical::new(m.race.values().copied()),
            race,
            state_pick: Categorical::new(m.state.values().copied()),
            states,
            size_pick: Categorical::new(cfg.household_size_distribution.iter().copied()),
            ages,
            education: Categorical::new(m.education),
            industry: Categorical::new(m.industry.iter().map(|s| s.share)),
            occupation: Categorical::new(m.occupation.iter().map(|s| s.share)),
            military: Categorical::new(m.military_industry.iter().map(|s| s.share)),
            family_income: lognormal(cfg.economic.family_income),
            personal_income: lognormal(cfg.economic.personal_income),
            property_value: lognormal(cfg.economic.property_value),
            gross_rent: lognormal(cfg.economic.gross_rent),
            first_mortgage: lognormal(cfg.economic.first_mortgage),
        }
    }
}

fn pick_code(list: &[IndustryShare], idx: usize) -> String {
    list.get(idx)
        .map(|s| s.code.clone())
        .unwrap_or_else(|| "OTHER".to_owned())
}

fn dollars(x: f64) -> f64 {
    x.round()
}

struct Generator<'a> {
    cfg: &'a SyntheticConfig,
    s: Samplers,
    rng: ChaCha8Rng,
    persons: Vec<PersonRecord>,
    households: Vec<HouseholdRecord>,
}

impl Generator<'_> {
    fn profile(&self, race: Race) -> RaceProfile {
        self.cfg.race_profiles.get(&race).cloned().unwrap_or_default()
    }

    fn person(
        &mut self,
        id: String,
        household_id: Option<String>,
        weight: f64,
        race: Race,
        hispanic: bool,
        state: &StateCode,
        income_multiplier: f64,
    ) -> PersonRecord {
        let m = &self.cfg.marginals;
        let rng = &mut self.rng;
        let age = self.s.ages[&race].sample(rng);
        let sex = if bernoulli(rng, m.female) {
            Sex::Female
        } else {
            Sex::Male
        };
        let gave_birth_rate = m.gave_birth
            * self
                .cfg
                .race_profiles
                .get(&race)
                .map_or(1.0, |p| p.gave_birth_multiplier);
        let gave_birth_past_year =
            sex == Sex::Female && (15..=44).contains(&age) && bernoulli(rng, gave_birth_rate);

        let mut military_status = None;
        let mut employment = None;
        let mut industry_code = None;
        let mut occupation_code = None;
        if age >= 16 {
            military_status = Some(MilitaryStatus::Never);
            let serving = (19..=64).contains(&age);
            let u = rng.random::<f64>();
            if serving && u < m.active_duty {
                military_status = Some(MilitaryStatus::ActiveDuty);
                employment = Some(Employment::ArmedForces);
                let i = self.s.military.sample(rng);
                industry_code = Some(pick_code(&m.military_industry, i));
            } else if serving && u < m.active_duty + m.reserve_or_guard {
                military_status = Some(MilitaryStatus::ReserveOrGuard);
                employment = Some(Employment::Employed);
                industry_code = Some(m.reserve_industry.clone());
            } else {
                if age >= 40 && bernoulli(rng, m.veteran) {
                    military_status = Some(MilitaryStatus::Veteran);
                }
                let (emp, unemp) = if age < 65 {
                    (m.employed, m.unemployed)
                } else {
                    (m.employed_65_plus, 0.0)
                };
                let v = rng.random::<f64>();
                employment = Some(if v < emp {
                    Employment::Employed
                } else if v < emp + unemp {
                    Employment::Unemployed
                } else {
                    Employment::NotInLaborForce
                });
                if employment == Some(Employment::Employed) {
                    let i = self.s.industry.sample(rng);
                    industry_code = Some(pick_code(&m.industry, i));
                }
            }
            if employment == Some(Employment::Employed)
                || employment == Some(Employment::ArmedForces)
            {
                let i = self.s.occupation.sample(rng);
                occupation_code = Some(pick_code(&m.occupation, i));
            }
        }
        let education = (age >= 25).then(|| {
            Education::ALL[self.s.education.sample(rng).min(Education::ALL.len() - 1)]
        });
        let personal_income = (age >= 16).then(|| {
            let working = matches!(
                employment,
                Some(Employment::Employed | Employment::ArmedForces)
            );
            let base = self.s.personal_income.sample(rng) * income_multiplier;
            dollars(if working { base } else { base * 0.3 })
        });
        PersonRecord {
            person_id: id,
            household_id,
            weight,
            age,
            sex,
            race,
            hispanic,
            industry_code,
            occupation_code,
            military_status,
            gave_birth_past_year,
            group_quarters: false,
            state: state.clone(),
            education,
            employment,
            personal_income,
        }
    }

    fn draw_unit_weight(&mut self) -> f64 {
        let [lo, hi] = self.cfg.weight_range;
        if hi > lo {
            self.rng.random_range(lo..=hi)
        } else {
            lo
        }
    }

    fn draw_race(&mut self) -> (Race, bool, f64) {
        let i = self.s.race_pick.sample(&mut self.rng).min(self.s.race.len() - 1);
        let race = self.s.race[i];
        let profile = self.profile(race);
        let hispanic = bernoulli(
            &mut self.rng,
            profile.hispanic.unwrap_or(self.cfg.marginals.hispanic),
        );
        let mut mult = profile.income_multiplier;
        if hispanic {
            mult *= self.cfg.economic.hispanic_income_multiplier;
        }
        (race, hispanic, mult)
    }

    fn draw_state(&mut self) -> StateCode {
        let i = self
            .s
            .state_pick
            .sample(&mut self.rng)
            .min(self.s.states.len() - 1);
        self.s.states[i].clone()
    }

    fn group_quarters_person(&mut self, weight: f64) {
        let (race, hispanic, mult) = self.draw_race();
        let state = self.draw_state();
        let id = format!("g{:08}", self.persons.len());
        let mut p = self.person(id, None, weight, race, hispanic, &state, mult);
        p.group_quarters = true;
        self.persons.push(p);
    }

    fn household_size(&mut self) -> u32 {
        self.s.size_pick.sample(&mut self.rng) as u32 + 1
    }

    fn household(&mut self, size: u32, member_weight: f64) {
        let e = self.cfg.economic.clone();
        let (race, hispanic, mult) = self.draw_race();
        let state = self.draw_state();
        let hid = format!("h{:08}", self.households.len());
        let mut members: Vec<PersonRecord> = (0..size)
            .map(|k| {
                let id = format!("p{:08}x{k}", self.households.len());
                self.person(id, Some(hid.clone()), member_weight, race, hispanic, &state, mult)
            })
            .collect();
        // oldest member first
        members.sort_by(|a, b| b.age.cmp(&a.age).then(a.person_id.cmp(&b.person_id)));

        let rng = &mut self.rng;
        let is_family = size >= 2 && bernoulli(rng, e.family_household);
        let family_income = is_family.then(|| dollars(self.s.family_income.sample(rng) * mult));
        let owner_occupied = bernoulli(rng, e.owner_occupied);
        let (property_value, first_mortgage, gross_rent) = if owner_occupied {
            let pv = dollars(self.s.property_value.sample(rng) * mult);
            let mort = bernoulli(rng, e.mortgaged)
                .then(|| dollars(self.s.first_mortgage.sample(rng) * mult));
            (Some(pv), mort, None)
        } else {
            (None, None, Some(dollars(self.s.gross_rent.sample(rng) * mult)))
        };
        let has_child = members.iter().any(|p| p.age < 18);
        let extra = rng.random_range(e.extra_rooms[0]..=e.extra_rooms[1]);
        let rooms_count = (size as i32 + extra).max(1) as u32;
        let threshold = e.poverty_threshold_base + e.poverty_threshold_per_person * f64::from(size - 1);
        let household = HouseholdRecord {
            household_id: hid,
            family_income,
            property_value,
            gross_rent,
            first_mortgage,
            owner_occupied,
            vehicle_available: bernoulli(rng, e.vehicle_available),
            telephone_or_data: bernoulli(rng, e.telephone_or_data),
            complete_plumbing: bernoulli(rng, e.complete_plumbing),
            persons_count: size,
            rooms_count,
            single_parent_with_children: is_family && has_child && bernoulli(rng, e.single_parent),
            poverty_ratio: family_income.map(|inc| (inc / threshold * 100.0).round()),
        };
        self.households.push(household);
        self.persons.extend(members);
    }
}

/// Generates a population whose weighted total equals `population_size`.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Population, PopulationError> {
    cfg.validate()?;
    let mut g = Generator {
        cfg,
        s: Samplers::new(cfg),
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        persons: Vec::new(),
        households: Vec::new(),
    };
    let target = cfg.population_size as f64;
    let mut total = 0.0f64;
    while total < target {
        let remaining = target - total;
        let w = g.draw_unit_weight();
        if bernoulli(&mut g.rng, cfg.marginals.group_quarters) {
            let w = w.min(remaining);
            g.group_quarters_person(w);
            total += w;
        } else {
            let size = g.household_size();
            let mass = w * f64::from(size);
            let member_weight = if mass >= remaining {
                remaining / f64::from(size)
            } else {
                w
            };
            g.household(size, member_weight);
            total += member_weight * f64::from(size);
        }
    }
    let Generator {
        persons, households, ..
    } = g;
    Population::new(persons, Some(households))
}
