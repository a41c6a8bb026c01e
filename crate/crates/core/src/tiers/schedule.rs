//! The group-to-tier schedule and its declarative membership predicates.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{InfantClass, TierError};
use crate::population::{Education, Employment, MilitaryStatus, PersonRecord, Race, Sex, StateCode};

pub const RANK_COUNT: usize = 11;
pub const TIER1_RANKS: usize = 7;

/// Priority rank: tier 1 subtiers 1-7, then tiers 2-5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rank {
    pub tier: u8,
    pub subtier: Option<u8>,
}

impl Rank {
    pub fn new(tier: u8, subtier: Option<u8>) -> Result<Self, String> {
        match (tier, subtier) {
            (1, Some(s)) if (1..=7).contains(&s) => Ok(Self { tier, subtier }),
            (1, _) => Err("tier 1 needs a subtier in 1..=7".into()),
            (2..=5, None) => Ok(Self { tier, subtier }),
            (2..=5, Some(_)) => Err(format!("tier {tier} takes no subtier")),
            _ => Err(format!("tier {tier} is outside 1..=5")),
        }
    }

    pub fn tier1(subtier: u8) -> Self {
        Self {
            tier: 1,
            subtier: Some(subtier),
        }
    }

    pub fn tier(tier: u8) -> Self {
        Self {
            tier,
            subtier: None,
        }
    }

    /// Position in priority order, 0..RANK_COUNT.
    pub fn index(self) -> usize {
        match self.subtier {
            Some(s) => usize::from(s) - 1,
            None => usize::from(self.tier) + 5,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i < TIER1_RANKS {
            Self::tier1(i as u8 + 1)
        } else {
            Self::tier(i as u8 - 5)
        }
    }

    pub fn all() -> impl Iterator<Item = Rank> {
        (0..RANK_COUNT).map(Rank::from_index)
    }

    pub fn is_tier1(self) -> bool {
        self.tier == 1
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.subtier {
            Some(s) => write!(f, "{}.{}", self.tier, s),
            None => write!(f, "{}", self.tier),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentMode {
    Probabilistic,
    TakeAll,
    Demographic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    In,
    NotIn,
    Eq,
    Prefix,
    Between,
    Ge,
    Le,
    Present,
    Absent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub field: String,
    pub op: Op,
    #[serde(default)]
    pub values: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredicateSpec {
    /// At least one must hold (ignored when empty).
    pub any: Vec<ConditionSpec>,
    /// All must hold.
    pub all: Vec<ConditionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontlineRule {
    /// Members this rule applies to; empty matches every member.
    #[serde(default)]
    pub when: PredicateSpec,
    #[serde(default = "half")]
    pub fraction: f64,
    pub subtier: u8,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDefinition {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub tier: u8,
    #[serde(default)]
    pub subtier: Option<u8>,
    #[serde(default)]
    pub external_size: Option<f64>,
    pub mode: AssignmentMode,
    #[serde(default)]
    pub superset: PredicateSpec,
    #[serde(default)]
    pub exclude: Vec<String>,
    /// Checked in order; the first matching rule decides the frontline coin.
    #[serde(default)]
    pub frontline: Vec<FrontlineRule>,
}

impl GroupDefinition {
    pub fn rank(&self) -> Rank {
        Rank {
            tier: self.tier,
            subtier: self.subtier,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScheduleFile {
    reference_population: f64,
    pregnancy_group: String,
    #[serde(default)]
    residual_group: Option<String>,
    #[serde(default = "pregnancy_days")]
    pregnancy_days: f64,
    #[serde(default = "year_days")]
    year_days: f64,
    #[serde(rename = "group")]
    groups: Vec<GroupDefinition>,
}

fn pregnancy_days() -> f64 {
    268.0
}

fn year_days() -> f64 {
    365.0
}

/// Fields a predicate can test: person columns plus the labels produced by
/// earlier stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Age,
    Text(TextField),
    Flag(FlagField),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TextField {
    Sex,
    Race,
    IndustryCode,
    OccupationCode,
    MilitaryStatus,
    State,
    Education,
    Employment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FlagField {
    Hispanic,
    GaveBirthPastYear,
    GroupQuarters,
    HighRisk,
    Infant6To11Months,
    Infant0To5Months,
    HouseholdContactOfInfant,
    Pregnant,
}

fn parse_field(name: &str) -> Option<Field> {
    use FlagField::*;
    use TextField::*;
    Some(match name {
        "age" => Field::Age,
        "sex" => Field::Text(Sex),
        "race" => Field::Text(Race),
        "industry_code" => Field::Text(IndustryCode),
        "occupation_code" => Field::Text(OccupationCode),
        "military_status" => Field::Text(MilitaryStatus),
        "state" => Field::Text(State),
        "education" => Field::Text(Education),
        "employment" => Field::Text(Employment),
        "hispanic" => Field::Flag(Hispanic),
        "gave_birth_past_year" => Field::Flag(GaveBirthPastYear),
        "group_quarters" => Field::Flag(GroupQuarters),
        "high_risk" => Field::Flag(HighRisk),
        "infant_6_11_months" => Field::Flag(Infant6To11Months),
        "infant_0_5_months" => Field::Flag(Infant0To5Months),
        "household_contact_of_infant_under_6_months" => Field::Flag(HouseholdContactOfInfant),
        "pregnant" => Field::Flag(Pregnant),
        _ => return None,
    })
}

fn check_enum_value(field: TextField, v: &str) -> Result<(), String> {
    match field {
        TextField::Sex => v.parse::<Sex>().map(drop),
        TextField::Race => v.parse::<Race>().map(drop),
        TextField::MilitaryStatus => v.parse::<MilitaryStatus>().map(drop),
        TextField::Education => v.parse::<Education>().map(drop),
        TextField::Employment => v.parse::<Employment>().map(drop),
        TextField::State => StateCode::new(v).map(drop),
        TextField::IndustryCode | TextField::OccupationCode => Ok(()),
    }
}

/// Everything a predicate may look at for one person.
#[derive(Debug, Clone, Copy)]
pub struct PersonContext<'a> {
    pub person: &'a PersonRecord,
    pub high_risk: bool,
    pub infant: Option<InfantClass>,
    pub household_contact: bool,
    pub pregnant: bool,
}

impl<'a> PersonContext<'a> {
    fn text(&self, f: TextField) -> Option<&'a str> {
        let p = self.person;
        match f {
            TextField::Sex => Some(p.sex.as_str()),
            TextField::Race => Some(p.race.as_str()),
            TextField::IndustryCode => p.industry_code.as_deref(),
            TextField::OccupationCode => p.occupation_code.as_deref(),
            TextField::MilitaryStatus => p.military_status.map(|m| m.as_str()),
            TextField::State => Some(p.state.as_str()),
            TextField::Education => p.education.map(|e| e.as_str()),
            TextField::Employment => p.employment.map(|e| e.as_str()),
        }
    }

    fn flag(&self, f: FlagField) -> bool {
        let p = self.person;
        match f {
            FlagField::Hispanic => p.hispanic,
            FlagField::GaveBirthPastYear => p.gave_birth_past_year,
            FlagField::GroupQuarters => p.group_quarters,
            FlagField::HighRisk => self.high_risk,
            FlagField::Infant6To11Months => self.infant == Some(InfantClass::SixToElevenMonths),
            FlagField::Infant0To5Months => self.infant == Some(InfantClass::UnderSixMonths),
            FlagField::HouseholdContactOfInfant => self.household_contact,
            FlagField::Pregnant => self.pregnant,
        }
    }
}

#[derive(Debug, Clone)]
enum Compiled {
    AgeRange(u16, u16),
    TextIn(TextField, HashSet<String>, bool),
    TextPrefix(TextField, Vec<String>),
    TextPresent(TextField, bool),
    Flag(FlagField, bool),
}

impl Compiled {
    fn eval(&self, ctx: &PersonContext<'_>) -> bool {
        match self {
            Compiled::AgeRange(lo, hi) => (*lo..=*hi).contains(&ctx.person.age),
            Compiled::TextIn(f, set, negate) => {
                let hit = ctx.text(*f).is_some_and(|v| set.contains(v));
                hit != *negate
            }
            Compiled::TextPrefix(f, prefixes) => ctx
                .text(*f)
                .is_some_and(|v| prefixes.iter().any(|p| v.starts_with(p.as_str()))),
            Compiled::TextPresent(f, want) => ctx.text(*f).is_some() == *want,
            Compiled::Flag(f, want) => ctx.flag(*f) == *want,
        }
    }
}

fn compile_condition(c: &ConditionSpec) -> Result<Compiled, String> {
    let field = parse_field(&c.field).ok_or_else(|| format!("unknown field {:?}", c.field))?;
    let one = || -> Result<&str, String> {
        match c.values.as_slice() {
            [v] => Ok(v.as_str()),
            _ => Err(format!("{:?} on {} takes exactly one value", c.op, c.field)),
        }
    };
    let age = |s: &str| s.parse::<u16>().map_err(|e| format!("age value {s:?}: {e}"));
    match (field, c.op) {
        (Field::Age, Op::Between) => match c.values.as_slice() {
            [lo, hi] => Ok(Compiled::AgeRange(age(lo)?, age(hi)?)),
            _ => Err("between takes two values".into()),
        },
        (Field::Age, Op::Eq) => {
            let a = age(one()?)?;
            Ok(Compiled::AgeRange(a, a))
        }
        (Field::Age, Op::Ge) => Ok(Compiled::AgeRange(age(one()?)?, u16::MAX)),
        (Field::Age, Op::Le) => Ok(Compiled::AgeRange(0, age(one()?)?)),
        (Field::Text(f), Op::In | Op::NotIn | Op::Eq) => {
            if c.values.is_empty() {
                return Err(format!("{} needs values", c.field));
            }
            if c.op == Op::Eq {
                one()?;
            }
            for v in &c.values {
                check_enum_value(f, v).map_err(|e| format!("{}: {e}", c.field))?;
            }
            Ok(Compiled::TextIn(
                f,
                c.values.iter().cloned().collect(),
                c.op == Op::NotIn,
            ))
        }
        (Field::Text(f), Op::Prefix) if !c.values.is_empty() => {
            Ok(Compiled::TextPrefix(f, c.values.clone()))
        }
        (Field::Text(f), Op::Present) => Ok(Compiled::TextPresent(f, true)),
        (Field::Text(f), Op::Absent) => Ok(Compiled::TextPresent(f, false)),
        (Field::Flag(f), Op::Eq) => {
            let want = match one()? {
                "true" | "1" => true,
                "false" | "0" => false,
                other => return Err(format!("{}: expected a boolean, found {other:?}", c.field)),
            };
            Ok(Compiled::Flag(f, want))
        }
        (_, op) => Err(format!("operator {op:?} does not apply to {}", c.field)),
    }
}

#[derive(Debug, Clone, Default)]
pub struct Predicate {
    any: Vec<Compiled>,
    all: Vec<Compiled>,
}

impl Predicate {
    pub fn compile(spec: &PredicateSpec) -> Result<Self, String> {
        Ok(Self {
            any: spec.any.iter().map(compile_condition).collect::<Result<_, _>>()?,
            all: spec.all.iter().map(compile_condition).collect::<Result<_, _>>()?,
        })
    }

    pub fn matches(&self, ctx: &PersonContext<'_>) -> bool {
        (self.any.is_empty() || self.any.iter().any(|c| c.eval(ctx)))
            && self.all.iter().all(|c| c.eval(ctx))
    }
}

#[derive(Debug, Clone)]
pub struct CompiledFrontline {
    pub when: Predicate,
    pub fraction: f64,
    pub rank: Rank,
}

#[derive(Debug, Clone)]
pub struct CompiledGroup {
    pub def: GroupDefinition,
    pub superset: Predicate,
    pub exclude: Vec<usize>,
    pub frontline: Vec<CompiledFrontline>,
}

/// A validated schedule. Groups are processed in file order; priority is
/// by rank.
#[derive(Debug, Clone)]
pub struct TierSchedule {
    pub reference_population: f64,
    pub groups: Vec<CompiledGroup>,
    pub pregnancy_group: usize,
    pub residual_group: Option<usize>,
    pub pregnancy_probability: f64,
    source: ScheduleFile,
}

pub const DEFAULT_SCHEDULE_TOML: &str = include_str!("../../data/default_schedule.toml");

impl TierSchedule {
    pub fn from_toml(text: &str) -> Result<Self, TierError> {
        let file: ScheduleFile =
            toml::from_str(text).map_err(|e| TierError::Schedule(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self, TierError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TierError::Schedule(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn default_schedule() -> Self {
        Self::from_toml(DEFAULT_SCHEDULE_TOML).expect("bundled schedule is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.source).unwrap_or_default()
    }

    fn from_file(file: ScheduleFile) -> Result<Self, TierError> {
        let bad = |group: &str, msg: String| TierError::Schedule(format!("group {group}: {msg}"));
        if !(file.reference_population > 0.0) {
            return Err(TierError::Schedule("reference_population must be positive".into()));
        }
        if !(file.pregnancy_days >= 0.0 && file.year_days > 0.0 && file.pregnancy_days <= file.year_days)
        {
            return Err(TierError::Schedule("pregnancy_days must lie in [0, year_days]".into()));
        }
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut groups = Vec::with_capacity(file.groups.len());
        for (gi, g) in file.groups.iter().enumerate() {
            Rank::new(g.tier, g.subtier).map_err(|m| bad(&g.id, m))?;
            if g.mode == AssignmentMode::Probabilistic && !g.external_size.is_some_and(|s| s > 0.0)
            {
                return Err(bad(&g.id, "probabilistic groups need external_size > 0".into()));
            }
            let superset = Predicate::compile(&g.superset).map_err(|m| bad(&g.id, m))?;
            let mut exclude = Vec::new();
            for e in &g.exclude {
                let &j = index
                    .get(e)
                    .ok_or_else(|| bad(&g.id, format!("excludes {e:?}, which is not an earlier group")))?;
                exclude.push(j);
            }
            let mut frontline = Vec::new();
            for r in &g.frontline {
                if g.tier != 1 {
                    return Err(bad(&g.id, "frontline splits apply to tier 1 only".into()));
                }
                if !(0.0..=1.0).contains(&r.fraction) {
                    return Err(bad(&g.id, format!("frontline fraction {} outside [0, 1]", r.fraction)));
                }
                let rank = Rank::new(1, Some(r.subtier)).map_err(|m| bad(&g.id, m))?;
                frontline.push(CompiledFrontline {
                    when: Predicate::compile(&r.when).map_err(|m| bad(&g.id, m))?,
                    fraction: r.fraction,
                    rank,
                });
            }
            if index.insert(g.id.clone(), gi).is_some() {
                return Err(bad(&g.id, "duplicate id".into()));
            }
            groups.push(CompiledGroup {
                def: g.clone(),
                superset,
                exclude,
                frontline,
            });
        }
        let pregnancy_group = *index.get(&file.pregnancy_group).ok_or_else(|| {
            TierError::Schedule(format!("pregnancy_group {:?} is not defined", file.pregnancy_group))
        })?;
        let residual_group = match &file.residual_group {
            Some(r) => Some(*index.get(r).ok_or_else(|| {
                TierError::Schedule(format!("residual_group {r:?} is not defined"))
            })?),
            None => None,
        };
        Ok(Self {
            reference_population: file.reference_population,
            groups,
            pregnancy_group,
            residual_group,
            pregnancy_probability: file.pregnancy_days / file.year_days,
            source: file,
        })
    }

    pub fn group(&self, id: &str) -> Option<(usize, &CompiledGroup)> {
        self.groups.iter().enumerate().find(|(_, g)| g.def.id == id)
    }
}
