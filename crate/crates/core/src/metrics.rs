//! Benchmarks and comparison statistics: death-share estimates by race,
//! recipient share curves and state fair-share indices.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use crate::allocation::{AllocationResult, Cell, Strata};
use crate::population::{neumaier_sum, Population, StateCode};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("race table is missing {0}")]
    MissingRace(DeathRace),
    #[error("race table lists {0} twice")]
    DuplicateRace(DeathRace),
    #[error("{0}")]
    Invalid(String),
    #[error("weighted deaths sum to zero")]
    ZeroDenominator,
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Csv {
        context: String,
        source: csv::Error,
    },
}

/// Race and ethnicity classes with published death rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeathRace {
    Indigenous,
    Asian,
    Black,
    Latino,
    White,
    PacificIslander,
}

impl DeathRace {
    pub const ALL: [DeathRace; 6] = [
        DeathRace::Indigenous,
        DeathRace::Asian,
        DeathRace::Black,
        DeathRace::Latino,
        DeathRace::White,
        DeathRace::PacificIslander,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DeathRace::Indigenous => "indigenous",
            DeathRace::Asian => "asian",
            DeathRace::Black => "black",
            DeathRace::Latino => "latino",
            DeathRace::White => "white",
            DeathRace::PacificIslander => "pacific_islander",
        }
    }
}

impl fmt::Display for DeathRace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeathRace {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        DeathRace::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown race class {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaceDeathRow {
    pub population_share: f64,
    pub death_rate: f64,
    pub age_adjusted_death_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaceDeathTable {
    rows: BTreeMap<DeathRace, RaceDeathRow>,
}

#[derive(Debug, Deserialize)]
struct RaceDeathCsv {
    race: String,
    population_share: f64,
    death_rate: f64,
    age_adjusted_death_rate: f64,
}

impl RaceDeathTable {
    /// Requires all six classes with non-negative values.
    pub fn new(rows: impl IntoIterator<Item = (DeathRace, RaceDeathRow)>) -> Result<Self, MetricsError> {
        let mut map = BTreeMap::new();
        for (race, row) in rows {
            let vals = [row.population_share, row.death_rate, row.age_adjusted_death_rate];
            if vals.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(MetricsError::Invalid(format!(
                    "{race}: values must be non-negative numbers"
                )));
            }
            if map.insert(race, row).is_some() {
                return Err(MetricsError::DuplicateRace(race));
            }
        }
        if let Some(r) = DeathRace::ALL.into_iter().find(|r| !map.contains_key(r)) {
            return Err(MetricsError::MissingRace(r));
        }
        Ok(RaceDeathTable { rows: map })
    }

    pub fn get(&self, race: DeathRace) -> &RaceDeathRow {
        &self.rows[&race]
    }

    /// Reads `race,population_share,death_rate,age_adjusted_death_rate`.
    pub fn read<R: Read>(input: R) -> Result<Self, MetricsError> {
        let mut rows = Vec::new();
        for (i, rec) in csv::Reader::from_reader(input).deserialize().enumerate() {
            let rec: RaceDeathCsv = rec.map_err(|e| MetricsError::Csv {
                context: format!("race death table row {}", i + 2),
                source: e,
            })?;
            let race = rec.race.parse().map_err(MetricsError::Invalid)?;
            rows.push((
                race,
                RaceDeathRow {
                    population_share: rec.population_share,
                    death_rate: rec.death_rate,
                    age_adjusted_death_rate: rec.age_adjusted_death_rate,
                },
            ));
        }
        RaceDeathTable::new(rows)
    }

    pub fn load(path: &Path) -> Result<Self, MetricsError> {
        let f = std::fs::File::open(path).map_err(|e| MetricsError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        RaceDeathTable::read(f)
    }
}

/// Estimated share of deaths falling in `races`: population-weighted death
/// rates of those races over the same sum across all six classes.
pub fn death_share_estimate(
    table: &RaceDeathTable,
    races: &[DeathRace],
    age_adjusted: bool,
) -> Result<f64, MetricsError> {
    let term = |r: DeathRace| {
        let row = table.get(r);
        let rate = if age_adjusted {
            row.age_adjusted_death_rate
        } else {
            row.death_rate
        };
        row.population_share * rate
    };
    let denom = neumaier_sum(DeathRace::ALL.into_iter().map(term));
    if !(denom > 0.0) {
        return Err(MetricsError::ZeroDenominator);
    }
    let mut selected = races.to_vec();
    selected.sort();
    selected.dedup();
    Ok(neumaier_sum(selected.into_iter().map(term)) / denom)
}

/// Statistic tracked along a supply sweep.
pub enum ShareStatistic<'a> {
    Indicator(&'a dyn Fn(&Cell) -> bool),
    MeanAge,
}

/// Statistic per sweep point, folded directly over cells. `None` where
/// nothing has been allocated.
pub fn group_share_curve(
    strata: &Strata,
    sweep: &[AllocationResult],
    statistic: &ShareStatistic<'_>,
) -> Vec<Option<f64>> {
    sweep
        .iter()
        .map(|res| {
            let alloc = res.cell_allocations(strata);
            let total = neumaier_sum(alloc.iter().copied());
            if !(total > 0.0) {
                return None;
            }
            let num = match statistic {
                ShareStatistic::Indicator(pred) => neumaier_sum(
                    strata
                        .cells()
                        .iter()
                        .zip(&alloc)
                        .filter(|(c, _)| pred(c))
                        .map(|(_, a)| *a),
                ),
                ShareStatistic::MeanAge => neumaier_sum(
                    strata
                        .cells()
                        .iter()
                        .zip(&alloc)
                        .map(|(c, a)| a * f64::from(c.age)),
                ),
            };
            Some(num / total)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StateOutcome {
    pub cases: f64,
    pub deaths: f64,
    pub population: f64,
}

/// Cases, deaths and weighted population per state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateOutcomeTable {
    pub states: BTreeMap<StateCode, StateOutcome>,
}

#[derive(Debug, Deserialize)]
struct StateCsv {
    state: String,
    cases: f64,
    deaths: f64,
}

impl StateOutcomeTable {
    /// Weighted population per state, with no case or death data.
    pub fn from_population(population: &Population) -> Self {
        let mut states: BTreeMap<StateCode, StateOutcome> = BTreeMap::new();
        for p in population.persons() {
            states.entry(p.state).or_default().population += p.weight;
        }
        StateOutcomeTable { states }
    }

    /// Reads `state,cases,deaths` into the table, keeping populations.
    pub fn read_outcomes<R: Read>(&mut self, input: R) -> Result<(), MetricsError> {
        for (i, rec) in csv::Reader::from_reader(input).deserialize().enumerate() {
            let line = i + 2;
            let rec: StateCsv = rec.map_err(|e| MetricsError::Csv {
                context: format!("state outcomes row {line}"),
                source: e,
            })?;
            let state = StateCode::new(&rec.state)
                .map_err(|e| MetricsError::Invalid(format!("state outcomes row {line}: {e}")))?;
            if !(rec.cases >= 0.0 && rec.deaths >= 0.0) {
                return Err(MetricsError::Invalid(format!(
                    "state outcomes row {line}: counts must be non-negative"
                )));
            }
            let entry = self.states.entry(state).or_default();
            entry.cases = rec.cases;
            entry.deaths = rec.deaths;
        }
        Ok(())
    }

    pub fn load_outcomes(&mut self, path: &Path) -> Result<(), MetricsError> {
        let f = std::fs::File::open(path).map_err(|e| MetricsError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        self.read_outcomes(f)
    }

    pub fn has_outcomes(&self) -> bool {
        self.states.values().any(|s| s.cases > 0.0 || s.deaths > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Benchmark {
    Population,
    Cases,
    Deaths,
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::Population, Benchmark::Cases, Benchmark::Deaths];

    pub fn as_str(self) -> &'static str {
        match self {
            Benchmark::Population => "population",
            Benchmark::Cases => "cases",
            Benchmark::Deaths => "deaths",
        }
    }

    fn value(self, o: &StateOutcome) -> f64 {
        match self {
            Benchmark::Population => o.population,
            Benchmark::Cases => o.cases,
            Benchmark::Deaths => o.deaths,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FairShareIndex {
    Finite(f64),
    /// Vaccines went to a state with no benchmark share.
    Infinite,
    /// Neither vaccines nor benchmark.
    Undefined,
}

impl fmt::Display for FairShareIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FairShareIndex::Finite(v) => write!(f, "{v}"),
            FairShareIndex::Infinite => f.write_str("inf"),
            FairShareIndex::Undefined => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairShareRow {
    pub state: StateCode,
    pub benchmark: Benchmark,
    pub supply: f64,
    pub vaccine_share: f64,
    pub benchmark_share: f64,
    pub index: FairShareIndex,
}

/// Allocated mass per state, in state order.
pub fn state_allocations(strata: &Strata, result: &AllocationResult) -> BTreeMap<StateCode, f64> {
    let mut out: BTreeMap<StateCode, f64> = BTreeMap::new();
    for (c, a) in strata.cells().iter().zip(result.cell_allocations(strata)) {
        *out.entry(c.state).or_default() += a;
    }
    out
}

/// State vaccine share over state benchmark share, for every state that
/// appears in either input.
pub fn state_fair_share_index(
    strata: &Strata,
    result: &AllocationResult,
    outcomes: &StateOutcomeTable,
    benchmark: Benchmark,
) -> Vec<FairShareRow> {
    let vaccines = state_allocations(strata, result);
    let v_total = neumaier_sum(vaccines.values().copied());
    let b_total = neumaier_sum(outcomes.states.values().map(|o| benchmark.value(o)));
    let mut states: Vec<StateCode> = vaccines.keys().chain(outcomes.states.keys()).copied().collect();
    states.sort();
    states.dedup();
    states
        .into_iter()
        .map(|state| {
            let v = vaccines.get(&state).copied().unwrap_or(0.0);
            let b = outcomes.states.get(&state).map_or(0.0, |o| benchmark.value(o));
            let vaccine_share = if v_total > 0.0 { v / v_total } else { 0.0 };
            let benchmark_share = if b_total > 0.0 { b / b_total } else { 0.0 };
            let index = if benchmark_share > 0.0 {
                FairShareIndex::Finite(vaccine_share / benchmark_share)
            } else if vaccine_share > 0.0 {
                FairShareIndex::Infinite
            } else {
                FairShareIndex::Undefined
            };
            FairShareRow {
                state,
                benchmark,
                supply: result.supply,
                vaccine_share,
                benchmark_share,
                index,
            }
        })
        .collect()
}

pub const FAIR_SHARE_COLUMNS: [&str; 5] = ["state", "benchmark", "supply", "index", "policy"];

/// Writes `state,benchmark,supply,index,policy`; infinite indices print as
/// `inf`, undefined ones as empty.
pub fn write_fair_share<W: Write>(out: W, rows: &[(String, FairShareRow)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FAIR_SHARE_COLUMNS)?;
    for (policy, r) in rows {
        w.write_record([
            r.state.as_str(),
            r.benchmark.as_str(),
            &r.supply.to_string(),
            &r.index.to_string(),
            policy,
        ])?;
    }
    w.flush()?;
    Ok(())
}
