//! High-risk imputation from survey-derived demographic cell probabilities.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::population::{Population, Race, Sex};
use crate::rng::{stable_hash, Stream};

pub const AGE_BIN_COUNT: usize = 14;

pub const AGE_BIN_LABELS: [&str; AGE_BIN_COUNT] = [
    "18-24", "25-29", "30-34", "35-39", "40-44", "45-49", "50-54", "55-59", "60-64", "65-69",
    "70-74", "75-79", "80-84", "85+",
];

pub const SURVEY_COLUMNS: [&str; 12] = [
    "age",
    "sex",
    "race",
    "hispanic",
    "skin_cancer",
    "other_cancer",
    "kidney_disease",
    "copd",
    "obese_bmi30",
    "coronary_heart_disease",
    "diabetes",
    "survey_weight",
];

/// Bin index for an age. Ages under 18 share the 18-24 bin.
pub fn age_bin(age: u16) -> usize {
    if age < 25 {
        0
    } else {
        (usize::from(age - 25) / 5 + 1).min(AGE_BIN_COUNT - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    SkinCancer,
    OtherCancer,
    KidneyDisease,
    Copd,
    ObeseBmi30,
    CoronaryHeartDisease,
    Diabetes,
}

impl Condition {
    pub const ALL: [Condition; 7] = [
        Condition::SkinCancer,
        Condition::OtherCancer,
        Condition::KidneyDisease,
        Condition::Copd,
        Condition::ObeseBmi30,
        Condition::CoronaryHeartDisease,
        Condition::Diabetes,
    ];

    pub fn as_str(self) -> &'static str {
        SURVEY_COLUMNS[4 + self as usize]
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One survey respondent. Demographics are optional because respondents with
/// any unknown demographic are dropped rather than rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskSurveyRecord {
    pub age: u16,
    pub sex: Option<Sex>,
    pub race: Option<Race>,
    pub hispanic: Option<bool>,
    pub conditions: Vec<Condition>,
    pub survey_weight: f64,
}

impl RiskSurveyRecord {
    pub fn is_high_risk(&self) -> bool {
        !self.conditions.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("survey record {index}: {message}")]
    InvalidRecord { index: usize, message: String },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub age_bin: u8,
    pub sex: Sex,
    pub race: Race,
    pub hispanic: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Mass {
    total: f64,
    high_risk: f64,
}

impl Mass {
    fn add(&mut self, weight: f64, high: bool) {
        self.total += weight;
        if high {
            self.high_risk += weight;
        }
    }

    fn probability(&self) -> Option<f64> {
        (self.total > 0.0).then(|| (self.high_risk / self.total).clamp(0.0, 1.0))
    }
}

/// Weighted high-risk probability per (age bin, sex, race, Hispanic) cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RiskTable {
    cells: BTreeMap<CellKey, Mass>,
    bins: [Mass; AGE_BIN_COUNT],
}

/// Where a looked-up probability came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup {
    Cell,
    AgeBinMarginal,
    Default,
}

impl RiskTable {
    pub fn cell(&self, key: &CellKey) -> Option<f64> {
        self.cells.get(key).and_then(Mass::probability)
    }

    pub fn age_bin_marginal(&self, bin: usize) -> Option<f64> {
        self.bins.get(bin).and_then(Mass::probability)
    }

    pub fn cells(&self) -> impl Iterator<Item = (CellKey, f64)> + '_ {
        self.cells
            .iter()
            .filter_map(|(k, m)| m.probability().map(|p| (*k, p)))
    }

    /// Probability for a person, falling back to the age-bin marginal and
    /// then to zero.
    pub fn probability(&self, age: u16, sex: Sex, race: Race, hispanic: bool) -> (f64, Lookup) {
        let bin = age_bin(age);
        let key = CellKey {
            age_bin: bin as u8,
            sex,
            race,
            hispanic,
        };
        if let Some(p) = self.cell(&key) {
            (p, Lookup::Cell)
        } else if let Some(p) = self.age_bin_marginal(bin) {
            (p, Lookup::AgeBinMarginal)
        } else {
            (0.0, Lookup::Default)
        }
    }
}

pub fn build_risk_table(records: &[RiskSurveyRecord]) -> Result<RiskTable, RiskError> {
    let mut table = RiskTable::default();
    for (index, r) in records.iter().enumerate() {
        if r.age < 18 {
            return Err(RiskError::InvalidRecord {
                index,
                message: format!("age {} is below 18", r.age),
            });
        }
        if !(r.survey_weight > 0.0 && r.survey_weight.is_finite()) {
            return Err(RiskError::InvalidRecord {
                index,
                message: format!("survey_weight {} must be positive", r.survey_weight),
            });
        }
        let (Some(sex), Some(race), Some(hispanic)) = (r.sex, r.race, r.hispanic) else {
            continue;
        };
        let bin = age_bin(r.age);
        let key = CellKey {
            age_bin: bin as u8,
            sex,
            race,
            hispanic,
        };
        let high = r.is_high_risk();
        table.cells.entry(key).or_default().add(r.survey_weight, high);
        table.bins[bin].add(r.survey_weight, high);
    }
    Ok(table)
}

/// Draws one high-risk flag per person. Each draw is keyed by
/// `(seed, person_id)`, so the result is independent of person order.
pub fn impute_high_risk(population: &Population, table: &RiskTable, seed: u64) -> Vec<bool> {
    let stream = Stream::new(seed, "risk");
    population
        .persons()
        .par_iter()
        .map(|p| {
            let (prob, _) = table.probability(p.age, p.sex, p.race, p.hispanic);
            stream.bernoulli(stable_hash(&p.person_id), 0, prob)
        })
        .collect()
}

/// Counts of persons (weighted) resolved by each lookup route.
pub fn lookup_coverage(population: &Population, table: &RiskTable) -> BTreeMap<&'static str, f64> {
    let mut out = BTreeMap::new();
    for p in population.persons() {
        let (_, how) = table.probability(p.age, p.sex, p.race, p.hispanic);
        let label = match how {
            Lookup::Cell => "cell",
            Lookup::AgeBinMarginal => "age_bin_marginal",
            Lookup::Default => "default_zero",
        };
        *out.entry(label).or_insert(0.0) += p.weight;
    }
    out
}

pub fn read_risk_survey<R: Read>(input: R, path: &Path) -> Result<Vec<RiskSurveyRecord>, RiskError> {
    let perr = |line: u64, message: String| RiskError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut rows = rdr.records();
    let header = match rows.next() {
        Some(h) => h.map_err(|e| perr(1, e.to_string()))?,
        None => return Err(perr(1, "missing header".into())),
    };
    if header.iter().ne(SURVEY_COLUMNS.iter().copied()) {
        return Err(perr(
            1,
            format!("header must be {}", SURVEY_COLUMNS.join(",")),
        ));
    }
    let mut out = Vec::new();
    for (i, row) in rows.enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| perr(line, e.to_string()))?;
        if row.len() != SURVEY_COLUMNS.len() {
            return Err(perr(
                line,
                format!("expected {} columns, found {}", SURVEY_COLUMNS.len(), row.len()),
            ));
        }
        let age = row[0]
            .parse::<u16>()
            .map_err(|e| perr(line, format!("age: {e}")))?;
        let sex = opt_enum::<Sex>(&row[1]).map_err(|m| perr(line, m))?;
        let race = opt_enum::<Race>(&row[2]).map_err(|m| perr(line, m))?;
        let hispanic = match &row[3] {
            "" => None,
            s => Some(bit(s).map_err(|m| perr(line, format!("hispanic: {m}")))?),
        };
        let mut conditions = Vec::new();
        for (k, c) in Condition::ALL.iter().enumerate() {
            if bit(&row[4 + k]).map_err(|m| perr(line, format!("{c}: {m}")))? {
                conditions.push(*c);
            }
        }
        let survey_weight = row[11]
            .parse::<f64>()
            .map_err(|e| perr(line, format!("survey_weight: {e}")))?;
        out.push(RiskSurveyRecord {
            age,
            sex,
            race,
            hispanic,
            conditions,
            survey_weight,
        });
    }
    Ok(out)
}

pub fn load_risk_survey(path: &Path) -> Result<Vec<RiskSurveyRecord>, RiskError> {
    let file = std::fs::File::open(path).map_err(|source| RiskError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_risk_survey(file, path)
}

fn opt_enum<T: FromStr<Err = String>>(raw: &str) -> Result<Option<T>, String> {
    if raw.is_empty() {
        Ok(None)
    } else {
        raw.parse().map(Some)
    }
}

fn bit(raw: &str) -> Result<bool, String> {
    match raw {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format!("expected 0 or 1, found {other:?}")),
    }
}

pub fn write_risk_survey<W: Write>(out: W, records: &[RiskSurveyRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SURVEY_COLUMNS)?;
    for r in records {
        let mut row: Vec<String> = vec![
            r.age.to_string(),
            r.sex.map(|s| s.to_string()).unwrap_or_default(),
            r.race.map(|s| s.to_string()).unwrap_or_default(),
            r.hispanic.map(|h| u8::from(h).to_string()).unwrap_or_default(),
        ];
        for c in Condition::ALL {
            row.push(u8::from(r.conditions.contains(&c)).to_string());
        }
        row.push(r.survey_weight.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parameters for a synthetic survey with a fixed number of respondents per
/// demographic cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSurveyConfig {
    pub seed: u64,
    pub records_per_cell: u32,
    /// Baseline high-risk probability per age bin.
    pub base_risk: [f64; AGE_BIN_COUNT],
    pub race_multiplier: BTreeMap<Race, f64>,
    pub hispanic_multiplier: f64,
    pub female_multiplier: f64,
}

impl Default for SyntheticSurveyConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            records_per_cell: 60,
            base_risk: [
                0.30, 0.36, 0.40, 0.43, 0.46, 0.50, 0.54, 0.58, 0.62, 0.66, 0.68, 0.70, 0.70, 0.68,
            ],
            race_multiplier: BTreeMap::from([
                (Race::White, 1.0),
                (Race::Black, 1.2),
                (Race::Indigenous, 1.25),
                (Race::Asian, 0.6),
                (Race::PacificIslander, 1.2),
                (Race::Other, 1.0),
                (Race::Multiracial, 1.05),
            ]),
            hispanic_multiplier: 1.05,
            female_multiplier: 0.97,
        }
    }
}

impl SyntheticSurveyConfig {
    pub fn cell_probability(&self, bin: usize, sex: Sex, race: Race, hispanic: bool) -> f64 {
        let mut p = self.base_risk[bin] * self.race_multiplier.get(&race).copied().unwrap_or(1.0);
        if hispanic {
            p *= self.hispanic_multiplier;
        }
        if sex == Sex::Female {
            p *= self.female_multiplier;
        }
        p.clamp(0.0, 1.0)
    }
}

/// Generates survey respondents covering every demographic cell.
pub fn generate_survey(cfg: &SyntheticSurveyConfig) -> Vec<RiskSurveyRecord> {
    let stream = Stream::new(cfg.seed, "survey");
    let mut out = Vec::new();
    let mut item = 0u64;
    for bin in 0..AGE_BIN_COUNT {
        let (lo, span) = if bin == AGE_BIN_COUNT - 1 {
            (85u16, 15u64)
        } else if bin == 0 {
            (18, 7)
        } else {
            (25 + 5 * (bin as u16 - 1), 5)
        };
        for &sex in Sex::ALL {
            for &race in Race::ALL {
                for hispanic in [false, true] {
                    let p = cfg.cell_probability(bin, sex, race, hispanic);
                    for _ in 0..cfg.records_per_cell {
                        let age = lo + (stream.draw(item, 0) % span) as u16;
                        let conditions = if stream.bernoulli(item, 1, p) {
                            let k = (stream.draw(item, 2) % Condition::ALL.len() as u64) as usize;
                            vec![Condition::ALL[k]]
                        } else {
                            Vec::new()
                        };
                        out.push(RiskSurveyRecord {
                            age,
                            sex: Some(sex),
                            race: Some(race),
                            hispanic: Some(hispanic),
                            conditions,
                            survey_weight: 0.5 + stream.uniform(item, 3),
                        });
                        item += 1;
                    }
                }
            }
        }
    }
    out
}
