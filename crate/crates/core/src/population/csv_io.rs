use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::{HouseholdRecord, PersonRecord, Population, PopulationError, StateCode};

pub const PERSON_COLUMNS: [&str; 13] = [
    "person_id",
    "household_id",
    "weight",
    "age",
    "sex",
    "race",
    "hispanic",
    "industry_code",
    "occupation_code",
    "military_status",
    "gave_birth_past_year",
    "group_quarters",
    "state",
];

/// Optional trailing person columns feeding the deprivation components.
pub const PERSON_EXTENSION_COLUMNS: [&str; 3] = ["education", "employment", "personal_income"];

pub const HOUSEHOLD_COLUMNS: [&str; 13] = [
    "household_id",
    "family_income",
    "property_value",
    "gross_rent",
    "first_mortgage",
    "owner_occupied",
    "vehicle_available",
    "telephone_or_data",
    "complete_plumbing",
    "persons_count",
    "rooms_count",
    "single_parent_with_children",
    "poverty_ratio",
];

/// Reads the person CSV and, when given, the household CSV, then validates
/// and links them.
pub fn ingest_population(
    person_csv: &Path,
    household_csv: Option<&Path>,
) -> Result<Population, PopulationError> {
    let persons = read_persons(open(person_csv)?, person_csv)?;
    let households = match household_csv {
        Some(p) => Some(read_households(open(p)?, p)?),
        None => None,
    };
    Population::new(persons, households)
}

fn open(path: &Path) -> Result<File, PopulationError> {
    File::open(path).map_err(|source| PopulationError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct RowCtx<'a> {
    path: &'a Path,
    line: u64,
}

impl RowCtx<'_> {
    fn err(&self, message: impl Into<String>) -> PopulationError {
        PopulationError::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            message: message.into(),
        }
    }

    fn opt_str(&self, raw: &str) -> Option<String> {
        (!raw.is_empty()).then(|| raw.to_owned())
    }

    fn parse<T: FromStr>(&self, column: &str, raw: &str) -> Result<T, PopulationError>
    where
        T::Err: std::fmt::Display,
    {
        raw.parse::<T>()
            .map_err(|e| self.err(format!("column {column}: {e} (value {raw:?})")))
    }

    fn opt_parse<T: FromStr>(&self, column: &str, raw: &str) -> Result<Option<T>, PopulationError>
    where
        T::Err: std::fmt::Display,
    {
        if raw.is_empty() {
            Ok(None)
        } else {
            self.parse(column, raw).map(Some)
        }
    }

    fn flag(&self, column: &str, raw: &str) -> Result<bool, PopulationError> {
        match raw {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(self.err(format!("column {column}: expected 0 or 1, got {other:?}"))),
        }
    }

    fn finite(&self, column: &str, raw: &str) -> Result<Option<f64>, PopulationError> {
        let v: Option<f64> = self.opt_parse(column, raw)?;
        match v {
            Some(x) if !x.is_finite() => Err(self.err(format!("column {column}: not finite"))),
            v => Ok(v),
        }
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input)
}

fn check_header(
    path: &Path,
    header: &csv::StringRecord,
    required: &[&str],
    optional: &[&str],
) -> Result<usize, PopulationError> {
    let got: Vec<&str> = header.iter().collect();
    let bad = || PopulationError::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: format!(
            "header must be {:?} optionally followed by {:?}, got {:?}",
            required, optional, got
        ),
    };
    if got.len() < required.len() || got[..required.len()] != *required {
        return Err(bad());
    }
    let extra = &got[required.len()..];
    if extra.len() > optional.len() || extra != &optional[..extra.len()] {
        return Err(bad());
    }
    Ok(got.len())
}

pub fn read_persons<R: Read>(input: R, path: &Path) -> Result<Vec<PersonRecord>, PopulationError> {
    let mut rdr = reader(input);
    let header = rdr
        .headers()
        .map_err(|e| csv_err(path, 1, e))?
        .clone();
    let width = check_header(path, &header, &PERSON_COLUMNS, &PERSON_EXTENSION_COLUMNS)?;

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(path, line, e)
        })?;
        let ctx = RowCtx {
            path,
            line: rec.position().map_or(0, |p| p.line()),
        };
        if rec.len() != width {
            return Err(ctx.err(format!("expected {width} columns, found {}", rec.len())));
        }
        let f = |i: usize| rec.get(i).unwrap_or("");
        let person_id = f(0).to_owned();
        if person_id.is_empty() {
            return Err(ctx.err("person_id is empty"));
        }
        let weight: f64 = ctx.parse("weight", f(2))?;
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(PopulationError::Validation {
                id: person_id,
                message: format!("line {}: weight must be positive, got {}", ctx.line, f(2)),
            });
        }
        let ext = |i: usize| if width > 13 + i { f(13 + i) } else { "" };
        out.push(PersonRecord {
            household_id: ctx.opt_str(f(1)),
            weight,
            age: ctx.parse("age", f(3))?,
            sex: ctx.parse("sex", f(4))?,
            race: ctx.parse("race", f(5))?,
            hispanic: ctx.flag("hispanic", f(6))?,
            industry_code: ctx.opt_str(f(7)),
            occupation_code: ctx.opt_str(f(8)),
            military_status: ctx.opt_parse("military_status", f(9))?,
            gave_birth_past_year: ctx.flag("gave_birth_past_year", f(10))?,
            group_quarters: ctx.flag("group_quarters", f(11))?,
            state: ctx.parse::<StateCode>("state", f(12))?,
            education: ctx.opt_parse("education", ext(0))?,
            employment: ctx.opt_parse("employment", ext(1))?,
            personal_income: ctx.finite("personal_income", ext(2))?,
            person_id,
        });
    }
    Ok(out)
}

impl FromStr for StateCode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        StateCode::new(s)
    }
}

pub fn read_households<R: Read>(
    input: R,
    path: &Path,
) -> Result<Vec<HouseholdRecord>, PopulationError> {
    let mut rdr = reader(input);
    let header = rdr
        .headers()
        .map_err(|e| csv_err(path, 1, e))?
        .clone();
    let width = check_header(path, &header, &HOUSEHOLD_COLUMNS, &[])?;

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(path, line, e)
        })?;
        let ctx = RowCtx {
            path,
            line: rec.position().map_or(0, |p| p.line()),
        };
        if rec.len() != width {
            return Err(ctx.err(format!("expected {width} columns, found {}", rec.len())));
        }
        let f = |i: usize| rec.get(i).unwrap_or("");
        if f(0).is_empty() {
            return Err(ctx.err("household_id is empty"));
        }
        out.push(HouseholdRecord {
            household_id: f(0).to_owned(),
            family_income: ctx.finite("family_income", f(1))?,
            property_value: ctx.finite("property_value", f(2))?,
            gross_rent: ctx.finite("gross_rent", f(3))?,
            first_mortgage: ctx.finite("first_mortgage", f(4))?,
            owner_occupied: ctx.flag("owner_occupied", f(5))?,
            vehicle_available: ctx.flag("vehicle_available", f(6))?,
            telephone_or_data: ctx.flag("telephone_or_data", f(7))?,
            complete_plumbing: ctx.flag("complete_plumbing", f(8))?,
            persons_count: ctx.parse("persons_count", f(9))?,
            rooms_count: ctx.parse("rooms_count", f(10))?,
            single_parent_with_children: ctx.flag("single_parent_with_children", f(11))?,
            poverty_ratio: ctx.finite("poverty_ratio", f(12))?,
        });
    }
    Ok(out)
}

fn csv_err(path: &Path, line: u64, e: csv::Error) -> PopulationError {
    PopulationError::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Writes all person columns, extension columns included.
pub fn write_persons<W: Write>(out: W, persons: &[PersonRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = PERSON_COLUMNS.to_vec();
    header.extend(PERSON_EXTENSION_COLUMNS);
    w.write_record(&header)?;
    for p in persons {
        w.write_record([
            p.person_id.clone(),
            opt(&p.household_id),
            p.weight.to_string(),
            p.age.to_string(),
            p.sex.to_string(),
            p.race.to_string(),
            bit(p.hispanic).to_owned(),
            opt(&p.industry_code),
            opt(&p.occupation_code),
            opt(&p.military_status),
            bit(p.gave_birth_past_year).to_owned(),
            bit(p.group_quarters).to_owned(),
            p.state.to_string(),
            opt(&p.education),
            opt(&p.employment),
            opt(&p.personal_income),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_households<W: Write>(out: W, households: &[HouseholdRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HOUSEHOLD_COLUMNS)?;
    for h in households {
        w.write_record([
            h.household_id.clone(),
            opt(&h.family_income),
            opt(&h.property_value),
            opt(&h.gross_rent),
            opt(&h.first_mortgage),
            bit(h.owner_occupied).to_owned(),
            bit(h.vehicle_available).to_owned(),
            bit(h.telephone_or_data).to_owned(),
            bit(h.complete_plumbing).to_owned(),
            h.persons_count.to_string(),
            h.rooms_count.to_string(),
            bit(h.single_parent_with_children).to_owned(),
            opt(&h.poverty_ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "person_id,household_id,weight,age,sex,race,hispanic,industry_code,occupation_code,military_status,gave_birth_past_year,group_quarters,state";

    fn persons(body: &str) -> Result<Vec<PersonRecord>, PopulationError> {
        let text = format!("{HEADER}\n{body}");
        read_persons(text.as_bytes(), Path::new("persons.csv"))
    }

    #[test]
    fn three_rows_total_sixty() {
        let ps = persons(
            "a,h1,10,30,female,black,0,622M,,never,0,0,MA\n\
             b,h1,20,5,male,white,1,,,,0,0,MA\n\
             c,,30,80,female,asian,0,,,,0,1,NY\n",
        )
        .unwrap();
        let pop = Population::new(ps, None).unwrap();
        assert_eq!(pop.weighted_total(), 60.0);
        assert_eq!(pop.persons()[0].industry_code.as_deref(), Some("622M"));
        assert!(pop.persons()[2].household_id.is_none());
        assert!(pop.persons()[1].education.is_none());
    }

    #[test]
    fn negative_weight_is_validation_error() {
        let err = persons("a,h1,-1,30,female,black,0,,,,0,0,MA\n").unwrap_err();
        assert!(matches!(err, PopulationError::Validation { .. }), "{err}");
    }

    #[test]
    fn malformed_rows_report_line() {
        let err = persons("a,h1,10,30,female,black,0,,,,0,0,MA\nb,h1,10,thirty,female,black,0,,,,0,0,MA\n")
            .unwrap_err();
        match err {
            PopulationError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("age"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let err = persons("a,h1,10,30,female\n").unwrap_err();
        assert!(matches!(err, PopulationError::Parse { line: 2, .. }), "{err}");
        let err = persons("a,h1,10,30,female,black,2,,,,0,0,MA\n").unwrap_err();
        assert!(err.to_string().contains("hispanic"));
    }

    #[test]
    fn header_must_match() {
        let err = read_persons(
            "id,household_id\n".as_bytes(),
            Path::new("p.csv"),
        )
        .unwrap_err();
        assert!(matches!(err, PopulationError::Parse { line: 1, .. }));
    }

    #[test]
    fn extension_columns_are_read() {
        let text = format!(
            "{HEADER},education,employment,personal_income\n\
             a,h1,10,30,female,black,0,,,,0,0,MA,below_grade9,unemployed,1200.5\n"
        );
        let ps = read_persons(text.as_bytes(), Path::new("p.csv")).unwrap();
        assert_eq!(ps[0].education, Some(super::super::Education::BelowGrade9));
        assert_eq!(ps[0].personal_income, Some(1200.5));
    }

    #[test]
    fn dangling_household_link() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        let h = dir.path().join("h.csv");
        std::fs::write(&p, format!("{HEADER}\na,h2,1,30,female,white,0,,,,0,0,MA\n")).unwrap();
        std::fs::write(
            &h,
            format!("{}\nh1,50000,,900,,0,1,1,1,2,3,0,250\n", HOUSEHOLD_COLUMNS.join(",")),
        )
        .unwrap();
        let err = ingest_population(&p, Some(&h)).unwrap_err();
        assert!(matches!(err, PopulationError::Link(1, _)), "{err}");
    }
}
