use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineError, RunConfig};
use crate::adi::{compute_adi, write_assignments, AdiConfig, AdiError, AdiResult};
use crate::allocation::{
    allocate, curve_rows, exhaustion_supply, sweep_supply, write_curve, AllocationError,
    ReservePolicy, Strata,
};
use crate::metrics::{
    death_share_estimate, state_fair_share_index, write_fair_share, Benchmark, DeathRace,
    FairShareRow, RaceDeathTable, StateOutcomeTable,
};
use crate::population::{
    generate_synthetic, ingest_population, write_households, write_persons, Population,
    PopulationError, Race, Sex,
};
use crate::risk::{
    build_risk_table, generate_survey, impute_high_risk, load_risk_survey, write_risk_survey,
    RiskError, SyntheticSurveyConfig,
};
use crate::tiers::{run_tiering, tier_census, write_census, Rank, TierSchedule, TieringOutcome};

/// Named random substreams, in the order stages draw from them.
pub const SUBSTREAMS: [&str; 7] = [
    "synthetic",
    "survey",
    "risk",
    "groups/<group id>",
    "groups/<group id>/frontline",
    "infants",
    "pregnancy",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub substreams: Vec<String>,
    pub persons: usize,
    pub population_total: f64,
    pub diagnostics: Vec<String>,
    /// File name to SHA-256 of its contents.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = fs::read(path).map_err(|e| PipelineError::io("output", format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn population_err(e: PopulationError) -> PipelineError {
    match e {
        PopulationError::Io { .. } => PipelineError::io("population", e),
        _ => PipelineError::validation("population", e),
    }
}

fn risk_err(e: RiskError) -> PipelineError {
    match e {
        RiskError::Io { .. } => PipelineError::io("risk", e),
        _ => PipelineError::validation("risk", e),
    }
}

fn adi_err(e: AdiError) -> PipelineError {
    match e {
        AdiError::Io { .. } => PipelineError::io("adi", e),
        _ => PipelineError::validation("adi", e),
    }
}

fn alloc_err(e: AllocationError) -> PipelineError {
    PipelineError::validation("allocation", e)
}

/// Buffered output file; collects its name for the manifest.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: PathBuf) -> Result<Self, PipelineError> {
        fs::create_dir_all(&dir)
            .map_err(|e| PipelineError::io("output", format!("{}: {e}", dir.display())))?;
        Ok(Outputs {
            dir,
            written: Vec::new(),
        })
    }

    fn write<F>(&mut self, name: &str, f: F) -> Result<(), PipelineError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), Box<dyn std::error::Error>>,
    {
        let path = self.dir.join(name);
        let err = |e: &dyn std::fmt::Display| {
            PipelineError::io("output", format!("{}: {e}", path.display()))
        };
        let file = File::create(&path).map_err(|e| err(&e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(|e| err(&e))?;
        w.flush().map_err(|e| err(&e))?;
        self.written.push(name.to_owned());
        Ok(())
    }

    fn hashes(&self) -> Result<BTreeMap<String, String>, PipelineError> {
        self.written
            .iter()
            .map(|n| Ok((n.clone(), sha256_file(&self.dir.join(n))?)))
            .collect()
    }

    fn manifest(&mut self, mut m: Manifest, name: &str) -> Result<Manifest, PipelineError> {
        m.files = self.hashes()?;
        let json = serde_json::to_string_pretty(&m).map_err(|e| PipelineError::internal("output", e))?;
        self.write(name, |w| Ok(w.write_all(json.as_bytes())?))?;
        Ok(m)
    }
}

fn verify_inputs(cfg: &RunConfig) -> Result<(), PipelineError> {
    let Some(input) = &cfg.input else {
        return Ok(());
    };
    let Some(manifest_path) = &input.manifest else {
        return Ok(());
    };
    let path = cfg.resolve(manifest_path);
    let text = fs::read_to_string(&path)
        .map_err(|e| PipelineError::io("population", format!("{}: {e}", path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| PipelineError::validation("population", format!("{}: {e}", path.display())))?;
    let files = std::iter::once(&input.persons).chain(input.households.as_ref());
    for f in files {
        let p = cfg.resolve(f);
        let name = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let expected = manifest.files.get(&name).ok_or_else(|| {
            PipelineError::validation("population", format!("{name} is not listed in {}", path.display()))
        })?;
        if &sha256_file(&p)? != expected {
            return Err(PipelineError::validation(
                "population",
                format!("{name} no longer matches the hash in {}", path.display()),
            ));
        }
    }
    Ok(())
}

fn load_population(cfg: &RunConfig) -> Result<Population, PipelineError> {
    if let Some(input) = &cfg.input {
        verify_inputs(cfg)?;
        let persons = cfg.resolve(&input.persons);
        let households = input.households.as_deref().map(|h| cfg.resolve(h));
        ingest_population(&persons, households.as_deref()).map_err(population_err)
    } else if let Some(syn) = &cfg.synthetic {
        let mut syn = syn.clone();
        syn.seed = cfg.seed;
        generate_synthetic(&syn).map_err(population_err)
    } else {
        Err(PipelineError::validation("config", "no population source"))
    }
}

fn survey_config(cfg: &RunConfig) -> SyntheticSurveyConfig {
    cfg.synthetic_survey.clone().unwrap_or_else(|| SyntheticSurveyConfig {
        seed: cfg.seed,
        ..SyntheticSurveyConfig::default()
    })
}

/// Every stage up to the allocation input.
pub struct Prepared {
    pub config: RunConfig,
    pub schedule: TierSchedule,
    pub population: Population,
    pub high_risk: Vec<bool>,
    pub adi: AdiResult,
    pub tiering: TieringOutcome,
    pub strata: Strata,
    /// Population total over the schedule's reference population.
    pub size_scale: f64,
}

impl Prepared {
    /// High-ADI flag per augmented person.
    pub fn augmented_high_adi(&self) -> Vec<bool> {
        self.tiering
            .origin
            .iter()
            .map(|&i| self.adi.person_high_adi(i))
            .collect()
    }

    pub fn diagnostics(&self) -> Vec<String> {
        self.tiering.diagnostics.iter().map(|d| d.to_string()).collect()
    }
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared, PipelineError> {
    cfg.validate()?;
    let schedule = match &cfg.schedule {
        Some(p) => TierSchedule::load(&cfg.resolve(p)),
        None => Ok(TierSchedule::default_schedule()),
    }
    .map_err(|e| PipelineError::validation("tiers", e))?;
    let adi_cfg = match &cfg.adi {
        Some(p) => AdiConfig::load(&cfg.resolve(p)).map_err(adi_err)?,
        None => AdiConfig::default(),
    };

    let population = load_population(cfg)?;

    let survey = match &cfg.risk_survey {
        Some(p) => load_risk_survey(&cfg.resolve(p)).map_err(risk_err)?,
        None => generate_survey(&survey_config(cfg)),
    };
    let table = build_risk_table(&survey).map_err(risk_err)?;
    let high_risk = impute_high_risk(&population, &table, cfg.seed);

    let adi = compute_adi(&population, &adi_cfg).map_err(adi_err)?;

    let size_scale = population.weighted_total() / schedule.reference_population;
    let tiering = run_tiering(&population, &high_risk, &schedule, cfg.seed, size_scale)
        .map_err(|e| PipelineError::validation("tiers", e))?;

    let ranks: Vec<Rank> = tiering.assignments.iter().map(|a| a.highest).collect();
    let flags: Vec<bool> = tiering.origin.iter().map(|&i| adi.person_high_adi(i)).collect();
    let strata = Strata::build(&tiering.persons, &ranks, &flags).map_err(alloc_err)?;
    let augmented = tiering.weighted_total();
    if (strata.total() - augmented).abs() > 1e-9 * augmented.max(1.0) {
        return Err(PipelineError::internal(
            "allocation",
            format!("strata mass {} differs from population mass {augmented}", strata.total()),
        ));
    }

    Ok(Prepared {
        config: cfg.clone(),
        schedule,
        population,
        high_risk,
        adi,
        tiering,
        strata,
        size_scale,
    })
}

fn base_manifest(command: &str, p: &Prepared) -> Manifest {
    Manifest {
        command: command.into(),
        seed: p.config.seed,
        config_sha256: p.config.hash(),
        substreams: SUBSTREAMS.iter().map(|s| s.to_string()).collect(),
        persons: p.population.len(),
        population_total: p.population.weighted_total(),
        diagnostics: p.diagnostics(),
        files: BTreeMap::new(),
    }
}

/// Writes the synthetic population, its household file and a survey, with
/// a manifest of their hashes.
pub fn cmd_generate(cfg: &RunConfig) -> Result<Manifest, PipelineError> {
    let Some(syn) = &cfg.synthetic else {
        return Err(PipelineError::validation("config", "generate needs a [synthetic] section"));
    };
    let mut syn = syn.clone();
    syn.seed = cfg.seed;
    let population = generate_synthetic(&syn).map_err(population_err)?;
    let survey = generate_survey(&survey_config(cfg));

    let mut out = Outputs::new(cfg.output_dir())?;
    out.write("persons.csv", |w| Ok(write_persons(w, population.persons())?))?;
    out.write("households.csv", |w| {
        Ok(write_households(w, population.households().unwrap_or(&[]))?)
    })?;
    out.write("risk_survey.csv", |w| Ok(write_risk_survey(w, &survey)?))?;
    let m = Manifest {
        command: "generate".into(),
        seed: cfg.seed,
        config_sha256: cfg.hash(),
        substreams: vec!["synthetic".into(), "survey".into()],
        persons: population.len(),
        population_total: population.weighted_total(),
        diagnostics: Vec::new(),
        files: BTreeMap::new(),
    };
    out.manifest(m, "generate_manifest.json")
}

const GROUP_REPORT_COLUMNS: [&str; 12] = [
    "group",
    "tier",
    "subtier",
    "mode",
    "external_size",
    "superset_mass",
    "probability",
    "take_all",
    "empty_superset",
    "realized_mass",
    "expected_mass",
    "standard_deviation",
];

fn write_group_report(w: &mut dyn Write, p: &Prepared) -> Result<(), Box<dyn std::error::Error>> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(GROUP_REPORT_COLUMNS)?;
    for r in &p.tiering.reports {
        let mode = serde_json::to_value(r.mode)?;
        c.write_record([
            r.id.clone(),
            r.rank.tier.to_string(),
            r.rank.subtier.map(|s| s.to_string()).unwrap_or_default(),
            mode.as_str().unwrap_or_default().to_owned(),
            r.external_size.map(|s| s.to_string()).unwrap_or_default(),
            r.superset_mass.to_string(),
            r.probability.to_string(),
            u8::from(r.take_all).to_string(),
            u8::from(r.empty_superset).to_string(),
            r.realized_mass.to_string(),
            r.expected_mass().to_string(),
            r.variance.sqrt().to_string(),
        ])?;
    }
    c.flush()?;
    Ok(())
}

fn write_tier_files(out: &mut Outputs, p: &Prepared) -> Result<(), PipelineError> {
    let rows = tier_census(
        &p.tiering.persons,
        &p.tiering.assignments,
        &p.augmented_high_adi(),
    );
    out.write("tier_census.csv", |w| Ok(write_census(w, &rows)?))?;
    out.write("group_report.csv", |w| write_group_report(w, p))
}

/// Tier census and group report only.
pub fn cmd_census(cfg: &RunConfig) -> Result<Manifest, PipelineError> {
    let p = prepare(cfg)?;
    let mut out = Outputs::new(cfg.output_dir())?;
    write_tier_files(&mut out, &p)?;
    out.manifest(base_manifest("census", &p), "manifest.json")
}

fn unique_policies(cfg: &RunConfig) -> Result<Vec<ReservePolicy>, PipelineError> {
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for p in cfg.parsed_policies()? {
        let label = p.label();
        if !seen.contains(&label) {
            seen.push(label);
            out.push(p);
        }
    }
    Ok(out)
}

fn fair_share_rows(p: &Prepared) -> Result<Vec<(String, FairShareRow)>, PipelineError> {
    let cfg = &p.config;
    let mut outcomes = StateOutcomeTable::from_population(&p.population);
    if let Some(path) = &cfg.state_outcomes {
        outcomes
            .load_outcomes(&cfg.resolve(path))
            .map_err(|e| PipelineError::validation("metrics", e))?;
    }
    let benchmarks: &[Benchmark] = if cfg.state_outcomes.is_some() {
        &Benchmark::ALL
    } else {
        &[Benchmark::Population]
    };
    let total = p.strata.total();
    let mut rows = Vec::new();
    for policy in unique_policies(cfg)? {
        for &s in &cfg.fair_share_supplies {
            let supply = (s * p.size_scale).min(total);
            let res = allocate(&p.strata, supply, &policy).map_err(alloc_err)?;
            for &b in benchmarks {
                rows.extend(
                    state_fair_share_index(&p.strata, &res, &outcomes, b)
                        .into_iter()
                        .map(|r| (policy.label(), r)),
                );
            }
        }
    }
    Ok(rows)
}

/// State fair-share indices only.
pub fn cmd_fair_share(cfg: &RunConfig) -> Result<Manifest, PipelineError> {
    let p = prepare(cfg)?;
    let rows = fair_share_rows(&p)?;
    let mut out = Outputs::new(cfg.output_dir())?;
    out.write("fair_share.csv", |w| Ok(write_fair_share(w, &rows)?))?;
    out.manifest(base_manifest("fair-share", &p), "manifest.json")
}

fn benchmark_rows(p: &Prepared) -> Result<Vec<(String, f64)>, PipelineError> {
    let s = &p.strata;
    let mut rows = vec![
        ("total_mass".to_owned(), s.total()),
        ("tier1_mass".to_owned(), s.tier1_mass()),
        (
            "population_share_black_indigenous".to_owned(),
            s.population_share(|c| c.black_or_indigenous()),
        ),
        (
            "population_share_black_indigenous_hispanic".to_owned(),
            s.population_share(|c| c.black_indigenous_or_hispanic()),
        ),
        ("population_share_high_adi".to_owned(), s.population_share(|c| c.high_adi)),
        ("population_share_female".to_owned(), s.population_share(|c| c.sex == Sex::Female)),
        ("population_mean_age".to_owned(), s.population_mean_age()),
        (
            "population_share_multiracial".to_owned(),
            s.population_share(|c| c.race == Race::Multiracial),
        ),
    ];
    if let Some(path) = &p.config.race_deaths {
        let table = RaceDeathTable::load(&p.config.resolve(path))
            .map_err(|e| PipelineError::validation("metrics", e))?;
        let bi = [DeathRace::Black, DeathRace::Indigenous];
        let bil = [DeathRace::Black, DeathRace::Indigenous, DeathRace::Latino];
        for (name, races, adjusted) in [
            ("death_share_black_indigenous", &bi[..], false),
            ("age_adjusted_death_share_black_indigenous", &bi[..], true),
            ("death_share_black_indigenous_latino", &bil[..], false),
            ("age_adjusted_death_share_black_indigenous_latino", &bil[..], true),
        ] {
            let v = death_share_estimate(&table, races, adjusted)
                .map_err(|e| PipelineError::validation("metrics", e))?;
            rows.push((name.to_owned(), v));
        }
    }
    for policy in unique_policies(&p.config)? {
        if policy.is_degenerate() {
            continue;
        }
        if let Ok(x) = exhaustion_supply(s, &policy) {
            rows.push((format!("exhaustion_supply_{}", policy.label()), x));
        }
    }
    Ok(rows)
}

/// Full bundle: curves per policy, census, deprivation deciles, fair
/// shares, benchmarks and the manifest.
pub fn cmd_run(cfg: &RunConfig) -> Result<Manifest, PipelineError> {
    let p = prepare(cfg)?;
    let mut out = Outputs::new(cfg.output_dir())?;

    out.write("adi_assignments.csv", |w| {
        Ok(write_assignments(w, &p.adi, &p.population)?)
    })?;
    write_tier_files(&mut out, &p)?;

    let grid = cfg
        .parsed_grid()?
        .resolve(p.strata.total(), p.schedule.reference_population)
        .map_err(alloc_err)?;
    for policy in unique_policies(cfg)? {
        let sweep = sweep_supply(&p.strata, &policy, &grid).map_err(alloc_err)?;
        let rows = curve_rows(&p.strata, &sweep);
        out.write(&format!("allocation_curve_{}.csv", policy.label()), |w| {
            Ok(write_curve(w, &rows)?)
        })?;
    }

    let fair = fair_share_rows(&p)?;
    out.write("fair_share.csv", |w| Ok(write_fair_share(w, &fair)?))?;

    let bench = benchmark_rows(&p)?;
    out.write("benchmarks.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["metric", "value"])?;
        for (k, v) in &bench {
            c.write_record([k.as_str(), &v.to_string()])?;
        }
        c.flush()?;
        Ok(())
    })?;

    out.manifest(base_manifest("run", &p), "manifest.json")
}
