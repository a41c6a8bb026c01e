use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::allocation::{ReservePolicy, SupplyGrid};
use crate::population::SyntheticConfig;
use crate::risk::SyntheticSurveyConfig;

/// Supplies for the state fair-share tables, in reference-population units.
pub const DEFAULT_FAIR_SHARE_SUPPLIES: [f64; 2] = [20e6, 50e6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub persons: String,
    #[serde(default)]
    pub households: Option<String>,
    /// Manifest written by `generate`; when given, the input files must
    /// still match the hashes it records.
    #[serde(default)]
    pub manifest: Option<String>,
}

fn default_policies() -> Vec<String> {
    vec![
        "cdc".into(),
        "r=0.2,eligibility=high_adi".into(),
        "r=0.4,eligibility=high_adi".into(),
    ]
}

fn default_grid() -> String {
    "default".into()
}

fn default_fair_share() -> Vec<f64> {
    DEFAULT_FAIR_SHARE_SUPPLIES.to_vec()
}

/// One run, read from a TOML document. Relative paths resolve against the
/// document's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub input: Option<InputPaths>,
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
    /// Tier schedule TOML; the built-in schedule when absent.
    #[serde(default)]
    pub schedule: Option<String>,
    /// Deprivation coefficients TOML; the built-in table when absent.
    #[serde(default)]
    pub adi: Option<String>,
    /// Risk survey CSV; a synthetic survey when absent.
    #[serde(default)]
    pub risk_survey: Option<String>,
    #[serde(default)]
    pub synthetic_survey: Option<SyntheticSurveyConfig>,
    #[serde(default = "default_policies")]
    pub policies: Vec<String>,
    #[serde(default = "default_grid")]
    pub supply_grid: String,
    /// Scaled by population total over the schedule's reference population.
    #[serde(default = "default_fair_share")]
    pub fair_share_supplies: Vec<f64>,
    #[serde(default)]
    pub race_deaths: Option<String>,
    #[serde(default)]
    pub state_outcomes: Option<String>,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<String>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| PipelineError::validation("config", e))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::io("config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_toml(&text, &base)
    }

    /// A config that generates `population_size` synthetic persons.
    pub fn synthetic(seed: u64, population_size: u64) -> Self {
        RunConfig {
            seed,
            input: None,
            synthetic: Some(SyntheticConfig {
                population_size,
                ..SyntheticConfig::default()
            }),
            schedule: None,
            adi: None,
            risk_survey: None,
            synthetic_survey: None,
            policies: default_policies(),
            supply_grid: default_grid(),
            fair_share_supplies: default_fair_share(),
            race_deaths: None,
            state_outcomes: None,
            output_dir: None,
            base_dir: PathBuf::from("."),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        match (&self.input, &self.synthetic) {
            (Some(_), Some(_)) => {
                return Err(PipelineError::validation(
                    "config",
                    "give either [input] or [synthetic], not both",
                ))
            }
            (None, None) => {
                return Err(PipelineError::validation(
                    "config",
                    "one of [input] or [synthetic] is required",
                ))
            }
            _ => {}
        }
        if self.policies.is_empty() {
            return Err(PipelineError::validation("config", "policies must not be empty"));
        }
        self.parsed_policies()?;
        self.parsed_grid()?;
        if self.fair_share_supplies.iter().any(|s| !(*s >= 0.0)) {
            return Err(PipelineError::validation(
                "config",
                "fair_share_supplies must be non-negative",
            ));
        }
        Ok(())
    }

    pub fn parsed_policies(&self) -> Result<Vec<ReservePolicy>, PipelineError> {
        self.policies
            .iter()
            .map(|p| p.parse().map_err(|e| PipelineError::validation("config", e)))
            .collect()
    }

    pub fn parsed_grid(&self) -> Result<SupplyGrid, PipelineError> {
        self.supply_grid
            .parse()
            .map_err(|e| PipelineError::validation("config", e))
    }

    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(self.output_dir.as_deref().unwrap_or("out"))
    }

    /// Hash of everything that determines outputs. The output directory is
    /// left out so a bundle does not depend on where it is written.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).unwrap_or_default();
        hex::encode(Sha256::digest(&json))
    }
}
