//! Area Deprivation Index: family components, raw scores and national
//! deciles.

mod components;
mod deciles;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use components::{derive_family_components, is_white_collar, Family, FamilyAdiComponents};
pub use deciles::{
    assign_national_deciles, compute_adi, flag_high_adi, write_assignments, AdiAssignment,
    AdiResult, ADI_COLUMNS, HIGH_ADI_MIN_DECILE,
};

pub const COMPONENT_COUNT: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    EducationBelowGrade9,
    HighSchoolOrMore,
    WhiteCollar,
    FamilyIncome,
    IncomeDisparity,
    HomeValue,
    GrossRent,
    MonthlyMortgage,
    OwnerOccupied,
    Unemployment,
    BelowPoverty,
    Below150Poverty,
    SingleParent,
    NoVehicle,
    NoTelephone,
    IncompletePlumbing,
    Crowding,
}

impl Component {
    pub const ALL: [Component; COMPONENT_COUNT] = [
        Component::EducationBelowGrade9,
        Component::HighSchoolOrMore,
        Component::WhiteCollar,
        Component::FamilyIncome,
        Component::IncomeDisparity,
        Component::HomeValue,
        Component::GrossRent,
        Component::MonthlyMortgage,
        Component::OwnerOccupied,
        Component::Unemployment,
        Component::BelowPoverty,
        Component::Below150Poverty,
        Component::SingleParent,
        Component::NoVehicle,
        Component::NoTelephone,
        Component::IncompletePlumbing,
        Component::Crowding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::EducationBelowGrade9 => "education_below_grade9",
            Component::HighSchoolOrMore => "high_school_or_more",
            Component::WhiteCollar => "white_collar",
            Component::FamilyIncome => "family_income",
            Component::IncomeDisparity => "income_disparity",
            Component::HomeValue => "home_value",
            Component::GrossRent => "gross_rent",
            Component::MonthlyMortgage => "monthly_mortgage",
            Component::OwnerOccupied => "owner_occupied",
            Component::Unemployment => "unemployment",
            Component::BelowPoverty => "below_poverty",
            Component::Below150Poverty => "below_150_poverty",
            Component::SingleParent => "single_parent",
            Component::NoVehicle => "no_vehicle",
            Component::NoTelephone => "no_telephone",
            Component::IncompletePlumbing => "incomplete_plumbing",
            Component::Crowding => "crowding",
        }
    }

    /// Percent components live on 0-100; the rest are dollar amounts or the
    /// disparity log ratio.
    pub fn is_percent(self) -> bool {
        !matches!(
            self,
            Component::FamilyIncome
                | Component::IncomeDisparity
                | Component::HomeValue
                | Component::GrossRent
                | Component::MonthlyMortgage
        )
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Error)]
pub enum AdiError {
    #[error("deprivation scores need household records")]
    NoHouseholds,
    #[error("no non-group-quarters mass to rank")]
    NoMass,
    #[error("adi config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub component: String,
    pub value: f64,
}

/// Validated coefficient vector, indexed by [`Component`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiCoefficients([f64; COMPONENT_COUNT]);

impl AdiCoefficients {
    /// Requires exactly one entry per component, with unique known names.
    pub fn from_entries(entries: &[CoefficientEntry]) -> Result<Self, AdiError> {
        if entries.len() != COMPONENT_COUNT {
            return Err(AdiError::Config(format!(
                "expected {COMPONENT_COUNT} coefficients, found {}",
                entries.len()
            )));
        }
        let mut values = [None; COMPONENT_COUNT];
        for e in entries {
            let c = Component::ALL
                .iter()
                .find(|c| c.name() == e.component)
                .ok_or_else(|| AdiError::Config(format!("unknown component {:?}", e.component)))?;
            if !e.value.is_finite() {
                return Err(AdiError::Config(format!("{} is not finite", e.component)));
            }
            if values[c.index()].replace(e.value).is_some() {
                return Err(AdiError::Config(format!("duplicate component {:?}", e.component)));
            }
        }
        Ok(Self(values.map(|v| v.unwrap_or_default())))
    }

    pub fn get(&self, c: Component) -> f64 {
        self.0[c.index()]
    }

    pub fn entries(&self) -> Vec<CoefficientEntry> {
        Component::ALL
            .iter()
            .map(|c| CoefficientEntry {
                component: c.name().to_owned(),
                value: self.get(*c),
            })
            .collect()
    }
}

impl Default for AdiCoefficients {
    fn default() -> Self {
        AdiConfig::default().coefficients
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PovertyThresholds {
    pub under_65: f64,
    pub age_65_plus: f64,
}

impl PovertyThresholds {
    pub fn for_age(&self, age: u16) -> f64 {
        if age >= 65 {
            self.age_65_plus
        } else {
            self.under_65
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncomeDisparity {
    #[default]
    Zero,
    StateLogRatio,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AdiConfigFile {
    #[serde(default)]
    income_disparity: IncomeDisparity,
    poverty_thresholds: PovertyThresholds,
    coefficients: Vec<CoefficientEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdiConfig {
    pub coefficients: AdiCoefficients,
    pub poverty_thresholds: PovertyThresholds,
    pub income_disparity: IncomeDisparity,
}

pub const DEFAULT_ADI_TOML: &str = include_str!("../../data/adi_default.toml");

impl AdiConfig {
    pub fn from_toml(text: &str) -> Result<Self, AdiError> {
        let raw: AdiConfigFile =
            toml::from_str(text).map_err(|e| AdiError::Config(e.to_string()))?;
        let t = raw.poverty_thresholds;
        if !(t.under_65 > 0.0 && t.age_65_plus > 0.0) {
            return Err(AdiError::Config("poverty thresholds must be positive".into()));
        }
        Ok(Self {
            coefficients: AdiCoefficients::from_entries(&raw.coefficients)?,
            poverty_thresholds: t,
            income_disparity: raw.income_disparity,
        })
    }

    pub fn load(path: &Path) -> Result<Self, AdiError> {
        let text = std::fs::read_to_string(path).map_err(|source| AdiError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        let file = AdiConfigFile {
            income_disparity: self.income_disparity,
            poverty_thresholds: self.poverty_thresholds,
            coefficients: self.coefficients.entries(),
        };
        toml::to_string(&file).unwrap_or_default()
    }
}

impl Default for AdiConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_ADI_TOML).expect("bundled adi config is valid")
    }
}

/// Coefficient-weighted sum of the present components; missing ones count
/// as zero.
pub fn compute_raw_adi(components: &FamilyAdiComponents, coeffs: &AdiCoefficients) -> f64 {
    Component::ALL
        .iter()
        .filter_map(|c| components.get(*c).map(|v| v * coeffs.get(*c)))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_coefficients() {
        let c = AdiCoefficients::default();
        assert_eq!(c.get(Component::Unemployment), 0.0806);
        assert_eq!(c.get(Component::Below150Poverty), 0.1037);
        assert_eq!(c.get(Component::OwnerOccupied), -0.0615);
        let cfg = AdiConfig::default();
        assert_eq!(cfg.income_disparity, IncomeDisparity::Zero);
        assert_eq!(AdiConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn coefficient_validation() {
        let mut entries = AdiCoefficients::default().entries();
        entries[1].component = entries[0].component.clone();
        assert!(AdiCoefficients::from_entries(&entries).is_err());
        entries.pop();
        assert!(AdiCoefficients::from_entries(&entries).is_err());
    }

    #[test]
    fn raw_score_examples() {
        let coeffs = AdiCoefficients::default();
        let mut f = FamilyAdiComponents::empty("f");
        assert_eq!(compute_raw_adi(&f, &coeffs), 0.0);
        f.set(Component::Unemployment, Some(100.0));
        assert_eq!(compute_raw_adi(&f, &coeffs), 8.06);
        f.set(Component::Unemployment, Some(50.0));
        f.set(Component::BelowPoverty, Some(100.0));
        assert!((compute_raw_adi(&f, &coeffs) - 13.80).abs() < 1e-12);
    }
}
