//! Expected allocation of a vaccine supply across the priority ranks.
//!
//! Persons of equal rank are served in random order, so the expected dose a
//! person receives is the filled fraction of their rank. The model works on
//! those expectations directly: allocation is a piecewise-linear function of
//! supply, evaluated exactly rather than sampled.
//!
//! Reserve policies act after tier 1. For a supply `S` with tier-1 mass
//! `T1`, the remaining `x = S - T1` units are split: `(1 - r) x` fill the
//! ranks in plain priority order, then `r x` go to eligible persons still
//! unserved, highest rank first. Whatever the reserve cannot use falls back
//! to priority order among the rest.

mod dual;
mod engine;
mod strata;
mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use engine::{
    allocate, allocate_priority, allocate_with_reserve, exhaustion_supply, marginal_share,
    AllocationResult, Statistics,
};
pub use strata::{Cell, ClassAggregate, ClassTable, Strata};
pub use sweep::{curve_rows, sweep_supply, write_curve, CurveRow, SupplyGrid, CURVE_COLUMNS};

#[derive(Debug, Error, PartialEq)]
pub enum AllocationError {
    #[error("supply must be a non-negative number, got {0}")]
    NegativeSupply(f64),
    #[error("supply {supply} exceeds total mass {total}")]
    SupplyAboveTotal { supply: f64, total: f64 },
    #[error("invalid reserve policy: {0}")]
    Policy(String),
    #[error("policy has no eligible mass")]
    NoEligibleMass,
    #[error("invalid strata: {0}")]
    Strata(String),
    #[error("invalid supply grid: {0}")]
    Grid(String),
}

/// Who the reserve serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eligibility {
    HighAdi,
    BlackOrIndigenous,
    None,
}

impl Eligibility {
    pub const ALL: [Eligibility; 3] = [
        Eligibility::HighAdi,
        Eligibility::BlackOrIndigenous,
        Eligibility::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Eligibility::HighAdi => "high_adi",
            Eligibility::BlackOrIndigenous => "black_or_indigenous",
            Eligibility::None => "none",
        }
    }

    pub fn matches(self, cell: &Cell) -> bool {
        match self {
            Eligibility::HighAdi => cell.high_adi,
            Eligibility::BlackOrIndigenous => cell.race.is_black_or_indigenous(),
            Eligibility::None => false,
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Eligibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Eligibility {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Eligibility::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| format!("unknown eligibility {s:?}"))
    }
}

/// Reserve size and eligibility. Activation is always after tier 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservePolicy {
    pub reserve_fraction: f64,
    pub eligibility: Eligibility,
}

impl ReservePolicy {
    pub fn new(reserve_fraction: f64, eligibility: Eligibility) -> Result<Self, AllocationError> {
        let p = ReservePolicy {
            reserve_fraction,
            eligibility,
        };
        p.validate()?;
        Ok(p)
    }

    /// Plain priority order, no reserve.
    pub fn cdc() -> Self {
        ReservePolicy {
            reserve_fraction: 0.0,
            eligibility: Eligibility::None,
        }
    }

    pub fn validate(&self) -> Result<(), AllocationError> {
        if (0.0..=1.0).contains(&self.reserve_fraction) {
            Ok(())
        } else {
            Err(AllocationError::Policy(format!(
                "reserve fraction {} outside [0, 1]",
                self.reserve_fraction
            )))
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.reserve_fraction == 0.0 || self.eligibility == Eligibility::None
    }

    /// Reserve fraction actually applied.
    pub fn effective_fraction(&self) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            self.reserve_fraction
        }
    }

    /// Short name used in file names and the curve's policy column.
    /// Degenerate policies all print as `cdc`.
    pub fn label(&self) -> String {
        if self.is_degenerate() {
            "cdc".into()
        } else {
            format!("{}_{}", self.eligibility, self.reserve_fraction)
        }
    }
}

impl FromStr for ReservePolicy {
    type Err = String;

    /// Parses `r=0.2,eligibility=high_adi`, or `cdc`.
    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "cdc" {
            return Ok(ReservePolicy::cdc());
        }
        let mut r = None;
        let mut eligibility = None;
        for part in s.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value in policy {s:?}"))?;
            match k.trim() {
                "r" => {
                    r = Some(
                        v.trim()
                            .parse::<f64>()
                            .map_err(|e| format!("policy {s:?}: {e}"))?,
                    )
                }
                "eligibility" => eligibility = Some(v.trim().parse::<Eligibility>()?),
                other => return Err(format!("unknown policy key {other:?}")),
            }
        }
        let r = r.ok_or_else(|| format!("policy {s:?} is missing r"))?;
        let eligibility = eligibility.unwrap_or(Eligibility::HighAdi);
        ReservePolicy::new(r, eligibility).map_err(|e| e.to_string())
    }
}
