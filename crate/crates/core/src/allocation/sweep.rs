use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use super::engine::{allocate, AllocationResult, Statistics};
use super::strata::Strata;
use super::{AllocationError, ReservePolicy};
use crate::tiers::Rank;

pub const CURVE_COLUMNS: [&str; 9] = [
    "supply",
    "policy",
    "tier_reached",
    "share_black_indigenous",
    "share_black_indigenous_hispanic",
    "share_high_adi",
    "share_female",
    "mean_age",
    "marginal_share_high_adi",
];

/// Supply levels to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum SupplyGrid {
    /// 10,000-unit steps to 100,000, then 100,000-unit steps, in units of
    /// the reference population and scaled to the actual one.
    Default,
    /// `n` evenly spaced points ending at full supply.
    Uniform(usize),
    /// Fixed step, ending at full supply.
    Step(f64),
    /// Explicit supplies.
    List(Vec<f64>),
}

impl FromStr for SupplyGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "default" {
            return Ok(SupplyGrid::Default);
        }
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| format!("unknown supply grid {s:?}"))?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("supply grid {s:?}: {e}"))
        };
        match kind {
            "uniform" => {
                let n = arg
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| format!("supply grid {s:?}: {e}"))?;
                if n == 0 {
                    return Err("uniform grid needs at least one point".into());
                }
                Ok(SupplyGrid::Uniform(n))
            }
            "step" => {
                let x = num(arg)?;
                if !(x > 0.0 && x.is_finite()) {
                    return Err(format!("grid step must be positive, got {x}"));
                }
                Ok(SupplyGrid::Step(x))
            }
            "list" => Ok(SupplyGrid::List(
                arg.split(',').map(num).collect::<Result<_, _>>()?,
            )),
            _ => Err(format!("unknown supply grid {s:?}")),
        }
    }
}

impl SupplyGrid {
    /// Concrete supplies for a population of mass `total`; `reference` is
    /// the population the default steps are expressed in.
    pub fn resolve(&self, total: f64, reference: f64) -> Result<Vec<f64>, AllocationError> {
        if !(total >= 0.0) {
            return Err(AllocationError::Grid(format!("total mass {total}")));
        }
        let up_to = |step: f64, start: f64, out: &mut Vec<f64>| {
            let mut i = 1u64;
            loop {
                let v = start + step * i as f64;
                if v >= total {
                    break;
                }
                out.push(v);
                i += 1;
            }
        };
        let mut points = Vec::new();
        match self {
            SupplyGrid::Default => {
                if !(reference > 0.0) {
                    return Err(AllocationError::Grid("reference population must be positive".into()));
                }
                let scale = total / reference;
                for i in 1..=10 {
                    let v = 10_000.0 * scale * f64::from(i);
                    if v >= total {
                        break;
                    }
                    points.push(v);
                }
                up_to(100_000.0 * scale, 100_000.0 * scale, &mut points);
                points.push(total);
            }
            SupplyGrid::Uniform(n) => {
                points.extend((1..=*n).map(|i| total * i as f64 / *n as f64));
            }
            SupplyGrid::Step(x) => {
                up_to(*x, 0.0, &mut points);
                points.push(total);
            }
            SupplyGrid::List(v) => {
                if let Some(bad) = v.iter().find(|&&s| !(s >= 0.0 && s <= total)) {
                    return Err(AllocationError::Grid(format!(
                        "supply {bad} outside [0, {total}]"
                    )));
                }
                check_increasing(v)?;
                return Ok(v.clone());
            }
        }
        points.dedup();
        check_increasing(&points)?;
        Ok(points)
    }
}

fn check_increasing(grid: &[f64]) -> Result<(), AllocationError> {
    match grid.windows(2).find(|w| !(w[0] < w[1])) {
        Some(w) => Err(AllocationError::Grid(format!(
            "grid must be strictly increasing ({} then {})",
            w[0], w[1]
        ))),
        None => Ok(()),
    }
}

/// Evaluates every grid point independently, in parallel, returning results
/// in grid order.
pub fn sweep_supply(
    strata: &Strata,
    policy: &ReservePolicy,
    grid: &[f64],
) -> Result<Vec<AllocationResult>, AllocationError> {
    check_increasing(grid)?;
    grid.par_iter()
        .map(|&s| allocate(strata, s, policy))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub supply: f64,
    pub policy: String,
    pub tier_reached: Option<Rank>,
    pub statistics: Statistics,
}

pub fn curve_rows(strata: &Strata, results: &[AllocationResult]) -> Vec<CurveRow> {
    results
        .par_iter()
        .map(|r| CurveRow {
            supply: r.supply,
            policy: r.policy.label(),
            tier_reached: r.tier_reached,
            statistics: r.statistics(strata),
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_curve<W: Write>(out: W, rows: &[CurveRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_COLUMNS)?;
    for r in rows {
        let s = &r.statistics;
        w.write_record([
            r.supply.to_string(),
            r.policy.clone(),
            r.tier_reached.map(|t| t.to_string()).unwrap_or_default(),
            opt(s.share_black_indigenous),
            opt(s.share_black_indigenous_hispanic),
            opt(s.share_high_adi),
            opt(s.share_female),
            opt(s.mean_age),
            s.marginal_share_high_adi.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
