use super::dual::Dual;
use super::strata::{Cell, ClassTable, Strata};
use super::{AllocationError, Eligibility, ReservePolicy};
use crate::population::neumaier_sum;
use crate::tiers::{Rank, RANK_COUNT, TIER1_RANKS};

/// Expected allocation at one supply level.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub supply: f64,
    pub policy: ReservePolicy,
    /// Eligibility the classes below are split by; `None` for degenerate
    /// policies.
    pub eligibility: Eligibility,
    /// Allocated mass per rank as `[eligible, other]`.
    pub allocated: [[f64; 2]; RANK_COUNT],
    /// Derivative of `allocated` with respect to supply. Right derivative
    /// below full supply, left derivative at it, zero beyond.
    pub slope: [[f64; 2]; RANK_COUNT],
    /// Lowest-priority rank reached outside the reserve.
    pub tier_reached: Option<Rank>,
}

/// Cumulative recipient statistics. Shares are `None` at zero allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Statistics {
    pub total_allocated: f64,
    pub share_black_indigenous: Option<f64>,
    pub share_black_indigenous_hispanic: Option<f64>,
    pub share_high_adi: Option<f64>,
    pub share_female: Option<f64>,
    pub mean_age: Option<f64>,
    pub marginal_share_high_adi: f64,
}

impl AllocationResult {
    pub fn total_allocated(&self) -> f64 {
        neumaier_sum(self.allocated.iter().flatten().copied())
    }

    fn class_of(&self, cell: &Cell) -> usize {
        usize::from(!self.eligibility.matches(cell))
    }

    /// Filled fraction of the cell's rank and class, which every cell in
    /// that class shares.
    pub fn cell_fraction(&self, strata: &Strata, cell: &Cell) -> f64 {
        let k = cell.rank.index();
        let c = self.class_of(cell);
        let m = strata.table(self.eligibility).classes[k][c].mass;
        if m > 0.0 {
            (self.allocated[k][c] / m).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn cell_allocations(&self, strata: &Strata) -> Vec<f64> {
        strata
            .cells()
            .iter()
            .map(|c| c.mass * self.cell_fraction(strata, c))
            .collect()
    }

    fn cell_slope(&self, strata: &Strata, cell: &Cell) -> f64 {
        let k = cell.rank.index();
        let c = self.class_of(cell);
        let m = strata.table(self.eligibility).classes[k][c].mass;
        if m > 0.0 {
            cell.mass * self.slope[k][c] / m
        } else {
            0.0
        }
    }

    /// Marginal share of cells matching `pred`.
    pub fn marginal(&self, strata: &Strata, pred: impl Fn(&Cell) -> bool) -> f64 {
        neumaier_sum(
            strata
                .cells()
                .iter()
                .filter(|c| pred(c))
                .map(|c| self.cell_slope(strata, c)),
        )
    }

    /// Attribute totals from the rank aggregates, without touching cells.
    pub fn statistics(&self, strata: &Strata) -> Statistics {
        let t = strata.table(self.eligibility);
        let mut sums = [0.0f64; 6];
        let mut marginal = 0.0;
        for k in 0..RANK_COUNT {
            for c in 0..2 {
                let a = &t.classes[k][c];
                if !(a.mass > 0.0) {
                    continue;
                }
                let f = (self.allocated[k][c] / a.mass).clamp(0.0, 1.0);
                sums[0] += f * a.mass;
                sums[1] += f * a.black_indigenous;
                sums[2] += f * a.black_indigenous_hispanic;
                sums[3] += f * a.high_adi;
                sums[4] += f * a.female;
                sums[5] += f * a.age_mass;
                marginal += self.slope[k][c] / a.mass * a.high_adi;
            }
        }
        let total = sums[0];
        let share = |x: f64| (total > 0.0).then(|| x / total);
        Statistics {
            total_allocated: total,
            share_black_indigenous: share(sums[1]),
            share_black_indigenous_hispanic: share(sums[2]),
            share_high_adi: share(sums[3]),
            share_female: share(sums[4]),
            mean_age: share(sums[5]),
            marginal_share_high_adi: marginal,
        }
    }
}

fn tolerance(strata: &Strata) -> f64 {
    1e-12 * strata.total()
}

/// Runs every channel at supply `s`, carrying the derivative along.
fn evaluate(t: &ClassTable, r: f64, s: Dual, tol: f64) -> ([[Dual; 2]; RANK_COUNT], Option<usize>) {
    let mut out = [[Dual::ZERO; 2]; RANK_COUNT];
    let mut reached = None;

    let mut fill = |budget: &mut Dual, out: &mut [[Dual; 2]; RANK_COUNT], k: usize| {
        let m = t.rank_mass(k);
        if !(m > 0.0) {
            return;
        }
        let take = budget.lex_min(Dual::constant(m), tol);
        if take.v > 0.0 {
            reached = Some(k);
        }
        for (c, slot) in out[k].iter_mut().enumerate() {
            *slot = *slot + take * (t.classes[k][c].mass / m);
        }
        *budget = *budget - take;
    };

    let mut budget = s;
    for k in 0..TIER1_RANKS {
        fill(&mut budget, &mut out, k);
    }
    let mut unreserved = budget * (1.0 - r);
    let mut reserve = budget * r;
    for k in TIER1_RANKS..RANK_COUNT {
        fill(&mut unreserved, &mut out, k);
    }

    // Reserve units go to unserved eligible persons first, then to
    // everyone else still unserved, each in rank order.
    for c in 0..2 {
        for k in TIER1_RANKS..RANK_COUNT {
            let m = t.classes[k][c].mass;
            if !(m > 0.0) {
                continue;
            }
            let resid = Dual::constant(m) - out[k][c];
            let take = reserve.lex_min(resid, tol);
            if c == 1 && take.v > 0.0 {
                reached = reached.max(Some(k));
            }
            out[k][c] = out[k][c] + take;
            reserve = reserve - take;
        }
    }
    (out, reached)
}

/// Expected allocation under `policy` at `supply`.
pub fn allocate(
    strata: &Strata,
    supply: f64,
    policy: &ReservePolicy,
) -> Result<AllocationResult, AllocationError> {
    policy.validate()?;
    if !(supply >= 0.0) || supply.is_infinite() {
        return Err(AllocationError::NegativeSupply(supply));
    }
    let eligibility = if policy.is_degenerate() {
        Eligibility::None
    } else {
        policy.eligibility
    };
    let t = strata.table(eligibility);
    let total = strata.total();
    let direction = if supply < total { 1.0 } else { -1.0 };
    let (flows, reached) = evaluate(
        t,
        policy.effective_fraction(),
        Dual::new(supply, direction),
        tolerance(strata),
    );
    let above = supply > total + tolerance(strata);
    Ok(AllocationResult {
        supply,
        policy: *policy,
        eligibility,
        allocated: flows.map(|r| r.map(|d| d.v)),
        slope: flows.map(|r| r.map(|d| if above { 0.0 } else { d.d * direction })),
        tier_reached: reached.map(Rank::from_index),
    })
}

pub fn allocate_priority(strata: &Strata, supply: f64) -> Result<AllocationResult, AllocationError> {
    allocate(strata, supply, &ReservePolicy::cdc())
}

pub fn allocate_with_reserve(
    strata: &Strata,
    supply: f64,
    policy: &ReservePolicy,
) -> Result<AllocationResult, AllocationError> {
    allocate(strata, supply, policy)
}

/// Marginal share of matching cells at `supply`: the right derivative of
/// their allocated mass, or the left derivative at full supply.
pub fn marginal_share(
    strata: &Strata,
    supply: f64,
    policy: &ReservePolicy,
    pred: impl Fn(&Cell) -> bool,
) -> Result<f64, AllocationError> {
    if supply > strata.total() + tolerance(strata) {
        return Err(AllocationError::SupplyAboveTotal {
            supply,
            total: strata.total(),
        });
    }
    Ok(allocate(strata, supply, policy)?.marginal(strata, pred))
}

/// Smallest supply at which every eligible person is fully served.
///
/// Beyond tier 1 the eligible mass served is `sum_k f_k E_k + r x`, where
/// `f_k` is the fraction of rank `k` covered by the unreserved units
/// `(1 - r) x`. That is linear in `x` between rank boundaries, so the
/// crossing with the eligible mass is solved segment by segment.
pub fn exhaustion_supply(strata: &Strata, policy: &ReservePolicy) -> Result<f64, AllocationError> {
    policy.validate()?;
    if policy.eligibility == Eligibility::None {
        return Err(AllocationError::NoEligibleMass);
    }
    let t = strata.table(policy.eligibility);
    if !(t.eligible_mass() > 0.0) {
        return Err(AllocationError::NoEligibleMass);
    }
    let r = policy.reserve_fraction;
    let tier1 = (0..TIER1_RANKS).map(|k| t.rank_mass(k)).sum::<f64>();
    let e_post = (TIER1_RANKS..RANK_COUNT).map(|k| t.classes[k][0].mass).sum::<f64>();
    let m_post = (TIER1_RANKS..RANK_COUNT).map(|k| t.rank_mass(k)).sum::<f64>();

    if !(e_post > 0.0) {
        let mut through = 0.0;
        let mut last = 0.0;
        for k in 0..TIER1_RANKS {
            through += t.rank_mass(k);
            if t.classes[k][0].mass > 0.0 {
                last = through;
            }
        }
        return Ok(last);
    }
    if r >= 1.0 {
        return Ok(tier1 + e_post);
    }

    let mut before = 0.0;
    let mut e_before = 0.0;
    for k in TIER1_RANKS..RANK_COUNT {
        let m = t.rank_mass(k);
        if !(m > 0.0) {
            continue;
        }
        let e = t.classes[k][0].mass;
        let x0 = before / (1.0 - r);
        let x1 = (before + m) / (1.0 - r);
        let g1 = e_before + e + r * x1;
        if g1 >= e_post {
            let density = e / m;
            let slope = (1.0 - r) * density + r;
            let x = if slope > 0.0 {
                ((e_post - e_before + before * density) / slope).clamp(x0, x1)
            } else {
                x0
            };
            return Ok(tier1 + x.min(m_post));
        }
        before += m;
        e_before += e;
    }
    Ok(tier1 + m_post)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{Race, Sex, StateCode};

    pub(crate) fn cell(rank: Rank, high_adi: bool, mass: f64) -> Cell {
        Cell {
            rank,
            high_adi,
            race: Race::White,
            hispanic: false,
            sex: Sex::Female,
            age: 40,
            state: StateCode::new("MA").unwrap(),
            mass,
        }
    }

    fn two_tier(e2: f64, n2: f64) -> Strata {
        Strata::from_cells(vec![
            cell(Rank::tier1(1), false, 100.0),
            cell(Rank::tier(2), true, e2),
            cell(Rank::tier(2), false, n2),
            cell(Rank::tier(5), true, 100.0),
            cell(Rank::tier(5), false, 400.0),
        ])
        .unwrap()
    }

    #[test]
    fn proportional_within_rank() {
        let s = Strata::from_cells(vec![
            cell(Rank::tier(3), true, 120.0),
            cell(Rank::tier(3), false, 80.0),
        ])
        .unwrap();
        let a = allocate_priority(&s, 100.0).unwrap();
        let cells = a.cell_allocations(&s);
        assert!((cells[0] - 60.0).abs() < 1e-12);
        assert!((cells[1] - 40.0).abs() < 1e-12);
    }

    #[test]
    fn tier1_exact_and_full_supply() {
        let s = two_tier(30.0, 70.0);
        let a = allocate_priority(&s, 100.0).unwrap();
        assert_eq!(a.cell_allocations(&s), vec![100.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(a.tier_reached, Some(Rank::tier1(1)));
        let full = allocate_priority(&s, 1000.0).unwrap();
        assert_eq!(full.total_allocated(), 700.0);
        assert_eq!(full.statistics(&s).share_high_adi, Some(130.0 / 700.0));
        assert!(allocate_priority(&s, -1.0).is_err());
    }

    #[test]
    fn reserve_marginal_identity() {
        let s = two_tier(30.0, 70.0);
        for (r, expected) in [(0.2, 0.44), (0.4, 0.58), (0.0, 0.3)] {
            let p = ReservePolicy::new(r, Eligibility::HighAdi).unwrap();
            let m = marginal_share(&s, 120.0, &p, |c| c.high_adi).unwrap();
            assert!((m - expected).abs() < 1e-12, "{r}: {m}");
            // right derivative at the tier-1 boundary already uses the reserve
            let m = marginal_share(&s, 100.0, &p, |c| c.high_adi).unwrap();
            assert!((m - expected).abs() < 1e-12, "{r}: {m}");
        }
        let p = ReservePolicy::new(0.4, Eligibility::HighAdi).unwrap();
        let m = marginal_share(&s, 50.0, &p, |c| c.high_adi).unwrap();
        assert_eq!(m, 0.0);
        assert!(marginal_share(&s, 701.0, &p, |c| c.high_adi).is_err());
        // last units at full supply go to non-eligible tier 5
        let m = marginal_share(&s, 700.0, &p, |c| c.high_adi).unwrap();
        assert_eq!(m, 0.0);
        let m = marginal_share(&s, 700.0, &ReservePolicy::cdc(), |c| c.high_adi).unwrap();
        assert!((m - 0.2).abs() < 1e-12);
    }

    #[test]
    fn reserve_reverts_after_exhaustion() {
        let s = two_tier(30.0, 70.0);
        let p = ReservePolicy::new(1.0, Eligibility::HighAdi).unwrap();
        let x = exhaustion_supply(&s, &p).unwrap();
        assert_eq!(x, 100.0 + 130.0);
        let a = allocate(&s, 230.0, &p).unwrap();
        assert!((a.allocated[Rank::tier(5).index()][0] - 100.0).abs() < 1e-9);
        let m = marginal_share(&s, 231.0, &p, |c| c.high_adi).unwrap();
        assert_eq!(m, 0.0);
        let m = marginal_share(&s, 231.0, &p, |c| c.rank == Rank::tier(2)).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exhaustion_piecewise() {
        let s = two_tier(30.0, 70.0);
        let p = ReservePolicy::new(0.2, Eligibility::HighAdi).unwrap();
        // tier 2 (mass 100) is covered by unreserved units at x = 125, when
        // eligible served is 30 + 25 = 55 < 130. In tier 5 the eligible
        // density is 0.2, so g(x) = 30 + 0.8 (x - 125) 0.2 + ... solve directly.
        let x = exhaustion_supply(&s, &p).unwrap() - 100.0;
        let g = 30.0 + (0.8 * x - 100.0) * 0.2 + 0.2 * x;
        assert!((g - 130.0).abs() < 1e-9);
        let a = allocate(&s, 100.0 + x, &p).unwrap();
        let served = a.allocated[Rank::tier(2).index()][0] + a.allocated[Rank::tier(5).index()][0];
        assert!((served - 130.0).abs() < 1e-9);
        let cdc_like = ReservePolicy::new(0.0, Eligibility::HighAdi).unwrap();
        assert_eq!(exhaustion_supply(&s, &cdc_like).unwrap(), 700.0);
        assert!(exhaustion_supply(&s, &ReservePolicy::cdc()).is_err());
    }

    #[test]
    fn eligibles_only_in_tier1() {
        let s = Strata::from_cells(vec![
            cell(Rank::tier1(1), false, 10.0),
            cell(Rank::tier1(3), true, 5.0),
            cell(Rank::tier1(5), false, 10.0),
            cell(Rank::tier(3), false, 10.0),
        ])
        .unwrap();
        let p = ReservePolicy::new(0.3, Eligibility::HighAdi).unwrap();
        assert_eq!(exhaustion_supply(&s, &p).unwrap(), 15.0);
    }

    #[test]
    fn zero_reserve_matches_priority_bitwise() {
        let s = two_tier(33.3, 66.7);
        let p = ReservePolicy::new(0.0, Eligibility::HighAdi).unwrap();
        for supply in [0.0, 50.0, 100.0, 133.0, 450.0, 700.0] {
            let a = allocate(&s, supply, &p).unwrap();
            let b = allocate_priority(&s, supply).unwrap();
            assert_eq!(a.allocated, b.allocated);
            assert_eq!(a.statistics(&s), b.statistics(&s));
        }
    }
}
