mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{cell, close, random_strata};
use vaxalloc::allocation::{
    allocate, allocate_priority, allocate_with_reserve, exhaustion_supply, marginal_share,
    sweep_supply, Cell, Eligibility, ReservePolicy, Strata, SupplyGrid,
};
use vaxalloc::population::Race;
use vaxalloc::tiers::{Rank, RANK_COUNT, TIER1_RANKS};

fn strata_strategy() -> impl Strategy<Value = Strata> {
    prop::collection::vec(
        (0..RANK_COUNT, any::<bool>(), any::<bool>(), 0.5f64..100.0),
        1..40,
    )
    .prop_map(|cells| {
        let cells = cells
            .into_iter()
            .map(|(k, h, b, m)| Cell {
                race: if b { Race::Black } else { Race::White },
                ..cell(Rank::from_index(k), h, m)
            })
            .collect();
        Strata::from_cells(cells).unwrap()
    })
}

fn policy_strategy() -> impl Strategy<Value = ReservePolicy> {
    (
        0.0f64..=1.0,
        prop_oneof![
            Just(Eligibility::HighAdi),
            Just(Eligibility::BlackOrIndigenous),
            Just(Eligibility::None)
        ],
    )
        .prop_map(|(r, e)| ReservePolicy::new(r, e).unwrap())
}

fn eligible_served(s: &Strata, supply: f64, p: &ReservePolicy) -> f64 {
    let res = allocate(s, supply, p).unwrap();
    s.cells()
        .iter()
        .zip(res.cell_allocations(s))
        .filter(|(c, _)| p.eligibility.matches(c))
        .map(|(_, a)| a)
        .sum()
}

proptest! {
    #[test]
    fn conservation_and_cell_bounds(s in strata_strategy(), p in policy_strategy(), f in 0.0f64..1.3) {
        let supply = f * s.total();
        let res = allocate_with_reserve(&s, supply, &p).unwrap();
        prop_assert!(close(res.total_allocated(), supply.min(s.total()), 1e-9));
        for (c, a) in s.cells().iter().zip(res.cell_allocations(&s)) {
            prop_assert!(a >= 0.0 && a <= c.mass * (1.0 + 1e-12));
        }
    }

    #[test]
    fn cells_never_lose_doses(s in strata_strategy(), p in policy_strategy(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let x = allocate(&s, lo * s.total(), &p).unwrap().cell_allocations(&s);
        let y = allocate(&s, hi * s.total(), &p).unwrap().cell_allocations(&s);
        for (u, v) in x.iter().zip(&y) {
            prop_assert!(*v >= u - 1e-9 * s.total());
        }
    }

    #[test]
    fn zero_reserve_is_priority(s in strata_strategy(), f in 0.0f64..1.0, e in prop_oneof![Just(Eligibility::HighAdi), Just(Eligibility::BlackOrIndigenous)]) {
        let supply = f * s.total();
        let plain = allocate_priority(&s, supply).unwrap();
        let zero = allocate_with_reserve(&s, supply, &ReservePolicy::new(0.0, e).unwrap()).unwrap();
        prop_assert_eq!(plain.cell_allocations(&s), zero.cell_allocations(&s));
        prop_assert_eq!(plain.policy.label(), zero.policy.label());
    }

    #[test]
    fn tier1_is_untouched_by_reserves(s in strata_strategy(), p in policy_strategy(), f in 0.0f64..1.0) {
        let supply = f * s.tier1_mass();
        let plain = allocate_priority(&s, supply).unwrap().cell_allocations(&s);
        let res = allocate(&s, supply, &p).unwrap().cell_allocations(&s);
        for (a, b) in plain.iter().zip(&res) {
            prop_assert!((a - b).abs() <= 1e-9 * s.total().max(1.0));
        }
    }

    #[test]
    fn bigger_reserves_serve_more_eligibles(s in strata_strategy(), f in 0.0f64..1.0) {
        let supply = s.tier1_mass() + f * (s.total() - s.tier1_mass());
        let at = |r: f64| eligible_served(&s, supply, &ReservePolicy::new(r, Eligibility::HighAdi).unwrap());
        let tol = 1e-9 * s.total();
        prop_assert!(at(0.4) >= at(0.2) - tol);
        prop_assert!(at(0.2) >= at(0.0) - tol);
    }

    #[test]
    fn full_supply_matches_population(s in strata_strategy(), p in policy_strategy()) {
        let st = allocate(&s, s.total(), &p).unwrap().statistics(&s);
        prop_assert!(close(st.share_black_indigenous.unwrap(), s.population_share(Cell::black_or_indigenous), 1e-9));
        prop_assert!(close(st.share_high_adi.unwrap(), s.population_share(|c| c.high_adi), 1e-9));
        prop_assert!(close(st.mean_age.unwrap(), s.population_mean_age(), 1e-9));
    }

    #[test]
    fn exhaustion_is_the_first_full_supply(s in strata_strategy(), r in 0.01f64..=1.0) {
        let p = ReservePolicy::new(r, Eligibility::HighAdi).unwrap();
        let elig = s.eligible_mass(Eligibility::HighAdi);
        prop_assume!(elig > 0.0);
        let x = exhaustion_supply(&s, &p).unwrap();
        let tol = 1e-7 * s.total();
        prop_assert!(eligible_served(&s, x, &p) >= elig - tol);
        let before = (x - 1e-3 * s.total()).max(0.0);
        if before < x {
            prop_assert!(eligible_served(&s, before, &p) < elig - tol);
        }
    }

    #[test]
    fn sweep_points_equal_direct_calls(s in strata_strategy(), p in policy_strategy(), n in 1usize..30) {
        let grid = SupplyGrid::Uniform(n).resolve(s.total(), s.total()).unwrap();
        let sweep = sweep_supply(&s, &p, &grid).unwrap();
        prop_assert_eq!(sweep.len(), grid.len());
        for (res, &x) in sweep.iter().zip(&grid) {
            prop_assert_eq!(res, &allocate(&s, x, &p).unwrap());
        }
    }

    #[test]
    fn share_curves_move_by_at_most_step_over_supply(s in strata_strategy(), p in policy_strategy()) {
        let grid = SupplyGrid::Uniform(200).resolve(s.total(), s.total()).unwrap();
        let sweep = sweep_supply(&s, &p, &grid).unwrap();
        for w in sweep.windows(2) {
            let (a, b) = (w[0].statistics(&s), w[1].statistics(&s));
            if let (Some(x), Some(y)) = (a.share_black_indigenous, b.share_black_indigenous) {
                let step = w[1].supply - w[0].supply;
                prop_assert!((y - x).abs() <= step / w[1].supply + 1e-9);
            }
        }
    }
}

#[test]
fn partial_rank_is_proportional() {
    let s = Strata::from_cells(vec![
        cell(Rank::tier(2), true, 120.0),
        cell(Rank::tier(2), false, 80.0),
    ])
    .unwrap();
    let res = allocate_priority(&s, 100.0).unwrap();
    assert_eq!(res.cell_allocations(&s), vec![60.0, 40.0]);
}

#[test]
fn exact_tier1_supply_stops_at_tier1() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = random_strata(&mut rng, 60);
    let res = allocate_priority(&s, s.tier1_mass()).unwrap();
    for k in 0..RANK_COUNT {
        let m = s.rank_mass(Rank::from_index(k));
        let got: f64 = res.allocated[k].iter().sum();
        if k < TIER1_RANKS {
            assert!(close(got, m, 1e-12));
        } else {
            assert!(got.abs() < 1e-9);
        }
    }
}

#[test]
fn marginal_share_identity_and_reversion() {
    let s = Strata::from_cells(vec![
        cell(Rank::tier1(3), false, 50.0),
        cell(Rank::tier(2), true, 30.0),
        cell(Rank::tier(2), false, 70.0),
        cell(Rank::tier(4), true, 10.0),
        cell(Rank::tier(4), false, 290.0),
    ])
    .unwrap();
    let p = ReservePolicy::new(0.4, Eligibility::HighAdi).unwrap();
    let m = marginal_share(&s, 60.0, &p, |c| c.high_adi).unwrap();
    assert!((m - 0.58).abs() < 1e-12);
    // beyond exhaustion only the plain priority share remains
    let x = exhaustion_supply(&s, &p).unwrap();
    let after = marginal_share(&s, x + 1.0, &p, |c| c.high_adi).unwrap();
    assert!(after.abs() < 1e-12);
    assert!(marginal_share(&s, s.total() + 1.0, &p, |c| c.high_adi).is_err());
    // r = 1 takes every eligible right after tier 1
    let all = ReservePolicy::new(1.0, Eligibility::HighAdi).unwrap();
    assert_eq!(exhaustion_supply(&s, &all).unwrap(), 50.0 + 40.0);
}

#[test]
fn invalid_arguments_are_errors() {
    let s = Strata::from_cells(vec![cell(Rank::tier(5), false, 10.0)]).unwrap();
    assert!(allocate_priority(&s, -1.0).is_err());
    assert!(ReservePolicy::new(1.5, Eligibility::HighAdi).is_err());
    assert!(exhaustion_supply(&s, &ReservePolicy::cdc()).is_err());
    assert!(SupplyGrid::List(vec![1.0, 1.0]).resolve(10.0, 10.0).is_err());
    let zero = sweep_supply(&s, &ReservePolicy::cdc(), &[0.0]).unwrap();
    assert_eq!(zero[0].total_allocated(), 0.0);
}
