mod common;

use proptest::prelude::*;

use common::{close, household, person};
use vaxalloc::adi::{
    compute_adi, compute_raw_adi, derive_family_components, AdiConfig, Component,
    FamilyAdiComponents,
};
use vaxalloc::population::{Education, Population};

fn coeff(c: Component) -> f64 {
    AdiConfig::default().coefficients.get(c)
}

/// Households of random size and weight, some group-quarters residents,
/// and household-level traits that spread the raw scores.
fn population_strategy() -> impl Strategy<Value = Population> {
    prop::collection::vec(
        (1u32..6, 1.0f64..30.0, any::<bool>(), any::<bool>(), 0.0f64..400.0, any::<bool>()),
        1..60,
    )
    .prop_map(|hh| {
        let mut persons = Vec::new();
        let mut households = Vec::new();
        for (h, (size, w, owner, car, ratio, gq)) in hh.into_iter().enumerate() {
            if gq && h % 3 == 0 {
                let mut p = person(&format!("g{h:03}"), w);
                p.group_quarters = true;
                persons.push(p);
                continue;
            }
            let id = format!("h{h:03}");
            let mut rec = household(&id, size);
            rec.owner_occupied = owner;
            if owner {
                rec.gross_rent = None;
                rec.property_value = Some(200_000.0);
            }
            rec.vehicle_available = car;
            rec.poverty_ratio = Some(ratio);
            households.push(rec);
            for m in 0..size {
                let mut p = person(&format!("{id}-{m}"), w + f64::from(m));
                p.household_id = Some(id.clone());
                persons.push(p);
            }
        }
        Population::new(persons, Some(households)).unwrap()
    })
}

proptest! {
    #[test]
    fn raw_score_is_linear(values in prop::collection::vec(prop::option::of(0.0f64..100.0), 17), k in 0.01f64..20.0) {
        let mut c = FamilyAdiComponents::empty("f");
        for (comp, v) in Component::ALL.iter().zip(&values) {
            c.set(*comp, *v);
        }
        let coeffs = AdiConfig::default().coefficients;
        let scaled = compute_raw_adi(&c.scaled(k), &coeffs);
        prop_assert!(close(scaled, k * compute_raw_adi(&c, &coeffs), 1e-12));
        let doubled = compute_raw_adi(&c.scaled(2.0), &coeffs);
        prop_assert_eq!(doubled, 2.0 * compute_raw_adi(&c, &coeffs));
    }

    #[test]
    fn deciles_are_tenths_of_the_mass(pop in population_strategy()) {
        let Ok(r) = compute_adi(&pop, &AdiConfig::default()) else {
            // every record was in group quarters
            prop_assert!(pop.persons().iter().all(|p| p.group_quarters));
            return Ok(());
        };
        let non_gq = pop.weighted_total_where(|p| !p.group_quarters);
        let w_max = pop.max_weight();
        for m in r.decile_masses() {
            prop_assert!((m - non_gq / 10.0).abs() <= w_max + 1e-9);
        }
        let high: f64 = pop
            .persons()
            .iter()
            .enumerate()
            .filter(|(i, _)| r.person_high_adi(*i))
            .map(|(_, p)| p.weight)
            .sum();
        prop_assert!(high <= 0.30 * pop.weighted_total() + w_max);
        for (i, p) in pop.persons().iter().enumerate() {
            if p.group_quarters {
                prop_assert_eq!(r.person_decile(i), None);
                prop_assert!(!r.person_high_adi(i));
            } else {
                let d = r.person_decile(i).unwrap();
                prop_assert!((1..=10).contains(&d));
                prop_assert_eq!(r.person_high_adi(i), d >= 8);
            }
        }
    }

    #[test]
    fn members_share_score_and_split_only_at_cuts(pop in population_strategy()) {
        let Ok(r) = compute_adi(&pop, &AdiConfig::default()) else { return Ok(()); };
        let mut split = 0;
        for f in &r.families {
            let ds: std::collections::BTreeSet<_> = f.members.iter().map(|&m| r.person_decile(m)).collect();
            if ds.len() > 1 {
                split += 1;
            }
        }
        // at most one family straddles each of the nine cuts
        prop_assert!(split <= 9);
        let pieces: f64 = r.assignments.iter().map(|a| a.mass).sum();
        prop_assert!(close(pieces, pop.weighted_total_where(|p| !p.group_quarters), 1e-9));
    }
}

#[test]
fn coefficient_examples() {
    let coeffs = AdiConfig::default().coefficients;
    let mut c = FamilyAdiComponents::empty("f");
    assert_eq!(compute_raw_adi(&c, &coeffs), 0.0);
    c.set(Component::Unemployment, Some(100.0));
    assert_eq!(compute_raw_adi(&c, &coeffs), 8.06);
    c.set(Component::Unemployment, Some(50.0));
    c.set(Component::BelowPoverty, Some(100.0));
    let hand = 0.0806 * 50.0 + 0.0977 * 100.0;
    assert!((compute_raw_adi(&c, &coeffs) - hand).abs() < 1e-12);
    assert!((hand - 13.80).abs() < 0.005);
    assert_eq!(coeff(Component::Below150Poverty), 0.1037);
    assert_eq!(coeff(Component::HighSchoolOrMore), -0.0970);
}

#[test]
fn household_component_rules() {
    let mut owned = household("h1", 3);
    owned.owner_occupied = true;
    owned.gross_rent = None;
    owned.property_value = Some(150_000.0);
    owned.rooms_count = 2;
    let mut kids = household("h2", 2);
    kids.rooms_count = 5;
    let mut persons = Vec::new();
    for (hh, ages) in [("h1", vec![40u16, 38, 10]), ("h2", vec![19, 17])] {
        for (i, age) in ages.into_iter().enumerate() {
            let mut p = person(&format!("{hh}-{i}"), 1.0);
            p.household_id = Some(hh.into());
            p.age = age;
            p.education = Some(Education::HighSchoolOrMore);
            persons.push(p);
        }
    }
    let pop = Population::new(persons, Some(vec![owned, kids])).unwrap();
    let fams = derive_family_components(&pop, &AdiConfig::default()).unwrap();
    let get = |id: &str, c: Component| fams.iter().find(|f| f.id() == id).unwrap().components.get(c);
    assert_eq!(get("h1", Component::OwnerOccupied), Some(100.0));
    assert_eq!(get("h1", Component::Crowding), Some(100.0));
    assert_eq!(get("h1", Component::HighSchoolOrMore), Some(100.0));
    assert_eq!(get("h1", Component::IncomeDisparity), Some(0.0));
    assert_eq!(get("h2", Component::OwnerOccupied), Some(0.0));
    assert_eq!(get("h2", Component::Crowding), Some(0.0));
    assert_eq!(get("h2", Component::EducationBelowGrade9), None);
    assert_eq!(get("h2", Component::HighSchoolOrMore), None);
}

#[test]
fn group_quarters_push_high_adi_below_thirty_percent() {
    let mut persons = Vec::new();
    let mut households = Vec::new();
    for i in 0..200 {
        let id = format!("h{i:03}");
        let mut h = household(&id, 1);
        h.poverty_ratio = Some(f64::from(i) * 2.0);
        households.push(h);
        let mut p = person(&format!("{id}-0"), 1.0);
        p.household_id = Some(id);
        persons.push(p);
    }
    for i in 0..10 {
        let mut p = person(&format!("g{i}"), 1.0);
        p.group_quarters = true;
        persons.push(p);
    }
    let pop = Population::new(persons, Some(households)).unwrap();
    let r = compute_adi(&pop, &AdiConfig::default()).unwrap();
    let high = r.high_adi_flags().iter().filter(|&&f| f).count() as f64;
    assert_eq!(high, 60.0);
    assert!(high / pop.weighted_total() < 0.30);
}
