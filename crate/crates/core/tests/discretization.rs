mod common;

use num_traits::One;
use proptest::prelude::*;

use unit_pricing::discretization::{
    full_discretize_with, horizontal_discretize, price_grid, snap_prices, total_variation, vertical_denominator,
    vertical_round, DiscretizeParams, ValueGrid,
};
use unit_pricing::oracle::{exact_revenue, union_support};
use unit_pricing::rational::{int, ratio};
use unit_pricing::{CdfOracle, Instance, Rational, TieBreak};

fn eps_strategy() -> impl Strategy<Value = Rational> {
    prop_oneof![Just(ratio(1, 10)), Just(ratio(1, 5)), Just(ratio(1, 4)), Just(ratio(1, 2))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn price_grid_ratios_are_exact(lo in 1i64..10, span in 1i64..40, eps in eps_strategy()) {
        let g = price_grid(&int(lo), &int(lo + span), &eps, 10_000).unwrap();
        let q = (Rational::one() - &eps * &eps).recip();
        prop_assert!(g.windows(2).all(|w| &w[1] / &w[0] == q));
        prop_assert!(g.last().unwrap() <= &(int(lo + span) * &q));
    }

    #[test]
    fn snapping_keeps_most_revenue(
        (inst, offsets) in common::instance_strategy(3, 3).prop_flat_map(|i| {
            let n = i.len();
            (Just(i), prop::collection::vec(0i64..=12, n))
        }),
        eps in eps_strategy(),
    ) {
        let u_min = union_support(&inst.discrete_items().unwrap())[0].clone();
        let prices: Vec<Rational> = offsets.iter().map(|&k| &u_min + ratio(k, 2)).collect();
        let snapped = snap_prices(&prices, &u_min, &eps).unwrap();
        for (s, p) in snapped.iter().zip(&prices) {
            prop_assert!(s >= &((Rational::one() - &eps) * p));
            prop_assert!(s <= &((Rational::one() + &eps * &eps - &eps) * p));
        }
        let before = exact_revenue(&inst, &prices).unwrap();
        let after = exact_revenue(&inst, &snapped).unwrap();
        prop_assert!(after >= (Rational::one() - int(2) * &eps) * before);
    }

    #[test]
    fn vertical_rounding_moves_little_mass(inst in common::instance_strategy(3, 3)) {
        let support = union_support(&inst.discrete_items().unwrap());
        let r = support.last().unwrap() / &support[0];
        let n = inst.len();
        let rounded = vertical_round(&inst, &r, n).unwrap();
        let den = vertical_denominator(&r, n).unwrap();
        let rn3 = unit_pricing::rational::pow(&(&r * int(n as i64)), 3);
        for (a, b) in inst.discrete_items().unwrap().iter().zip(rounded.discrete_items().unwrap()) {
            prop_assert!(total_variation(a, b) <= int(a.len() as i64) / &rn3);
            for m in b.masses() {
                prop_assert!((m * int(den as i64)).is_integer());
            }
        }
    }

    #[test]
    fn horizontal_discretization_conserves_mass(inst in common::instance_strategy(3, 3), d in 2i64..40) {
        let support = union_support(&inst.discrete_items().unwrap());
        let grid = ValueGrid::new(&support[0], support.last().unwrap(), &ratio(1, d), false, 1_000_000).unwrap();
        let h = horizontal_discretize(&inst, &grid, true).unwrap();
        for (orig, disc) in inst.discrete_items().unwrap().iter().zip(h.instance.discrete_items().unwrap()) {
            prop_assert_eq!(disc.masses().iter().sum::<Rational>(), Rational::one());
            // Each value moves to a grid point at most (1 + delta) above it.
            for (v, m) in orig.atoms() {
                let j = grid.index_of(v).unwrap();
                let k = h.indices.binary_search(&j).unwrap();
                prop_assert!(disc.masses()[k] >= *m);
                prop_assert!(&h.values[k] >= v && h.values[k] <= v * (Rational::one() + ratio(1, d)));
            }
        }
    }
}

#[test]
fn uniform_grid_size() {
    let grid = ValueGrid::new(&int(1), &int(2), &ratio(1, 100), false, 1_000_000).unwrap();
    assert_eq!(grid.len(), 7001);
}

#[test]
fn oracle_grids_fail_fast_when_too_large() {
    let inst = Instance::oracles(vec![CdfOracle::uniform(1.0, 50.0).unwrap(); 2], TieBreak::LowestIndex).unwrap();
    let params = DiscretizeParams::practical(&ratio(1, 4), &int(50));
    let err = full_discretize_with(&inst, &params).unwrap_err();
    assert!(matches!(err, unit_pricing::Error::Resource(_)), "{err}");
}
