mod common;

use proptest::prelude::*;

use unit_pricing::oracle::{buyer_choice, exact_revenue, exact_revenue_enumerate};
use unit_pricing::rational::{int, ratio};
use unit_pricing::{DiscreteDistribution, Instance, Rational, TieBreak};

fn scale(inst: &Instance, lambda: &Rational) -> Instance {
    let items = inst.discrete_items().unwrap().into_iter().map(|d| d.map_values(|v| v * lambda).unwrap()).collect();
    Instance::discrete(items, inst.tie_break).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn sequential_matches_enumeration((inst, prices) in common::priced_instance_strategy(3, 3)) {
        prop_assert_eq!(exact_revenue(&inst, &prices).unwrap(), exact_revenue_enumerate(&inst, &prices).unwrap());
    }

    #[test]
    fn scaling_values_and_prices_scales_revenue(
        (inst, prices) in common::priced_instance_strategy(3, 3),
        num in 1i64..20,
        den in 1i64..20,
    ) {
        let lambda = ratio(num, den);
        let scaled = scale(&inst, &lambda);
        let scaled_prices: Vec<Rational> = prices.iter().map(|p| p * &lambda).collect();
        prop_assert_eq!(
            exact_revenue(&scaled, &scaled_prices).unwrap(),
            exact_revenue(&inst, &prices).unwrap() * &lambda
        );
        // Pointwise: the same item is chosen on every joint draw.
        let items = inst.discrete_items().unwrap();
        let mut idx = vec![0usize; items.len()];
        'outer: loop {
            let v: Vec<Rational> = items.iter().zip(&idx).map(|(d, &k)| d.support()[k].clone()).collect();
            let sv: Vec<Rational> = v.iter().map(|x| x * &lambda).collect();
            prop_assert_eq!(
                buyer_choice(&v, &prices, inst.tie_break),
                buyer_choice(&sv, &scaled_prices, inst.tie_break)
            );
            for pos in 0..idx.len() {
                idx[pos] += 1;
                if idx[pos] < items[pos].len() {
                    continue 'outer;
                }
                idx[pos] = 0;
            }
            break;
        }
    }

    #[test]
    fn appended_overpriced_item_changes_nothing(
        (inst, prices) in common::priced_instance_strategy(3, 3),
        extra in common::item_strategy(3),
        above in 1i64..5,
    ) {
        let mut items: Vec<DiscreteDistribution> = inst.discrete_items().unwrap().into_iter().cloned().collect();
        let price = extra.u_max() + ratio(above, 2);
        items.push(extra);
        let bigger = Instance::discrete(items, TieBreak::LowestIndex).unwrap();
        let mut inst = inst;
        inst.tie_break = TieBreak::LowestIndex;
        let mut more = prices.clone();
        more.push(price);
        prop_assert_eq!(exact_revenue(&bigger, &more).unwrap(), exact_revenue(&inst, &prices).unwrap());
    }

    #[test]
    fn revenue_is_deterministic((inst, prices) in common::priced_instance_strategy(3, 3)) {
        prop_assert_eq!(exact_revenue(&inst, &prices).unwrap(), exact_revenue(&inst, &prices).unwrap());
    }
}

#[test]
fn tie_break_decides_equal_gaps() {
    let v = [int(3), int(4)];
    let p = [int(1), int(2)];
    assert_eq!(buyer_choice(&v, &p, TieBreak::LowestIndex), Some(0));
    assert_eq!(buyer_choice(&v, &p, TieBreak::HighestIndex), Some(1));
    assert_eq!(buyer_choice(&v, &[int(5), int(5)], TieBreak::LowestIndex), None);
    // A zero gap still buys.
    assert_eq!(buyer_choice(&[int(2)], &[int(2)], TieBreak::LowestIndex), Some(0));
}

#[test]
fn counterexample_values() {
    let inst = Instance::discrete(
        vec![
            DiscreteDistribution::uniform_over(vec![int(1), int(5)]).unwrap(),
            DiscreteDistribution::uniform_over(vec![int(3), ratio(7, 2)]).unwrap(),
        ],
        TieBreak::LowestIndex,
    )
    .unwrap();
    assert_eq!(exact_revenue(&inst, &[ratio(9, 2), int(3)]).unwrap(), ratio(15, 4));
    assert_eq!(exact_revenue(&inst, &[int(5), ratio(7, 2)]).unwrap(), ratio(27, 8));
    assert_eq!(exact_revenue(&inst, &[int(5), int(3)]).unwrap(), ratio(7, 2));
}
