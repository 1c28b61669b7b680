mod common;

use proptest::prelude::*;

use unit_pricing::oracle::{exact_revenue, union_support};
use unit_pricing::rational::{int, ratio};
use unit_pricing::reductions::{
    lift_solution_mhr, restrict_prices, truncate_values_mhr, MhrWindow, Price, PriceVector, Restriction,
};
use unit_pricing::Rational;

fn revenue(inst: &unit_pricing::Instance, p: &PriceVector) -> Rational {
    exact_revenue(inst, &p.to_finite().unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn clamping_into_the_value_range_never_hurts((inst, prices) in common::priced_instance_strategy(3, 3)) {
        let support = union_support(&inst.discrete_items().unwrap());
        let range = Restriction::ClampRange(support[0].clone(), support.last().unwrap().clone());
        let p = PriceVector::from_finite(prices);
        let clamped = restrict_prices(&p, &range).unwrap();
        prop_assert!(revenue(&inst, &clamped) >= revenue(&inst, &p));
    }

    #[test]
    fn raising_low_prices_loses_at_most_the_floor(
        (inst, prices) in common::priced_instance_strategy(3, 3),
        a in common::price_strategy(),
    ) {
        let p = PriceVector::from_finite(prices);
        let raised = restrict_prices(&p, &Restriction::RaiseLow(a.clone())).unwrap();
        prop_assert!(revenue(&inst, &raised) >= revenue(&inst, &p) - a);
    }

    #[test]
    fn lower_truncation_is_invisible_to_high_prices(
        inst in common::instance_strategy(3, 3),
        extra in prop::collection::vec(0i64..=8, 3),
    ) {
        let (beta, eps) = (int(10), ratio(1, 5));
        let w = MhrWindow::new(&beta, &eps).unwrap();
        prop_assert!(w.high_point > int(6));
        let truncated = truncate_values_mhr(&inst, &beta, &eps).unwrap();
        let prices: Vec<Rational> = (0..inst.len()).map(|i| &w.low_threshold + ratio(extra[i], 2)).collect();
        prop_assert_eq!(exact_revenue(&truncated, &prices).unwrap(), exact_revenue(&inst, &prices).unwrap());
    }
}

#[test]
fn restrictions_handle_infinite_prices() {
    let p = PriceVector(vec![Price::Finite(int(1)), Price::Infinite, Price::Finite(int(9))]);
    let clamped = restrict_prices(&p, &Restriction::ClampRange(int(2), int(5))).unwrap();
    assert_eq!(clamped, PriceVector::from_finite(vec![int(2), int(5), int(5)]));
    let capped = restrict_prices(&p, &Restriction::CapHigh(int(4))).unwrap();
    assert_eq!(capped, PriceVector::from_finite(vec![int(1), int(4), int(4)]));
    let replaced = restrict_prices(&p, &Restriction::ReplaceInfinite(int(7))).unwrap();
    assert_eq!(replaced, PriceVector::from_finite(vec![int(1), int(7), int(9)]));
    let raised = restrict_prices(&p, &Restriction::RaiseLow(int(3))).unwrap();
    assert_eq!(raised.0[1], Price::Infinite);
    assert!(restrict_prices(&p, &Restriction::ClampRange(int(5), int(2))).is_err());
    assert!(p.to_finite().is_err());
}

#[test]
fn mhr_lift_stays_in_the_window() {
    let (beta, eps) = (int(4), ratio(1, 8));
    let w = MhrWindow::new(&beta, &eps).unwrap();
    let p = PriceVector(vec![Price::Finite(ratio(1, 100)), Price::Infinite, Price::Finite(int(2))]);
    let lifted = lift_solution_mhr(&p, &beta, &eps).unwrap().to_finite().unwrap();
    assert_eq!(lifted[0], w.low_threshold);
    assert_eq!(lifted[1], w.high_point);
    assert_eq!(lifted[2], int(2));
}
