use unit_pricing::iid::{alpha_n, single_price_forced, single_price_mhr, uniform_price_revenue, IidMode};
use unit_pricing::pipeline::{self, SolveOptions, Solver};
use unit_pricing::rational::ratio;
use unit_pricing::{CdfOracle, Class, Instance, Item, TieBreak};

#[test]
fn alpha_n_matches_closed_forms() {
    let e = Item::Oracle(CdfOracle::exponential(2.0).unwrap());
    let u = Item::Oracle(CdfOracle::uniform(0.0, 3.0).unwrap());
    for n in [2u64, 10, 100, 1000, 1_000_000] {
        let (a, _) = alpha_n(&e, n).unwrap();
        assert!((a - (n as f64).ln() / 2.0).abs() <= 1e-12 * a.max(1.0), "n = {n}: {a}");
        let (a, _) = alpha_n(&u, n).unwrap();
        assert!((a - 3.0 * (1.0 - 1.0 / n as f64)).abs() <= 1e-12 * a.max(1.0), "n = {n}: {a}");
    }
}

#[test]
fn fast_path_is_deterministic_and_near_optimal() {
    let item = Item::Oracle(CdfOracle::exponential(1.0).unwrap());
    for n in [100u64, 1000] {
        for eps in [0.2, 0.5] {
            let a = single_price_forced(&item, n, eps / 12.0).unwrap();
            let b = single_price_forced(&item, n, eps / 12.0).unwrap();
            assert_eq!(a, b);
            let alpha = a.alpha_n.unwrap();
            let p = a.price.unwrap();
            assert!(p <= (1.0 - eps / 12.0) * alpha);
            let floor = (1.0 - (-(n as f64).powf(eps / 12.0)).exp() - eps / 12.0) * alpha;
            assert!(uniform_price_revenue(&item, n, (1.0 - eps / 12.0) * alpha) >= floor);
        }
    }
}

#[test]
fn solver_falls_back_below_the_threshold() {
    let item = Item::Oracle(CdfOracle::exponential(1.0).unwrap());
    assert_eq!(single_price_mhr(&item, 1000, 0.5).unwrap().mode, IidMode::FallBack);
    let inst = Instance::oracles(vec![CdfOracle::exponential(1.0).unwrap(); 2], TieBreak::LowestIndex)
        .unwrap()
        .with_class(Class::Mhr);
    let mut o = SolveOptions::new(ratio(1, 5));
    o.solver = Solver::Iid;
    o.discretization = pipeline::Discretization::Given { delta: ratio(1, 3), price_eps: ratio(1, 3) };
    o.samples = 20_000;
    let report = pipeline::solve(&inst, &o).unwrap();
    assert_eq!(report.iid.as_ref().unwrap().mode, IidMode::FallBack);
    assert_eq!(report.prices.len(), 2);
    assert!(report.notes.iter().any(|n| n.contains("threshold")));
}

#[test]
fn iid_solver_rejects_mixed_items() {
    let inst = Instance::oracles(
        vec![CdfOracle::exponential(1.0).unwrap(), CdfOracle::exponential(2.0).unwrap()],
        TieBreak::LowestIndex,
    )
    .unwrap()
    .with_class(Class::Mhr);
    let mut o = SolveOptions::new(ratio(1, 5));
    o.solver = Solver::Iid;
    assert!(pipeline::solve(&inst, &o).is_err());
}
