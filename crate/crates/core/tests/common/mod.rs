#![allow(dead_code)]

use proptest::prelude::*;
use rand::Rng;

use unit_pricing::rational::ratio;
use unit_pricing::{DiscreteDistribution, Instance, Rational, TieBreak};

/// Values are halves in `[1/2, 6]`; masses are integer weights normalized.
fn build_item(points: &[(i64, i64)]) -> DiscreteDistribution {
    let total: i64 = points.iter().map(|p| p.1).sum();
    DiscreteDistribution::from_points(points.iter().map(|&(v, w)| (ratio(v, 2), ratio(w, total)))).unwrap()
}

pub fn random_item(rng: &mut impl Rng, k_max: usize) -> DiscreteDistribution {
    let k = rng.random_range(1..=k_max);
    let points: Vec<(i64, i64)> = (0..k).map(|_| (rng.random_range(1..=12), rng.random_range(1..=6))).collect();
    build_item(&points)
}

pub fn random_instance(rng: &mut impl Rng, n_max: usize, k_max: usize, tie: TieBreak) -> Instance {
    let n = rng.random_range(1..=n_max);
    Instance::discrete((0..n).map(|_| random_item(rng, k_max)).collect(), tie).unwrap()
}

/// `k` distinct prices, halves in `[1/2, 6]`.
pub fn random_prices(rng: &mut impl Rng, k: usize) -> Vec<Rational> {
    let mut out: Vec<Rational> = Vec::new();
    while out.len() < k {
        let p = ratio(rng.random_range(1..=12), 2);
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out.sort();
    out
}

pub fn tie_strategy() -> impl Strategy<Value = TieBreak> {
    prop_oneof![Just(TieBreak::LowestIndex), Just(TieBreak::HighestIndex)]
}

pub fn item_strategy(k_max: usize) -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::vec((1i64..=12, 1i64..=6), 1..=k_max).prop_map(|p| build_item(&p))
}

pub fn instance_strategy(n_max: usize, k_max: usize) -> impl Strategy<Value = Instance> {
    (prop::collection::vec(item_strategy(k_max), 1..=n_max), tie_strategy())
        .prop_map(|(items, tie)| Instance::discrete(items, tie).unwrap())
}

pub fn price_strategy() -> impl Strategy<Value = Rational> {
    (1i64..=14).prop_map(|p| ratio(p, 2))
}

/// An instance together with one price per item.
pub fn priced_instance_strategy(n_max: usize, k_max: usize) -> impl Strategy<Value = (Instance, Vec<Rational>)> {
    instance_strategy(n_max, k_max).prop_flat_map(|inst| {
        let n = inst.len();
        (Just(inst), prop::collection::vec(price_strategy(), n))
    })
}

/// `n <= n_max` items on one shared grid of `k1 <= k1_max` values; some
/// masses may be zero.
pub fn random_grid_instance(
    rng: &mut impl Rng,
    n_max: usize,
    k1_max: usize,
    tie: TieBreak,
) -> (Instance, Vec<Rational>) {
    let k1 = rng.random_range(1..=k1_max);
    let values = random_prices(rng, k1);
    let n = rng.random_range(1..=n_max);
    let items = (0..n)
        .map(|_| {
            let mut w: Vec<i64> = (0..k1).map(|_| rng.random_range(0..=4)).collect();
            if w.iter().all(|&x| x == 0) {
                let k = rng.random_range(0..k1);
                w[k] = 1;
            }
            let total: i64 = w.iter().sum();
            DiscreteDistribution::new(values.clone(), w.iter().map(|&x| ratio(x, total)).collect()).unwrap()
        })
        .collect();
    (Instance::discrete(items, tie).unwrap(), values)
}
