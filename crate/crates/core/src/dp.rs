//! Dynamic program over winning distributions.
//!
//! Layer `i` holds every reachable joint law of (winning value, winning
//! price) after the first `i` items have been priced. In canonical mode each
//! law is rounded to integer units of `1/M`; in exact mode nothing is rounded
//! and the program is an exhaustive search.

use std::collections::HashMap;
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::RestrictedInstance;
use crate::distributions::{DiscreteDistribution, TieBreak};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::report::{ser_rational, ser_rationals};
use crate::winning::{base_distribution, canonical_round_units, Grid};

pub const DEFAULT_STATE_CAP: usize = 5_000_000;
/// Largest `states * k1 * k2` the table may hold in one layer.
pub const DEFAULT_CELL_BUDGET: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DpMode {
    #[default]
    Canonical,
    Exact,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DpConfig {
    pub mode: DpMode,
    /// Replaces the default `M = ceil(n r)^3`.
    pub m_override: Option<u64>,
    pub state_cap: usize,
    pub cell_budget: u64,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            mode: DpMode::Canonical,
            m_override: None,
            state_cap: DEFAULT_STATE_CAP,
            cell_budget: DEFAULT_CELL_BUDGET,
        }
    }
}

impl DpConfig {
    pub fn exact() -> Self {
        Self { mode: DpMode::Exact, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerStats {
    pub i: usize,
    pub states: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DpResult {
    /// Index into the price grid for every item.
    pub price_indices: Vec<usize>,
    #[serde(serialize_with = "ser_rationals")]
    pub prices: Vec<Rational>,
    #[serde(serialize_with = "ser_rational")]
    pub predicted_revenue: Rational,
    /// Stored layers `0..n`; the last layer is scored on the fly.
    pub layers: Vec<LayerStats>,
    /// Successors of layer `n - 1` that were scored.
    pub final_candidates: usize,
    pub mode: DpMode,
    /// Rounding denominator, absent in exact mode.
    pub m: Option<u64>,
    /// Common denominator of the item masses.
    pub mass_denominator: Option<u64>,
}

/// `ceil(n r)^3` with `r` the price ratio of the grid.
pub fn default_m(n: usize, prices: &[Rational]) -> Result<u64> {
    let r = prices.last().expect("nonempty") / &prices[0];
    crate::discretization::vertical_denominator(&r, n)
}

/// `sum p(i2) * units/M` over the cells that sell.
pub fn revenue_of(grid: &Grid, units: &[u64], m: u64) -> Rational {
    grid.revenue_units(units, &BigInt::from(m))
}

/// Smallest common denominator of all masses, if it fits in 64 bits.
fn mass_denominator(items: &[&DiscreteDistribution]) -> Result<u64> {
    let mut d = BigInt::from(1);
    for it in items {
        for m in it.masses() {
            d = d.lcm(m.denom());
        }
    }
    d.to_u64().ok_or_else(|| Error::Resource(format!("item masses need a common denominator of {} bits", d.bits())))
}

struct Layer<S> {
    states: Vec<S>,
    /// `(predecessor index, price index)` per state.
    back: Vec<(u32, u32)>,
}

/// Chunk of predecessors expanded in parallel before a sequential merge.
const CHUNK: usize = 256;

fn run_layers<S, F>(n: usize, k2: usize, base: S, cap: usize, step: F) -> Result<Vec<Layer<S>>>
where
    S: Clone + Ord + Hash + Send + Sync,
    F: Fn(&S, usize, usize) -> S + Sync,
{
    let mut layers = vec![Layer { states: vec![base], back: vec![(0, 0)] }];
    for i in 0..n {
        let prev = &layers[i].states;
        let mut seen: HashMap<S, (u32, u32)> = HashMap::new();
        for (c, chunk) in prev.chunks(CHUNK).enumerate() {
            let produced: Vec<Vec<S>> = chunk.par_iter().map(|s| (0..k2).map(|j| step(s, i, j)).collect()).collect();
            for (off, outs) in produced.into_iter().enumerate() {
                let pred = (c * CHUNK + off) as u32;
                for (j, s) in outs.into_iter().enumerate() {
                    seen.entry(s).or_insert((pred, j as u32));
                }
                if seen.len() > cap {
                    return Err(Error::Resource(format!(
                        "layer {} exceeded the state cap of {cap} (more than {} states)",
                        i + 1,
                        seen.len()
                    )));
                }
            }
        }
        let mut entries: Vec<(S, (u32, u32))> = seen.into_iter().collect();
        entries.par_sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let (states, back) = entries.into_iter().unzip();
        layers.push(Layer { states, back });
    }
    Ok(layers)
}

/// Scores every successor of the second-to-last layer without storing the
/// last one. Ties go to the smallest state, then to the first `(pred, j)`.
fn select<S, K, F, R>(layers: &[Layer<S>], k2: usize, step: F, revenue: R) -> (Vec<usize>, K, usize)
where
    S: Ord + Send + Sync,
    K: Ord + Send,
    F: Fn(&S, usize) -> S + Sync,
    R: Fn(&S) -> K + Sync,
{
    let last = layers.last().expect("layer 0 exists");
    let better = |a: &(K, S, usize, usize), b: &(K, S, usize, usize)| {
        a.0 > b.0 || (a.0 == b.0 && (&a.1, a.2, a.3) < (&b.1, b.2, b.3))
    };
    let best = last
        .states
        .par_iter()
        .enumerate()
        .flat_map_iter(|(pred, s)| (0..k2).map(move |j| (pred, j, s)))
        .map(|(pred, j, s)| {
            let t = step(s, j);
            (revenue(&t), t, pred, j)
        })
        .reduce_with(|a, b| if better(&b, &a) { b } else { a })
        .expect("at least one candidate");
    let (rev, _, mut idx, j) = best;
    let mut prices = vec![0; layers.len()];
    prices[layers.len() - 1] = j;
    for i in (1..layers.len()).rev() {
        let (pred, j) = layers[i].back[idx];
        prices[i - 1] = j as usize;
        idx = pred as usize;
    }
    (prices, rev, last.states.len() * k2)
}

/// Runs the dynamic program on a restricted instance.
pub fn run_dp(ri: &RestrictedInstance, tie: TieBreak, config: &DpConfig) -> Result<DpResult> {
    run_dp_on(&ri.instance.discrete_items()?, &ri.values, &ri.prices, tie, config)
}

/// Runs the dynamic program for items already supported on `values`.
pub fn run_dp_on(
    items: &[&DiscreteDistribution],
    values: &[Rational],
    prices: &[Rational],
    tie: TieBreak,
    config: &DpConfig,
) -> Result<DpResult> {
    if items.is_empty() {
        return Err(Error::Domain("no items".into()));
    }
    for (i, it) in items.iter().enumerate() {
        if it.support() != values {
            return Err(Error::Domain(format!("item {i} is not supported on the value grid")));
        }
    }
    let grid = Grid::new(values.to_vec(), prices.to_vec())?;
    if grid.cells() as u64 > config.cell_budget {
        return Err(Error::Resource(format!(
            "grid has {} cells, above the budget of {}",
            grid.cells(),
            config.cell_budget
        )));
    }
    let n = items.len();
    let k2 = grid.k2();
    let cap = config.state_cap.min((config.cell_budget / grid.cells() as u64).max(1) as usize);
    match config.mode {
        DpMode::Exact => {
            let base = base_distribution(&grid);
            let q: Vec<Vec<Rational>> = items.iter().map(|d| d.masses().to_vec()).collect();
            let step = |s: &Vec<Rational>, i: usize, j: usize| grid.transition(s, &q[i], j, tie);
            let layers = run_layers(n - 1, k2, base, cap, step)?;
            let (idx, rev, candidates) = select(&layers, k2, |s, j| step(s, n - 1, j), |s| grid.revenue(s));
            Ok(finish(&layers, idx, rev, candidates, prices, DpMode::Exact, None, None))
        }
        DpMode::Canonical => {
            let m = match config.m_override {
                Some(m) if m > 0 => m,
                Some(_) => return Err(Error::Domain("M must be positive".into())),
                None => default_m(n, prices)?,
            };
            let sub = mass_denominator(items)?;
            if (m as u128).checked_mul(sub as u128).is_none_or(|x| x > u128::MAX / 4) {
                return Err(Error::Resource(format!("M = {m} times mass denominator {sub} overflows 128 bits")));
            }
            let q: Vec<Vec<u128>> = items
                .iter()
                .map(|d| {
                    d.masses()
                        .iter()
                        .map(|x| rational::to_units(x, &BigInt::from(sub)).to_u128().expect("mass <= 1"))
                        .collect()
                })
                .collect();
            let mut base = vec![0u64; grid.cells()];
            base[grid.base_cell()] = m;
            // Products stay below `M * sub`; plain 64-bit words suffice when that is small.
            let narrow = (m as u128) * (sub as u128) <= (u64::MAX / 4) as u128;
            let q64: Vec<Vec<u64>> = q.iter().map(|r| r.iter().map(|&x| x as u64).collect()).collect();
            let step = |s: &Vec<u64>, i: usize, j: usize| {
                if narrow {
                    canonical_round_units(&grid.transition(s, &q64[i], j, tie), sub)
                } else {
                    let w: Vec<u128> = s.iter().map(|&x| x as u128).collect();
                    canonical_round_units(&grid.transition(&w, &q[i], j, tie), sub as u128)
                }
            };
            let layers = run_layers(n - 1, k2, base, cap, step)?;
            let (idx, num, candidates) = select(&layers, k2, |s, j| step(s, n - 1, j), |s| grid.revenue_numerator(s));
            let rev = Rational::new(num, grid.revenue_denominator(&BigInt::from(m)));
            Ok(finish(&layers, idx, rev, candidates, prices, DpMode::Canonical, Some(m), Some(sub)))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish<S>(
    layers: &[Layer<S>],
    idx: Vec<usize>,
    rev: Rational,
    candidates: usize,
    prices: &[Rational],
    mode: DpMode,
    m: Option<u64>,
    sub: Option<u64>,
) -> DpResult {
    DpResult {
        prices: idx.iter().map(|&j| prices[j].clone()).collect(),
        price_indices: idx,
        predicted_revenue: rev,
        layers: layers.iter().enumerate().map(|(i, l)| LayerStats { i, states: l.states.len() }).collect(),
        final_candidates: candidates,
        mode,
        m,
        mass_denominator: sub,
    }
}

/// Largest L1 distance, over the layers, between the exact winning
/// distribution along a fixed price-index path and the canonically rounded
/// one.
pub fn coupling_gap(
    items: &[&DiscreteDistribution],
    values: &[Rational],
    prices: &[Rational],
    price_indices: &[usize],
    tie: TieBreak,
    m: u64,
) -> Result<Rational> {
    if price_indices.len() != items.len() {
        return Err(Error::Domain("one price index per item is required".into()));
    }
    let grid = Grid::new(values.to_vec(), prices.to_vec())?;
    let sub = mass_denominator(items)?;
    let mut exact = base_distribution(&grid);
    let mut units = vec![0u64; grid.cells()];
    units[grid.base_cell()] = m;
    let mq = Rational::from_integer(BigInt::from(m));
    let mut worst = Rational::zero();
    for (d, &j) in items.iter().zip(price_indices) {
        if j >= grid.k2() {
            return Err(Error::Domain(format!("price index {j} out of range")));
        }
        exact = grid.transition(&exact, d.masses(), j, tie);
        let q: Vec<u128> = d
            .masses()
            .iter()
            .map(|x| rational::to_units(x, &BigInt::from(sub)).to_u128().expect("mass <= 1"))
            .collect();
        let w: Vec<u128> = units.iter().map(|&x| x as u128).collect();
        units = canonical_round_units(&grid.transition(&w, &q, j, tie), sub as u128);
        let l1: Rational = exact
            .iter()
            .zip(&units)
            .map(|(e, &u)| {
                let diff = e - Rational::from_integer(BigInt::from(u)) / &mq;
                if diff < Rational::zero() {
                    -diff
                } else {
                    diff
                }
            })
            .sum();
        worst = worst.max(l1);
    }
    Ok(worst)
}
