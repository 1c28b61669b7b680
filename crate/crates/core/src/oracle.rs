//! Ground-truth revenue evaluators: exact, brute force over a price grid,
//! and Monte Carlo.

use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{DiscreteDistribution, Instance, Item, TieBreak};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::winning::Grid;

/// Default cap on the number of price vectors brute force may visit.
pub const DEFAULT_BRUTE_CAP: u64 = 10_000_000;

/// Two-sided normal quantile for 99% intervals.
pub const Z99: f64 = 2.5758293035489;

/// Union of the items' supports, ascending.
pub fn union_support(items: &[&DiscreteDistribution]) -> Vec<Rational> {
    let mut values: Vec<Rational> = items.iter().flat_map(|d| d.support().iter().cloned()).collect();
    values.sort();
    values.dedup();
    values
}

/// An item's masses re-indexed onto `values`, which must contain its support.
pub fn masses_on(d: &DiscreteDistribution, values: &[Rational]) -> Vec<Rational> {
    let mut q = vec![Rational::zero(); values.len()];
    for (v, m) in d.iter() {
        let i = values.binary_search(v).expect("value grid covers the support");
        q[i] += m;
    }
    q
}

fn check_prices(instance: &Instance, prices: &[Rational]) -> Result<()> {
    if prices.len() != instance.len() {
        return Err(Error::Domain(format!("{} prices given for {} items", prices.len(), instance.len())));
    }
    if prices.iter().any(|p| p < &Rational::zero()) {
        return Err(Error::Domain("prices must be nonnegative".into()));
    }
    Ok(())
}

fn sorted_distinct(prices: &[Rational]) -> Vec<Rational> {
    let mut set = prices.to_vec();
    set.sort();
    set.dedup();
    set
}

/// Item masses as integers over a per-item denominator.
struct Scaled {
    q: Vec<Vec<BigInt>>,
    /// Product of the item denominators.
    total: BigInt,
}

fn scaled_masses(items: &[&DiscreteDistribution], values: &[Rational]) -> Scaled {
    let mut total = BigInt::one();
    let q = items
        .iter()
        .map(|d| {
            let m = masses_on(d, values);
            let den = rational::common_denominator(&m);
            total *= &den;
            m.iter().map(|x| rational::to_units(x, &den)).collect()
        })
        .collect();
    Scaled { q, total }
}

/// Runs `f` with the item masses as `u128` when every product fits, else as
/// `BigInt`.
fn with_units<R>(s: &Scaled, f_small: impl FnOnce(&[Vec<u128>]) -> R, f_big: impl FnOnce(&[Vec<BigInt>]) -> R) -> R {
    if s.total.bits() <= 120 {
        let q: Vec<Vec<u128>> = s.q.iter().map(|r| r.iter().map(|x| x.to_u128().expect("fits")).collect()).collect();
        f_small(&q)
    } else {
        f_big(&s.q)
    }
}

trait Units:
    Clone
    + Zero
    + One
    + Send
    + Sync
    + Into<BigInt>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
{
}
impl<T> Units for T where
    T: Clone
        + Zero
        + One
        + Send
        + Sync
        + Into<BigInt>
        + for<'a> Add<&'a T, Output = T>
        + for<'a> Mul<&'a T, Output = T>
{
}

fn base_units<T: Units>(grid: &Grid) -> Vec<T> {
    let mut w = vec![T::zero(); grid.cells()];
    w[grid.base_cell()] = T::one();
    w
}

/// Expected revenue of a price vector, in exact arithmetic.
///
/// The winner's (value, price) law is built one item at a time on the grid of
/// all support values and all distinct prices.
pub fn exact_revenue(instance: &Instance, prices: &[Rational]) -> Result<Rational> {
    let items = instance.discrete_items()?;
    check_prices(instance, prices)?;
    let grid = Grid::new(union_support(&items), sorted_distinct(prices))?;
    let idx: Vec<usize> = prices.iter().map(|p| grid.prices().binary_search(p).expect("price on grid")).collect();
    let s = scaled_masses(&items, grid.values());
    let tie = instance.tie_break;
    fn run<T: Units>(grid: &Grid, q: &[Vec<T>], idx: &[usize], tie: TieBreak, total: &BigInt) -> Rational {
        let mut w = base_units::<T>(grid);
        for (qi, &j) in q.iter().zip(idx) {
            w = grid.transition(&w, qi, j, tie);
        }
        grid.revenue_scaled(&w, total)
    }
    Ok(with_units(&s, |q| run(&grid, q, &idx, tie, &s.total), |q| run(&grid, q, &idx, tie, &s.total)))
}

/// Index of the item the buyer takes, if any.
pub fn buyer_choice(values: &[Rational], prices: &[Rational], tie: TieBreak) -> Option<usize> {
    let mut best: Option<(usize, Rational)> = None;
    for (i, (v, p)) in values.iter().zip(prices).enumerate() {
        let gap = v - p;
        if gap < Rational::zero() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((_, g)) => match tie {
                TieBreak::LowestIndex => gap > *g,
                TieBreak::HighestIndex => gap >= *g,
            },
        };
        if better {
            best = Some((i, gap));
        }
    }
    best.map(|(i, _)| i)
}

/// Expected revenue by summing over every joint value vector. Exponential in
/// the number of items; kept as a cross-check for [`exact_revenue`].
pub fn exact_revenue_enumerate(instance: &Instance, prices: &[Rational]) -> Result<Rational> {
    let items = instance.discrete_items()?;
    check_prices(instance, prices)?;
    let mut total = Rational::zero();
    let mut idx = vec![0usize; items.len()];
    loop {
        let prob: Rational = items.iter().zip(&idx).map(|(d, &k)| d.masses()[k].clone()).product();
        if !prob.is_zero() {
            let values: Vec<Rational> = items.iter().zip(&idx).map(|(d, &k)| d.support()[k].clone()).collect();
            if let Some(i) = buyer_choice(&values, prices, instance.tie_break) {
                total += prob * &prices[i];
            }
        }
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return Ok(total);
            }
            idx[pos] += 1;
            if idx[pos] < items[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteForceResult {
    #[serde(serialize_with = "crate::report::ser_rationals")]
    pub prices: Vec<Rational>,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub revenue: Rational,
    pub vectors: u64,
}

/// Best vector in `price_set^n`, ties going to the lexicographically smallest.
pub fn brute_force_optimum(instance: &Instance, price_set: &[Rational], cap: u64) -> Result<BruteForceResult> {
    let items = instance.discrete_items()?;
    let set = sorted_distinct(price_set);
    if set.is_empty() {
        return Err(Error::Domain("empty price set".into()));
    }
    let n = items.len();
    let vectors = (set.len() as u64)
        .checked_pow(n as u32)
        .filter(|&v| v <= cap)
        .ok_or_else(|| Error::Resource(format!("{}^{} price vectors exceed the cap {cap}", set.len(), n)))?;
    let grid = Grid::new(union_support(&items), set)?;
    let s = scaled_masses(&items, grid.values());
    let tie = instance.tie_break;
    let best = with_units(&s, |q| best_vector(&grid, q, tie, &s.total), |q| best_vector(&grid, q, tie, &s.total));
    Ok(BruteForceResult {
        prices: best.1.iter().map(|&j| grid.prices()[j].clone()).collect(),
        revenue: best.0,
        vectors,
    })
}

fn best_vector<T: Units>(grid: &Grid, q: &[Vec<T>], tie: TieBreak, total: &BigInt) -> (Rational, Vec<usize>) {
    let (num, path) = best_numerator(grid, q, tie);
    (Rational::new(num, grid.revenue_denominator(total)), path)
}

fn best_numerator<T: Units>(grid: &Grid, q: &[Vec<T>], tie: TieBreak) -> (BigInt, Vec<usize>) {
    let base = base_units::<T>(grid);
    (0..grid.k2())
        .into_par_iter()
        .map(|j0| {
            let w = grid.transition(&base, &q[0], j0, tie);
            let mut path = vec![j0];
            let mut best: Option<(BigInt, Vec<usize>)> = None;
            search(grid, q, tie, &w, &mut path, &mut best);
            best.expect("every subtree has a leaf")
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("nonempty price set")
}

fn search<T: Units>(
    grid: &Grid,
    q: &[Vec<T>],
    tie: TieBreak,
    w: &[T],
    path: &mut Vec<usize>,
    best: &mut Option<(BigInt, Vec<usize>)>,
) {
    let i = path.len();
    if i == q.len() {
        let revenue = grid.revenue_scaled_numerator(w);
        if best.as_ref().is_none_or(|(b, _)| revenue > *b) {
            *best = Some((revenue, path.clone()));
        }
        return;
    }
    for j in 0..grid.k2() {
        let next = grid.transition(w, &q[i], j, tie);
        path.push(j);
        search(grid, q, tie, &next, path, best);
        path.pop();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// Half-width of the 99% normal-approximation interval.
    pub ci99: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.estimate).abs() <= self.ci99
    }
}

const CHUNK: u64 = 4096;

/// Uniform draws in `[0, 1)` for one item, keyed by `(seed, item, sample)`.
pub struct KeyedUniforms {
    rng: ChaCha8Rng,
}

impl KeyedUniforms {
    pub fn new(seed: u64, item: u64, first_sample: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(item);
        rng.set_word_pos(first_sample as u128 * 2);
        Self { rng }
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Sampler for value vectors. Discrete-only instances compare gaps exactly
/// through precomputed ranks.
enum Buyer {
    Exact { ranks: Vec<Vec<u32>>, sells: Vec<Vec<bool>> },
    Float { prices: Vec<f64> },
}

fn build_buyer(instance: &Instance, prices: &[Rational]) -> Buyer {
    if let Ok(items) = instance.discrete_items() {
        let mut gaps: Vec<Rational> =
            items.iter().zip(prices).flat_map(|(d, p)| d.support().iter().map(move |v| v - p)).collect();
        gaps.sort();
        gaps.dedup();
        let ranks = items
            .iter()
            .zip(prices)
            .map(|(d, p)| d.support().iter().map(|v| gaps.binary_search(&(v - p)).unwrap() as u32).collect())
            .collect();
        let sells = items.iter().zip(prices).map(|(d, p)| d.support().iter().map(|v| v >= p).collect()).collect();
        Buyer::Exact { ranks, sells }
    } else {
        Buyer::Float { prices: prices.iter().map(rational::to_f64).collect() }
    }
}

/// Index of the purchased item for one sampled value vector.
fn simulate(instance: &Instance, buyer: &Buyer, draws: &[f64]) -> Option<usize> {
    let tie = instance.tie_break;
    let better = |new: bool, eq: bool| new || (eq && tie == TieBreak::HighestIndex);
    match buyer {
        Buyer::Exact { ranks, sells } => {
            let mut best: Option<(usize, u32)> = None;
            for (i, item) in instance.items.iter().enumerate() {
                let Item::Discrete(d) = item else { unreachable!() };
                let k = d.sample_index(draws[i]);
                if !sells[i][k] {
                    continue;
                }
                let r = ranks[i][k];
                if best.is_none_or(|(_, b)| better(r > b, r == b)) {
                    best = Some((i, r));
                }
            }
            best.map(|(i, _)| i)
        }
        Buyer::Float { prices } => {
            let mut best: Option<(usize, f64)> = None;
            for (i, item) in instance.items.iter().enumerate() {
                let v = match item {
                    Item::Discrete(d) => rational::to_f64(&d.support()[d.sample_index(draws[i])]),
                    Item::Oracle(o) => o.sample(draws[i]),
                };
                let gap = v - prices[i];
                if gap < 0.0 {
                    continue;
                }
                if best.is_none_or(|(_, b)| better(gap > b, gap == b)) {
                    best = Some((i, gap));
                }
            }
            best.map(|(i, _)| i)
        }
    }
}

/// Monte-Carlo estimate of expected revenue with a 99% interval.
///
/// Sample `s` of item `i` is drawn from stream `i` of a ChaCha generator seeded
/// by `seed`, at word offset `2 s`, so results do not depend on threading.
pub fn monte_carlo_revenue(instance: &Instance, prices: &[Rational], samples: u64, seed: u64) -> Result<McEstimate> {
    check_prices(instance, prices)?;
    if samples == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    let buyer = build_buyer(instance, prices);
    let pf: Vec<f64> = prices.iter().map(rational::to_f64).collect();
    let n = instance.len();
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let len = CHUNK.min(samples - start);
            let mut streams: Vec<KeyedUniforms> = (0..n).map(|i| KeyedUniforms::new(seed, i as u64, start)).collect();
            let mut draws = vec![0.0; n];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                for (d, st) in draws.iter_mut().zip(streams.iter_mut()) {
                    *d = st.next_f64();
                }
                if let Some(i) = simulate(instance, &buyer, &draws) {
                    s += pf[i];
                    s2 += pf[i] * pf[i];
                }
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = samples as f64;
    let mean = s / nf;
    let var = if samples > 1 { ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    Ok(McEstimate { estimate: mean, ci99: Z99 * var.sqrt() / nf.sqrt(), samples, seed })
}

/// Exact revenue as a float when every item is discrete, otherwise a
/// Monte-Carlo estimate.
pub fn evaluate_f64(instance: &Instance, prices: &[Rational], samples: u64, seed: u64) -> Result<f64> {
    if instance.is_all_discrete() {
        Ok(exact_revenue(instance, prices)?.to_f64().unwrap_or(f64::NAN))
    } else {
        Ok(monte_carlo_revenue(instance, prices, samples, seed)?.estimate)
    }
}
