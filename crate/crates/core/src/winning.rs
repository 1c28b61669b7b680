//! Joint law of the current winner's (value, price) cell on a fixed grid,
//! and the one-item update shared by the exact evaluator and the DP.

use std::cmp::Ordering;
use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_traits::{PrimInt, ToPrimitive, Zero};
use serde::Serialize;

use crate::distributions::TieBreak;
use crate::error::{Error, Result};
use crate::rational::Rational;

/// `v - p`, compared in floating point when that is decisive and exactly
/// otherwise. Grid points can carry very long numerators, and reducing every
/// difference would dominate the cost.
struct Gap<'a> {
    v: &'a Rational,
    p: &'a Rational,
    approx: f64,
    err: f64,
}

impl<'a> Gap<'a> {
    fn new(v: &'a Rational, p: &'a Rational) -> Self {
        let (fv, fp) = (crate::rational::to_f64(v), crate::rational::to_f64(p));
        let approx = fv - fp;
        let err =
            if fv.is_finite() && fp.is_finite() { 4.0 * f64::EPSILON * (fv.abs() + fp.abs()) } else { f64::INFINITY };
        Self { v, p, approx, err }
    }

    fn sign(&self) -> Ordering {
        if self.approx.abs() > self.err {
            return self.approx.partial_cmp(&0.0).expect("finite");
        }
        self.v.cmp(self.p)
    }

    fn cmp(&self, other: &Gap) -> Ordering {
        let d = self.approx - other.approx;
        if d.abs() > 2.0 * (self.err + other.err) {
            return d.partial_cmp(&0.0).expect("finite");
        }
        if std::ptr::eq(self.v, other.v) {
            return other.p.cmp(self.p);
        }
        if std::ptr::eq(self.p, other.p) {
            return self.v.cmp(other.v);
        }
        // v1 - p1 against v2 - p2 is v1 + p2 against v2 + p1.
        let lhs = unreduced_sum(self.v, other.p);
        let rhs = unreduced_sum(other.v, self.p);
        (&lhs.0 * &rhs.1).cmp(&(&rhs.0 * &lhs.1))
    }
}

fn unreduced_sum(a: &Rational, b: &Rational) -> (BigInt, BigInt) {
    (a.numer() * b.denom() + b.numer() * a.denom(), a.denom() * b.denom())
}

/// Value grid `v(1) < ... < v(k1)` and price grid `p(1) < ... < p(k2)`.
///
/// Cell `(i1, i2)` is stored at `i1 * k2 + i2`. Gaps `v - p` are replaced by
/// dense ranks once, so updates only compare integers.
#[derive(Clone, Debug)]
pub struct Grid {
    values: Vec<Rational>,
    prices: Vec<Rational>,
    rank: Vec<u32>,
    ranks: usize,
    sells: Vec<bool>,
    /// Prices as integers over the common denominator `price_den`.
    price_units: Vec<BigInt>,
    price_den: BigInt,
}

impl Grid {
    pub fn new(values: Vec<Rational>, prices: Vec<Rational>) -> Result<Self> {
        if values.is_empty() || prices.is_empty() {
            return Err(Error::Domain("value and price grids must be nonempty".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) || prices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("grids must be strictly increasing".into()));
        }
        let k2 = prices.len();
        let gaps: Vec<Gap> = values.iter().flat_map(|v| prices.iter().map(move |p| Gap::new(v, p))).collect();
        let mut order: Vec<usize> = (0..gaps.len()).collect();
        order.sort_by(|&a, &b| gaps[a].cmp(&gaps[b]));
        let mut rank = vec![0u32; gaps.len()];
        let mut r = 0u32;
        for (pos, &c) in order.iter().enumerate() {
            if pos > 0 && gaps[c].cmp(&gaps[order[pos - 1]]) != Ordering::Equal {
                r += 1;
            }
            rank[c] = r;
        }
        debug_assert_eq!(rank.len(), values.len() * k2);
        let sells = gaps.iter().map(|g| g.sign() != Ordering::Less).collect();
        let price_den = crate::rational::common_denominator(&prices);
        let price_units = prices.iter().map(|p| crate::rational::to_units(p, &price_den)).collect();
        Ok(Self { values, prices, rank, ranks: r as usize + 1, sells, price_units, price_den })
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn prices(&self) -> &[Rational] {
        &self.prices
    }

    pub fn k1(&self) -> usize {
        self.values.len()
    }

    pub fn k2(&self) -> usize {
        self.prices.len()
    }

    pub fn cells(&self) -> usize {
        self.rank.len()
    }

    pub fn cell(&self, i1: usize, i2: usize) -> usize {
        i1 * self.prices.len() + i2
    }

    /// Lexicographically smallest cell minimising `v - p`.
    pub fn base_cell(&self) -> usize {
        (0..self.cells()).min_by_key(|&c| (self.rank[c], c)).expect("nonempty grid")
    }

    /// Whether the item in cell `c` is bought (`v >= p`).
    pub fn sells(&self, c: usize) -> bool {
        self.sells[c]
    }

    /// One item enters with value law `q` (indexed by value) and price
    /// `prices[j]`.
    ///
    /// With [`TieBreak::HighestIndex`] the newcomer wins ties; with
    /// [`TieBreak::LowestIndex`] the incumbent keeps them. Cell masses and
    /// item masses are multiplied, so the output is in the product unit.
    pub fn transition<T>(&self, w: &[T], q: &[T], j: usize, tie: TieBreak) -> Vec<T>
    where
        T: Clone + Zero + for<'a> Add<&'a T, Output = T> + for<'a> Mul<&'a T, Output = T>,
    {
        debug_assert_eq!(w.len(), self.cells());
        debug_assert_eq!(q.len(), self.k1());
        let k2 = self.k2();
        // Incumbent mass at gap rank <= r (resp. < r).
        let mut by_rank = vec![T::zero(); self.ranks];
        for (c, m) in w.iter().enumerate() {
            if !m.is_zero() {
                let r = self.rank[c] as usize;
                by_rank[r] = std::mem::replace(&mut by_rank[r], T::zero()) + m;
            }
        }
        let mut cum_le = Vec::with_capacity(self.ranks);
        let mut acc = T::zero();
        for m in &by_rank {
            acc = acc + m;
            cum_le.push(acc.clone());
        }
        // Newcomer mass whose gap rank is below r (resp. at most r): the
        // newcomer's ranks rank[a, j] increase with a.
        let new_rank: Vec<usize> = (0..self.k1()).map(|a| self.rank[a * k2 + j] as usize).collect();
        let mut stay = vec![T::zero(); self.ranks];
        let mut a = 0;
        let mut acc = T::zero();
        for (r, slot) in stay.iter_mut().enumerate() {
            while a < new_rank.len()
                && match tie {
                    TieBreak::HighestIndex => new_rank[a] < r,
                    TieBreak::LowestIndex => new_rank[a] <= r,
                }
            {
                acc = acc + &q[a];
                a += 1;
            }
            *slot = acc.clone();
        }
        let mut out: Vec<T> = w
            .iter()
            .enumerate()
            .map(|(c, m)| if m.is_zero() { T::zero() } else { m.clone() * &stay[self.rank[c] as usize] })
            .collect();
        for (a, qa) in q.iter().enumerate() {
            if qa.is_zero() {
                continue;
            }
            let r = new_rank[a];
            let beaten = match tie {
                TieBreak::HighestIndex => cum_le[r].clone(),
                TieBreak::LowestIndex if r == 0 => T::zero(),
                TieBreak::LowestIndex => cum_le[r - 1].clone(),
            };
            let c = a * k2 + j;
            out[c] = std::mem::replace(&mut out[c], T::zero()) + &(qa.clone() * &beaten);
        }
        out
    }

    /// `sum p(i2) * mass(i1, i2)` over cells with `v(i1) >= p(i2)`.
    pub fn revenue(&self, masses: &[Rational]) -> Rational {
        let k2 = self.k2();
        let mut by_price = vec![Rational::zero(); k2];
        for (c, m) in masses.iter().enumerate() {
            if !m.is_zero() && self.sells[c] {
                by_price[c % k2] += m;
            }
        }
        by_price.iter().zip(&self.prices).filter(|(m, _)| !m.is_zero()).map(|(m, p)| m * p).sum()
    }

    /// Revenue of an integer-unit state over denominator `m`.
    pub fn revenue_units(&self, units: &[u64], m: &BigInt) -> Rational {
        let k2 = self.k2();
        let mut by_price = vec![0u128; k2];
        for (c, &u) in units.iter().enumerate() {
            if u != 0 && self.sells[c] {
                by_price[c % k2] += u as u128;
            }
        }
        self.price_weighted(by_price.into_iter().map(BigInt::from), m)
    }

    /// Revenue of a state held as integers over denominator `m`.
    pub fn revenue_scaled<T>(&self, units: &[T], m: &BigInt) -> Rational
    where
        T: Clone + Zero + for<'a> Add<&'a T, Output = T> + Into<BigInt>,
    {
        Rational::new(self.revenue_scaled_numerator(units), self.revenue_denominator(m))
    }

    /// Numerator of [`Grid::revenue_scaled`] over [`Grid::revenue_denominator`].
    pub fn revenue_scaled_numerator<T>(&self, units: &[T]) -> BigInt
    where
        T: Clone + Zero + for<'a> Add<&'a T, Output = T> + Into<BigInt>,
    {
        let k2 = self.k2();
        let mut by_price = vec![T::zero(); k2];
        for (c, u) in units.iter().enumerate() {
            if !u.is_zero() && self.sells[c] {
                let slot = &mut by_price[c % k2];
                *slot = std::mem::replace(slot, T::zero()) + u;
            }
        }
        by_price
            .into_iter()
            .zip(&self.price_units)
            .filter(|(u, _)| !u.is_zero())
            .map(|(u, p)| p * Into::<BigInt>::into(u))
            .sum()
    }

    /// `revenue_units(units, m) * price_den * m`, an integer; cheaper to
    /// compare than the reduced fraction.
    pub fn revenue_numerator(&self, units: &[u64]) -> BigInt {
        let k2 = self.k2();
        let mut by_price = vec![0u128; k2];
        for (c, &u) in units.iter().enumerate() {
            if u != 0 && self.sells[c] {
                by_price[c % k2] += u as u128;
            }
        }
        by_price.into_iter().zip(&self.price_units).filter(|(u, _)| *u != 0).map(|(u, p)| p * u).sum()
    }

    /// Denominator belonging to [`Grid::revenue_numerator`].
    pub fn revenue_denominator(&self, m: &BigInt) -> BigInt {
        &self.price_den * m
    }

    fn price_weighted(&self, by_price: impl Iterator<Item = BigInt>, m: &BigInt) -> Rational {
        let total: BigInt = by_price.zip(&self.price_units).filter(|(u, _)| !u.is_zero()).map(|(u, p)| p * u).sum();
        Rational::new(total, self.revenue_denominator(m))
    }
}

/// Rounds exact masses to multiples of `1/m`: with `l = (sum of fractional
/// parts) * m`, the first `l` cells (row-major) carrying a positive fractional
/// part round up and every other cell rounds down.
pub fn canonical_round(masses: &[Rational], m: u64) -> Result<Vec<u64>> {
    let scale = Rational::from_integer(BigInt::from(m));
    let mut floors = Vec::with_capacity(masses.len());
    let mut fractional = Vec::with_capacity(masses.len());
    let mut deficit = Rational::zero();
    for x in masses {
        let scaled = x * &scale;
        let fl = scaled.floor();
        let frac = &scaled - &fl;
        floors.push(fl.to_integer().to_u64().ok_or_else(|| Error::Domain(format!("mass {x} out of range")))?);
        fractional.push(!frac.is_zero());
        deficit += frac;
    }
    if !deficit.is_integer() {
        return Err(Error::Domain(format!("masses do not sum to a multiple of 1/{m}")));
    }
    let mut l = deficit.to_integer().to_usize().expect("bounded by cell count");
    for (f, up) in floors.iter_mut().zip(&fractional) {
        if l == 0 {
            break;
        }
        if *up {
            *f += 1;
            l -= 1;
        }
    }
    Ok(floors)
}

/// Integer version of [`canonical_round`] for values given in units of
/// `1/(m * sub)`: returns units of `1/m`.
pub fn canonical_round_units<T: PrimInt>(raw: &[T], sub: T) -> Vec<u64> {
    let mut deficit = T::zero();
    let mut out: Vec<u64> = raw
        .iter()
        .map(|&x| {
            let (d, r) = (x / sub, x % sub);
            deficit = deficit + r;
            d.to_u64().expect("units fit in 64 bits")
        })
        .collect();
    debug_assert!((deficit % sub).is_zero());
    let mut l = deficit / sub;
    for (o, &x) in out.iter_mut().zip(raw) {
        if l.is_zero() {
            break;
        }
        if !(x % sub).is_zero() {
            *o += 1;
            l = l - T::one();
        }
    }
    out
}

/// Point mass on the grid's base cell.
pub fn base_distribution(grid: &Grid) -> Vec<Rational> {
    let mut w = vec![Rational::zero(); grid.cells()];
    w[grid.base_cell()] = Rational::from_integer(1.into());
    w
}

/// A rounded winning distribution: `units[c] / m` per cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WinningDistribution {
    pub k1: usize,
    pub k2: usize,
    pub m: u64,
    pub units: Vec<u64>,
}

impl WinningDistribution {
    pub fn total(&self) -> u128 {
        self.units.iter().map(|&u| u as u128).sum()
    }

    pub fn to_rationals(&self) -> Vec<Rational> {
        let m = BigInt::from(self.m);
        self.units.iter().map(|&u| Rational::new(BigInt::from(u), m.clone())).collect()
    }
}
