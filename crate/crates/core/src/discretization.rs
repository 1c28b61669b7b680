//! Geometric price and value grids, vertical rounding of masses, and the
//! composed reduction to a restricted-price instance on a common support.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::distributions::{DiscreteDistribution, Instance, Item};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::report::{ser_rational, ser_rationals};

/// Largest grid the constructors will materialise.
pub const DEFAULT_MAX_GRID_POINTS: u64 = 1_000_000;
/// Cap on `k1 * k2` for instances with oracle items, checked before any
/// grid is built.
pub const DEFAULT_MAX_ORACLE_CELLS: u64 = 1_000_000;

fn check_price_eps(eps: &Rational) -> Result<()> {
    if !(eps > &Rational::zero() && eps <= &rational::ratio(1, 2)) {
        return Err(Error::Domain(format!("price-grid eps must lie in (0, 1/2], got {eps}")));
    }
    Ok(())
}

/// `q = 1/(1 - eps^2)` and the leading factor `1 + eps^2 - eps`.
fn price_grid_constants(eps: &Rational) -> (Rational, Rational) {
    let e2 = eps * eps;
    let q = (Rational::one() - &e2).recip();
    let lead = Rational::one() + e2 - eps;
    (q, lead)
}

/// `{(1 + eps^2 - eps) u_min / (1 - eps^2)^i : i = 0..=floor(log_q(u_max/u_min))}`.
pub fn price_grid(u_min: &Rational, u_max: &Rational, eps: &Rational, max_points: u64) -> Result<Vec<Rational>> {
    check_price_eps(eps)?;
    if !(u_min > &Rational::zero() && u_min <= u_max) {
        return Err(Error::Domain(format!("need 0 < u_min <= u_max, got [{u_min}, {u_max}]")));
    }
    let (q, lead) = price_grid_constants(eps);
    let top = rational::floor_log(&q, &(u_max / u_min), max_points.saturating_sub(1))?;
    let mut out = Vec::with_capacity(top as usize + 1);
    let mut p = lead * u_min;
    for _ in 0..=top {
        out.push(p.clone());
        p *= &q;
    }
    Ok(out)
}

/// Snaps each price down onto the grid of [`price_grid`]; each output lies in
/// `[1 - eps, 1 + eps^2 - eps]` times its input.
pub fn snap_prices(prices: &[Rational], u_min: &Rational, eps: &Rational) -> Result<Vec<Rational>> {
    check_price_eps(eps)?;
    let (q, lead) = price_grid_constants(eps);
    let lower = Rational::one() - eps;
    prices
        .iter()
        .map(|p| {
            if p < u_min {
                return Err(Error::Domain(format!("price {p} lies below u_min = {u_min}")));
            }
            let k = rational::floor_log(&q, &(p / u_min), u64::MAX / 2)?;
            let snapped = &lead * u_min * rational::pow(&q, k);
            assert!(snapped >= &lower * p && snapped <= &lead * p, "snap left its window");
            Ok(snapped)
        })
        .collect()
}

/// `p / ((1 + delta - delta^2)(1 + delta))`.
pub fn back_map_prices(prices: &[Rational], delta: &Rational) -> Vec<Rational> {
    let factor = back_map_factor(delta);
    prices.iter().map(|p| p / &factor).collect()
}

pub fn back_map_factor(delta: &Rational) -> Rational {
    (Rational::one() + delta - delta * delta) * (Rational::one() + delta)
}

/// `ceil(log2 r)` for `r >= 1`.
pub fn ceil_log2(r: &Rational) -> u64 {
    let mut k = 0u64;
    let mut p = Rational::one();
    while &p < r {
        p *= rational::int(2);
        k += 1;
    }
    k
}

/// Supremum of admissible `delta` for value ratio `r`:
/// `(4 ceil(log2 r))^(-4/3)`, infinite when `r = 1`.
pub fn admissible_delta_bound(r: &Rational) -> f64 {
    let l = ceil_log2(r);
    if l == 0 {
        f64::INFINITY
    } else {
        (4.0 * l as f64).powf(-4.0 / 3.0)
    }
}

/// Supremum of admissible `eps` for the composed reduction:
/// `(4 ceil(log2 r))^(-1/6)`.
pub fn admissible_eps_bound(r: &Rational) -> f64 {
    let l = ceil_log2(r);
    if l == 0 {
        f64::INFINITY
    } else {
        (4.0 * l as f64).powf(-1.0 / 6.0)
    }
}

/// Grid spacing for a horizontal discretization with step `delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueGrid {
    pub delta: Rational,
    /// `delta^2 / (1 + delta - delta^2)`.
    pub xi: Rational,
    pub u_min: Rational,
    pub u_max: Rational,
    /// `floor(log_{1+xi}(u_max/u_min))`.
    pub top: u64,
}

impl ValueGrid {
    pub fn new(
        u_min: &Rational,
        u_max: &Rational,
        delta: &Rational,
        check_admissible: bool,
        max_points: u64,
    ) -> Result<Self> {
        if !(u_min > &Rational::zero() && u_min <= u_max) {
            return Err(Error::Domain(format!(
                "values must lie in a range [u_min, u_max] with u_min > 0, got [{u_min}, {u_max}]"
            )));
        }
        if !(delta > &Rational::zero() && delta < &Rational::one()) {
            return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        let r = u_max / u_min;
        let bound = admissible_delta_bound(&r);
        if check_admissible && rational::to_f64(delta) >= bound {
            return Err(Error::Domain(format!(
                "delta = {delta} is not below the admissible bound {bound:.6} for r = {:.6}",
                rational::to_f64(&r)
            )));
        }
        let xi = delta * delta / (Rational::one() + delta - delta * delta);
        let top = rational::floor_log(&(Rational::one() + &xi), &r, max_points.saturating_sub(1))?;
        Ok(Self { delta: delta.clone(), xi, u_min: u_min.clone(), u_max: u_max.clone(), top })
    }

    pub fn len(&self) -> u64 {
        self.top + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `a_j = (1 + delta)(1 + xi)^j u_min`.
    pub fn point(&self, j: u64) -> Rational {
        (Rational::one() + &self.delta) * rational::pow(&(Rational::one() + &self.xi), j) * &self.u_min
    }

    /// `a_j` for an ascending list of indices. The powers of `1 + xi` are
    /// accumulated separately so only small gcds are needed.
    pub fn points(&self, indices: &[u64]) -> Vec<Rational> {
        let step = Rational::one() + &self.xi;
        let base = (Rational::one() + &self.delta) * &self.u_min;
        let (sn, sd) = (step.numer().clone(), step.denom().clone());
        let (bn, bd) = (base.numer().clone(), base.denom().clone());
        let mut at = 0u64;
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        indices
            .iter()
            .map(|&j| {
                debug_assert!(j >= at);
                if j - at > 64 {
                    num *= num_traits::pow(sn.clone(), (j - at) as usize);
                    den *= num_traits::pow(sd.clone(), (j - at) as usize);
                } else {
                    for _ in at..j {
                        num *= &sn;
                        den *= &sd;
                    }
                }
                at = j;
                // gcd(bn, bd) = gcd(sn, sd) = 1, so only cross terms can share factors.
                let g1 = bn.gcd(&(&den % &bn));
                let g2 = bd.gcd(&(&num % &bd));
                let n = (&bn / &g1) * (&num / &g2);
                let d = (&bd / &g2) * (&den / &g1);
                Rational::new_raw(n, d)
            })
            .collect()
    }

    /// Index `j` with `v` in `[a_j/(1+delta), a_j/(1+delta-delta^2))`; the top
    /// interval is closed at `u_max`.
    pub fn index_of(&self, v: &Rational) -> Result<u64> {
        if v < &self.u_min || v > &self.u_max {
            return Err(Error::Domain(format!("value {v} outside [{}, {}]", self.u_min, self.u_max)));
        }
        rational::floor_log(&(Rational::one() + &self.xi), &(v / &self.u_min), self.top)
    }

    /// `[lo, hi)` boundaries of cell `j` as floats.
    fn cell_f64(&self, j: u64) -> (f64, f64) {
        let base = rational::to_f64(&self.u_min);
        let step = rational::to_f64(&self.xi).ln_1p();
        (base * (j as f64 * step).exp(), base * ((j + 1) as f64 * step).exp())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Horizontal {
    #[serde(skip)]
    pub instance: Instance,
    #[serde(serialize_with = "ser_rationals")]
    pub values: Vec<Rational>,
    /// Grid indices of `values` within the full grid.
    pub indices: Vec<u64>,
    pub full_len: u64,
    /// Per-item absolute mass deficit redistributed after oracle queries.
    pub deficits: Vec<f64>,
    /// Items whose deficit exceeded the query precision.
    pub flagged: Vec<usize>,
}

/// Mass quantum for oracle-derived masses.
const ORACLE_MASS_BITS: u32 = 60;

fn quantize(x: f64) -> BigInt {
    let scaled = (x.max(0.0) * 2f64.powi(ORACLE_MASS_BITS as i32)).floor();
    BigInt::from(scaled as u128)
}

/// Maps every item onto the grid `a_j`. Discrete items move each support
/// point to its cell; oracle items get `F(hi) - F(lo)` per cell, with any
/// rounding deficit placed on the cell holding the median.
///
/// With `compress`, grid points that carry no mass for any item are dropped;
/// this is only offered for all-discrete instances.
pub fn horizontal_discretize(instance: &Instance, grid: &ValueGrid, compress: bool) -> Result<Horizontal> {
    let n = instance.len();
    let mut per_item: Vec<Vec<(u64, Rational)>> = Vec::with_capacity(n);
    let mut deficits = vec![0.0; n];
    let mut flagged = Vec::new();
    let full_len = grid.len();
    for (i, item) in instance.items.iter().enumerate() {
        match item {
            Item::Discrete(d) => {
                let mut cells: Vec<(u64, Rational)> = Vec::new();
                for (v, m) in d.atoms() {
                    let j = grid.index_of(v)?;
                    match cells.last_mut() {
                        Some((last, acc)) if *last == j => *acc += m,
                        _ => cells.push((j, m.clone())),
                    }
                }
                per_item.push(cells);
            }
            Item::Oracle(o) => {
                if full_len > DEFAULT_MAX_GRID_POINTS {
                    return Err(Error::Resource(format!("{full_len} grid points exceed the cap")));
                }
                let denom = BigInt::one() << ORACLE_MASS_BITS;
                let mut units: Vec<BigInt> = (0..full_len)
                    .map(|j| {
                        let (lo, hi) = grid.cell_f64(j);
                        let upper = if j == grid.top { 1.0 } else { o.cdf_left(hi) };
                        quantize(upper - o.cdf_left(lo))
                    })
                    .collect();
                let total: BigInt = units.iter().sum();
                let deficit = &denom - &total;
                let median = o.sample(0.5) / rational::to_f64(&grid.u_min);
                let step = rational::to_f64(&grid.xi).ln_1p();
                let target = ((median.ln() / step).floor().max(0.0) as u64).min(grid.top) as usize;
                if deficit >= BigInt::zero() {
                    units[target] += &deficit;
                } else {
                    let (k, _) = units.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).unwrap();
                    units[k] += &deficit;
                }
                let d = deficit.to_f64().unwrap_or(f64::NAN) / denom.to_f64().unwrap();
                deficits[i] = d.abs();
                if d.abs() > 1.0 / (10.0 * full_len as f64) {
                    flagged.push(i);
                }
                per_item.push(
                    units
                        .into_iter()
                        .enumerate()
                        .filter(|(_, u)| !u.is_zero())
                        .map(|(j, u)| (j as u64, Rational::new(u, denom.clone())))
                        .collect(),
                );
            }
        }
    }
    let indices: Vec<u64> = if compress {
        if !instance.is_all_discrete() {
            return Err(Error::Unsupported("grid compression needs discrete items".into()));
        }
        let mut used: Vec<u64> = per_item.iter().flat_map(|c| c.iter().map(|(j, _)| *j)).collect();
        used.sort_unstable();
        used.dedup();
        used
    } else {
        if full_len > DEFAULT_MAX_GRID_POINTS {
            return Err(Error::Resource(format!("{full_len} grid points exceed the cap")));
        }
        (0..full_len).collect()
    };
    let values = grid.points(&indices);
    let items = per_item
        .into_iter()
        .map(|cells| {
            let mut masses = vec![Rational::zero(); indices.len()];
            for (j, m) in cells {
                let k = indices.binary_search(&j).expect("index kept");
                masses[k] += m;
            }
            DiscreteDistribution::new(values.clone(), masses).map(Item::Discrete)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Horizontal {
        instance: Instance { items, tie_break: instance.tie_break, class: instance.class },
        values,
        indices,
        full_len,
        deficits,
        flagged,
    })
}

/// Rounds each item's masses to multiples of `1/denominator`: points after
/// the first are floored and the first absorbs the remainder.
pub fn vertical_round_units(instance: &Instance, denominator: u64) -> Result<Instance> {
    if denominator == 0 {
        return Err(Error::Domain("denominator must be positive".into()));
    }
    let scale = Rational::from_integer(denominator.into());
    let items = instance
        .discrete_items()?
        .into_iter()
        .map(|d| {
            let mut masses: Vec<Rational> = d.masses().iter().map(|m| (m * &scale).floor() / &scale).collect();
            let rest: Rational = masses[1..].iter().sum();
            masses[0] = Rational::one() - rest;
            DiscreteDistribution::new(d.support().to_vec(), masses).map(Item::Discrete)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance { items, tie_break: instance.tie_break, class: instance.class })
}

/// `ceil(r n)^3`, the vertical rounding denominator.
pub fn vertical_denominator(r: &Rational, n: usize) -> Result<u64> {
    let m = (r * Rational::from_integer(BigInt::from(n))).ceil().to_integer();
    m.to_u64()
        .and_then(|m| m.checked_pow(3))
        .ok_or_else(|| Error::Resource(format!("(r n)^3 with r n = {m} overflows 64 bits")))
}

/// [`vertical_round_units`] with denominator `ceil(r n)^3`.
pub fn vertical_round(instance: &Instance, r: &Rational, n: usize) -> Result<Instance> {
    vertical_round_units(instance, vertical_denominator(r, n)?)
}

/// Total-variation distance between two distributions on one support.
pub fn total_variation(a: &DiscreteDistribution, b: &DiscreteDistribution) -> Rational {
    let sum: Rational = a.masses().iter().zip(b.masses()).map(|(x, y)| (x - y).abs()).sum();
    sum / rational::int(2)
}

/// Concrete knobs of the reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizeParams {
    pub delta: Rational,
    pub price_eps: Rational,
    /// Skip the `delta < (4 ceil(log2 r))^(-4/3)` check.
    pub allow_inadmissible_delta: bool,
    /// Drop value-grid points with no mass (discrete inputs only).
    pub compress: bool,
    pub max_grid_points: u64,
}

impl DiscretizeParams {
    /// `delta = (eps/8)^8` and `eps' = delta/4`, the constants with a proven guarantee.
    pub fn theorem(eps: &Rational) -> Self {
        let delta = rational::pow(&(eps / rational::int(8)), 8);
        let price_eps = &delta / rational::int(4);
        Self {
            delta,
            price_eps,
            allow_inadmissible_delta: false,
            compress: true,
            max_grid_points: DEFAULT_MAX_GRID_POINTS,
        }
    }

    /// A desk-scale setting: `delta = 1/N` with `N = ceil(2 / bound)` (so it
    /// is admissible) and `eps' = eps/2`.
    pub fn practical(eps: &Rational, r: &Rational) -> Self {
        let bound = admissible_delta_bound(r).min(0.5);
        let n = (2.0 / bound).ceil() as i64;
        Self {
            delta: rational::ratio(1, n),
            price_eps: (eps / rational::int(2)).min(rational::ratio(49, 100)),
            allow_inadmissible_delta: false,
            compress: true,
            max_grid_points: DEFAULT_MAX_GRID_POINTS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    #[serde(serialize_with = "ser_rational")]
    pub u_min: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub u_max: Rational,
    /// Value ratio `u_max / u_min` of the input.
    pub r_values: f64,
    /// Price ratio `p(k2)/p(1)` of the restricted grid.
    #[serde(serialize_with = "ser_rational")]
    pub r_prices: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub delta: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub xi: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub price_eps: Rational,
    /// Value-grid points before compression.
    pub k1_full: u64,
    pub k1: usize,
    pub k2: usize,
    /// Restricted prices are divided by this to return to original units.
    #[serde(serialize_with = "ser_rational")]
    pub back_map_factor: Rational,
    pub admissible_delta_bound: f64,
    pub delta_admissible: bool,
    pub oracle_deficits: Vec<f64>,
    pub flagged_items: Vec<usize>,
}

/// Instance on a common value grid together with a finite price grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestrictedInstance {
    #[serde(skip)]
    pub instance: Instance,
    #[serde(serialize_with = "ser_rationals")]
    pub values: Vec<Rational>,
    #[serde(serialize_with = "ser_rationals")]
    pub prices: Vec<Rational>,
    pub provenance: Provenance,
}

impl RestrictedInstance {
    /// Builds one from an already discrete instance, a value grid covering
    /// every support and a price grid.
    pub fn from_parts(instance: &Instance, values: Vec<Rational>, prices: Vec<Rational>) -> Result<Self> {
        let items = instance
            .discrete_items()?
            .into_iter()
            .map(|d| d.on_support(&values).map(Item::Discrete))
            .collect::<Result<Vec<_>>>()?;
        let (u_min, u_max) = (values[0].clone(), values.last().unwrap().clone());
        let r_prices = prices.last().unwrap() / &prices[0];
        let k1 = values.len();
        let k2 = prices.len();
        Ok(Self {
            instance: Instance { items, tie_break: instance.tie_break, class: instance.class },
            values,
            prices,
            provenance: Provenance {
                r_values: rational::to_f64(&(&u_max / &u_min)),
                u_min,
                u_max,
                r_prices,
                delta: Rational::zero(),
                xi: Rational::zero(),
                price_eps: Rational::zero(),
                k1_full: k1 as u64,
                k1,
                k2,
                back_map_factor: Rational::one(),
                admissible_delta_bound: f64::INFINITY,
                delta_admissible: true,
                oracle_deficits: vec![],
                flagged_items: vec![],
            },
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("serializable");
        v["instance"] = self.instance.to_json();
        v
    }
}

/// Value range `[u_min, u_max]` over all items.
pub fn value_range(instance: &Instance) -> Result<(Rational, Rational)> {
    let mut lo: Option<Rational> = None;
    let mut hi: Option<Rational> = None;
    for item in &instance.items {
        let (a, b) = match item {
            Item::Discrete(d) => (d.u_min().clone(), d.u_max().clone()),
            Item::Oracle(o) => {
                let b = o.u_max();
                if !b.is_finite() {
                    return Err(Error::Domain(
                        "oracle values are unbounded; truncate them first (tag the instance mhr or regular)".into(),
                    ));
                }
                (rational::from_f64(o.u_min())?, rational::from_f64(b)?)
            }
        };
        lo = Some(lo.map_or(a.clone(), |l| l.min(a)));
        hi = Some(hi.map_or(b.clone(), |h| h.max(b)));
    }
    let (lo, hi) = (lo.expect("nonempty"), hi.expect("nonempty"));
    if lo <= Rational::zero() {
        return Err(Error::Domain(format!(
            "smallest value is {lo}; the grids need u_min > 0 (tag the instance mhr to shift low values up)"
        )));
    }
    Ok((lo, hi))
}

/// Grid sizes implied by a parameter choice, without building anything.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscretizationPlan {
    pub r: f64,
    pub delta: f64,
    pub price_eps: f64,
    /// `floor(ln r / ln(1 + xi)) + 1`.
    pub k1: f64,
    /// `floor(ln r' / ln(1/(1 - eps'^2))) + 1` over `[(1+delta) u_min, (1+delta) u_max]`.
    pub k2: f64,
    pub admissible_delta_bound: f64,
    pub admissible_eps_bound: f64,
}

pub fn discretization_plan(u_min: &Rational, u_max: &Rational, params: &DiscretizeParams) -> DiscretizationPlan {
    let r = u_max / u_min;
    let d = rational::to_f64(&params.delta);
    let e = rational::to_f64(&params.price_eps);
    let lr = rational::ln(&r);
    let xi = d * d / (1.0 + d - d * d);
    DiscretizationPlan {
        r: rational::to_f64(&r),
        delta: d,
        price_eps: e,
        k1: (lr / xi.ln_1p()).floor() + 1.0,
        k2: (lr / -(-e * e).ln_1p()).floor() + 1.0,
        admissible_delta_bound: admissible_delta_bound(&r),
        admissible_eps_bound: admissible_eps_bound(&r),
    }
}

/// The composed reduction with the guaranteed constants `delta = (eps/8)^8`
/// and `eps' = delta/4`.
///
/// These grids are astronomically large for any nontrivial ratio, so this
/// usually fails with a resource error; [`discretization_plan`] reports the
/// sizes and [`full_discretize_with`] accepts concrete parameters.
pub fn full_discretize(instance: &Instance, eps: &Rational) -> Result<RestrictedInstance> {
    let (u_min, u_max) = value_range(instance)?;
    let bound = admissible_eps_bound(&(&u_max / &u_min));
    if !(eps > &Rational::zero() && rational::to_f64(eps) < bound) {
        return Err(Error::Domain(format!("eps = {eps} must lie in (0, {bound:.6}) for this value ratio")));
    }
    let params = DiscretizeParams::theorem(eps);
    let plan = discretization_plan(&u_min, &u_max, &params);
    if plan.k1 > params.max_grid_points as f64 || plan.k2 > params.max_grid_points as f64 {
        return Err(Error::Resource(format!(
            "theorem constants need k1 = {:.3e} value points and k2 = {:.3e} prices (cap {})",
            plan.k1, plan.k2, params.max_grid_points
        )));
    }
    full_discretize_with(instance, &params)
}

/// Horizontal discretization with step `delta`, then the price grid with
/// `eps'` over `[(1+delta) u_min, (1+delta) u_max]`.
pub fn full_discretize_with(instance: &Instance, params: &DiscretizeParams) -> Result<RestrictedInstance> {
    let (u_min, u_max) = value_range(instance)?;
    if !instance.is_all_discrete() {
        let plan = discretization_plan(&u_min, &u_max, params);
        let cells = plan.k1 * plan.k2;
        if cells > DEFAULT_MAX_ORACLE_CELLS as f64 {
            return Err(Error::Resource(format!(
                "oracle items need k1 = {:.0} value points times k2 = {:.0} prices = {:.3e} cells (cap {}); pass a coarser delta and price eps",
                plan.k1, plan.k2, cells, DEFAULT_MAX_ORACLE_CELLS
            )));
        }
    }
    let r = &u_max / &u_min;
    let bound = admissible_delta_bound(&r);
    let admissible = rational::to_f64(&params.delta) < bound;
    let grid = ValueGrid::new(&u_min, &u_max, &params.delta, !params.allow_inadmissible_delta, params.max_grid_points)?;
    let compress = params.compress && instance.is_all_discrete();
    let h = horizontal_discretize(instance, &grid, compress)?;
    let scale = Rational::one() + &params.delta;
    let prices = price_grid(&(&scale * &u_min), &(&scale * &u_max), &params.price_eps, params.max_grid_points)?;
    let r_prices = prices.last().unwrap() / &prices[0];
    Ok(RestrictedInstance {
        provenance: Provenance {
            u_min,
            u_max,
            r_values: rational::to_f64(&r),
            r_prices,
            delta: params.delta.clone(),
            xi: grid.xi.clone(),
            price_eps: params.price_eps.clone(),
            k1_full: h.full_len,
            k1: h.values.len(),
            k2: prices.len(),
            back_map_factor: back_map_factor(&params.delta),
            admissible_delta_bound: bound,
            delta_admissible: admissible,
            oracle_deficits: h.deficits,
            flagged_items: h.flagged,
        },
        instance: h.instance,
        values: h.values,
        prices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::TieBreak;
    use crate::rational::{int, ratio};

    #[test]
    fn price_grid_examples() {
        let g = price_grid(&int(1), &int(2), &ratio(1, 2), 100).unwrap();
        assert_eq!(g, vec![ratio(3, 4), int(1), ratio(4, 3)]);
        let g = price_grid(&int(1), &int(1), &ratio(1, 10), 100).unwrap();
        assert_eq!(g, vec![ratio(91, 100)]);
        assert!(price_grid(&int(1), &int(2), &ratio(3, 5), 100).is_err());
    }

    #[test]
    fn price_grid_is_geometric() {
        let eps = ratio(1, 5);
        let g = price_grid(&int(1), &int(7), &eps, 1000).unwrap();
        let q = (Rational::one() - &eps * &eps).recip();
        assert!(g.windows(2).all(|w| &w[1] / &w[0] == q));
    }

    #[test]
    fn snapping_examples() {
        let eps = ratio(1, 2);
        assert_eq!(snap_prices(&[int(1)], &int(1), &eps).unwrap(), vec![ratio(3, 4)]);
        assert_eq!(snap_prices(&[ratio(6, 5)], &int(1), &eps).unwrap(), vec![ratio(3, 4)]);
        let grid = price_grid(&int(1), &int(2), &eps, 100).unwrap();
        assert_eq!(snap_prices(&[int(2)], &int(1), &eps).unwrap(), vec![grid.last().unwrap().clone()]);
        assert!(snap_prices(&[ratio(1, 2)], &int(1), &eps).is_err());
    }

    #[test]
    fn back_map_examples() {
        assert_eq!(back_map_prices(&[int(1)], &int(0)), vec![int(1)]);
        let d = ratio(1, 10);
        assert_eq!(back_map_prices(&[back_map_factor(&d)], &d), vec![int(1)]);
        let p = back_map_prices(&[int(2)], &d);
        assert!((rational::to_f64(&p[0]) - 2.0 / (1.09 * 1.1)).abs() < 1e-12);
    }

    #[test]
    fn value_grid_tiles_the_range() {
        let g = ValueGrid::new(&int(1), &int(2), &ratio(1, 100), true, 100_000).unwrap();
        assert_eq!(g.len(), (2f64.ln() / rational::to_f64(&g.xi).ln_1p()).floor() as u64 + 1);
        assert_eq!(g.point(0), ratio(101, 100));
        assert_eq!(g.index_of(&int(1)).unwrap(), 0);
        // Each value lands on a point within [1 + d - d^2, 1 + d] times itself.
        let d = &g.delta;
        for v in [ratio(1, 1), ratio(3, 2), ratio(19, 10), int(2)] {
            let a = g.point(g.index_of(&v).unwrap());
            assert!(a >= (Rational::one() + d - d * d) * &v && a <= (Rational::one() + d) * &v, "{v}");
        }
        assert!(ValueGrid::new(&int(1), &int(5), &ratio(1, 10), true, 1000).is_err());
    }

    #[test]
    fn point_mass_at_u_min_maps_to_first_point() {
        let inst = Instance::discrete(
            vec![DiscreteDistribution::point_mass(int(1)).unwrap(), DiscreteDistribution::point_mass(int(2)).unwrap()],
            TieBreak::LowestIndex,
        )
        .unwrap();
        let g = ValueGrid::new(&int(1), &int(2), &ratio(1, 50), true, 100_000).unwrap();
        let h = horizontal_discretize(&inst, &g, true).unwrap();
        assert_eq!(h.values[0], ratio(51, 50));
        assert_eq!(h.instance.items[0].as_discrete().unwrap().masses()[0], int(1));
        assert_eq!(h.values.len(), 2);
    }

    #[test]
    fn uniform_oracle_masses_follow_interval_lengths() {
        let inst =
            Instance::oracles(vec![crate::CdfOracle::uniform(1.0, 2.0).unwrap()], TieBreak::LowestIndex).unwrap();
        let g = ValueGrid::new(&int(1), &int(2), &ratio(1, 100), true, 100_000).unwrap();
        let h = horizontal_discretize(&inst, &g, false).unwrap();
        assert_eq!(h.values.len(), 7001);
        assert_eq!(h.values[5], g.point(5));
        let d = h.instance.items[0].as_discrete().unwrap();
        let xi = rational::to_f64(&g.xi);
        assert!((rational::to_f64(&d.masses()[0]) - xi).abs() < 1e-12);
        assert!(h.flagged.is_empty());
    }

    #[test]
    fn vertical_round_examples() {
        let d = DiscreteDistribution::new(vec![int(1), int(2)], vec![ratio(3, 10), ratio(7, 10)]).unwrap();
        let inst = Instance::discrete(vec![d.clone()], TieBreak::LowestIndex).unwrap();
        let out = vertical_round(&inst, &int(2), 1).unwrap();
        let o = out.items[0].as_discrete().unwrap();
        assert_eq!(o.masses(), &[ratio(3, 8), ratio(5, 8)]);
        assert!(total_variation(&d, o) <= ratio(2, 8));
        let exact = Instance::discrete(
            vec![DiscreteDistribution::new(vec![int(1), int(2)], vec![ratio(1, 4), ratio(3, 4)]).unwrap()],
            TieBreak::LowestIndex,
        )
        .unwrap();
        assert_eq!(vertical_round(&exact, &int(2), 1).unwrap(), exact);
        let zero = Instance::discrete(
            vec![DiscreteDistribution::new(vec![int(1), int(2)], vec![int(0), int(1)]).unwrap()],
            TieBreak::LowestIndex,
        )
        .unwrap();
        assert_eq!(vertical_round(&zero, &int(2), 1).unwrap(), zero);
    }

    #[test]
    fn theorem_constants_report_sizes() {
        let inst = Instance::discrete(
            vec![
                DiscreteDistribution::uniform_over(vec![int(1), int(5)]).unwrap(),
                DiscreteDistribution::uniform_over(vec![int(3), ratio(7, 2)]).unwrap(),
            ],
            TieBreak::LowestIndex,
        )
        .unwrap();
        let bound = admissible_eps_bound(&int(5));
        assert!((bound - 12f64.powf(-1.0 / 6.0)).abs() < 1e-12);
        let eps = rational::from_f64(bound * 0.999).unwrap();
        assert!(matches!(full_discretize(&inst, &eps), Err(Error::Resource(_))));
        let plan = discretization_plan(&int(1), &int(5), &DiscretizeParams::theorem(&eps));
        assert!(plan.k1 > 1e15 && plan.k2 > 1e15);
        assert!(matches!(full_discretize(&inst, &ratio(9, 10)), Err(Error::Domain(_))));
    }

    #[test]
    fn degenerate_ratio_gives_single_points() {
        let inst = Instance::discrete(
            vec![DiscreteDistribution::point_mass(int(3)).unwrap(), DiscreteDistribution::point_mass(int(3)).unwrap()],
            TieBreak::LowestIndex,
        )
        .unwrap();
        let ri = full_discretize(&inst, &ratio(1, 2)).unwrap();
        assert_eq!((ri.values.len(), ri.prices.len()), (1, 1));
    }

    #[test]
    fn practical_parameters_discretize_the_counterexample() {
        let inst = Instance::discrete(
            vec![
                DiscreteDistribution::uniform_over(vec![int(1), int(5)]).unwrap(),
                DiscreteDistribution::uniform_over(vec![int(3), ratio(7, 2)]).unwrap(),
            ],
            TieBreak::LowestIndex,
        )
        .unwrap();
        let params = DiscretizeParams::practical(&ratio(1, 4), &int(5));
        let ri = full_discretize_with(&inst, &params).unwrap();
        assert!(ri.provenance.delta_admissible);
        assert_eq!(ri.values.len(), 4);
        assert!(ri.instance.items.iter().all(|i| i.as_discrete().unwrap().support() == ri.values.as_slice()));
        let plan = discretization_plan(&int(1), &int(5), &params);
        assert_eq!(plan.k1 as u64, ri.provenance.k1_full);
        assert_eq!(plan.k2 as usize, ri.provenance.k2);
    }
}
