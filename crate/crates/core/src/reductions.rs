//! Truncation of value distributions to a balanced range, and the price
//! transforms that move solutions between the original and truncated problems.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::distributions::{Clamp, Instance, Item};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Price {
    Finite(Rational),
    Infinite,
}

impl Price {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Price::Finite(p) => Some(p),
            Price::Infinite => None,
        }
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Price::Finite(p) => write!(f, "{p}"),
            Price::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Price {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// One price per item; `+inf` marks an item that is never sold.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PriceVector(pub Vec<Price>);

impl PriceVector {
    pub fn from_finite(prices: Vec<Rational>) -> Self {
        Self(prices.into_iter().map(Price::Finite).collect())
    }

    /// The entries as rationals, failing on any `+inf`.
    pub fn to_finite(&self) -> Result<Vec<Rational>> {
        self.0
            .iter()
            .map(|p| p.finite().cloned().ok_or_else(|| Error::Domain("price vector has an infinite entry".into())))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Restriction {
    ClampRange(Rational, Rational),
    RaiseLow(Rational),
    CapHigh(Rational),
    ReplaceInfinite(Rational),
}

/// Elementwise price transform; `+inf` counts as above every bound.
pub fn restrict_prices(prices: &PriceVector, mode: &Restriction) -> Result<PriceVector> {
    if let Restriction::ClampRange(lo, hi) = mode {
        if lo > hi {
            return Err(Error::Domain(format!("empty clamp range [{lo}, {hi}]")));
        }
    }
    let map = |p: &Price| -> Price {
        match (mode, p) {
            (Restriction::ClampRange(_, hi), Price::Infinite) => Price::Finite(hi.clone()),
            (Restriction::ClampRange(lo, hi), Price::Finite(x)) => {
                Price::Finite(x.clone().clamp(lo.clone(), hi.clone()))
            }
            (Restriction::RaiseLow(a), Price::Finite(x)) if x < a => Price::Finite(a.clone()),
            (Restriction::CapHigh(h), Price::Infinite) => Price::Finite(h.clone()),
            (Restriction::CapHigh(h), Price::Finite(x)) if x > h => Price::Finite(h.clone()),
            (Restriction::ReplaceInfinite(pmax), Price::Infinite) => Price::Finite(pmax.clone()),
            _ => p.clone(),
        }
    };
    Ok(PriceVector(prices.0.iter().map(map).collect()))
}

/// Range the MHR truncation maps values into.
#[derive(Clone, Debug, PartialEq)]
pub struct MhrWindow {
    /// `eps beta`: values below move down to `low_point`.
    pub low_threshold: Rational,
    /// `eps beta / 2`.
    pub low_point: Rational,
    /// `2 ln(1/eps) beta`: values at or above collapse here.
    pub high_point: Rational,
}

impl MhrWindow {
    pub fn new(beta: &Rational, eps: &Rational) -> Result<Self> {
        if !(eps > &Rational::zero() && eps < &rational::ratio(1, 4)) {
            return Err(Error::Domain(format!("eps must lie in (0, 1/4), got {eps}")));
        }
        if beta <= &Rational::zero() {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        let low_threshold = eps * beta;
        let low_point = &low_threshold / rational::int(2);
        let high = 2.0 * (1.0 / rational::to_f64(eps)).ln() * rational::to_f64(beta);
        Ok(Self { low_threshold, low_point, high_point: rational::from_f64(high)? })
    }
}

/// Range the regular truncation maps values into.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularWindow {
    /// `eps alpha / (2 n^4)`.
    pub low_threshold: Rational,
    /// `eps alpha / (4 n^4)`.
    pub low_point: Rational,
    /// `4 n^4 alpha / eps^3`.
    pub high_point: Rational,
}

impl RegularWindow {
    pub fn new(alpha: &Rational, eps: &Rational, n: usize) -> Result<Self> {
        if !(eps > &Rational::zero() && eps < &Rational::one()) {
            return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
        }
        if alpha <= &Rational::zero() || n < 2 {
            return Err(Error::Domain("need alpha > 0 and at least two items".into()));
        }
        let n4 = Rational::from_integer((n as u64).pow(4).into());
        let low_threshold = eps * alpha / (rational::int(2) * &n4);
        let low_point = eps * alpha / (rational::int(4) * &n4);
        let high_point = rational::int(4) * n4 * alpha / rational::pow(eps, 3);
        Ok(Self { low_threshold, low_point, high_point })
    }
}

fn truncate(
    instance: &Instance,
    low_threshold: &Rational,
    low_point: &Rational,
    high_point: &Rational,
) -> Result<Instance> {
    let clamp = Clamp {
        low_threshold: rational::to_f64(low_threshold),
        low_point: rational::to_f64(low_point),
        high_point: rational::to_f64(high_point),
    };
    let items = instance
        .items
        .iter()
        .map(|item| match item {
            Item::Discrete(d) => d
                .map_values(|v| {
                    if v < low_threshold {
                        low_point.clone()
                    } else if v >= high_point {
                        high_point.clone()
                    } else {
                        v.clone()
                    }
                })
                .map(Item::Discrete),
            Item::Oracle(o) => o.clamped(clamp.clone()).map(Item::Oracle),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance { items, tie_break: instance.tie_break, class: instance.class })
}

/// Moves mass below `eps beta` to `eps beta / 2` and mass at or above
/// `2 ln(1/eps) beta` to that point.
pub fn truncate_values_mhr(instance: &Instance, beta: &Rational, eps: &Rational) -> Result<Instance> {
    let w = MhrWindow::new(beta, eps)?;
    truncate(instance, &w.low_threshold, &w.low_point, &w.high_point)
}

/// Moves mass below `eps alpha/(2n^4)` to `eps alpha/(4n^4)` and mass at or
/// above `4 n^4 alpha / eps^3` to that point.
pub fn truncate_values_regular(instance: &Instance, alpha: &Rational, eps: &Rational) -> Result<Instance> {
    let w = RegularWindow::new(alpha, eps, instance.len())?;
    truncate(instance, &w.low_threshold, &w.low_point, &w.high_point)
}

/// Clamps into `[eps beta / 2, 2 ln(1/eps) beta]`, then raises anything below
/// `eps beta` to `eps beta`.
pub fn lift_solution_mhr(prices: &PriceVector, beta: &Rational, eps: &Rational) -> Result<PriceVector> {
    let w = MhrWindow::new(beta, eps)?;
    let clamped = restrict_prices(prices, &Restriction::ClampRange(w.low_point, w.high_point))?;
    restrict_prices(&clamped, &Restriction::RaiseLow(w.low_threshold))
}

/// Clamps into `[eps alpha / n^4, 2 n^2 alpha / eps^2]`.
pub fn lift_solution_regular(prices: &PriceVector, alpha: &Rational, eps: &Rational) -> Result<PriceVector> {
    let n = prices.len();
    RegularWindow::new(alpha, eps, n)?;
    let n2 = Rational::from_integer((n as u64).pow(2).into());
    let lo = eps * alpha / (&n2 * &n2);
    let hi = rational::int(2) * n2 * alpha / (eps * eps);
    restrict_prices(prices, &Restriction::ClampRange(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{CdfOracle, DiscreteDistribution, TieBreak};
    use crate::rational::{int, parse, ratio};

    fn single(d: DiscreteDistribution) -> Instance {
        Instance::discrete(vec![d], TieBreak::LowestIndex).unwrap()
    }

    fn point(v: Rational) -> Instance {
        single(DiscreteDistribution::point_mass(v).unwrap())
    }

    fn only_point(inst: &Instance) -> f64 {
        let d = inst.items[0].as_discrete().unwrap();
        assert_eq!(d.len(), 1);
        rational::to_f64(&d.support()[0])
    }

    #[test]
    fn mhr_truncation_examples() {
        let eps = ratio(1, 10);
        let two = DiscreteDistribution::uniform_over(vec![int(1), int(5)]).unwrap();
        let inst = single(two.clone());
        assert_eq!(truncate_values_mhr(&inst, &int(2), &eps).unwrap(), inst);
        let high = truncate_values_mhr(&point(int(100)), &int(2), &eps).unwrap();
        assert!((only_point(&high) - 4.0 * 10f64.ln()).abs() < 1e-12);
        let low = truncate_values_mhr(&point(parse("0.01").unwrap()), &int(2), &eps).unwrap();
        assert_eq!(low.items[0].as_discrete().unwrap().support(), &[ratio(1, 10)]);
        assert!(truncate_values_mhr(&inst, &int(2), &ratio(1, 4)).is_err());
    }

    #[test]
    fn low_shift_merges_with_existing_point() {
        let d = DiscreteDistribution::new(
            vec![ratio(1, 100), ratio(1, 10), int(1)],
            vec![ratio(1, 4), ratio(1, 4), ratio(1, 2)],
        )
        .unwrap();
        let out = truncate_values_mhr(&single(d), &int(2), &ratio(1, 10)).unwrap();
        let d = out.items[0].as_discrete().unwrap();
        assert_eq!(d.support(), &[ratio(1, 10), int(1)]);
        assert_eq!(d.masses(), &[ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn regular_truncation_examples() {
        let pair = |v: Rational| {
            Instance::discrete(
                vec![
                    DiscreteDistribution::point_mass(v.clone()).unwrap(),
                    DiscreteDistribution::point_mass(v).unwrap(),
                ],
                TieBreak::LowestIndex,
            )
            .unwrap()
        };
        let half = ratio(1, 2);
        let low = truncate_values_regular(&pair(parse("0.01").unwrap()), &int(4), &half).unwrap();
        assert_eq!(low.items[0].as_discrete().unwrap().support(), &[ratio(1, 32)]);
        let high = truncate_values_regular(&pair(int(1_000_000)), &int(4), &half).unwrap();
        assert_eq!(high.items[0].as_discrete().unwrap().support(), &[int(2048)]);
        let mid = truncate_values_regular(&pair(int(1)), &int(4), &half).unwrap();
        assert_eq!(mid, pair(int(1)));
        assert!(truncate_values_regular(&pair(int(1)), &int(4), &int(1)).is_err());
    }

    #[test]
    fn oracle_truncation_wraps_the_family() {
        let inst = Instance::oracles(vec![CdfOracle::exponential(1.0).unwrap()], TieBreak::LowestIndex).unwrap();
        let out = truncate_values_mhr(&inst, &int(1), &ratio(1, 10)).unwrap();
        let Item::Oracle(o) = &out.items[0] else { panic!() };
        assert_eq!(o.u_min(), 0.05);
        assert!((o.u_max() - 2.0 * 10f64.ln()).abs() < 1e-12);
        assert!(truncate_values_mhr(&out, &int(1), &ratio(1, 10)).is_err());
    }

    #[test]
    fn restriction_modes() {
        let p = PriceVector(vec![Price::Finite(ratio(1, 2)), Price::Finite(int(3)), Price::Infinite]);
        let out = restrict_prices(&p, &Restriction::ClampRange(int(1), int(2))).unwrap();
        assert_eq!(out, PriceVector::from_finite(vec![int(1), int(2), int(2)]));
        let p = PriceVector::from_finite(vec![ratio(1, 2), int(3)]);
        let out = restrict_prices(&p, &Restriction::RaiseLow(int(1))).unwrap();
        assert_eq!(out, PriceVector::from_finite(vec![int(1), int(3)]));
        let out = restrict_prices(&p, &Restriction::CapHigh(int(2))).unwrap();
        assert_eq!(out, PriceVector::from_finite(vec![ratio(1, 2), int(2)]));
        let p = PriceVector(vec![Price::Finite(int(4)), Price::Infinite]);
        let out = restrict_prices(&p, &Restriction::ReplaceInfinite(int(4))).unwrap();
        assert_eq!(out, PriceVector::from_finite(vec![int(4), int(4)]));
        assert!(restrict_prices(&p, &Restriction::ClampRange(int(2), int(1))).is_err());
    }

    #[test]
    fn mhr_lift_examples() {
        let eps = ratio(1, 10);
        let out = lift_solution_mhr(&PriceVector::from_finite(vec![ratio(1, 20)]), &int(2), &eps).unwrap();
        assert_eq!(out, PriceVector::from_finite(vec![ratio(1, 5)]));
        let inside = PriceVector::from_finite(vec![int(1), int(5)]);
        assert_eq!(lift_solution_mhr(&inside, &int(2), &eps).unwrap(), inside);
        let out = lift_solution_mhr(&PriceVector::from_finite(vec![int(1000)]), &int(2), &eps).unwrap();
        let top = rational::to_f64(out.0[0].finite().unwrap());
        assert!((top - 4.0 * 10f64.ln()).abs() < 1e-12);
    }
}
