//! Extreme-value anchors: `beta` for MHR items and `alpha` for regular items,
//! plus empirical checks of the tail bounds they come with.

use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{Instance, Item};
use crate::error::{Error, Result};
use crate::oracle::{KeyedUniforms, Z99};
use crate::rational::{self, Rational};
use crate::report::{ser_rational, ser_rationals};

/// CDF precision used when an oracle quantile feeds an anchor.
const ORACLE_PRECISION: f64 = 1e-13;

/// Default relative slack for oracle quantiles.
pub const DEFAULT_ORACLE_ETA: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRecord {
    pub t: u32,
    #[serde(serialize_with = "ser_rational")]
    pub beta_t: Rational,
    /// Original indices kept for the next round; padding items are `>= n`.
    pub survivors: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MhrAnchor {
    #[serde(serialize_with = "ser_rational")]
    pub beta: Rational,
    pub rounds: Vec<RoundRecord>,
    pub eta: f64,
}

/// `alpha_p` of one item as an exact rational (oracles are converted from
/// their binary64 answer).
pub fn item_quantile(item: &Item, p: &Rational) -> Result<Rational> {
    match item {
        Item::Discrete(d) => d.quantile(p),
        Item::Oracle(o) => rational::from_f64(o.quantile(rational::to_f64(p), ORACLE_PRECISION)?),
    }
}

/// The halving tournament over quantiles `alpha_{n/2^t}`.
///
/// Items are padded with zero values up to a power of two (at least 2). Each
/// round sorts survivors by quantile, decreasing with ties to the lower index,
/// keeps the top half and records the smallest kept quantile. The last round
/// records `alpha_2` of the final survivor. `beta` is the largest record.
pub fn beta_mhr(instance: &Instance, eta: f64) -> Result<MhrAnchor> {
    if instance.is_empty() {
        return Err(Error::Domain("empty instance".into()));
    }
    if !(0.0..0.5).contains(&eta) {
        return Err(Error::Domain(format!("eta must lie in [0, 1/2), got {eta}")));
    }
    let n = instance.len();
    let padded = n.next_power_of_two().max(2);
    let rounds_total = padded.trailing_zeros();
    let quantile = |i: usize, p: &Rational| -> Result<Rational> {
        if i >= n {
            Ok(Rational::zero())
        } else {
            item_quantile(&instance.items[i], p)
        }
    };
    let mut survivors: Vec<usize> = (0..padded).collect();
    let mut rounds = Vec::with_capacity(rounds_total as usize + 1);
    for t in 0..rounds_total {
        let p = Rational::from_integer((padded >> t).into());
        let mut scored = survivors.iter().map(|&i| quantile(i, &p).map(|x| (x, i))).collect::<Result<Vec<_>>>()?;
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.truncate(scored.len() / 2);
        let beta_t = scored.last().expect("at least one survivor").0.clone();
        survivors = scored.into_iter().map(|(_, i)| i).collect();
        rounds.push(RoundRecord { t, beta_t, survivors: survivors.clone() });
    }
    let last = survivors[0];
    rounds.push(RoundRecord { t: rounds_total, beta_t: quantile(last, &rational::int(2))?, survivors: vec![last] });
    let beta = rounds.iter().map(|r| r.beta_t.clone()).max().expect("nonempty");
    Ok(MhrAnchor { beta, rounds, eta })
}

/// Scales a constant-factor revenue estimate into a valid `beta`.
pub fn beta_from_constant_approx(beta_prime: f64, a: f64) -> Result<f64> {
    if a.is_nan() || a < 1.0 || beta_prime.is_nan() || beta_prime <= 0.0 {
        return Err(Error::Domain(format!("need a >= 1 and beta' > 0, got a = {a}, beta' = {beta_prime}")));
    }
    Ok(2.0 * a / (1.0 - (-0.5f64).exp()) * beta_prime)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularAnchor {
    #[serde(serialize_with = "ser_rational")]
    pub alpha: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub c1: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub c2: Rational,
    #[serde(serialize_with = "ser_rationals")]
    pub anchor_points: Vec<Rational>,
    /// `a_i (1 - F_i(a_i))` per item.
    #[serde(serialize_with = "ser_rationals")]
    pub anchor_revenues: Vec<Rational>,
}

fn anchor_point(item: &Item, c1: &Rational, c2: &Rational) -> Result<(Rational, Rational)> {
    match item {
        Item::Discrete(d) => {
            let (v, _) = d
                .support()
                .iter()
                .zip(d.masses())
                .scan(Rational::zero(), |acc, (v, m)| {
                    *acc += m;
                    Some((v, acc.clone()))
                })
                .find(|(_, f)| f >= c1)
                .expect("CDF reaches one");
            let f = d.cdf(v);
            if &f > c2 {
                return Err(Error::Anchoring(format!(
                    "no support point has CDF in [{c1}, {c2}]; the smallest with CDF >= {c1} has {f}"
                )));
            }
            Ok((v.clone(), v * (Rational::one() - f)))
        }
        Item::Oracle(o) => {
            let (lo, hi) = (rational::to_f64(c1), rational::to_f64(c2));
            // Bisection lands within rounding of `c1`; the midpoint of the
            // window is the fallback.
            for target in [lo, (lo + hi) / 2.0] {
                let x = o.quantile(1.0 / (1.0 - target), ORACLE_PRECISION)?;
                let f = o.cdf(x);
                if f >= lo - 1e-12 && f <= hi {
                    let x = rational::from_f64(x)?;
                    let s = rational::from_f64(o.survival_ge(rational::to_f64(&x)))?;
                    return Ok((x.clone(), x * s));
                }
            }
            Err(Error::Anchoring(format!("no point with CDF in [{lo}, {hi}] located")))
        }
    }
}

/// `alpha = (n^3 / c1) max_i a_i (1 - F_i(a_i))` where `a_i` is the smallest
/// point with `F_i(a_i) >= c1`, required to satisfy `F_i(a_i) <= c2`.
pub fn alpha_regular(instance: &Instance, c1: &Rational, c2: &Rational) -> Result<RegularAnchor> {
    let n = instance.len();
    if n < 2 {
        return Err(Error::Domain("the regular anchor needs at least two items".into()));
    }
    let n3 = Rational::from_integer(((n as u64).pow(3)).into());
    if !(c1 > &Rational::zero() && c1 < c2 && c2 <= &rational::ratio(7, 8)) {
        return Err(Error::Domain(format!("need 0 < c1 < c2 <= 7/8, got c1 = {c1}, c2 = {c2}")));
    }
    if c2 > &(Rational::one() - n3.recip()) {
        return Err(Error::Domain(format!("need c2 <= 1 - 1/n^3, got c2 = {c2}")));
    }
    let (points, revenues): (Vec<_>, Vec<_>) =
        instance.items.iter().map(|item| anchor_point(item, c1, c2)).collect::<Result<Vec<_>>>()?.into_iter().unzip();
    let best = revenues.iter().max().expect("n >= 2").clone();
    Ok(RegularAnchor {
        alpha: n3 / c1 * best,
        c1: c1.clone(),
        c2: c2.clone(),
        anchor_points: points,
        anchor_revenues: revenues,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub bound: f64,
    pub estimate: f64,
    pub ci99: f64,
    pub pass: bool,
    /// Reported but not part of the overall verdict.
    pub informational: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnchorReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub checks: Vec<Check>,
}

impl AnchorReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.informational || c.pass)
    }
}

fn sample_value(item: &Item, u: f64) -> f64 {
    match item {
        Item::Discrete(d) => rational::to_f64(&d.support()[d.sample_index(u)]),
        Item::Oracle(o) => o.sample(u),
    }
}

/// `max_i X_i` for `samples` joint draws, in sample order.
pub fn sample_maxima(instance: &Instance, samples: u64, seed: u64) -> Vec<f64> {
    const CHUNK: u64 = 4096;
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let start = c * CHUNK;
            let len = CHUNK.min(samples - start);
            let mut streams: Vec<KeyedUniforms> =
                (0..instance.len()).map(|i| KeyedUniforms::new(seed, i as u64, start)).collect();
            (0..len)
                .map(|_| {
                    instance
                        .items
                        .iter()
                        .zip(streams.iter_mut())
                        .map(|(item, s)| sample_value(item, s.next_f64()))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Mean and 99% half-width of `f` over the sample.
fn mean_ci(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = xs.clone().sum::<f64>() / nf;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0).max(1.0);
    (mean, Z99 * var.sqrt() / nf.sqrt())
}

/// Monte-Carlo check of `Pr[max >= beta/2] >= 1 - 1/sqrt(e)` and of
/// `Con[max >= 2 beta ln(1/eps)] <= 36 beta eps ln(1/eps)`.
pub fn verify_mhr_anchor(
    instance: &Instance,
    anchor: &MhrAnchor,
    eps: f64,
    samples: u64,
    seed: u64,
) -> Result<AnchorReport> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::Domain(format!("eps must lie in (0, 1/4), got {eps}")));
    }
    if samples < 10_000 {
        return Err(Error::Domain("at least 10^4 samples are required".into()));
    }
    let beta = rational::to_f64(&anchor.beta);
    let maxima = sample_maxima(instance, samples, seed);
    let n = maxima.len();

    let half = beta / 2.0;
    let (p_est, p_ci) = mean_ci(maxima.iter().map(|&m| if m >= half { 1.0 } else { 0.0 }), n);
    let p_bound = 1.0 - (-0.5f64).exp();

    let ln = (1.0 / eps).ln();
    let threshold = 2.0 * beta * ln;
    let (c_est, c_ci) = mean_ci(maxima.iter().map(|&m| if m >= threshold { m } else { 0.0 }), n);
    let c_bound = 36.0 * beta * eps * ln;

    Ok(AnchorReport {
        beta: Some(beta),
        alpha: None,
        checks: vec![
            Check {
                name: "pr_max_ge_half_beta".into(),
                bound: p_bound,
                estimate: p_est,
                ci99: p_ci,
                pass: p_est + p_ci >= p_bound,
                informational: false,
            },
            Check {
                name: format!("con_max_ge_2beta_ln_inv_eps(eps={eps})"),
                bound: c_bound,
                estimate: c_est,
                ci99: c_ci,
                pass: c_est - c_ci <= c_bound,
                informational: false,
            },
        ],
    })
}

/// `Pr[max_{i in S} X_i >= z]` from closed-form survival functions.
fn pr_max_ge(instance: &Instance, subset: &[usize], z: f64) -> f64 {
    let log_none: f64 = subset.iter().map(|&i| (-instance.items[i].survival_ge_f64(z)).ln_1p()).sum();
    -log_none.exp_m1()
}

fn subsets(n: usize, k: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if out.len() >= cap {
            return;
        }
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cap, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, cap, &mut current, &mut out);
    out
}

const SUBSET_CAP: usize = 16;

/// Checks of the regular anchor:
///
/// * `Pr[X_i >= l alpha] <= 2/(l n^3)` for `l` in {1, 2, 4}, from the CDFs;
/// * `alpha/n^3 <= (1/c1) max_z z Pr[max >= z]` (informational), on a
///   geometric z-grid and from sample maxima;
/// * the homogenization inequality on subsets of size `min(n, 4)` and
///   thresholds `t, 2t, 4t` with `t = 2 n^2 alpha / eps^2`.
pub fn verify_regular_anchor(
    instance: &Instance,
    anchor: &RegularAnchor,
    eps: f64,
    samples: u64,
    seed: u64,
) -> Result<AnchorReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    if samples < 10_000 {
        return Err(Error::Domain("at least 10^4 samples are required".into()));
    }
    let n = instance.len();
    let n3 = (n as f64).powi(3);
    let alpha = rational::to_f64(&anchor.alpha);
    let mut checks = Vec::new();

    for (i, item) in instance.items.iter().enumerate() {
        for l in [1u32, 2, 4] {
            let bound = 2.0 / (l as f64 * n3);
            let x = &anchor.alpha * Rational::from_integer(l.into());
            let estimate = match item {
                Item::Discrete(d) => d.survival_ge(&x).to_f64().unwrap_or(f64::NAN),
                Item::Oracle(o) => o.survival_ge(rational::to_f64(&x)),
            };
            checks.push(Check {
                name: format!("pr_item{i}_ge_{l}alpha"),
                bound,
                estimate,
                ci99: 0.0,
                pass: estimate <= bound,
                informational: false,
            });
        }
    }

    let c = 1.0 / rational::to_f64(&anchor.c1);
    let all: Vec<usize> = (0..n).collect();
    let lo = instance.items.iter().map(Item::u_min_f64).fold(f64::INFINITY, f64::min).max(alpha * 1e-9);
    let hi = alpha * 4.0;
    let steps = 4000;
    let grid_best = (0..=steps)
        .map(|k| {
            let z = lo * (hi / lo).powf(k as f64 / steps as f64);
            z * pr_max_ge(instance, &all, z)
        })
        .chain(instance.items.iter().filter_map(Item::as_discrete).flat_map(|d| {
            d.support().iter().map(|v| {
                let z = rational::to_f64(v);
                z * pr_max_ge(instance, &all, z)
            })
        }))
        .fold(0.0, f64::max);
    let ratio = alpha / n3 / grid_best;
    checks.push(Check {
        name: "alpha_over_n3_vs_max_revenue".into(),
        bound: c,
        estimate: ratio,
        ci99: 0.0,
        pass: ratio <= c,
        informational: true,
    });
    let mut maxima = sample_maxima(instance, samples, seed);
    maxima.sort_by(|a, b| b.total_cmp(a));
    let mc_best = maxima.iter().enumerate().map(|(k, &z)| z * (k + 1) as f64 / maxima.len() as f64).fold(0.0, f64::max);
    checks.push(Check {
        name: "alpha_over_n3_vs_max_revenue_sampled".into(),
        bound: c,
        estimate: alpha / n3 / mc_best,
        ci99: 0.0,
        pass: alpha / n3 / mc_best <= c,
        informational: true,
    });

    let t0 = 2.0 * (n * n) as f64 * alpha / (eps * eps);
    let low = 2.0 * alpha / eps;
    let m = n.min(4);
    for subset in subsets(n, m, SUBSET_CAP) {
        for t in [t0, 2.0 * t0, 4.0 * t0] {
            let rhs = (t - low) * pr_max_ge(instance, &subset, t)
                + 7.0 * eps / n as f64 * low * pr_max_ge(instance, &subset, low);
            let choices = [t, 2.0 * t, 4.0 * t];
            let mut worst = f64::NEG_INFINITY;
            for code in 0..choices.len().pow(m as u32) {
                let mut code = code;
                let mut lhs = 0.0;
                for &i in &subset {
                    let ti = choices[code % 3];
                    code /= 3;
                    lhs += ti * instance.items[i].survival_ge_f64(ti);
                }
                worst = worst.max(lhs);
            }
            checks.push(Check {
                name: format!("homogenization_S{subset:?}_t={t:e}"),
                bound: rhs,
                estimate: worst,
                ci99: 0.0,
                pass: worst <= rhs * (1.0 + 1e-12),
                informational: false,
            });
        }
    }

    Ok(AnchorReport { beta: None, alpha: Some(alpha), checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{CdfOracle, DiscreteDistribution, TieBreak};
    use crate::rational::{int, ratio};

    fn iid(o: CdfOracle, n: usize) -> Instance {
        Instance::oracles(vec![o; n], TieBreak::LowestIndex).unwrap()
    }

    #[test]
    fn beta_for_four_exponentials() {
        let a = beta_mhr(&iid(CdfOracle::exponential(1.0).unwrap(), 4), 0.0).unwrap();
        let b: Vec<f64> = a.rounds.iter().map(|r| rational::to_f64(&r.beta_t)).collect();
        assert!((b[0] - 4f64.ln()).abs() < 1e-9);
        assert!((b[1] - 2f64.ln()).abs() < 1e-9);
        assert!((b[2] - 2f64.ln()).abs() < 1e-9);
        assert!((rational::to_f64(&a.beta) - 4f64.ln()).abs() < 1e-9);
        assert_eq!(a.rounds[0].survivors, vec![0, 1]);
        assert_eq!(a.rounds[1].survivors, vec![0]);
    }

    #[test]
    fn beta_for_point_mass_and_uniforms() {
        let inst =
            Instance::discrete(vec![DiscreteDistribution::point_mass(int(7)).unwrap()], TieBreak::LowestIndex).unwrap();
        let a = beta_mhr(&inst, 0.0).unwrap();
        assert_eq!(a.beta, int(7));
        assert_eq!(a.rounds.len(), 2);
        let a = beta_mhr(&iid(CdfOracle::uniform(0.0, 1.0).unwrap(), 2), 0.0).unwrap();
        assert!((rational::to_f64(&a.beta) - 0.5).abs() < 1e-9);
        assert!(beta_mhr(&inst, 0.5).is_err());
    }

    #[test]
    fn constant_approx_scaling() {
        let c = 2.0 / (1.0 - (-0.5f64).exp());
        assert!((beta_from_constant_approx(1.0, 1.0).unwrap() - c).abs() < 1e-12);
        assert!((beta_from_constant_approx(0.5, 2.0).unwrap() - c).abs() < 1e-12);
        assert!(beta_from_constant_approx(1.0, 0.5).is_err());
        assert!(beta_from_constant_approx(0.0, 1.0).is_err());
    }

    #[test]
    fn alpha_for_uniforms_and_power_tails() {
        let (c1, c2) = (ratio(1, 2), ratio(3, 4));
        let a = alpha_regular(&iid(CdfOracle::uniform(0.0, 1.0).unwrap(), 2), &c1, &c2).unwrap();
        assert!((rational::to_f64(&a.alpha) - 4.0).abs() < 1e-9);
        let a = alpha_regular(&iid(CdfOracle::power_tail(2.0).unwrap(), 2), &c1, &c2).unwrap();
        assert!((rational::to_f64(&a.alpha) - 8.0 * 2f64.sqrt()).abs() < 1e-6);
        let err = alpha_regular(&iid(CdfOracle::uniform(0.0, 1.0).unwrap(), 2), &c1, &ratio(9, 10));
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn alpha_for_discrete_items_is_exact() {
        let d = DiscreteDistribution::uniform_over(vec![int(1), int(2), int(3), int(4)]).unwrap();
        let inst = Instance::discrete(vec![d.clone(), d], TieBreak::LowestIndex).unwrap();
        let a = alpha_regular(&inst, &ratio(1, 2), &ratio(3, 4)).unwrap();
        // a_i = 2 with F = 1/2: alpha = 8 / (1/2) * 2 * 1/2.
        assert_eq!(a.alpha, int(16));
        let two = DiscreteDistribution::uniform_over(vec![int(1), int(5)]).unwrap();
        let inst = Instance::discrete(vec![two.clone(), two], TieBreak::LowestIndex).unwrap();
        assert!(matches!(alpha_regular(&inst, &ratio(3, 5), &ratio(7, 10)), Err(Error::Anchoring(_))));
    }

    #[test]
    fn mhr_checks_pass_on_exponentials() {
        let inst = iid(CdfOracle::exponential(1.0).unwrap(), 4);
        let anchor = beta_mhr(&inst, 0.0).unwrap();
        let report = verify_mhr_anchor(&inst, &anchor, 0.1, 20_000, 1).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!((report.checks[0].estimate - 0.9375).abs() < 0.01);
    }

    #[test]
    fn regular_checks_pass_on_power_tails() {
        let inst = iid(CdfOracle::power_tail(2.0).unwrap(), 2);
        let anchor = alpha_regular(&inst, &ratio(1, 2), &ratio(3, 4)).unwrap();
        let report = verify_regular_anchor(&inst, &anchor, 0.5, 10_000, 1).unwrap();
        assert!(report.passed(), "{report:?}");
        let first = &report.checks[0];
        assert!((first.estimate - 1.0 / 128.0).abs() < 1e-9);
    }
}
