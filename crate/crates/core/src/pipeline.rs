//! End-to-end solve: anchor, truncate, discretize, run the DP, and map the
//! prices back to the original instance.

use std::time::Instant;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::anchoring::{alpha_regular, beta_mhr, MhrAnchor, RegularAnchor, DEFAULT_ORACLE_ETA};
use crate::discretization::{
    back_map_prices, full_discretize, full_discretize_with, value_range, vertical_denominator, vertical_round_units,
    DiscretizeParams, RestrictedInstance,
};
use crate::distributions::{Class, Instance, Item, TieBreak, ANCHOR_C1, ANCHOR_C2};
use crate::dp::{run_dp, DpConfig, DpResult};
use crate::error::{Error, Result};
use crate::iid::{single_price_mhr, IidMode, IidPrice};
use crate::oracle::{brute_force_optimum, exact_revenue, monte_carlo_revenue, union_support, McEstimate};
use crate::rational::{self, Rational};
use crate::reductions::{
    lift_solution_mhr, lift_solution_regular, restrict_prices, truncate_values_mhr, truncate_values_regular,
    PriceVector, Restriction,
};
use crate::report::{ser_opt_rational, ser_rational, ser_rationals};

pub const DEFAULT_SAMPLES: u64 = 200_000;
pub const DEFAULT_SEED: u64 = 0;
/// Largest `k2^n` for the brute-force check over the solver's own grid.
pub const DEFAULT_GRID_CHECK_CAP: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Discretization {
    /// Admissible `delta = 1/ceil(2/bound)` and `eps' = eps/2`.
    Practical,
    /// `delta = (eps/8)^8`, `eps' = delta/4`.
    Theorem,
    Given {
        delta: Rational,
        price_eps: Rational,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    #[default]
    Dp,
    Brute,
    Iid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub eps: Rational,
    /// Overrides the instance's rule when set.
    pub tie_break: Option<TieBreak>,
    pub solver: Solver,
    pub dp: DpConfig,
    pub discretization: Discretization,
    pub samples: u64,
    pub seed: u64,
    pub grid_check_cap: u64,
    pub brute_cap: u64,
}

impl SolveOptions {
    pub fn new(eps: Rational) -> Self {
        Self {
            eps,
            tie_break: None,
            solver: Solver::Dp,
            dp: DpConfig::default(),
            discretization: Discretization::Practical,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            grid_check_cap: DEFAULT_GRID_CHECK_CAP,
            brute_cap: crate::oracle::DEFAULT_BRUTE_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Anchor {
    None,
    Mhr(MhrAnchor),
    Regular(RegularAnchor),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Window {
    #[serde(serialize_with = "ser_rational")]
    pub low_threshold: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub low_point: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub high_point: Rational,
}

/// Everything up to, but not including, the DP.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepared {
    pub original: Instance,
    pub eps: Rational,
    pub anchor: Anchor,
    pub window: Option<Window>,
    pub truncated: Instance,
    /// Discretized and vertically rounded.
    pub restricted: RestrictedInstance,
    pub vertical_denominator: u64,
}

fn class_name(c: Option<Class>) -> &'static str {
    match c {
        Some(Class::Mhr) => "mhr",
        Some(Class::Regular) => "regular",
        None => "none",
    }
}

fn with_tie(instance: &Instance, tie: Option<TieBreak>) -> Instance {
    let mut out = instance.clone();
    if let Some(t) = tie {
        out.tie_break = t;
    }
    out
}

/// Anchoring, truncation, discretization and vertical rounding.
pub fn prepare(instance: &Instance, opts: &SolveOptions) -> Result<Prepared> {
    let original = with_tie(instance, opts.tie_break);
    let eps = opts.eps.clone();
    if !(eps > Rational::zero() && eps < Rational::one()) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    let (anchor, window, truncated) = match original.class {
        None if !original.is_all_discrete() => {
            return Err(Error::Domain(
                "instances with oracle items need a class tag (\"class\": \"mhr\" or \"regular\")".into(),
            ))
        }
        None => (Anchor::None, None, original.clone()),
        Some(Class::Mhr) => {
            let a = beta_mhr(&original, DEFAULT_ORACLE_ETA)?;
            let w = crate::reductions::MhrWindow::new(&a.beta, &eps)?;
            let t = truncate_values_mhr(&original, &a.beta, &eps)?;
            let window = Window { low_threshold: w.low_threshold, low_point: w.low_point, high_point: w.high_point };
            (Anchor::Mhr(a), Some(window), t)
        }
        Some(Class::Regular) => {
            let a = alpha_regular(&original, &rational::from_f64(ANCHOR_C1)?, &rational::from_f64(ANCHOR_C2)?)?;
            let w = crate::reductions::RegularWindow::new(&a.alpha, &eps, original.len())?;
            let t = truncate_values_regular(&original, &a.alpha, &eps)?;
            let window = Window { low_threshold: w.low_threshold, low_point: w.low_point, high_point: w.high_point };
            (Anchor::Regular(a), Some(window), t)
        }
    };
    let restricted = match &opts.discretization {
        Discretization::Theorem => full_discretize(&truncated, &eps)?,
        Discretization::Practical => {
            let (lo, hi) = value_range(&truncated)?;
            full_discretize_with(&truncated, &DiscretizeParams::practical(&eps, &(hi / lo)))?
        }
        Discretization::Given { delta, price_eps } => {
            let params = DiscretizeParams {
                delta: delta.clone(),
                price_eps: price_eps.clone(),
                allow_inadmissible_delta: true,
                compress: true,
                max_grid_points: crate::discretization::DEFAULT_MAX_GRID_POINTS,
            };
            full_discretize_with(&truncated, &params)?
        }
    };
    let denominator = vertical_denominator(&restricted.provenance.r_prices, original.len())?;
    let mut restricted = restricted;
    restricted.instance = vertical_round_units(&restricted.instance, denominator)?;
    Ok(Prepared { original, eps, anchor, window, truncated, restricted, vertical_denominator: denominator })
}

/// Maps prices found on the restricted instance back to the original one.
pub fn lift(prep: &Prepared, restricted_prices: &[Rational]) -> Result<Vec<Rational>> {
    let mapped = PriceVector::from_finite(back_map_prices(restricted_prices, &prep.restricted.provenance.delta));
    let lifted = match &prep.anchor {
        Anchor::None => mapped,
        Anchor::Mhr(a) => lift_solution_mhr(&mapped, &a.beta, &prep.eps)?,
        Anchor::Regular(a) => lift_solution_regular(&mapped, &a.alpha, &prep.eps)?,
    };
    let out = if prep.original.is_all_discrete() {
        let (lo, hi) = discrete_range(&prep.original)?;
        restrict_prices(&lifted, &Restriction::ClampRange(lo, hi))?
    } else {
        lifted
    };
    out.to_finite()
}

fn discrete_range(instance: &Instance) -> Result<(Rational, Rational)> {
    let items = instance.discrete_items()?;
    let lo = items.iter().map(|d| d.u_min().clone()).min().expect("nonempty");
    let hi = items.iter().map(|d| d.u_max().clone()).max().expect("nonempty");
    Ok((lo, hi))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    #[serde(serialize_with = "ser_opt_rational")]
    pub exact_revenue: Option<Rational>,
    pub monte_carlo: Option<McEstimate>,
}

impl Evaluation {
    pub fn value(&self) -> f64 {
        match (&self.exact_revenue, &self.monte_carlo) {
            (Some(r), _) => rational::to_f64(r),
            (None, Some(mc)) => mc.estimate,
            _ => f64::NAN,
        }
    }
}

pub fn evaluate(instance: &Instance, prices: &[Rational], samples: u64, seed: u64) -> Result<Evaluation> {
    if instance.is_all_discrete() {
        Ok(Evaluation { exact_revenue: Some(exact_revenue(instance, prices)?), monte_carlo: None })
    } else {
        Ok(Evaluation { exact_revenue: None, monte_carlo: Some(monte_carlo_revenue(instance, prices, samples, seed)?) })
    }
}

/// Brute force over the lifted price grid, when small enough.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridCheck {
    #[serde(serialize_with = "ser_rationals")]
    pub grid: Vec<Rational>,
    #[serde(serialize_with = "ser_rationals")]
    pub best_prices: Vec<Rational>,
    #[serde(serialize_with = "ser_rational")]
    pub best_revenue: Rational,
    /// `best_revenue - exact_revenue` of the solver's vector.
    #[serde(serialize_with = "ser_rational")]
    pub gap: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub class: &'static str,
    #[serde(serialize_with = "ser_rational")]
    pub epsilon: Rational,
    pub tie_break: TieBreak,
    pub anchor: Anchor,
    pub truncation: Option<Window>,
    pub discretization: Option<crate::discretization::Provenance>,
    pub vertical_denominator: Option<u64>,
    pub dp_mode: Option<crate::dp::DpMode>,
    #[serde(rename = "M")]
    pub m: Option<u64>,
    pub mass_denominator: Option<u64>,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub solver: Solver,
    #[serde(serialize_with = "ser_rationals")]
    pub prices: Vec<Rational>,
    /// `prices` rounded to binary64 for reading.
    pub prices_approx: Vec<f64>,
    #[serde(serialize_with = "ser_opt_rational")]
    pub predicted_revenue: Option<Rational>,
    #[serde(serialize_with = "ser_opt_rational")]
    pub exact_revenue: Option<Rational>,
    pub revenue_approx: Option<f64>,
    pub monte_carlo: Option<McEstimate>,
    pub layers: Vec<crate::dp::LayerStats>,
    /// Restricted-grid prices chosen by the DP.
    #[serde(serialize_with = "ser_rationals")]
    pub restricted_prices: Vec<Rational>,
    pub iid: Option<IidPrice>,
    pub grid_check: Option<GridCheck>,
    pub notes: Vec<String>,
    pub provenance: Provenance,
}

fn with_approx(mut r: SolveReport) -> SolveReport {
    r.prices_approx = r.prices.iter().map(rational::to_f64).collect();
    r.revenue_approx = match (&r.exact_revenue, &r.monte_carlo) {
        (Some(x), _) => Some(rational::to_f64(x)),
        (None, Some(mc)) => Some(mc.estimate),
        _ => None,
    };
    r
}

impl SolveReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

fn provenance(instance: &Instance, opts: &SolveOptions, prep: Option<&Prepared>, dp: Option<&DpResult>) -> Provenance {
    Provenance {
        class: class_name(instance.class),
        epsilon: opts.eps.clone(),
        tie_break: opts.tie_break.unwrap_or(instance.tie_break),
        anchor: prep.map_or(Anchor::None, |p| p.anchor.clone()),
        truncation: prep.and_then(|p| p.window.clone()),
        discretization: prep.map(|p| p.restricted.provenance.clone()),
        vertical_denominator: prep.map(|p| p.vertical_denominator),
        dp_mode: dp.map(|d| d.mode),
        m: dp.and_then(|d| d.m),
        mass_denominator: dp.and_then(|d| d.mass_denominator),
        samples: opts.samples,
        seed: opts.seed,
    }
}

/// The DP pipeline on its own, returning the pieces the report is built from.
pub fn solve_dp(instance: &Instance, opts: &SolveOptions) -> Result<(Prepared, DpResult, Vec<Rational>)> {
    let prep = prepare(instance, opts)?;
    let dp = run_dp(&prep.restricted, prep.original.tie_break, &opts.dp)?;
    let prices = lift(&prep, &dp.prices)?;
    Ok((prep, dp, prices))
}

/// The lifted price grid: every restricted price mapped back. The lift acts
/// elementwise, so a constant vector carries each grid point.
pub fn lifted_grid(prep: &Prepared) -> Result<Vec<Rational>> {
    let n = prep.original.len();
    let mut g = Vec::with_capacity(prep.restricted.prices.len());
    for p in &prep.restricted.prices {
        g.push(lift(prep, &vec![p.clone(); n])?.swap_remove(0));
    }
    g.sort();
    g.dedup();
    Ok(g)
}

fn grid_check(instance: &Instance, grid: &[Rational], exact: &Rational, cap: u64) -> Option<GridCheck> {
    let k = grid.len() as u64;
    let vectors = k.checked_pow(instance.len() as u32)?;
    if vectors > cap || !instance.is_all_discrete() {
        return None;
    }
    let best = brute_force_optimum(instance, grid, cap).ok()?;
    Some(GridCheck {
        grid: grid.to_vec(),
        gap: &best.revenue - exact,
        best_prices: best.prices,
        best_revenue: best.revenue,
    })
}

/// Runs the requested solver and evaluates its prices on the original
/// instance.
pub fn solve(instance: &Instance, opts: &SolveOptions) -> Result<SolveReport> {
    let original = with_tie(instance, opts.tie_break);
    match opts.solver {
        Solver::Dp => solve_with_dp(&original, opts, None),
        Solver::Brute => {
            let grid = union_support(&original.discrete_items()?);
            let b = brute_force_optimum(&original, &grid, opts.brute_cap)?;
            Ok(with_approx(SolveReport {
                prices_approx: vec![],
                revenue_approx: None,
                solver: Solver::Brute,
                prices: b.prices,
                predicted_revenue: None,
                exact_revenue: Some(b.revenue),
                monte_carlo: None,
                layers: vec![],
                restricted_prices: vec![],
                iid: None,
                grid_check: None,
                notes: vec![format!("brute force over the union of supports ({} vectors)", b.vectors)],
                provenance: provenance(&original, opts, None, None),
            }))
        }
        Solver::Iid => {
            let first = &original.items[0];
            if original.items.iter().any(|it| it != first) {
                return Err(Error::Domain("the i.i.d. solver needs identical items".into()));
            }
            if original.class != Some(Class::Mhr) {
                return Err(Error::Domain("the i.i.d. solver needs an mhr-tagged instance".into()));
            }
            let iid = single_price_mhr(first, original.len() as u64, rational::to_f64(&opts.eps))?;
            match iid.mode {
                IidMode::FastPath => {
                    let p = rational::from_f64(iid.price.expect("fast path has a price"))?;
                    let prices = vec![p; original.len()];
                    let ev = evaluate(&original, &prices, opts.samples, opts.seed)?;
                    Ok(with_approx(SolveReport {
                        prices_approx: vec![],
                        revenue_approx: None,
                        solver: Solver::Iid,
                        prices,
                        predicted_revenue: None,
                        exact_revenue: ev.exact_revenue,
                        monte_carlo: ev.monte_carlo,
                        layers: vec![],
                        restricted_prices: vec![],
                        iid: Some(iid),
                        grid_check: None,
                        notes: vec![],
                        provenance: provenance(&original, opts, None, None),
                    }))
                }
                IidMode::FallBack => solve_with_dp(&original, opts, Some(iid)),
            }
        }
    }
}

fn solve_with_dp(original: &Instance, opts: &SolveOptions, iid: Option<IidPrice>) -> Result<SolveReport> {
    let (prep, dp, prices) = solve_dp(original, opts)?;
    let ev = evaluate(original, &prices, opts.samples, opts.seed)?;
    let mut notes = Vec::new();
    if let Some(i) = &iid {
        notes.push(format!(
            "n = {} is below the single-price threshold exp({:.3}); used the dynamic program",
            original.len(),
            i.log_threshold
        ));
    }
    if !prep.restricted.provenance.delta_admissible {
        notes.push(format!(
            "delta = {} is above the admissible bound {:.6}; the discretization guarantee does not apply",
            prep.restricted.provenance.delta, prep.restricted.provenance.admissible_delta_bound
        ));
    }
    let check = match &ev.exact_revenue {
        Some(exact) => grid_check(original, &lifted_grid(&prep)?, exact, opts.grid_check_cap),
        None => None,
    };
    if let (Some(c), Some(exact)) = (&check, &ev.exact_revenue) {
        let target = (Rational::one() - &opts.eps) * &c.best_revenue;
        if exact >= &target {
            notes.push(format!(
                "exact revenue {:.6} is at least (1 - eps) times the best vector on the solver's grid ({:.6})",
                rational::to_f64(exact),
                rational::to_f64(&c.best_revenue)
            ));
        } else {
            notes.push(format!(
                "gap: exact revenue {:.6} is below (1 - eps) times the best vector on the solver's grid ({:.6})",
                rational::to_f64(exact),
                rational::to_f64(&c.best_revenue)
            ));
        }
    }
    Ok(with_approx(SolveReport {
        prices_approx: vec![],
        revenue_approx: None,
        solver: opts.solver,
        predicted_revenue: Some(dp.predicted_revenue.clone()),
        exact_revenue: ev.exact_revenue,
        monte_carlo: ev.monte_carlo,
        layers: dp.layers.clone(),
        restricted_prices: dp.prices.clone(),
        iid,
        grid_check: check,
        notes,
        provenance: provenance(original, opts, Some(&prep), Some(&dp)),
        prices,
    }))
}

/// One row of the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub solver: String,
    pub status: String,
    #[serde(serialize_with = "ser_rationals")]
    pub prices: Vec<Rational>,
    pub revenue: Option<f64>,
    #[serde(serialize_with = "ser_opt_rational")]
    pub exact_revenue: Option<Rational>,
    pub gap_to_best: Option<f64>,
    pub seconds: f64,
}

/// Runs the DP pipeline, brute force over the union of supports and over the
/// DP's lifted grid, and the single-price rule, on one instance.
pub fn compare(instance: &Instance, opts: &SolveOptions) -> Vec<CompareRow> {
    let original = with_tie(instance, opts.tie_break);
    let mut rows = Vec::new();
    let mut row = |name: &str, f: &mut dyn FnMut() -> Result<(Vec<Rational>, Evaluation)>| {
        let start = Instant::now();
        let r = f();
        let seconds = start.elapsed().as_secs_f64();
        rows.push(match r {
            Ok((prices, ev)) => CompareRow {
                solver: name.into(),
                status: "ok".into(),
                prices,
                revenue: Some(ev.value()),
                exact_revenue: ev.exact_revenue,
                gap_to_best: None,
                seconds,
            },
            Err(e) => CompareRow {
                solver: name.into(),
                status: e.to_string(),
                prices: vec![],
                revenue: None,
                exact_revenue: None,
                gap_to_best: None,
                seconds,
            },
        });
    };
    let mut grid: Option<Vec<Rational>> = None;
    row("dp", &mut || {
        let (prep, _, prices) = solve_dp(&original, opts)?;
        grid = Some(lifted_grid(&prep)?);
        let ev = evaluate(&original, &prices, opts.samples, opts.seed)?;
        Ok((prices, ev))
    });
    row("brute_support", &mut || {
        let support = union_support(&original.discrete_items()?);
        let b = brute_force_optimum(&original, &support, opts.brute_cap)?;
        Ok((b.prices, Evaluation { exact_revenue: Some(b.revenue), monte_carlo: None }))
    });
    row("brute_dp_grid", &mut || {
        let g = grid.clone().ok_or_else(|| Error::Unsupported("no dp grid".into()))?;
        let b = brute_force_optimum(&original, &g, opts.brute_cap)?;
        Ok((b.prices, Evaluation { exact_revenue: Some(b.revenue), monte_carlo: None }))
    });
    row("iid", &mut || {
        let first = &original.items[0];
        if original.items.iter().any(|it| it != first) || original.class != Some(Class::Mhr) {
            return Err(Error::Unsupported("needs identical mhr items".into()));
        }
        let iid = single_price_mhr(first, original.len() as u64, rational::to_f64(&opts.eps))?;
        let p = iid.price.ok_or_else(|| Error::Unsupported("fallback: n is below the threshold".into()))?;
        let prices = vec![rational::from_f64(p)?; original.len()];
        let ev = evaluate(&original, &prices, opts.samples, opts.seed)?;
        Ok((prices, ev))
    });
    let best = rows.iter().filter_map(|r| r.revenue).fold(f64::NEG_INFINITY, f64::max);
    for r in &mut rows {
        r.gap_to_best = r.revenue.map(|v| best - v);
    }
    rows
}

/// CSV with one line per solver.
pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("solver,status,revenue,exact_revenue,gap_to_best,seconds,prices\n");
    for r in rows {
        let prices: Vec<String> = r.prices.iter().map(rational::format).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{:.3},{}\n",
            r.solver,
            csv_field(&r.status),
            r.revenue.map_or(String::new(), |v| v.to_string()),
            r.exact_revenue.as_ref().map_or(String::new(), rational::format),
            r.gap_to_best.map_or(String::new(), |v| v.to_string()),
            r.seconds,
            prices.join(" "),
        ));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Whether an item list has any oracle entries.
pub fn has_oracles(instance: &Instance) -> bool {
    instance.items.iter().any(|i| matches!(i, Item::Oracle(_)))
}
