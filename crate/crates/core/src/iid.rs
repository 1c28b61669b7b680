//! One price for all items when the values are i.i.d. MHR.

use serde::Serialize;

use crate::distributions::Item;
use crate::error::{Error, Result};

/// Relative width at which the search for `alpha_n` stops.
const SEARCH_PRECISION: f64 = 1e-13;
const MAX_STEPS: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IidMode {
    FastPath,
    /// `n` is below the threshold; use the general pipeline.
    FallBack,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IidPrice {
    pub mode: IidMode,
    /// Price for every item; absent on fallback.
    pub price: Option<f64>,
    pub alpha_n: Option<f64>,
    pub eps_prime: f64,
    /// `ln((1/eps')^(1/eps'))`, compared against `ln n`.
    pub log_threshold: f64,
    pub cdf_queries: usize,
}

/// `ln` of the smallest `n` that takes the fast path for `eps' = eps/12`.
pub fn log_threshold(eps_prime: f64) -> f64 {
    (1.0 / eps_prime) * (1.0 / eps_prime).ln()
}

/// Uses the single price `(1 - 2 eps') alpha_n` with `eps' = eps/12` once
/// `n >= (1/eps')^(1/eps')`, and reports a fallback otherwise.
pub fn single_price_mhr(item: &Item, n: u64, eps: f64) -> Result<IidPrice> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let eps_prime = eps / 12.0;
    let threshold = log_threshold(eps_prime);
    if (n as f64).ln() < threshold {
        return Ok(IidPrice {
            mode: IidMode::FallBack,
            price: None,
            alpha_n: None,
            eps_prime,
            log_threshold: threshold,
            cdf_queries: 0,
        });
    }
    fast_path(item, n, eps_prime)
}

/// The fast path with `eps'` given directly and no threshold check.
pub fn single_price_forced(item: &Item, n: u64, eps_prime: f64) -> Result<IidPrice> {
    if !(eps_prime > 0.0 && eps_prime < 0.5) {
        return Err(Error::Domain(format!("eps' must lie in (0, 1/2), got {eps_prime}")));
    }
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    fast_path(item, n, eps_prime)
}

fn fast_path(item: &Item, n: u64, eps_prime: f64) -> Result<IidPrice> {
    let (alpha, queries) = alpha_n(item, n)?;
    Ok(IidPrice {
        mode: IidMode::FastPath,
        price: Some((1.0 - 2.0 * eps_prime) * alpha),
        alpha_n: Some(alpha),
        eps_prime,
        log_threshold: log_threshold(eps_prime),
        cdf_queries: queries,
    })
}

/// Bisection for `alpha_n = inf{x | F(x) >= 1 - 1/n}` starting from the
/// median `x*`. The upper end starts at `x* ceil(log2 n / log2(1/(1 - F(x*))))`
/// and doubles if that is still short.
pub fn alpha_n(item: &Item, n: u64) -> Result<(f64, usize)> {
    let tail = 1.0 / n as f64;
    let mut queries = 0;
    // `F(x) >= 1 - 1/n`, read off the survival function so that deep tails
    // keep their relative precision.
    let mut reached = |x: f64| {
        queries += 1;
        match item {
            Item::Discrete(_) => item.cdf_f64(x) >= 1.0 - tail,
            Item::Oracle(o) => o.survival_ge(x) <= tail,
        }
    };
    let floor = item.u_min_f64();
    let anchor = match item {
        Item::Oracle(o) => o.sample(0.5),
        Item::Discrete(_) => item.quantile_f64(2.0, SEARCH_PRECISION)?,
    };
    if n == 1 {
        return Ok((floor, 0));
    }
    let (mut lo, mut hi) = if reached(anchor) {
        (floor, anchor)
    } else {
        let per_doubling = (1.0 / item.survival_ge_f64(anchor)).log2();
        let factor = if per_doubling > 0.0 { ((n as f64).log2() / per_doubling).ceil().max(2.0) } else { 2.0 };
        let mut hi = (anchor * factor).max(1e-300);
        let mut steps = 0;
        while !reached(hi) {
            hi *= 2.0;
            steps += 1;
            if steps > 1100 || !hi.is_finite() {
                return Err(Error::Convergence(format!("no upper bracket for alpha_{n}")));
            }
        }
        (anchor, hi)
    };
    for _ in 0..MAX_STEPS {
        if hi - lo <= SEARCH_PRECISION * hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if reached(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, queries))
}

/// `p (1 - Pr[v < p]^n)`: revenue of the price `p` on every one of `n`
/// i.i.d. items.
pub fn uniform_price_revenue(item: &Item, n: u64, p: f64) -> f64 {
    let below = 1.0 - item.survival_ge_f64(p);
    p * -(n as f64 * below.ln()).exp_m1()
}
