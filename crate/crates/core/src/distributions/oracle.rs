use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Parametric families available behind a [`CdfOracle`].
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Exponential {
        lambda: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    /// Normal(mu, sigma) conditioned on `[0, mu + 8 sigma]`.
    TruncatedNormal {
        mu: f64,
        sigma: f64,
    },
    /// `F(x) = 1 - (scale/x)^alpha` on `[scale, inf)`.
    PowerTail {
        alpha: f64,
        scale: f64,
    },
}

/// Lower and upper truncation applied on top of a family: values below
/// `low_threshold` are moved to `low_point`, values at or above `high_point`
/// are moved to `high_point`.
#[derive(Clone, Debug, PartialEq)]
pub struct Clamp {
    pub low_threshold: f64,
    pub low_point: f64,
    pub high_point: f64,
}

impl Clamp {
    pub fn apply(&self, v: f64) -> f64 {
        if v < self.low_threshold {
            self.low_point
        } else if v >= self.high_point {
            self.high_point
        } else {
            v
        }
    }
}

/// A continuous distribution accessed through CDF queries.
#[derive(Clone, Debug, PartialEq)]
pub struct CdfOracle {
    family: Family,
    clamp: Option<Clamp>,
}

/// Iteration cap for bracketing and bisection.
const MAX_ITER: usize = 400;

impl CdfOracle {
    pub fn new(family: Family) -> Result<Self> {
        let ok = match &family {
            Family::Exponential { lambda } => lambda.is_finite() && *lambda > 0.0,
            Family::Uniform { a, b } => a.is_finite() && b.is_finite() && *a >= 0.0 && a < b,
            Family::TruncatedNormal { mu, sigma } => {
                mu.is_finite() && sigma.is_finite() && *sigma > 0.0 && mu + 8.0 * sigma > 0.0
            }
            Family::PowerTail { alpha, scale } => {
                alpha.is_finite() && *alpha > 0.0 && scale.is_finite() && *scale > 0.0
            }
        };
        if !ok {
            return Err(Error::Domain(format!("invalid parameters for {family:?}")));
        }
        Ok(Self { family, clamp: None })
    }

    pub fn exponential(lambda: f64) -> Result<Self> {
        Self::new(Family::Exponential { lambda })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::Uniform { a, b })
    }

    pub fn truncated_normal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::TruncatedNormal { mu, sigma })
    }

    pub fn power_tail(alpha: f64) -> Result<Self> {
        Self::new(Family::PowerTail { alpha, scale: 1.0 })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn clamp(&self) -> Option<&Clamp> {
        self.clamp.as_ref()
    }

    /// The same family with its values pushed through `clamp`.
    pub fn clamped(&self, clamp: Clamp) -> Result<Self> {
        if self.clamp.is_some() {
            return Err(Error::Unsupported("an oracle can be truncated only once".into()));
        }
        if !(clamp.low_point <= clamp.low_threshold && clamp.low_threshold <= clamp.high_point) {
            return Err(Error::Domain(format!("inconsistent truncation {clamp:?}")));
        }
        Ok(Self { family: self.family.clone(), clamp: Some(clamp) })
    }

    fn normal_parts(mu: f64, sigma: f64) -> (Normal, f64, f64, f64) {
        let n = Normal::new(mu, sigma).expect("validated");
        let upper = mu + 8.0 * sigma;
        let lo = n.cdf(0.0);
        let z = n.cdf(upper) - lo;
        (n, upper, lo, z)
    }

    fn base_cdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Exponential { lambda } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-lambda * x).exp_m1()
                }
            }
            Family::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Family::TruncatedNormal { mu, sigma } => {
                let (n, upper, lo, z) = Self::normal_parts(mu, sigma);
                if x <= 0.0 {
                    0.0
                } else if x >= upper {
                    1.0
                } else {
                    ((n.cdf(x) - lo) / z).clamp(0.0, 1.0)
                }
            }
            Family::PowerTail { alpha, scale } => {
                if x <= scale {
                    0.0
                } else {
                    -(alpha * (scale / x).ln()).exp_m1()
                }
            }
        }
    }

    fn base_survival(&self, x: f64) -> f64 {
        match self.family {
            Family::Exponential { lambda } if x > 0.0 => (-lambda * x).exp(),
            Family::PowerTail { alpha, scale } if x > scale => (scale / x).powf(alpha),
            _ => 1.0 - self.base_cdf(x),
        }
    }

    fn base_inverse(&self, u: f64) -> f64 {
        match self.family {
            Family::Exponential { lambda } => -(-u).ln_1p() / lambda,
            Family::Uniform { a, b } => a + u * (b - a),
            Family::TruncatedNormal { mu, sigma } => {
                let (n, upper, lo, z) = Self::normal_parts(mu, sigma);
                n.inverse_cdf(lo + u * z).clamp(0.0, upper)
            }
            Family::PowerTail { alpha, scale } => scale * (1.0 - u).powf(-1.0 / alpha),
        }
    }

    /// `E[X 1{X >= x}]` for the untruncated family.
    fn base_tail_contribution(&self, x: f64) -> f64 {
        match self.family {
            Family::Exponential { lambda } => {
                let x = x.max(0.0);
                (x + 1.0 / lambda) * (-lambda * x).exp()
            }
            Family::Uniform { a, b } => {
                let x = x.max(a);
                if x >= b {
                    0.0
                } else {
                    (b * b - x * x) / (2.0 * (b - a))
                }
            }
            Family::TruncatedNormal { mu, sigma } => {
                let (_, upper, _, z) = Self::normal_parts(mu, sigma);
                let x = x.max(0.0);
                if x >= upper {
                    return 0.0;
                }
                let std = Normal::new(0.0, 1.0).expect("standard normal");
                let lo = (x - mu) / sigma;
                let hi = (upper - mu) / sigma;
                (mu * (std.cdf(hi) - std.cdf(lo)) + sigma * (std.pdf(lo) - std.pdf(hi))) / z
            }
            Family::PowerTail { alpha, scale } => {
                if alpha <= 1.0 {
                    return f64::INFINITY;
                }
                let x = x.max(scale);
                alpha * scale.powf(alpha) * x.powf(1.0 - alpha) / (alpha - 1.0)
            }
        }
    }

    fn base_density(&self, x: f64) -> f64 {
        match self.family {
            Family::Exponential { lambda } if x >= 0.0 => lambda * (-lambda * x).exp(),
            Family::Uniform { a, b } if x >= a && x <= b => 1.0 / (b - a),
            Family::TruncatedNormal { mu, sigma } => {
                let (n, upper, _, z) = Self::normal_parts(mu, sigma);
                if (0.0..=upper).contains(&x) {
                    n.pdf(x) / z
                } else {
                    0.0
                }
            }
            Family::PowerTail { alpha, scale } if x >= scale => alpha * scale.powf(alpha) * x.powf(-alpha - 1.0),
            _ => 0.0,
        }
    }

    /// Density of the untruncated family, for shape diagnostics.
    pub fn density(&self, x: f64) -> f64 {
        self.base_density(x)
    }

    /// `Pr[X <= x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.clamp {
            None => self.base_cdf(x),
            Some(c) => {
                if x < c.low_point {
                    0.0
                } else if x >= c.high_point {
                    1.0
                } else if x < c.low_threshold {
                    self.base_cdf(c.low_threshold)
                } else {
                    self.base_cdf(x)
                }
            }
        }
    }

    /// `Pr[X < x]`; differs from [`cdf`](Self::cdf) only at truncation atoms.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match &self.clamp {
            None => self.base_cdf(x),
            Some(c) => {
                if x <= c.low_point {
                    0.0
                } else if x > c.high_point {
                    1.0
                } else if x <= c.low_threshold {
                    self.base_cdf(c.low_threshold)
                } else {
                    self.base_cdf(x)
                }
            }
        }
    }

    /// `Pr[X >= x]`, accurate in the far tail.
    pub fn survival_ge(&self, x: f64) -> f64 {
        match &self.clamp {
            None => self.base_survival(x),
            Some(_) => 1.0 - self.cdf_left(x),
        }
    }

    pub fn u_min(&self) -> f64 {
        let base = match self.family {
            Family::Exponential { .. } | Family::TruncatedNormal { .. } => 0.0,
            Family::Uniform { a, .. } => a,
            Family::PowerTail { scale, .. } => scale,
        };
        match &self.clamp {
            Some(c) if base < c.low_threshold => c.low_point,
            Some(c) => base.min(c.high_point),
            None => base,
        }
    }

    pub fn u_max(&self) -> f64 {
        let base = match self.family {
            Family::Exponential { .. } | Family::PowerTail { .. } => f64::INFINITY,
            Family::Uniform { b, .. } => b,
            Family::TruncatedNormal { mu, sigma } => mu + 8.0 * sigma,
        };
        match &self.clamp {
            Some(c) => c.apply(base).min(c.high_point),
            None => base,
        }
    }

    /// A point `x*` with `F(x*)` in [`ANCHOR_C1`, `ANCHOR_C2`]: the median of
    /// the family.
    pub fn anchor(&self) -> f64 {
        self.base_inverse(0.5)
    }

    /// Inverse-CDF sampling from a uniform `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> f64 {
        let v = self.base_inverse(u);
        match &self.clamp {
            Some(c) => c.apply(v),
            None => v,
        }
    }

    /// `alpha_p = inf{x | F(x) >= 1 - 1/p}`, located by bisection from the
    /// anchor until the CDF is within `precision` of the target.
    pub fn quantile(&self, p: f64, precision: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::Domain(format!("quantile index p = {p} must be >= 1")));
        }
        if precision.is_nan() || precision <= 0.0 {
            return Err(Error::Domain("quantile precision must be positive".into()));
        }
        let base = if p == 1.0 { self.base_inverse(0.0) } else { self.bisect_base(1.0 - 1.0 / p, precision)? };
        Ok(match &self.clamp {
            Some(c) => c.apply(base),
            None => base,
        })
    }

    fn bisect_base(&self, target: f64, precision: f64) -> Result<f64> {
        let anchor = self.anchor();
        let floor = self.base_inverse(0.0);
        let (mut lo, mut hi) = if self.base_cdf(anchor) >= target {
            let mut lo = anchor;
            let mut iter = 0;
            while lo > floor && self.base_cdf(lo) >= target {
                lo = floor + (lo - floor) / 2.0;
                iter += 1;
                if iter > MAX_ITER || lo - floor <= f64::EPSILON * floor.abs().max(1.0) {
                    lo = floor;
                    break;
                }
            }
            (lo, anchor)
        } else {
            let mut hi = anchor.max(f64::MIN_POSITIVE);
            let mut iter = 0;
            while self.base_cdf(hi) < target {
                hi *= 2.0;
                iter += 1;
                if iter > MAX_ITER || !hi.is_finite() {
                    return Err(Error::Convergence(format!(
                        "no bracket for CDF level {target} after {iter} doublings"
                    )));
                }
            }
            (anchor, hi)
        };
        for _ in 0..MAX_ITER {
            let mid = lo + (hi - lo) / 2.0;
            let f = self.base_cdf(mid);
            if (f - target).abs() <= precision {
                return Ok(mid);
            }
            if f < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.abs() {
                return Ok(hi);
            }
        }
        Err(Error::Convergence(format!("bisection for CDF level {target} did not converge")))
    }

    /// `E[X 1{X >= x}]`.
    pub fn tail_contribution(&self, x: f64) -> f64 {
        let Some(c) = &self.clamp else {
            return self.base_tail_contribution(x);
        };
        let mut total = 0.0;
        if c.low_point >= x {
            total += c.low_point * self.base_cdf(c.low_threshold);
        }
        let from = x.max(c.low_threshold);
        if from < c.high_point {
            total += self.base_tail_contribution(from) - self.base_tail_contribution(c.high_point);
        }
        if c.high_point >= x {
            total += c.high_point * self.base_survival(c.high_point);
        }
        total
    }

    pub fn mean(&self) -> f64 {
        self.tail_contribution(f64::NEG_INFINITY)
    }

    /// `R(q) = q F^{-1}(1 - q)` for `q` in `(0, 1]`.
    pub fn revenue_curve(&self, q: f64, precision: f64) -> Result<f64> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::Domain(format!("revenue curve needs q in (0,1], got {q}")));
        }
        Ok(q * self.quantile(1.0 / q, precision)?)
    }
}

/// CDF bounds declared for [`CdfOracle::anchor`].
pub const ANCHOR_C1: f64 = 0.25;
pub const ANCHOR_C2: f64 = 0.75;

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    #[test]
    fn exponential_median_and_quantiles() {
        let e = CdfOracle::exponential(1.0).unwrap();
        assert!((e.quantile(2.0, 1e-12).unwrap() - 2f64.ln()).abs() < 1e-9);
        assert_eq!(e.quantile(1.0, 1e-9).unwrap(), 0.0);
        assert!(e.quantile(0.5, 1e-9).is_err());
        for p in [4.0, 64.0, 1e6] {
            assert!((e.quantile(p, 1e-14).unwrap() - f64::ln(p)).abs() < 1e-6);
        }
    }

    #[test]
    fn exponential_tail_contribution() {
        let e = CdfOracle::exponential(1.0).unwrap();
        assert!((e.tail_contribution(0.0) - 1.0).abs() < TOL);
        let x = 2f64.ln();
        assert!((e.tail_contribution(x) - (1.0 + x) / 2.0).abs() < TOL);
    }

    #[test]
    fn revenue_curve_points() {
        let u = CdfOracle::uniform(0.0, 1.0).unwrap();
        assert!((u.revenue_curve(0.5, 1e-12).unwrap() - 0.25).abs() < 1e-9);
        assert_eq!(u.revenue_curve(1.0, 1e-9).unwrap(), 0.0);
        let e = CdfOracle::exponential(1.0).unwrap();
        let q = (-1f64).exp();
        assert!((e.revenue_curve(q, 1e-14).unwrap() - q).abs() < 1e-9);
        assert!(u.revenue_curve(0.0, 1e-9).is_err());
        assert!(u.revenue_curve(1.5, 1e-9).is_err());
    }

    #[test]
    fn power_tail_closed_forms() {
        let p = CdfOracle::power_tail(2.0).unwrap();
        assert!((p.cdf(2f64.sqrt()) - 0.5).abs() < 1e-12);
        assert!((p.anchor() - 2f64.sqrt()).abs() < 1e-12);
        assert!((p.tail_contribution(1.0) - 2.0).abs() < TOL);
        assert!((p.survival_ge(8.0 * 2f64.sqrt()) - 1.0 / 128.0).abs() < 1e-15);
    }

    #[test]
    fn truncated_normal_is_normalised() {
        let t = CdfOracle::truncated_normal(2.0, 1.0).unwrap();
        assert_eq!(t.cdf(0.0), 0.0);
        assert_eq!(t.cdf(10.0), 1.0);
        let median = t.anchor();
        assert!((t.cdf(median) - 0.5).abs() < 1e-9);
        let total: f64 = t.tail_contribution(0.0);
        let mut numeric = 0.0;
        let h = 1e-4;
        let mut x = h / 2.0;
        while x < 10.0 {
            numeric += x * t.density(x) * h;
            x += h;
        }
        assert!((total - numeric).abs() < 1e-6);
    }

    #[test]
    fn clamp_moves_mass_to_endpoints() {
        let e = CdfOracle::exponential(1.0).unwrap();
        let c = e.clamped(Clamp { low_threshold: 0.5, low_point: 0.25, high_point: 3.0 }).unwrap();
        let low_mass = e.cdf(0.5);
        assert_eq!(c.cdf(0.2), 0.0);
        assert!((c.cdf(0.25) - low_mass).abs() < 1e-15);
        assert!((c.cdf(0.4) - low_mass).abs() < 1e-15);
        assert_eq!(c.cdf_left(0.25), 0.0);
        assert_eq!(c.cdf(3.0), 1.0);
        assert!((c.cdf_left(3.0) - e.cdf(3.0)).abs() < 1e-15);
        assert_eq!(c.u_min(), 0.25);
        assert_eq!(c.u_max(), 3.0);
        let expected = 0.25 * low_mass + (e.tail_contribution(0.5) - e.tail_contribution(3.0)) + 3.0 * (-3f64).exp();
        assert!((c.mean() - expected).abs() < 1e-12);
        assert_eq!(c.sample(0.01), 0.25);
        assert_eq!(c.sample(0.999), 3.0);
        assert!(c.clamped(Clamp { low_threshold: 1.0, low_point: 0.5, high_point: 2.0 }).is_err());
    }

    #[test]
    fn sampling_inverts_the_cdf() {
        for o in [
            CdfOracle::exponential(2.0).unwrap(),
            CdfOracle::uniform(1.0, 3.0).unwrap(),
            CdfOracle::truncated_normal(1.0, 2.0).unwrap(),
            CdfOracle::power_tail(3.0).unwrap(),
        ] {
            for u in [0.1, 0.5, 0.9] {
                assert!((o.cdf(o.sample(u)) - u).abs() < 1e-9, "{o:?} at {u}");
            }
        }
    }

    #[test]
    fn anchor_lies_within_declared_constants() {
        for o in [
            CdfOracle::exponential(0.5).unwrap(),
            CdfOracle::uniform(0.0, 3.0).unwrap(),
            CdfOracle::truncated_normal(-1.0, 1.0).unwrap(),
            CdfOracle::power_tail(2.0).unwrap(),
        ] {
            let f = o.cdf(o.anchor());
            assert!((ANCHOR_C1..=ANCHOR_C2).contains(&f));
        }
    }
}
