use serde::Serialize;

use super::oracle::CdfOracle;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeClass {
    Mhr,
    RegularOnly,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShapeReport {
    pub class: ShapeClass,
    /// Set when the numeric derivatives became unusable somewhere on the grid.
    pub inconclusive: bool,
    pub grid: (f64, f64),
}

const TOLERANCE: f64 = 1e-6;

/// Numerically classifies an oracle as MHR, regular, or neither.
///
/// Hazard rate `f/(1-F)` and virtual value `x - (1-F)/f` are evaluated with
/// central differences of the CDF on a geometric grid spanning
/// `[u_min or anchor/100, alpha_1000]`. Advisory only.
pub fn check_shape(dist: &CdfOracle, grid_size: usize) -> Result<ShapeReport> {
    if grid_size < 3 {
        return Err(Error::Domain("check_shape needs at least 3 grid points".into()));
    }
    let u_min = dist.u_min();
    let lo = if u_min > 0.0 { u_min } else { dist.anchor() / 100.0 };
    let hi = dist.quantile(1000.0, 1e-12)?;
    let ratio = (hi / lo).powf(1.0 / (grid_size - 1) as f64);
    let u_max = dist.u_max();

    let mut inconclusive = false;
    let mut hazards = Vec::with_capacity(grid_size);
    let mut virtuals = Vec::with_capacity(grid_size);
    for k in 0..grid_size {
        let x = lo * ratio.powi(k as i32);
        let room = (x - lo).min(u_max - x);
        let h = (1e-6 * x).min(room / 2.0).max(x * 1e-12);
        let f = if room > 0.0 { (dist.cdf(x + h) - dist.cdf(x - h)) / (2.0 * h) } else { dist.density(x) };
        let survival = dist.survival_ge(x);
        if !(f.is_finite() && f > 0.0 && survival > 0.0) {
            inconclusive = true;
            continue;
        }
        hazards.push(f / survival);
        virtuals.push(x - survival / f);
    }
    let nondecreasing = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0] - TOLERANCE * w[0].abs().max(1.0));
    let class = if nondecreasing(&hazards) {
        ShapeClass::Mhr
    } else if nondecreasing(&virtuals) {
        ShapeClass::RegularOnly
    } else {
        ShapeClass::Neither
    };
    Ok(ShapeReport { class, inconclusive, grid: (lo, hi) })
}
