use num_traits::{One, Signed, Zero};

use crate::error::{domain, Error, Result};
use crate::rational::{self, Rational};

/// A finite-support value distribution with exact masses.
///
/// Support points are strictly increasing and nonnegative; masses are
/// nonnegative and sum to exactly one. Zero-mass points are allowed so that
/// several items can share one support list.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DiscreteDistribution {
    support: Vec<Rational>,
    masses: Vec<Rational>,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<Rational>, masses: Vec<Rational>) -> Result<Self> {
        if support.is_empty() {
            return domain("empty support");
        }
        if support.len() != masses.len() {
            return domain(format!("support has {} points but {} masses were given", support.len(), masses.len()));
        }
        if support[0].is_negative() {
            return domain("support values must be nonnegative");
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return domain("support must be strictly increasing");
        }
        if masses.iter().any(|m| m.is_negative()) {
            return domain("masses must be nonnegative");
        }
        let total: Rational = masses.iter().sum();
        if !total.is_one() {
            return domain(format!("masses sum to {total}, not 1"));
        }
        Ok(Self { support, masses })
    }

    /// Builds a distribution from unsorted `(value, mass)` pairs, merging
    /// repeated values.
    pub fn from_points(points: impl IntoIterator<Item = (Rational, Rational)>) -> Result<Self> {
        let mut points: Vec<_> = points.into_iter().collect();
        points.sort_by(|a, b| a.0.cmp(&b.0));
        let mut support: Vec<Rational> = Vec::with_capacity(points.len());
        let mut masses: Vec<Rational> = Vec::with_capacity(points.len());
        for (v, m) in points {
            match support.last() {
                Some(last) if *last == v => *masses.last_mut().unwrap() += m,
                _ => {
                    support.push(v);
                    masses.push(m);
                }
            }
        }
        Self::new(support, masses)
    }

    pub fn point_mass(value: Rational) -> Result<Self> {
        Self::new(vec![value], vec![Rational::one()])
    }

    /// Equal mass on each of the given values.
    pub fn uniform_over(values: Vec<Rational>) -> Result<Self> {
        let k = values.len() as i64;
        Self::from_points(values.into_iter().map(|v| (v, rational::ratio(1, k))))
    }

    pub fn support(&self) -> &[Rational] {
        &self.support
    }

    pub fn masses(&self) -> &[Rational] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Rational, &Rational)> {
        self.support.iter().zip(self.masses.iter())
    }

    /// Points carrying positive mass.
    pub fn atoms(&self) -> impl Iterator<Item = (&Rational, &Rational)> {
        self.iter().filter(|(_, m)| m.is_positive())
    }

    /// `sup{x | F(x) = 0}`: the smallest point with positive mass.
    pub fn u_min(&self) -> &Rational {
        self.atoms().next().map(|(v, _)| v).expect("masses sum to one")
    }

    /// `inf{x | F(x) = 1}`: the largest point with positive mass.
    pub fn u_max(&self) -> &Rational {
        self.atoms().last().map(|(v, _)| v).expect("masses sum to one")
    }

    /// Right-continuous CDF, `Pr[X <= x]`.
    pub fn cdf(&self, x: &Rational) -> Rational {
        self.iter().take_while(|(v, _)| *v <= x).map(|(_, m)| m).sum()
    }

    /// `Pr[X >= x]`.
    pub fn survival_ge(&self, x: &Rational) -> Rational {
        self.iter().filter(|(v, _)| *v >= x).map(|(_, m)| m).sum()
    }

    /// `Pr[X = x]`.
    pub fn mass_at(&self, x: &Rational) -> Rational {
        match self.support.binary_search(x) {
            Ok(i) => self.masses[i].clone(),
            Err(_) => Rational::zero(),
        }
    }

    pub fn mean(&self) -> Rational {
        self.iter().map(|(v, m)| v * m).sum()
    }

    /// `alpha_p = inf{x | F(x) >= 1 - 1/p}` with `alpha_1 = u_min`.
    pub fn quantile(&self, p: &Rational) -> Result<Rational> {
        if p < &Rational::one() {
            return Err(Error::Domain(format!("quantile index p = {p} must be >= 1")));
        }
        if p.is_one() {
            return Ok(self.u_min().clone());
        }
        let target = Rational::one() - p.recip();
        let mut cumulative = Rational::zero();
        for (v, m) in self.atoms() {
            cumulative += m;
            if cumulative >= target {
                return Ok(v.clone());
            }
        }
        Ok(self.u_max().clone())
    }

    /// `E[X * 1{X >= x}]`.
    pub fn tail_contribution(&self, x: &Rational) -> Rational {
        self.iter().filter(|(v, _)| *v >= x).map(|(v, m)| v * m).sum()
    }

    /// Pushes every support point through `map`, merging collisions.
    pub fn map_values(&self, map: impl Fn(&Rational) -> Rational) -> Result<Self> {
        Self::from_points(self.iter().map(|(v, m)| (map(v), m.clone())))
    }

    /// Re-expresses the distribution on a superset of its support.
    pub fn on_support(&self, grid: &[Rational]) -> Result<Self> {
        let mut masses = vec![Rational::zero(); grid.len()];
        for (v, m) in self.iter() {
            match grid.binary_search(v) {
                Ok(i) => masses[i] += m,
                Err(_) if m.is_zero() => {}
                Err(_) => return domain(format!("support point {v} is not on the grid")),
            }
        }
        Self::new(grid.to_vec(), masses)
    }

    /// Index of the support point that `u` in `[0,1)` selects by inversion.
    pub fn sample_index(&self, u: f64) -> usize {
        let mut cumulative = 0.0;
        let mut last = 0;
        for (i, m) in self.masses.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            cumulative += rational::to_f64(m);
            last = i;
            if u < cumulative {
                return i;
            }
        }
        last
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn two_point() -> DiscreteDistribution {
        DiscreteDistribution::new(vec![int(1), int(5)], vec![ratio(1, 2), ratio(1, 2)]).unwrap()
    }

    #[test]
    fn rejects_bad_masses_and_supports() {
        assert!(DiscreteDistribution::new(vec![int(1), int(5)], vec![ratio(1, 2), ratio(1, 3)]).is_err());
        assert!(DiscreteDistribution::new(vec![int(5), int(1)], vec![ratio(1, 2), ratio(1, 2)]).is_err());
        assert!(DiscreteDistribution::new(vec![int(-1)], vec![int(1)]).is_err());
        assert!(DiscreteDistribution::new(vec![], vec![]).is_err());
    }

    #[test]
    fn quantile_scans_cdf_steps() {
        let d = two_point();
        assert_eq!(d.quantile(&int(2)).unwrap(), int(1));
        assert_eq!(d.quantile(&int(1)).unwrap(), int(1));
        assert_eq!(d.quantile(&int(3)).unwrap(), int(5));
        assert!(d.quantile(&ratio(1, 2)).is_err());
    }

    #[test]
    fn tail_contribution_of_two_point() {
        let d = two_point();
        assert_eq!(d.tail_contribution(&int(2)), ratio(5, 2));
        assert_eq!(d.tail_contribution(&int(0)), d.mean());
        assert_eq!(d.tail_contribution(&int(6)), int(0));
    }

    #[test]
    fn u_min_skips_zero_mass_points() {
        let d =
            DiscreteDistribution::new(vec![int(0), int(2), int(3)], vec![int(0), ratio(1, 4), ratio(3, 4)]).unwrap();
        assert_eq!(d.u_min(), &int(2));
        assert_eq!(d.quantile(&int(1)).unwrap(), int(2));
    }

    #[test]
    fn from_points_merges_duplicates() {
        let d = DiscreteDistribution::from_points(vec![
            (int(2), ratio(1, 4)),
            (int(1), ratio(1, 4)),
            (int(2), ratio(1, 2)),
        ])
        .unwrap();
        assert_eq!(d.support(), &[int(1), int(2)]);
        assert_eq!(d.masses(), &[ratio(1, 4), ratio(3, 4)]);
    }

    #[test]
    fn sampling_by_inversion() {
        let d = two_point();
        assert_eq!(d.sample_index(0.1), 0);
        assert_eq!(d.sample_index(0.5), 1);
        assert_eq!(d.sample_index(0.999), 1);
    }
}
