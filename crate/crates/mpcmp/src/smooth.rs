//! Discrete kernel density estimation with the mean-parametrized CMP as
//! the kernel.
//!
//! The kernel at target `x` with bandwidth `h` is the mean-parametrized CMP
//! pmf with mean `x` and dispersion `nu = 1/h`. The mean constraint pins
//! the kernel mean to `x` exactly, and the variance collapses as `h -> 0`,
//! which is what makes this a second-order discrete associated kernel: the
//! smoother concentrates on the data as the bandwidth shrinks.

use crate::dist::MeanCmp;
use crate::fit::CountData;
use crate::solver::MeanParams;
use crate::{Error, Result};

/// Smoothing bandwidth; the kernel dispersion is `nu = 1/h`, so `h = 1`
/// is the Poisson kernel and `h -> 0` is the point-mass limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth {
    h: f64,
}

impl Bandwidth {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter {
                name: "h",
                value: h,
                reason: "bandwidth must be positive and finite",
            });
        }
        Ok(Bandwidth { h })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// The derived kernel dispersion, exactly `1/h`.
    pub fn nu(&self) -> f64 {
        1.0 / self.h
    }
}

/// A smoothed pmf estimate on the support `0..=y_max`.
#[derive(Debug, Clone)]
pub struct SmoothedPmf {
    estimates: Vec<f64>,
    renormalized: bool,
    raw_total_mass: f64,
}

impl SmoothedPmf {
    /// Estimates for `x = 0..=y_max`.
    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn support_max(&self) -> u64 {
        self.estimates.len() as u64 - 1
    }

    pub fn renormalized(&self) -> bool {
        self.renormalized
    }

    /// Total mass of the raw estimator over the support; not 1 in general
    /// because the kernel mass seen from a fixed observation need not sum
    /// to 1 across targets.
    pub fn raw_total_mass(&self) -> f64 {
        self.raw_total_mass
    }
}

/// Kernel weight: the pmf at `y` of the mean-parametrized CMP with mean `x`
/// and dispersion `1/h`. Tends to the indicator of `y = x` as `h -> 0`.
pub fn kernel_weight(x: u64, y: u64, bw: &Bandwidth) -> Result<f64> {
    let dist = MeanCmp::new(MeanParams::new(x as f64, bw.nu())?)?;
    Ok(dist.pmf(y))
}

/// Kernel smoother: `estimate(x) = (1/n) * sum_i K_{x,h}(y_i)` for
/// `x = 0..=y_max`, optionally renormalized to unit mass over the support.
pub fn smooth(data: &CountData, bw: &Bandwidth, y_max: u64, renormalize: bool) -> Result<SmoothedPmf> {
    if y_max < data.max() {
        return Err(Error::InvalidParameter {
            name: "y_max",
            value: y_max as f64,
            reason: "support must cover the largest observation",
        });
    }
    let n = data.len() as f64;
    let counts = data.counts();
    let mut estimates = Vec::with_capacity(y_max as usize + 1);
    for x in 0..=y_max {
        let kernel = MeanCmp::new(MeanParams::new(x as f64, bw.nu())?)?;
        let mut acc = 0.0;
        for (&value, &count) in &counts {
            acc += count as f64 * kernel.pmf(value);
        }
        estimates.push(acc / n);
    }
    let raw_total_mass: f64 = estimates.iter().sum();
    if renormalize && raw_total_mass > 0.0 {
        for e in &mut estimates {
            *e /= raw_total_mass;
        }
    }
    Ok(SmoothedPmf {
        estimates,
        renormalized: renormalize,
        raw_total_mass,
    })
}

/// Second-order kernel conditions at target `x`: the gap `|E - x|` between
/// the kernel mean and its target, and the kernel variance.
///
/// The mean constraint makes the gap zero up to solver tolerance at every
/// bandwidth; the variance shrinks to zero as `h -> 0`.
pub fn second_order_check(x: u64, bw: &Bandwidth) -> Result<(f64, f64)> {
    let dist = MeanCmp::new(MeanParams::new(x as f64, bw.nu())?)?;
    let (mean, variance) = dist.mean_variance();
    Ok(((mean - x as f64).abs(), variance))
}

/// Least-squares cross-validation bandwidth selection over a grid.
///
/// Minimizes `sum_x fhat(x)^2 - (2/n) sum_i fhat_{-i}(y_i)` over the raw
/// (unrenormalized) estimator; ties break toward the smaller bandwidth.
pub fn cv_bandwidth(data: &CountData, h_grid: &[f64], y_max: u64) -> Result<Bandwidth> {
    if h_grid.is_empty() {
        return Err(Error::EmptyInput("bandwidth grid"));
    }
    let mut grid: Vec<f64> = h_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite bandwidths"));
    if grid.len() == 1 {
        return Bandwidth::new(grid[0]);
    }
    if data.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "data",
            value: data.len() as f64,
            reason: "leave-one-out cross-validation needs at least two observations",
        });
    }
    if y_max < data.max() {
        return Err(Error::InvalidParameter {
            name: "y_max",
            value: y_max as f64,
            reason: "support must cover the largest observation",
        });
    }

    let n = data.len() as f64;
    let counts = data.counts();
    let mut best: Option<(f64, f64)> = None; // (h, score)
    for &h in &grid {
        let bw = Bandwidth::new(h)?;
        // kernel weights K_x(v) for every target x and observed value v
        let mut self_weight = std::collections::BTreeMap::new();
        let mut fhat = vec![0.0f64; y_max as usize + 1];
        for x in 0..=y_max {
            let kernel = MeanCmp::new(MeanParams::new(x as f64, bw.nu())?)?;
            let mut acc = 0.0;
            for (&value, &count) in &counts {
                let w = kernel.pmf(value);
                acc += count as f64 * w;
                if value == x {
                    self_weight.insert(x, w);
                }
            }
            fhat[x as usize] = acc / n;
        }
        let sum_sq: f64 = fhat.iter().map(|f| f * f).sum();
        let mut loo = 0.0;
        for (&value, &count) in &counts {
            let f_at = fhat[value as usize];
            let k_self = self_weight[&value];
            loo += count as f64 * (n * f_at - k_self) / (n - 1.0);
        }
        let score = sum_sq - 2.0 / n * loo;
        match best {
            Some((_, best_score)) if score >= best_score => {}
            _ => best = Some((h, score)),
        }
    }
    Bandwidth::new(best.expect("non-empty grid").0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_pmf(lambda: f64, y: u64) -> f64 {
        let mut p = (-lambda).exp();
        for k in 1..=y {
            p *= lambda / k as f64;
        }
        p
    }

    #[test]
    fn bandwidth_validation_and_mapping() {
        assert!(Bandwidth::new(0.0).is_err());
        assert!(Bandwidth::new(-1.0).is_err());
        assert!(Bandwidth::new(f64::NAN).is_err());
        let bw = Bandwidth::new(0.25).unwrap();
        assert_eq!(bw.nu(), 4.0);
    }

    #[test]
    fn kernel_weight_limits() {
        // near point mass at the target for tiny h
        let bw = Bandwidth::new(1e-4).unwrap();
        assert!(kernel_weight(3, 3, &bw).unwrap() >= 1.0 - 1e-6);
        // Poisson kernel at h = 1
        let bw = Bandwidth::new(1.0).unwrap();
        for y in 0..8 {
            let w = kernel_weight(2, y, &bw).unwrap();
            assert!((w - poisson_pmf(2.0, y)).abs() < 1e-10, "y = {y}");
        }
        // zero target is degenerate at zero
        for h in [0.01, 1.0, 5.0] {
            let bw = Bandwidth::new(h).unwrap();
            assert_eq!(kernel_weight(0, 0, &bw).unwrap(), 1.0);
        }
    }

    #[test]
    fn tiny_bandwidth_recovers_the_empirical_pmf() {
        let data = CountData::new(vec![0, 0, 1, 3]).unwrap();
        let bw = Bandwidth::new(1e-4).unwrap();
        let sm = smooth(&data, &bw, 3, false).unwrap();
        let expected = [0.5, 0.25, 0.0, 0.25];
        for (x, &e) in expected.iter().enumerate() {
            assert!(
                (sm.estimates()[x] - e).abs() < 1e-6,
                "x = {x}: {} vs {e}",
                sm.estimates()[x]
            );
        }
        assert!((sm.raw_total_mass() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_observation_matches_the_kernel_itself() {
        let data = CountData::new(vec![2]).unwrap();
        let bw = Bandwidth::new(1.0).unwrap();
        let sm = smooth(&data, &bw, 10, false).unwrap();
        for x in 0..=10u64 {
            let expect = poisson_pmf(x as f64, 2);
            assert!(
                (sm.estimates()[x as usize] - expect).abs() < 1e-10,
                "x = {x}"
            );
        }
    }

    #[test]
    fn renormalization_yields_unit_mass() {
        let data = CountData::new(vec![1, 2, 2, 5]).unwrap();
        let bw = Bandwidth::new(0.5).unwrap();
        let sm = smooth(&data, &bw, 12, true).unwrap();
        assert!(sm.renormalized());
        let total: f64 = sm.estimates().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(sm.estimates().iter().all(|&e| e >= 0.0));
        // raw total mass is preserved for inspection
        assert!(sm.raw_total_mass() > 0.0);
    }

    #[test]
    fn support_must_cover_the_data() {
        let data = CountData::new(vec![1, 7]).unwrap();
        let bw = Bandwidth::new(0.5).unwrap();
        assert!(smooth(&data, &bw, 6, false).is_err());
    }

    #[test]
    fn second_order_conditions() {
        // the mean constraint pins E to x at any bandwidth
        let (gap, _) = second_order_check(3, &Bandwidth::new(0.1).unwrap()).unwrap();
        assert!(gap <= 1e-8);
        // Poisson variance at h = 1
        let (_, var) = second_order_check(3, &Bandwidth::new(1.0).unwrap()).unwrap();
        assert!((var - 3.0).abs() < 1e-8);
        // variance collapse for small h
        let (_, var) = second_order_check(3, &Bandwidth::new(1e-3).unwrap()).unwrap();
        assert!(var <= 1e-2);
    }

    #[test]
    fn cv_singleton_grid_short_circuits() {
        let data = CountData::new(vec![4]).unwrap();
        let bw = cv_bandwidth(&data, &[0.5], 10).unwrap();
        assert_eq!(bw.h(), 0.5);
    }

    #[test]
    fn cv_needs_two_observations_for_loo() {
        let data = CountData::new(vec![4]).unwrap();
        assert!(cv_bandwidth(&data, &[0.5, 1.0], 10).is_err());
        assert!(cv_bandwidth(&data, &[], 10).is_err());
    }

    #[test]
    fn cv_prefers_small_bandwidth_for_spiky_data(){
        // all mass on one value: the empirical pmf is the target, so the
        // smallest bandwidth wins
        let data = CountData::new(vec![5, 5, 5, 5, 5, 5]).unwrap();
        let bw = cv_bandwidth(&data, &[0.05, 1.0, 2.0], 15).unwrap();
        assert_eq!(bw.h(), 0.05);
    }
}
