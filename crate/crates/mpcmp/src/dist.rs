//! Mean-parametrized CMP distribution keyed by `(mu, nu)`.
//!
//! [`MeanCmp`] solves the mean constraint once, tabulates the pmf over the
//! certified window, and answers pmf/cdf/quantile/sampling queries from the
//! table. As `nu` grows the distribution converges to [`LimitPmf`]: a unit
//! point mass at integer `mu`, or a shifted Bernoulli on the two integers
//! around a non-integer `mu` with masses given by its fractional parts.

use crate::cmp::{CmpParams, PmfTable};
use crate::rng::SplitMix64;
use crate::solver::{solve_eta_with, MeanParams};
use crate::{Error, Result, DEFAULT_SOLVE_TOL, DEFAULT_TAIL_TOL};

/// The `nu -> infinity` limit of the mean-parametrized CMP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitPmf {
    /// `floor(mu)`.
    pub lower_value: u64,
    /// `ceil(mu)`.
    pub upper_value: u64,
    /// Mass at `floor(mu)`: `1 - delta` with `delta = mu - floor(mu)`.
    pub lower_prob: f64,
    /// Mass at `ceil(mu)`: `delta`.
    pub upper_prob: f64,
    /// True iff `mu` is an integer (unit point mass).
    pub degenerate: bool,
}

impl LimitPmf {
    /// Limit mass at an arbitrary point.
    pub fn mass(&self, y: u64) -> f64 {
        if y == self.lower_value {
            self.lower_prob
        } else if y == self.upper_value {
            self.upper_prob
        } else {
            0.0
        }
    }
}

/// Limiting distribution for mean `mu` as the dispersion grows without bound.
pub fn limit_pmf(mu: f64) -> Result<LimitPmf> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: mu,
            reason: "limit needs a finite non-negative mean",
        });
    }
    let floor = mu.floor();
    let delta = mu - floor;
    if delta == 0.0 {
        Ok(LimitPmf {
            lower_value: floor as u64,
            upper_value: floor as u64,
            lower_prob: 1.0,
            upper_prob: 0.0,
            degenerate: true,
        })
    } else {
        Ok(LimitPmf {
            lower_value: floor as u64,
            upper_value: floor as u64 + 1,
            lower_prob: 1.0 - delta,
            upper_prob: delta,
            degenerate: false,
        })
    }
}

/// A solved, tabulated mean-parametrized CMP distribution.
///
/// Immutable after construction and freely shareable across threads.
#[derive(Debug, Clone)]
pub struct MeanCmp {
    mp: MeanParams,
    params: CmpParams,
    table: PmfTable,
    /// Cumulative probabilities over the window, for cdf/quantile/sampling.
    cum: Vec<f64>,
}

impl MeanCmp {
    pub fn new(mp: MeanParams) -> Result<Self> {
        Self::with_tolerances(mp, DEFAULT_SOLVE_TOL, DEFAULT_TAIL_TOL)
    }

    pub fn with_tolerances(mp: MeanParams, tol: f64, tail_tol: f64) -> Result<Self> {
        let eta = solve_eta_with(&mp, tol, tail_tol)?;
        let params = CmpParams::new(eta, mp.nu())?;
        let table = PmfTable::new(&params, tail_tol)?;
        let mut cum = Vec::with_capacity(table.log_probs().len());
        let mut acc = 0.0;
        for lp in table.log_probs() {
            acc += lp.exp();
            // float accumulation may tip a hair past 1; the cdf may not
            cum.push(acc.min(1.0));
        }
        Ok(MeanCmp {
            mp,
            params,
            table,
            cum,
        })
    }

    pub fn mean_params(&self) -> &MeanParams {
        &self.mp
    }

    pub fn params(&self) -> &CmpParams {
        &self.params
    }

    pub fn table(&self) -> &PmfTable {
        &self.table
    }

    pub fn pmf(&self, y: u64) -> f64 {
        self.table.prob(y)
    }

    pub fn log_pmf(&self, y: u64) -> f64 {
        self.table.log_prob(y)
    }

    /// `P(Y <= y)`; reaches 1 (up to float accumulation) at the window end.
    pub fn cdf(&self, y: u64) -> f64 {
        let idx = (y as usize).min(self.cum.len() - 1);
        self.cum[idx]
    }

    /// Smallest `y` with `cdf(y) >= p`. `p = 0` returns the smallest point
    /// with positive stored mass; `p = 1` returns the truncation point when
    /// float accumulation leaves the final cdf a hair under 1.
    pub fn quantile(&self, p: f64) -> Result<u64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                reason: "quantile needs p in [0, 1]",
            });
        }
        if p == 0.0 {
            let first = self
                .table
                .log_probs()
                .iter()
                .position(|lp| lp.exp() > 0.0)
                .unwrap_or(0);
            return Ok(first as u64);
        }
        let idx = self.cum.partition_point(|&c| c < p);
        Ok(idx.min(self.cum.len() - 1) as u64)
    }

    /// Mean and variance of the tabulated distribution.
    pub fn mean_variance(&self) -> (f64, f64) {
        self.table.moments()
    }

    /// Inverse-cdf draw from a uniform `u` in `[0, 1)`.
    fn draw_from_uniform(&self, u: f64) -> u64 {
        let idx = self.cum.partition_point(|&c| c <= u);
        idx.min(self.cum.len() - 1) as u64
    }

    /// Stream of draws; see [`SampleStream`] for the generator contract.
    pub fn sampler(&self, seed: u64) -> SampleStream<'_> {
        SampleStream {
            dist: self,
            rng: SplitMix64::new(seed),
        }
    }

    /// `n` inverse-cdf draws, deterministic in `(mu, nu, seed)`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<u64> {
        self.sampler(seed).take(n).collect()
    }

    /// Total-variation distance to the limiting distribution for this mean:
    /// `0.5 * sum_y |pmf(y) - limit(y)|`.
    pub fn tv_distance_to_limit(&self) -> f64 {
        let limit = limit_pmf(self.mp.mu()).expect("mean already validated");
        let mut acc = 0.0;
        for y in 0..self.cum.len() as u64 {
            acc += (self.pmf(y) - limit.mass(y)).abs();
        }
        // limit points beyond the window carry their full mass
        if limit.upper_value >= self.cum.len() as u64 {
            acc += limit.upper_prob;
            if limit.lower_value >= self.cum.len() as u64 {
                acc += limit.lower_prob;
            }
        }
        0.5 * acc
    }
}

/// Convergence diagnostic: TV distance between the distribution at
/// `(mu, nu)` and its `nu -> infinity` limit.
pub fn convergence_diagnostic(mu: f64, nu: f64) -> Result<f64> {
    let dist = MeanCmp::new(MeanParams::new(mu, nu)?)?;
    Ok(dist.tv_distance_to_limit())
}

/// Iterator of inverse-cdf draws over a cached table.
///
/// Holds mutable SplitMix64 state, so confine one stream to one execution
/// context; parallel generation should create independent streams with
/// distinct seeds.
pub struct SampleStream<'a> {
    dist: &'a MeanCmp,
    rng: SplitMix64,
}

impl Iterator for SampleStream<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let u = self.rng.next_f64();
        Some(self.dist.draw_from_uniform(u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(mu: f64, nu: f64) -> MeanCmp {
        MeanCmp::new(MeanParams::new(mu, nu).unwrap()).unwrap()
    }

    #[test]
    fn limit_pmf_cases() {
        let l = limit_pmf(4.321).unwrap();
        assert!(!l.degenerate);
        assert_eq!((l.lower_value, l.upper_value), (4, 5));
        assert!((l.lower_prob - 0.679).abs() < 1e-12);
        assert!((l.upper_prob - 0.321).abs() < 1e-12);
        assert!((l.lower_prob + l.upper_prob - 1.0).abs() < 1e-15);

        let l = limit_pmf(4.0).unwrap();
        assert!(l.degenerate);
        assert_eq!((l.lower_value, l.upper_value), (4, 4));
        assert_eq!((l.lower_prob, l.upper_prob), (1.0, 0.0));

        let l = limit_pmf(0.0).unwrap();
        assert!(l.degenerate);
        assert_eq!(l.lower_value, 0);

        assert!(limit_pmf(-1.0).is_err());
        assert!(limit_pmf(f64::INFINITY).is_err());
    }

    #[test]
    fn poisson_embedding() {
        let d = dist(2.0, 1.0);
        let expected = (-2.0f64).exp() * 8.0 / 6.0;
        assert!((d.pmf(3) - expected).abs() < 1e-12);
        let cdf1 = (-2.0f64).exp() * 3.0;
        assert!((d.cdf(1) - cdf1).abs() < 1e-12);
    }

    #[test]
    fn zero_mean_is_point_mass_at_origin() {
        let d = dist(0.0, 7.0);
        assert_eq!(d.pmf(0), 1.0);
        assert_eq!(d.pmf(4), 0.0);
        assert_eq!(d.quantile(0.5).unwrap(), 0);
        assert_eq!(d.tv_distance_to_limit(), 0.0);
    }

    #[test]
    fn cdf_is_monotone_and_reaches_one() {
        let d = dist(4.321, 10.0);
        let mut prev = 0.0;
        for y in 0..=d.table().y_hi() {
            let c = d.cdf(y);
            assert!(c >= prev);
            prev = c;
        }
        assert!((d.cdf(d.table().y_hi()) - 1.0).abs() < 1e-10);
        assert!((d.cdf(10_000) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let d = dist(6.5, 2.0);
        for y in 0..=d.table().y_hi() {
            let q = d.quantile(d.cdf(y)).unwrap();
            assert!(q <= y, "quantile(cdf({y})) = {q}");
        }
        assert!(d.quantile(-0.1).is_err());
        assert!(d.quantile(1.5).is_err());
        assert!(d.quantile(f64::NAN).is_err());
    }

    #[test]
    fn quantile_at_extremes() {
        // at nu = 1000 and mu = 4 the mass is a near point mass at 4
        let d = dist(4.0, 1000.0);
        assert_eq!(d.quantile(0.5).unwrap(), 4);
        // p = 0 skips leading window points whose mass underflowed
        let q0 = d.quantile(0.0).unwrap();
        assert!(d.pmf(q0) > 0.0);
        // p = 1 lands where the cdf first reaches 1, at or before the
        // truncation point
        let q1 = d.quantile(1.0).unwrap();
        assert!(q1 <= d.table().y_hi());
        assert!(d.cdf(q1) >= 1.0 - 1e-12);
    }

    #[test]
    fn mean_is_reproduced() {
        for (mu, nu) in [(2.0, 1.0), (4.321, 100.0), (0.5, 5.0), (27.43, 52.26)] {
            let d = dist(mu, nu);
            let (mean, _) = d.mean_variance();
            assert!(
                (mean - mu).abs() <= 1e-8 * mu.max(1.0),
                "({mu}, {nu}): mean {mean}"
            );
        }
    }

    #[test]
    fn sampling_is_deterministic_and_plausible() {
        let d = dist(4.321, 25.0);
        let a = d.sample(1000, 42);
        let b = d.sample(1000, 42);
        assert_eq!(a, b);
        let c = d.sample(1000, 43);
        assert_ne!(a, c);
        let (model_mean, model_var) = d.mean_variance();
        let sample_mean = a.iter().sum::<u64>() as f64 / 1000.0;
        let se = (model_var / 1000.0).sqrt();
        assert!((sample_mean - model_mean).abs() < 6.0 * se);
    }

    #[test]
    fn extreme_dispersion_collapses_to_the_mean() {
        let d = dist(7.0, 10_000.0);
        assert!(d.pmf(7) > 1.0 - 1e-9);
        let draws = d.sample(5, 1);
        assert_eq!(draws, vec![7, 7, 7, 7, 7]);
    }

    #[test]
    fn diagnostic_matches_direct_poisson_computation() {
        // TV(Poisson(4), point mass at 4) = 1 - P(Y = 4)
        let d = dist(4.0, 1.0);
        let p4 = {
            let mut p = (-4.0f64).exp();
            for k in 1..=4 {
                p *= 4.0 / k as f64;
            }
            p
        };
        let tv = d.tv_distance_to_limit();
        assert!((tv - (1.0 - p4)).abs() < 1e-10);
        // far limit: tiny distance
        assert!(convergence_diagnostic(4.321, 1000.0).unwrap() <= 1e-2);
    }

    #[test]
    fn diagnostic_decreases_along_the_figure_sequence() {
        let mut prev = f64::INFINITY;
        for nu in [1.0, 5.0, 10.0, 25.0, 100.0] {
            let tv = convergence_diagnostic(4.321, nu).unwrap();
            assert!(tv < prev, "tv not decreasing at nu = {nu}");
            prev = tv;
        }
    }
}
