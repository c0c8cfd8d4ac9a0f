//! Maximum-likelihood fitting of `(mu, nu)` from independent counts.
//!
//! The mean-parametrized family is a linear exponential family in `eta`
//! for fixed `nu`, so the profile MLE of the mean is the sample mean
//! exactly. That reduces fitting to a one-dimensional search over
//! `log nu`, done here by golden-section with a final parabolic
//! refinement. The empirical distribution (relative frequencies) is the
//! nonparametric MLE and serves as the baseline every fit is compared
//! against.

use crate::dist::MeanCmp;
use crate::solver::MeanParams;
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Lower cap of the dispersion search range.
pub const NU_MIN: f64 = 1e-3;
/// Upper cap of the dispersion search range. Beyond this the likelihood of
/// any finite dataset is flat to machine precision; hitting the cap is
/// reported through `at_boundary`.
pub const NU_MAX: f64 = 1e6;

/// Observed counts with their first two sample moments.
#[derive(Debug, Clone)]
pub struct CountData {
    values: Vec<u64>,
    sample_mean: f64,
    sample_variance: f64,
}

impl CountData {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("count data"));
        }
        let n = values.len() as f64;
        let sample_mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
        let sample_variance = if values.len() < 2 {
            0.0
        } else {
            values
                .iter()
                .map(|&v| {
                    let d = v as f64 - sample_mean;
                    d * d
                })
                .sum::<f64>()
                / (n - 1.0)
        };
        Ok(CountData {
            values,
            sample_mean,
            sample_variance,
        })
    }

    /// Parse the shared input format: one non-negative integer per line,
    /// blank lines ignored. Anything else is an error naming the line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            match trimmed.parse::<u64>() {
                Ok(v) => values.push(v),
                Err(_) => {
                    return Err(Error::CountParse {
                        line: idx + 1,
                        content: trimmed.to_string(),
                    })
                }
            }
        }
        CountData::new(values)
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sample_mean(&self) -> f64 {
        self.sample_mean
    }

    /// Sample variance with denominator `n - 1` (zero for a single point).
    pub fn sample_variance(&self) -> f64 {
        self.sample_variance
    }

    pub fn max(&self) -> u64 {
        *self.values.iter().max().expect("non-empty")
    }

    /// Distinct values with multiplicities.
    pub fn counts(&self) -> BTreeMap<u64, usize> {
        let mut map = BTreeMap::new();
        for &v in &self.values {
            *map.entry(v).or_insert(0) += 1;
        }
        map
    }
}

/// Result of a maximum-likelihood fit.
#[derive(Debug, Clone, Copy)]
pub struct FitResult {
    pub mu_hat: f64,
    pub nu_hat: f64,
    pub loglik: f64,
    pub aic: f64,
    pub converged: bool,
    /// The dispersion estimate hit the search cap; for tie-free data this
    /// flags a flat likelihood, for all-equal data it is the expected
    /// outcome (the supremum sits at infinite dispersion).
    pub at_boundary: bool,
    pub fitted_variance: f64,
}

/// Akaike information criterion, `2k - 2*loglik`.
pub fn aic(loglik: f64, k: u32) -> f64 {
    2.0 * k as f64 - 2.0 * loglik
}

/// Log-likelihood of the data under the mean-parametrized CMP `(mu, nu)`.
///
/// Evaluated in log scale throughout, so in-support points keep finite
/// contributions however concentrated the distribution is.
pub fn log_likelihood(data: &CountData, mp: &MeanParams) -> Result<f64> {
    let dist = MeanCmp::new(*mp)?;
    let mut ll = 0.0;
    for (&value, &count) in &data.counts() {
        ll += count as f64 * dist.log_pmf(value);
    }
    Ok(ll)
}

/// Optimizer settings for [`fit_mle`].
#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    pub nu_min: f64,
    pub nu_max: f64,
    /// Convergence width on `log nu`.
    pub log_nu_tol: f64,
    pub max_iters: u32,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            nu_min: NU_MIN,
            nu_max: NU_MAX,
            log_nu_tol: 1e-9,
            max_iters: 200,
        }
    }
}

/// Profile maximum likelihood: `mu_hat` is the sample mean exactly
/// (exponential-family score identity); `nu_hat` maximizes the profiled
/// likelihood over `log nu` in `[log nu_min, log nu_max]`.
///
/// All-equal data has its supremum at infinite dispersion; the fit returns
/// the cap with `at_boundary = true` rather than failing.
pub fn fit_mle(data: &CountData, config: &FitConfig) -> Result<FitResult> {
    let mu_hat = data.sample_mean();
    let profile = |log_nu: f64| -> Result<f64> {
        let mp = MeanParams::new(mu_hat, log_nu.exp())?;
        log_likelihood(data, &mp)
    };

    let lo = config.nu_min.ln();
    let hi = config.nu_max.ln();
    let all_equal = data.values().iter().all(|&v| v == data.values()[0]);

    let (log_nu_hat, converged) = if all_equal {
        (hi, true)
    } else {
        golden_section_max(&profile, lo, hi, config.log_nu_tol, config.max_iters)?
    };

    let at_boundary = log_nu_hat >= hi - 1e-6 || log_nu_hat <= lo + 1e-6;
    let nu_hat = if log_nu_hat >= hi - 1e-6 {
        config.nu_max
    } else if log_nu_hat <= lo + 1e-6 {
        config.nu_min
    } else {
        log_nu_hat.exp()
    };

    let mp = MeanParams::new(mu_hat, nu_hat)?;
    let loglik = log_likelihood(data, &mp)?;
    let (_, fitted_variance) = MeanCmp::new(mp)?.mean_variance();
    Ok(FitResult {
        mu_hat,
        nu_hat,
        loglik,
        aic: aic(loglik, 2),
        converged,
        at_boundary,
        fitted_variance,
    })
}

/// Golden-section maximization with one parabolic refinement at the end.
fn golden_section_max(
    f: &dyn Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iters: u32,
) -> Result<(f64, bool)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut converged = false;
    for _ in 0..max_iters {
        if b - a <= tol {
            converged = true;
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    // Parabolic refinement through (a, c|d, b) around the better interior
    // point; keep it only if it lands inside and actually improves.
    let (x0, f0) = if fc >= fd { (c, fc) } else { (d, fd) };
    let (xl, xr) = (a, b);
    let fl = f(xl)?;
    let fr = f(xr)?;
    let denom = (x0 - xl) * (f0 - fr) - (x0 - xr) * (f0 - fl);
    let mut best = (x0, f0);
    if denom.abs() > 0.0 {
        let num = (x0 - xl).powi(2) * (f0 - fr) - (x0 - xr).powi(2) * (f0 - fl);
        let cand = x0 - 0.5 * num / denom;
        if cand.is_finite() && cand > xl && cand < xr {
            let fcand = f(cand)?;
            if fcand > best.1 {
                best = (cand, fcand);
            }
        }
    }
    Ok((best.0, converged))
}

/// The empirical distribution: relative frequencies, their log-likelihood,
/// and AIC with `#distinct - 1` free parameters.
pub fn empirical_baseline(data: &CountData) -> (BTreeMap<u64, f64>, f64, f64) {
    let n = data.len() as f64;
    let counts = data.counts();
    let mut probabilities = BTreeMap::new();
    let mut loglik = 0.0;
    for (&value, &count) in &counts {
        let p = count as f64 / n;
        probabilities.insert(value, p);
        loglik += count as f64 * p.ln();
    }
    let k = (counts.len() - 1) as u32;
    (probabilities, loglik, aic(loglik, k))
}
