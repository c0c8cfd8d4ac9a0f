//! CMP distribution in canonical parameters `(eta, nu)` with `eta = log lambda`.
//!
//! The pmf is `P(Y = y) = lambda^y / (y!)^nu / Z(lambda, nu)` with
//! `Z(lambda, nu) = sum_y lambda^y / (y!)^nu`. All series work happens on
//! unnormalized log terms `t(y) = y*eta - nu*log Gamma(y+1)`; the successive
//! term ratio `t(y) - t(y-1) = eta - nu*log(y)` drives both the mode formula
//! and the certified truncation of the infinite sum.

use crate::numeric::{log_factorial, log_sum_exp_unchecked};
use crate::{Error, Result, SIXTY_DECADES, WINDOW_CAP};

/// Canonical CMP parameters.
///
/// `eta` is the natural log of the rate; negative infinity encodes a zero
/// rate (all mass at 0). The series diverges for `nu = 0` with `eta >= 0`
/// (geometric ratio at or above 1), which is rejected at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmpParams {
    eta: f64,
    nu: f64,
}

impl CmpParams {
    pub fn new(eta: f64, nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return Err(Error::InvalidParameter {
                name: "nu",
                value: nu,
                reason: "dispersion must be finite and non-negative",
            });
        }
        if eta.is_nan() || eta == f64::INFINITY {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: eta,
                reason: "log rate must be finite or negative infinity",
            });
        }
        if nu == 0.0 && eta >= 0.0 {
            return Err(Error::DivergentSeries { eta });
        }
        Ok(CmpParams { eta, nu })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Unnormalized log term `t(y) = y*eta - nu*log(y!)`.
    ///
    /// `t(0) = 0` by convention even when `eta = -inf` (the empty product).
    fn log_term(&self, y: u64) -> f64 {
        if y == 0 {
            0.0
        } else {
            y as f64 * self.eta - self.nu * log_factorial(y)
        }
    }

    /// log of the ratio `P(Y = y-1) / P(Y = y) = y^nu / lambda`, i.e.
    /// `nu*log(y) - eta`, without touching the normalizer.
    pub fn successive_log_ratio(&self, y: u64) -> Result<f64> {
        if y == 0 {
            return Err(Error::InvalidParameter {
                name: "y",
                value: 0.0,
                reason: "successive ratio needs y >= 1",
            });
        }
        Ok(self.nu * (y as f64).ln() - self.eta)
    }

    /// A global maximizer of the pmf: the largest `y` with `nu*log(y) <= eta`
    /// (which is `floor(exp(eta/nu))` away from ties; exact ties `y^nu = lambda`
    /// resolve to the larger value). Returns 0 for `nu = 0` or zero rate.
    pub fn mode(&self) -> Result<u64> {
        if self.eta == f64::NEG_INFINITY || self.nu == 0.0 {
            return Ok(0);
        }
        let guess = (self.eta / self.nu).exp();
        if !(guess < WINDOW_CAP as f64) {
            return Err(Error::WindowTooLarge {
                eta: self.eta,
                nu: self.nu,
                cap: WINDOW_CAP,
            });
        }
        let mut m = guess.floor() as u64;
        while self.nu * ((m + 1) as f64).ln() <= self.eta {
            m += 1;
        }
        while m > 0 && self.nu * (m as f64).ln() > self.eta {
            m -= 1;
        }
        Ok(m)
    }

    /// Unnormalized log terms `t(0..=y_hi)` plus a log-scale certificate
    /// bounding the omitted tail sum.
    ///
    /// Starting from the mode, the window extends until (a) the current term
    /// has dropped 60 decimal digits below the mode term and (b) geometric
    /// domination certifies the remaining tail: beyond `y_hi` the term ratio
    /// is at most `r = exp(eta - nu*log(y_hi + 1)) < 1`, so the tail is at
    /// most `term(y_hi) * r / (1 - r)`, and the certificate compares that
    /// against `tail_tol` times the mode term (a lower bound on `Z`).
    fn raw_series(&self, tail_tol: f64) -> Result<RawSeries> {
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(Error::InvalidParameter {
                name: "tail_tol",
                value: tail_tol,
                reason: "tail tolerance must lie in (0, 1)",
            });
        }
        if self.eta == f64::NEG_INFINITY {
            return Ok(RawSeries {
                log_terms: vec![0.0],
                log_tail_cert: f64::NEG_INFINITY,
            });
        }
        let mode = self.mode()?;
        let t_mode = self.log_term(mode);
        let term_floor = t_mode - SIXTY_DECADES;
        let cert_target = tail_tol.ln() + t_mode;

        let mut log_terms: Vec<f64> = (0..=mode).map(|y| self.log_term(y)).collect();
        let mut y = mode;
        let log_tail_cert;
        loop {
            let log_r = self.eta - self.nu * ((y + 1) as f64).ln();
            if log_r < 0.0 {
                let cert = log_terms[y as usize] + log_r - (-log_r.exp()).ln_1p();
                if log_terms[y as usize] < term_floor && cert <= cert_target {
                    log_tail_cert = cert;
                    break;
                }
            }
            y += 1;
            if y > WINDOW_CAP {
                return Err(Error::WindowTooLarge {
                    eta: self.eta,
                    nu: self.nu,
                    cap: WINDOW_CAP,
                });
            }
            log_terms.push(self.log_term(y));
        }
        Ok(RawSeries {
            log_terms,
            log_tail_cert,
        })
    }

    /// Truncation point `y_hi` (inclusive) certifying that the mass beyond
    /// it is at most `tail_tol` of the total.
    pub fn truncation_window(&self, tail_tol: f64) -> Result<u64> {
        Ok(self.raw_series(tail_tol)?.log_terms.len() as u64 - 1)
    }

    /// log of the normalizing function `Z(lambda, nu)`, summed over the
    /// certified window at the default tail tolerance.
    pub fn log_normalizer(&self) -> Result<f64> {
        let series = self.raw_series(crate::DEFAULT_TAIL_TOL)?;
        Ok(log_sum_exp_unchecked(&series.log_terms))
    }

    /// log pmf at `y`: `y*eta - nu*log(y!) - log Z`.
    pub fn log_pmf(&self, y: u64) -> Result<f64> {
        Ok(self.log_term(y) - self.log_normalizer()?)
    }

    /// Mean and variance by direct summation over the certified window.
    pub fn moments(&self, tail_tol: f64) -> Result<(f64, f64)> {
        Ok(PmfTable::new(self, tail_tol)?.moments())
    }

    /// Full certified pmf table at the given tail tolerance.
    pub fn pmf_table(&self, tail_tol: f64) -> Result<PmfTable> {
        PmfTable::new(self, tail_tol)
    }
}

struct RawSeries {
    log_terms: Vec<f64>,
    log_tail_cert: f64,
}

/// Normalized log probabilities over the certified support window `0..=y_hi`.
///
/// Immutable after construction; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct PmfTable {
    params: CmpParams,
    log_probs: Vec<f64>,
    log_normalizer: f64,
    tail_bound: f64,
}

impl PmfTable {
    pub fn new(params: &CmpParams, tail_tol: f64) -> Result<Self> {
        let series = params.raw_series(tail_tol)?;
        let log_z = log_sum_exp_unchecked(&series.log_terms);
        let log_probs = series.log_terms.iter().map(|t| t - log_z).collect();
        let tail_bound = (series.log_tail_cert - log_z).exp();
        Ok(PmfTable {
            params: *params,
            log_probs,
            log_normalizer: log_z,
            tail_bound,
        })
    }

    pub fn params(&self) -> &CmpParams {
        &self.params
    }

    /// Inclusive upper end of the support window (the lower end is 0).
    pub fn y_hi(&self) -> u64 {
        self.log_probs.len() as u64 - 1
    }

    /// Normalized log probabilities for `y = 0..=y_hi`.
    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// log Z over the window; the certified remainder is below `tail_bound`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    /// Certified upper bound on the omitted relative tail mass.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// log probability at `y`; beyond the window this falls back to the
    /// analytic term so the result stays finite (and tiny) instead of
    /// silently becoming log(0).
    pub fn log_prob(&self, y: u64) -> f64 {
        match self.log_probs.get(y as usize) {
            Some(lp) => *lp,
            None => self.params.log_term(y) - self.log_normalizer,
        }
    }

    pub fn prob(&self, y: u64) -> f64 {
        self.log_prob(y).exp()
    }

    /// Mean and variance (centered second moment) over the window.
    pub fn moments(&self) -> (f64, f64) {
        let mut mean = 0.0;
        for (y, lp) in self.log_probs.iter().enumerate() {
            mean += y as f64 * lp.exp();
        }
        let mut var = 0.0;
        for (y, lp) in self.log_probs.iter().enumerate() {
            let d = y as f64 - mean;
            var += d * d * lp.exp();
        }
        (mean, var.max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_pmf(lambda: f64, y: u64) -> f64 {
        // direct linear-scale recurrence, independent of the log-space path
        let mut p = (-lambda).exp();
        for k in 1..=y {
            p *= lambda / k as f64;
        }
        p
    }

    #[test]
    fn construction_rules() {
        assert!(CmpParams::new(0.5, 1.0).is_ok());
        assert!(CmpParams::new(f64::NEG_INFINITY, 5.0).is_ok());
        assert!(CmpParams::new(f64::NAN, 1.0).is_err());
        assert!(CmpParams::new(1.0, -0.5).is_err());
        // geometric ratio at or above 1 diverges
        assert!(matches!(
            CmpParams::new(0.0, 0.0),
            Err(Error::DivergentSeries { .. })
        ));
        assert!(CmpParams::new(-0.1, 0.0).is_ok());
    }

    #[test]
    fn truncation_zero_rate_collapses_to_origin() {
        let p = CmpParams::new(f64::NEG_INFINITY, 3.0).unwrap();
        assert_eq!(p.truncation_window(1e-12).unwrap(), 0);
        let table = p.pmf_table(1e-12).unwrap();
        assert_eq!(table.y_hi(), 0);
        assert_eq!(table.prob(0), 1.0);
        assert_eq!(table.prob(5), 0.0);
    }

    #[test]
    fn truncation_covers_poisson_tail() {
        let p = CmpParams::new(2f64.ln(), 1.0).unwrap();
        let y_hi = p.truncation_window(1e-12).unwrap();
        assert!(y_hi >= 2);
        // Poisson(2) mass above y_hi, by direct summation
        let mut above = 1.0;
        for y in 0..=y_hi {
            above -= poisson_pmf(2.0, y);
        }
        assert!(above < 1e-12, "tail above window = {above}");
    }

    #[test]
    fn truncation_tight_at_high_dispersion() {
        // mu near 4.5 at nu = 100: window contains the mode 4 and stays small
        let p = CmpParams::new(100.0 * 4.5f64.ln(), 100.0).unwrap();
        let y_hi = p.truncation_window(1e-12).unwrap();
        assert!(y_hi >= 4);
        assert!(y_hi <= 50, "window unexpectedly wide: {y_hi}");
        assert_eq!(p.mode().unwrap(), 4);
    }

    #[test]
    fn tail_certificate_holds_under_window_extension() {
        for (eta, nu) in [(2f64.ln(), 1.0), (3f64.ln(), 2.0), (-0.7, 0.0), (9.0, 4.0)] {
            let p = CmpParams::new(eta, nu).unwrap();
            let table = p.pmf_table(1e-12).unwrap();
            let y_hi = table.y_hi();
            // brute-force extension of the window by 3x
            let extended: Vec<f64> = (0..=3 * y_hi.max(4))
                .map(|y| {
                    if y == 0 {
                        0.0
                    } else {
                        y as f64 * eta - nu * log_factorial(y)
                    }
                })
                .collect();
            let log_z_ext = log_sum_exp_unchecked(&extended);
            assert!(
                (log_z_ext - table.log_normalizer()).abs() <= 1e-12,
                "eta={eta}, nu={nu}: window not certified"
            );
            assert!(table.tail_bound() <= 1e-12);
        }
    }

    #[test]
    fn normalizer_poisson_and_geometric() {
        // Z = e^lambda at nu = 1
        for lambda in [0.3f64, 2.0, 9.5] {
            let p = CmpParams::new(lambda.ln(), 1.0).unwrap();
            assert!(
                (p.log_normalizer().unwrap() - lambda).abs() < 1e-12,
                "lambda = {lambda}"
            );
        }
        // Z = 1/(1 - lambda) at nu = 0
        let p = CmpParams::new(0.5f64.ln(), 0.0).unwrap();
        assert!((p.log_normalizer().unwrap() - 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn normalizer_matches_direct_summation() {
        // Z(3, 2) = sum 3^y/(y!)^2 over y = 0..=50, by linear recurrence
        let mut term = 1.0f64;
        let mut z = 1.0f64;
        for y in 1..=50u64 {
            term *= 3.0 / ((y * y) as f64);
            z += term;
        }
        let p = CmpParams::new(3f64.ln(), 2.0).unwrap();
        assert!((p.log_normalizer().unwrap() - z.ln()).abs() < 1e-13);
    }

    #[test]
    fn log_pmf_poisson_closed_form() {
        let p = CmpParams::new(2f64.ln(), 1.0).unwrap();
        let expected = 3.0 * 2f64.ln() - 6f64.ln() - 2.0;
        assert!((p.log_pmf(3).unwrap() - expected).abs() < 1e-12);
        // numerator is 1 at y = 0
        assert!((p.log_pmf(0).unwrap() + p.log_normalizer().unwrap()).abs() < 1e-15);
    }

    #[test]
    fn successive_ratio_identity_on_tables() {
        for (eta, nu) in [
            (2f64.ln(), 1.0),
            (3f64.ln(), 2.0),
            (-0.7, 0.0),
            (100.0 * 4.5f64.ln(), 100.0),
            (0.2, 0.4),
        ] {
            let p = CmpParams::new(eta, nu).unwrap();
            let table = p.pmf_table(1e-13).unwrap();
            let lp = table.log_probs();
            for y in 1..=table.y_hi() {
                let lhs = lp[(y - 1) as usize] - lp[y as usize];
                let rhs = p.successive_log_ratio(y).unwrap();
                assert!(
                    (lhs - rhs).abs() <= 1e-10,
                    "eta={eta} nu={nu} y={y}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn successive_ratio_closed_forms() {
        let p = CmpParams::new(2f64.ln(), 1.0).unwrap();
        assert!((p.successive_log_ratio(1).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        let p = CmpParams::new(9f64.ln(), 2.0).unwrap();
        assert!(p.successive_log_ratio(3).unwrap().abs() < 1e-15);
        let p = CmpParams::new((0.321 * 5f64.powi(10)).ln(), 10.0).unwrap();
        assert!((p.successive_log_ratio(5).unwrap() + 0.321f64.ln()).abs() < 1e-12);
        assert!(p.successive_log_ratio(0).is_err());
    }

    #[test]
    fn pmf_table_matches_poisson_entrywise() {
        let p = CmpParams::new(2f64.ln(), 1.0).unwrap();
        let table = p.pmf_table(1e-12).unwrap();
        for y in 0..=table.y_hi() {
            let diff = (table.prob(y) - poisson_pmf(2.0, y)).abs();
            assert!(diff < 1e-12, "y = {y}: off by {diff}");
        }
        let total: f64 = table.log_probs().iter().map(|lp| lp.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pmf_matches_geometric_entrywise() {
        let lambda = 0.5f64;
        let p = CmpParams::new(lambda.ln(), 0.0).unwrap();
        let table = p.pmf_table(1e-13).unwrap();
        for y in 0..=20u64 {
            let exact = (1.0 - lambda) * lambda.powi(y as i32);
            assert!((table.prob(y) - exact).abs() < 1e-12, "y = {y}");
        }
    }

    #[test]
    fn moments_closed_forms_and_oracle() {
        // Poisson: mean = var = lambda
        let (m, v) = CmpParams::new(2f64.ln(), 1.0)
            .unwrap()
            .moments(1e-14)
            .unwrap();
        assert!((m - 2.0).abs() < 1e-12);
        assert!((v - 2.0).abs() < 1e-12);
        // geometric with lambda = 1/2 on {0, 1, 2, ...}: mean 1, var 2
        let (m, v) = CmpParams::new(0.5f64.ln(), 0.0)
            .unwrap()
            .moments(1e-14)
            .unwrap();
        assert!((m - 1.0).abs() < 1e-12);
        assert!((v - 2.0).abs() < 1e-12);
        // direct-summation oracle at (eta, nu) = (ln 3, 2)
        let mut term = 1.0f64;
        let (mut z, mut sy, mut syy) = (1.0f64, 0.0f64, 0.0f64);
        for y in 1..=50u64 {
            term *= 3.0 / ((y * y) as f64);
            z += term;
            sy += y as f64 * term;
            syy += (y * y) as f64 * term;
        }
        let mean_oracle = sy / z;
        let var_oracle = syy / z - mean_oracle * mean_oracle;
        let (m, v) = CmpParams::new(3f64.ln(), 2.0)
            .unwrap()
            .moments(1e-14)
            .unwrap();
        assert!((m - mean_oracle).abs() < 1e-12);
        assert!((v - var_oracle).abs() < 1e-12);
    }

    #[test]
    fn mode_formula_and_ties() {
        assert_eq!(CmpParams::new(9f64.ln(), 2.0).unwrap().mode().unwrap(), 3);
        assert_eq!(CmpParams::new(0.5f64.ln(), 1.0).unwrap().mode().unwrap(), 0);
        // exact tie y^nu = lambda at y = 4 resolves to the larger value
        let p = CmpParams::new(16f64.ln(), 2.0).unwrap();
        assert_eq!(p.mode().unwrap(), 4);
        let table = p.pmf_table(1e-13).unwrap();
        assert!((table.prob(3) - table.prob(4)).abs() < 1e-13);
        // zero rate and geometric
        assert_eq!(
            CmpParams::new(f64::NEG_INFINITY, 2.0).unwrap().mode().unwrap(),
            0
        );
        assert_eq!(CmpParams::new(-0.3, 0.0).unwrap().mode().unwrap(), 0);
    }

    #[test]
    fn mode_maximizes_pmf_in_window() {
        for (eta, nu) in [
            (2f64.ln(), 1.0),
            (3f64.ln(), 2.0),
            (100.0 * 4.5f64.ln(), 100.0),
            (0.9, 0.3),
            (-0.7, 0.0),
        ] {
            let p = CmpParams::new(eta, nu).unwrap();
            let m = p.mode().unwrap();
            let table = p.pmf_table(1e-13).unwrap();
            let pm = table.log_prob(m);
            for y in 0..=table.y_hi() {
                assert!(
                    table.log_prob(y) <= pm + 1e-12,
                    "eta={eta} nu={nu}: pmf({y}) exceeds pmf(mode={m})"
                );
            }
        }
    }

    #[test]
    fn window_respects_tail_tolerance_argument() {
        let p = CmpParams::new(2f64.ln(), 1.0).unwrap();
        assert!(p.raw_series(0.0).is_err());
        assert!(p.raw_series(1.0).is_err());
        let tight = p.truncation_window(1e-14).unwrap();
        let loose = p.truncation_window(1e-6).unwrap();
        assert!(tight >= loose);
    }
}
