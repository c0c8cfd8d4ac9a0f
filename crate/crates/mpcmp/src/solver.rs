//! Solving the mean constraint: find `eta = log lambda` such that the CMP
//! distribution with dispersion `nu` has mean `mu`.
//!
//! For fixed `nu` the CMP is a linear exponential family in `eta`, so the
//! mean is strictly increasing in `eta` and the root is unique. The initial
//! bracket comes from the analytic bounds on `lambda(mu, nu)`:
//!
//! - non-integer `mu`: `log lambda` lies in
//!   `[log(delta) + nu*log(ceil(mu)), -log(1 - delta) + nu*log(ceil(mu))]`
//!   with `delta = mu - floor(mu)`;
//! - integer `mu`: `log lambda` lies in
//!   `[nu*log(mu) + log(a), nu*log(mu + 1) + log(b)]` for constants
//!   `a, b > 0`; this crate uses `a = 1/2`, `b = 1` so that the Poisson
//!   solution `lambda = mu` at `nu = 1` sits strictly inside.
//!
//! Both brackets are validated by residual sign checks and widened
//! geometrically when the checks fail (only expected for `mu < 1` or
//! `nu < 1`, where the analytic bounds are not yet tight).

use crate::cmp::CmpParams;
use crate::numeric::log_factorial;
use crate::rng::SplitMix64;
use crate::{Error, Result, DEFAULT_TAIL_TOL, SIXTY_DECADES, WINDOW_CAP};
use std::time::Instant;

/// Maximum geometric bracket expansions before giving up.
const MAX_EXPANSIONS: u32 = 60;

/// Iteration cap for root refinement; bisection fallback alone reaches
/// float resolution from any expanded bracket well within this.
const MAX_REFINE_ITERS: u32 = 200;

/// Newton steps are skipped below this variance; the slope carries no
/// usable information once the distribution is this concentrated.
const NEWTON_VARIANCE_FLOOR: f64 = 1e-8;

/// Lower bracket constant `a` for integer means (`log(1/2)` on the log scale).
const INTEGER_LOWER_LOG_A: f64 = -std::f64::consts::LN_2;

/// Fractional parts closer than this to 0 or 1 use the integer bounds.
const INTEGER_SNAP: f64 = 1e-12;

/// Mean-parametrization pair: target mean `mu >= 0`, dispersion `nu >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanParams {
    mu: f64,
    nu: f64,
}

impl MeanParams {
    pub fn new(mu: f64, nu: f64) -> Result<Self> {
        if !mu.is_finite() || mu < 0.0 {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: mu,
                reason: "mean must be finite and non-negative",
            });
        }
        if !nu.is_finite() || nu < 0.0 {
            return Err(Error::InvalidParameter {
                name: "nu",
                value: nu,
                reason: "dispersion must be finite and non-negative",
            });
        }
        Ok(MeanParams { mu, nu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

/// Which rule produced an [`EtaBracket`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketRule {
    /// Integer-mean bounds `[nu*log(mu) + log(1/2), nu*log(mu + 1)]`.
    IntegerMu,
    /// Non-integer-mean bounds from the fractional parts of `mu`.
    NonintegerMu,
    /// Sign checks failed on the analytic bounds; the bracket was widened
    /// geometrically until a sign change appeared.
    FallbackExpansion,
}

/// A validated bracket on `eta`: the residual is negative at `eta_lo` and
/// positive at `eta_hi`.
#[derive(Debug, Clone, Copy)]
pub struct EtaBracket {
    pub eta_lo: f64,
    pub eta_hi: f64,
    pub rule: BracketRule,
}

impl EtaBracket {
    pub fn width(&self) -> f64 {
        self.eta_hi - self.eta_lo
    }

    pub fn contains(&self, eta: f64) -> bool {
        self.eta_lo < eta && eta < self.eta_hi
    }
}

/// `mean(eta, nu) - mu`: the mean constraint residual, with the mean
/// taken as `sum_y (y - mu) p(y)` so the sign stays meaningful even when
/// the distribution is a near point mass.
///
/// Strictly increasing in `eta` for fixed `nu`, zero exactly at the
/// solution of the mean constraint.
pub fn mean_residual(eta: f64, mp: &MeanParams) -> Result<f64> {
    mean_residual_with(eta, mp, DEFAULT_TAIL_TOL)
}

pub fn mean_residual_with(eta: f64, mp: &MeanParams, tail_tol: f64) -> Result<f64> {
    let mut ev = MeanEvaluator::new(mp, tail_tol)?;
    Ok(ev.eval(eta, false)?.0)
}

/// Streaming evaluator of the mean-constraint residual at fixed `(mu, nu)`.
///
/// Sums `(y - mu)^k`-weighted terms outward from the mode on both sides,
/// scaled by the mode term; each side cuts once the running term has
/// dropped 60 decades and geometric domination certifies the omitted
/// remainder below `tail_tol` of the mode term (term ratios shrink
/// monotonically away from the mode in both directions). The per-`y`
/// log-factorials are cached because one solve evaluates many etas at the
/// same `nu`.
struct MeanEvaluator {
    mu: f64,
    nu: f64,
    log_cert: f64,
    log_fact: Vec<f64>,
}

impl MeanEvaluator {
    fn new(mp: &MeanParams, tail_tol: f64) -> Result<Self> {
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(Error::InvalidParameter {
                name: "tail_tol",
                value: tail_tol,
                reason: "tail tolerance must lie in (0, 1)",
            });
        }
        Ok(MeanEvaluator {
            mu: mp.mu,
            nu: mp.nu,
            log_cert: tail_tol.ln(),
            log_fact: Vec::new(),
        })
    }

    fn log_fact(&mut self, y: u64) -> f64 {
        let idx = y as usize;
        while self.log_fact.len() <= idx {
            self.log_fact.push(log_factorial(self.log_fact.len() as u64));
        }
        self.log_fact[idx]
    }

    /// `(residual, variance)`; the variance (the residual's slope in
    /// `eta`) is only accumulated when requested.
    fn eval(&mut self, eta: f64, want_var: bool) -> Result<(f64, f64)> {
        let params = CmpParams::new(eta, self.nu)?;
        if eta == f64::NEG_INFINITY {
            return Ok((-self.mu, 0.0));
        }
        let mode = params.mode()?;
        let t_mode = mode as f64 * eta - self.nu * self.log_fact(mode);
        let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);

        let mut y = mode;
        loop {
            let rel = y as f64 * eta - self.nu * self.log_fact(y) - t_mode;
            let w = rel.exp();
            let d = y as f64 - self.mu;
            s0 += w;
            s1 += d * w;
            if want_var {
                s2 += d * d * w;
            }
            let log_r = eta - self.nu * ((y + 1) as f64).ln();
            if log_r < 0.0 {
                let cert = rel + log_r - (-log_r.exp()).ln_1p();
                if rel < -SIXTY_DECADES && cert <= self.log_cert {
                    break;
                }
            }
            y += 1;
            if y > WINDOW_CAP {
                return Err(Error::WindowTooLarge {
                    eta,
                    nu: self.nu,
                    cap: WINDOW_CAP,
                });
            }
        }

        let mut y = mode;
        while y > 0 {
            y -= 1;
            let rel = y as f64 * eta - self.nu * self.log_fact(y) - t_mode;
            let w = rel.exp();
            let d = y as f64 - self.mu;
            s0 += w;
            s1 += d * w;
            if want_var {
                s2 += d * d * w;
            }
            if y == 0 {
                break;
            }
            let log_r = self.nu * (y as f64).ln() - eta;
            if log_r < 0.0 {
                let cert = rel + log_r - (-log_r.exp()).ln_1p();
                if rel < -SIXTY_DECADES && cert <= self.log_cert {
                    break;
                }
            }
        }

        let shift = s1 / s0;
        let var = if want_var {
            (s2 / s0 - shift * shift).max(0.0)
        } else {
            0.0
        };
        Ok((shift, var))
    }

    /// Residual for sign decisions only. When the pmf mode sits far above
    /// the target mean the residual is certainly positive and summing the
    /// huge window would be wasteful (or overflow the window cap), so a
    /// positive surrogate is returned instead: the terms increase up to the
    /// mode `m`, hence `P(Y < t) <= t/m` for `t <= m`, and with `t ~ 2*mu`
    /// and `m >= 8*mu + 16` the mean is at least `1.5*mu + 1`.
    fn sign_residual(&mut self, eta: f64) -> Result<f64> {
        if self.nu > 0.0 && eta.is_finite() {
            let log_mode = eta / self.nu;
            if log_mode > (8.0 * self.mu + 16.0).ln() {
                return Ok(self.mu.max(1.0));
            }
        }
        Ok(self.eval(eta, false)?.0)
    }
}

/// Analytic bracket for `eta(mu, nu)`, validated by sign checks.
pub fn bracket(mp: &MeanParams) -> Result<EtaBracket> {
    bracket_with(mp, DEFAULT_TAIL_TOL)
}

pub fn bracket_with(mp: &MeanParams, tail_tol: f64) -> Result<EtaBracket> {
    let mut ev = MeanEvaluator::new(mp, tail_tol)?;
    bracket_impl(mp, &mut ev)
}

fn bracket_impl(mp: &MeanParams, ev: &mut MeanEvaluator) -> Result<EtaBracket> {
    if mp.mu <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: mp.mu,
            reason: "bracketing needs mu > 0 (mu = 0 has eta = -inf)",
        });
    }
    if mp.nu == 0.0 {
        return Err(Error::InvalidParameter {
            name: "nu",
            value: mp.nu,
            reason: "nu = 0 has the closed form eta = log(mu/(1+mu)); no bracket applies",
        });
    }

    // Means within 1e-12 of an integer take the integer bounds: the
    // fractional bounds blow up as delta -> 0 or 1, while the integer
    // bounds still contain the root because the mean is monotone in eta.
    let delta = mp.mu - mp.mu.floor();
    let near_integer = delta <= INTEGER_SNAP || delta >= 1.0 - INTEGER_SNAP;
    let (mut lo, mut hi, rule) = if near_integer {
        let mu_round = mp.mu.round().max(1.0);
        let lo = mp.nu * mu_round.ln() + INTEGER_LOWER_LOG_A;
        let hi = mp.nu * (mu_round + 1.0).ln();
        (lo, hi, BracketRule::IntegerMu)
    } else {
        let log_ceil = mp.mu.ceil().ln();
        let lo = delta.ln() + mp.nu * log_ceil;
        let hi = mp.nu * log_ceil - (1.0 - delta).ln();
        (lo, hi, BracketRule::NonintegerMu)
    };

    let mut r_lo = ev.sign_residual(lo)?;
    let mut r_hi = ev.sign_residual(hi)?;
    if r_lo < 0.0 && r_hi > 0.0 {
        return Ok(EtaBracket {
            eta_lo: lo,
            eta_hi: hi,
            rule,
        });
    }

    // Sign check failed (expected only for mu < 1 or nu < 1): widen
    // geometrically, doubling the step width each round.
    let mut step = hi - lo;
    for _ in 0..MAX_EXPANSIONS {
        if r_lo >= 0.0 {
            lo -= step;
            r_lo = ev.sign_residual(lo)?;
        }
        if r_hi <= 0.0 {
            hi += step;
            r_hi = ev.sign_residual(hi)?;
        }
        if r_lo < 0.0 && r_hi > 0.0 {
            return Ok(EtaBracket {
                eta_lo: lo,
                eta_hi: hi,
                rule: BracketRule::FallbackExpansion,
            });
        }
        step *= 2.0;
    }
    Err(Error::BracketFailure {
        mu: mp.mu,
        nu: mp.nu,
        attempts: MAX_EXPANSIONS,
    })
}

/// Solve the mean constraint for `eta`.
///
/// Returns negative infinity for `mu = 0` and the closed-form
/// `log(mu/(1+mu))` for `nu = 0` (geometric). Otherwise the root is found
/// inside the validated bracket by safeguarded Newton: every iterate keeps
/// the shrinking bracket, uses the variance (the mean's slope in `eta`) as
/// the Newton slope, and falls back to a bisection step whenever the slope
/// is uninformative or the candidate would leave the bracket, until
/// `|mean(eta) - mu| <= tol * max(1, mu)`. The iteration policy is fixed,
/// so identical inputs produce identical output bits.
pub fn solve_eta(mp: &MeanParams, tol: f64) -> Result<f64> {
    solve_eta_with(mp, tol, DEFAULT_TAIL_TOL)
}

pub fn solve_eta_with(mp: &MeanParams, tol: f64, tail_tol: f64) -> Result<f64> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "solver tolerance must be positive and finite",
        });
    }
    if mp.mu == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if mp.nu == 0.0 {
        return Ok((mp.mu / (1.0 + mp.mu)).ln());
    }
    let mut ev = MeanEvaluator::new(mp, tail_tol)?;
    let br = bracket_impl(mp, &mut ev)?;
    // The fractional-parts bounds carry a sharp starting iterate with them:
    // in the large-nu limit the mass splits (1 - delta, delta) across the
    // two integers around mu, and the successive-probability ratio there
    // pins log(lambda) at nu*log(ceil(mu)) + log(delta/(1 - delta)), which
    // always lies strictly between the two bounds.
    let mut start = 0.5 * (br.eta_lo + br.eta_hi);
    if br.rule == BracketRule::NonintegerMu {
        let delta = mp.mu - mp.mu.floor();
        let guess = mp.nu * mp.mu.ceil().ln() + (delta / (1.0 - delta)).ln();
        if guess > br.eta_lo && guess < br.eta_hi {
            start = guess;
        }
    }
    refine_root(mp, br.eta_lo, br.eta_hi, start, tol, &mut ev)
}

/// Benchmark baseline: same refinement, but the bracket starts from a
/// generic unit interval around the Poisson guess `log(mu)` and relies
/// entirely on geometric expansion to find a sign change.
pub fn solve_eta_unbracketed(mp: &MeanParams, tol: f64) -> Result<f64> {
    solve_eta_unbracketed_with(mp, tol, DEFAULT_TAIL_TOL)
}

pub fn solve_eta_unbracketed_with(mp: &MeanParams, tol: f64, tail_tol: f64) -> Result<f64> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "solver tolerance must be positive and finite",
        });
    }
    if mp.mu == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if mp.nu == 0.0 {
        return Ok((mp.mu / (1.0 + mp.mu)).ln());
    }
    let mut ev = MeanEvaluator::new(mp, tail_tol)?;
    let mut lo = mp.mu.ln() - 0.5;
    let mut hi = mp.mu.ln() + 0.5;
    let mut r_lo = ev.sign_residual(lo)?;
    let mut r_hi = ev.sign_residual(hi)?;
    let mut step = hi - lo;
    let mut expansions = 0;
    while !(r_lo < 0.0 && r_hi > 0.0) {
        if expansions >= MAX_EXPANSIONS {
            return Err(Error::BracketFailure {
                mu: mp.mu,
                nu: mp.nu,
                attempts: MAX_EXPANSIONS,
            });
        }
        if r_lo >= 0.0 {
            lo -= step;
            r_lo = ev.sign_residual(lo)?;
        }
        if r_hi <= 0.0 {
            hi += step;
            r_hi = ev.sign_residual(hi)?;
        }
        step *= 2.0;
        expansions += 1;
    }
    let start = 0.5 * (lo + hi);
    refine_root(mp, lo, hi, start, tol, &mut ev)
}

fn refine_root(
    mp: &MeanParams,
    mut lo: f64,
    mut hi: f64,
    start: f64,
    tol: f64,
    ev: &mut MeanEvaluator,
) -> Result<f64> {
    let target = tol * mp.mu.max(1.0);
    let mut eta = start;
    let mut last = (f64::NAN, f64::NAN);
    for _ in 0..MAX_REFINE_ITERS {
        let (r, var) = ev.eval(eta, true)?;
        if r.abs() <= target {
            return Ok(eta);
        }
        if r < 0.0 {
            lo = eta;
        } else {
            hi = eta;
        }
        last = (eta, r);
        // Newton step when the slope carries information and the candidate
        // stays strictly inside the bracket; bisection otherwise.
        let mut next = f64::NAN;
        if var > NEWTON_VARIANCE_FLOOR {
            next = eta - r / var;
        }
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next <= lo || next >= hi || next == eta {
            break; // bracket at float resolution
        }
        eta = next;
    }
    let (eta, r) = last;
    if r.abs() <= target {
        Ok(eta)
    } else {
        Err(Error::SolveFailure {
            mu: mp.mu,
            nu: mp.nu,
            residual: r,
            tolerance: target,
        })
    }
}

/// Median wall times of the bracketed solver against the expansion-only
/// baseline over a workload.
#[derive(Debug, Clone, Copy)]
pub struct SolverComparison {
    pub solves: usize,
    pub bracketed_median: std::time::Duration,
    pub unbracketed_median: std::time::Duration,
    /// `unbracketed_median / bracketed_median`.
    pub speedup: f64,
}

/// Fixed workload for solver timing: means log-spread over `[1, 30]` (every
/// fifth one rounded to an integer), dispersions over `[50, 500]`.
pub fn comparison_workload(n: usize) -> Vec<MeanParams> {
    let mut rng = SplitMix64::new(0x5eed_cafe_f00d_0001);
    (0..n)
        .map(|i| {
            let mut mu = (rng.next_f64() * 30f64.ln()).exp();
            if i % 5 == 0 {
                mu = mu.round().max(1.0);
            }
            let nu = 50.0 + 450.0 * rng.next_f64();
            MeanParams::new(mu, nu).expect("workload parameters are valid")
        })
        .collect()
}

/// Time both solver paths over the workload and report medians.
pub fn compare_solvers(workload: &[MeanParams], tol: f64) -> Result<SolverComparison> {
    if workload.is_empty() {
        return Err(Error::EmptyInput("solver comparison needs a workload"));
    }
    let mut bracketed = Vec::with_capacity(workload.len());
    let mut unbracketed = Vec::with_capacity(workload.len());
    for mp in workload {
        let start = Instant::now();
        let a = solve_eta(mp, tol)?;
        bracketed.push(start.elapsed());
        let start = Instant::now();
        let b = solve_eta_unbracketed(mp, tol)?;
        unbracketed.push(start.elapsed());
        debug_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
    }
    bracketed.sort_unstable();
    unbracketed.sort_unstable();
    let bm = bracketed[bracketed.len() / 2];
    let um = unbracketed[unbracketed.len() / 2];
    let speedup = um.as_secs_f64() / bm.as_secs_f64().max(f64::MIN_POSITIVE);
    Ok(SolverComparison {
        solves: workload.len(),
        bracketed_median: bm,
        unbracketed_median: um,
        speedup,
    })
}
