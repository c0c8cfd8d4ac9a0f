//! Mean-parametrized Conway-Maxwell-Poisson (CMP) distributions.
//!
//! The CMP family has pmf proportional to `lambda^y / (y!)^nu` on the
//! non-negative integers. This crate works with the canonical parameter
//! `eta = log(lambda)` throughout, which keeps every quantity representable
//! even at extreme underdispersion (`nu` of 10^4 and beyond, where `lambda`
//! itself overflows any fixed-width float).
//!
//! The crate provides:
//!
//! - [`cmp`]: evaluation of the distribution in canonical parameters
//!   (normalizer, pmf, moments, mode) with certified series truncation;
//! - [`solver`]: solving the mean constraint for `eta` given a target mean,
//!   using tight analytic brackets validated by sign checks;
//! - [`grid`]: precomputed `eta` lookup tables over `(log mu, nu)` with
//!   bilinear interpolation and a text persistence format;
//! - [`dist`]: the user-facing mean-parametrized distribution keyed by
//!   `(mu, nu)`: pmf, cdf, quantile, reproducible sampling, and the
//!   large-`nu` limiting distribution;
//! - [`fit`]: maximum-likelihood estimation of `(mu, nu)` from count data
//!   plus the empirical-distribution baseline;
//! - [`smooth`]: discrete kernel density estimation using the
//!   mean-parametrized CMP as the kernel.

pub mod cmp;
pub mod dist;
mod error;
pub mod fit;
pub mod grid;
pub mod numeric;
pub mod rng;
pub mod smooth;
pub mod solver;

pub use cmp::{CmpParams, PmfTable};
pub use dist::{LimitPmf, MeanCmp, SampleStream};
pub use error::Error;
pub use fit::{CountData, FitResult};
pub use grid::LambdaGrid;
pub use smooth::{Bandwidth, SmoothedPmf};
pub use solver::{EtaBracket, MeanParams};

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Default certified bound on the relative series mass dropped by truncation.
pub const DEFAULT_TAIL_TOL: f64 = 1e-14;

/// Default solver tolerance on `|mean(eta) - mu|`, relative to `max(1, mu)`.
pub const DEFAULT_SOLVE_TOL: f64 = 1e-10;

/// Hard cap on series window lengths.
pub(crate) const WINDOW_CAP: u64 = 5_000_000;

/// Work bound for series truncation: extend until terms drop 60 decimal
/// digits below the mode term.
pub(crate) const SIXTY_DECADES: f64 = 60.0 * std::f64::consts::LN_10;
