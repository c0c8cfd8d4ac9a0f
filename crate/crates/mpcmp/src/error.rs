use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument violated a precondition.
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The normalizing series diverges: `nu = 0` requires `lambda < 1`.
    #[error("divergent series: nu = 0 requires eta < 0, got eta = {eta}")]
    DivergentSeries { eta: f64 },

    /// The certified truncation window exceeded the hard size cap.
    #[error("truncation window exceeds {cap} terms for eta = {eta}, nu = {nu}")]
    WindowTooLarge { eta: f64, nu: f64, cap: u64 },

    /// No sign change found after the maximum number of bracket expansions.
    #[error("bracketing failed for mu = {mu}, nu = {nu}: no sign change after {attempts} expansions")]
    BracketFailure { mu: f64, nu: f64, attempts: u32 },

    /// The root finder stopped without meeting the requested tolerance.
    #[error("solve failed for mu = {mu}, nu = {nu}: residual {residual} above tolerance {tolerance}")]
    SolveFailure {
        mu: f64,
        nu: f64,
        residual: f64,
        tolerance: f64,
    },

    /// A grid query outside the knot hull; no extrapolation is performed.
    #[error("query ({log_mu}, {nu}) outside grid range (log mu in [{log_mu_min}, {log_mu_max}], nu in [{nu_min}, {nu_max}])")]
    GridRange {
        log_mu: f64,
        nu: f64,
        log_mu_min: f64,
        log_mu_max: f64,
        nu_min: f64,
        nu_max: f64,
    },

    /// A malformed grid document, including unknown format versions.
    #[error("grid format: {0}")]
    GridFormat(String),

    /// A count input line that is not a non-negative integer.
    #[error("line {line}: expected a non-negative integer count, got {content:?}")]
    CountParse { line: usize, content: String },

    /// An empty input where at least one element is required.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}
