//! Precomputed `eta` lookup over a rectangular `(log mu, nu)` grid.
//!
//! The analytic bounds make `log lambda` close to linear in `nu` and in
//! `log mu` between knots, so a grid of solved values plus bilinear
//! interpolation gives fast approximate evaluations (the intended use is
//! inner loops of Bayesian updates). Queries outside the knot hull are
//! errors; interpolation never extrapolates.
//!
//! Grids persist as a self-describing text document. Every number is
//! serialized with 17 significant digits, which round-trips 64-bit floats
//! bit-exactly.

use crate::solver::{solve_eta_with, MeanParams};
use crate::{Error, Result, DEFAULT_TAIL_TOL};
use rayon::prelude::*;

/// Format version accepted by the reader.
pub const GRID_FORMAT_VERSION: &str = "mpcmp-grid-v1";

/// Serialize a float with 17 significant digits (lowercase exponent).
/// Parsing the result back yields the identical bit pattern.
pub fn format_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Rectangular grid of solved `eta` values.
///
/// Rows follow `log_mu_knots`, columns follow `nu_knots`. Immutable after
/// construction.
#[derive(Debug, Clone)]
pub struct LambdaGrid {
    log_mu_knots: Vec<f64>,
    nu_knots: Vec<f64>,
    /// Row-major: `eta_values[i * nu_knots.len() + j]` for knot `(i, j)`.
    eta_values: Vec<f64>,
    solve_tolerance: f64,
    version: String,
}

fn check_knots(name: &'static str, knots: &[f64]) -> Result<()> {
    if knots.is_empty() {
        return Err(Error::EmptyInput("grid knot sequence"));
    }
    for w in knots.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::InvalidParameter {
                name,
                value: w[1],
                reason: "knots must be strictly increasing",
            });
        }
    }
    if knots.iter().any(|k| !k.is_finite()) {
        return Err(Error::InvalidParameter {
            name,
            value: f64::NAN,
            reason: "knots must be finite",
        });
    }
    Ok(())
}

impl LambdaGrid {
    /// Solve `eta` at every knot pair. Knot solves are independent and run
    /// in parallel; results land in disjoint cells and the grid is
    /// immutable afterwards.
    pub fn build(log_mu_knots: &[f64], nu_knots: &[f64], tol: f64) -> Result<Self> {
        check_knots("log_mu_knots", log_mu_knots)?;
        check_knots("nu_knots", nu_knots)?;
        let cols = nu_knots.len();
        let eta_values: Vec<f64> = log_mu_knots
            .par_iter()
            .flat_map_iter(|&lm| {
                let mu = lm.exp();
                nu_knots.iter().map(move |&nu| (mu, nu))
            })
            .map(|(mu, nu)| {
                let mp = MeanParams::new(mu, nu)?;
                solve_eta_with(&mp, tol, DEFAULT_TAIL_TOL)
            })
            .collect::<Result<Vec<f64>>>()?;

        // The mean is increasing in eta, so eta must increase in mu at
        // fixed nu; a violation would mean a solver defect.
        for j in 0..cols {
            for i in 1..log_mu_knots.len() {
                let prev = eta_values[(i - 1) * cols + j];
                let cur = eta_values[i * cols + j];
                if !(prev < cur) {
                    return Err(Error::GridFormat(format!(
                        "eta not increasing in log mu at knot ({i}, {j}): {prev} >= {cur}"
                    )));
                }
            }
        }
        Ok(LambdaGrid {
            log_mu_knots: log_mu_knots.to_vec(),
            nu_knots: nu_knots.to_vec(),
            eta_values,
            solve_tolerance: tol,
            version: GRID_FORMAT_VERSION.to_string(),
        })
    }

    pub fn log_mu_knots(&self) -> &[f64] {
        &self.log_mu_knots
    }

    pub fn nu_knots(&self) -> &[f64] {
        &self.nu_knots
    }

    pub fn solve_tolerance(&self) -> f64 {
        self.solve_tolerance
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// Stored value at knot indices `(i, j)`.
    pub fn eta_at_knot(&self, i: usize, j: usize) -> f64 {
        self.eta_values[i * self.nu_knots.len() + j]
    }

    /// Bilinear interpolation of `eta` at `(log mu, nu)`. Exact at knots.
    pub fn interpolate_eta(&self, mp: &MeanParams) -> Result<f64> {
        if mp.mu() <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: mp.mu(),
                reason: "grid queries need mu > 0",
            });
        }
        let q_mu = mp.mu().ln();
        let q_nu = mp.nu();
        let (lm, nn) = (&self.log_mu_knots, &self.nu_knots);
        let inside = |q: f64, knots: &[f64]| q >= knots[0] && q <= knots[knots.len() - 1];
        if !inside(q_mu, lm) || !inside(q_nu, nn) {
            return Err(Error::GridRange {
                log_mu: q_mu,
                nu: q_nu,
                log_mu_min: lm[0],
                log_mu_max: lm[lm.len() - 1],
                nu_min: nn[0],
                nu_max: nn[nn.len() - 1],
            });
        }
        let (i, t) = locate(lm, q_mu);
        let (j, s) = locate(nn, q_nu);
        let cols = nn.len();
        let v = |i: usize, j: usize| self.eta_values[i * cols + j];
        if lm.len() == 1 && nn.len() == 1 {
            return Ok(v(0, 0));
        }
        let row0 = if cols == 1 {
            v(i, 0)
        } else {
            (1.0 - s) * v(i, j) + s * v(i, j + 1)
        };
        if lm.len() == 1 {
            return Ok(row0);
        }
        let row1 = if cols == 1 {
            v(i + 1, 0)
        } else {
            (1.0 - s) * v(i + 1, j) + s * v(i + 1, j + 1)
        };
        Ok((1.0 - t) * row0 + t * row1)
    }

    /// Serialize to the versioned text format.
    pub fn to_text(&self) -> String {
        let cols = self.nu_knots.len();
        let mut out = String::new();
        out.push_str(&self.version);
        out.push('\n');
        out.push_str(&format!("solve_tolerance {}\n", format_g17(self.solve_tolerance)));
        out.push_str(&format!("log_mu_knots {}\n", self.log_mu_knots.len()));
        out.push_str(&join_g17(&self.log_mu_knots));
        out.push('\n');
        out.push_str(&format!("nu_knots {}\n", cols));
        out.push_str(&join_g17(&self.nu_knots));
        out.push('\n');
        out.push_str("eta_values\n");
        for row in self.eta_values.chunks(cols) {
            out.push_str(&join_g17(row));
            out.push('\n');
        }
        out
    }

    /// Parse the versioned text format; unknown versions are rejected.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let version = lines
            .next()
            .ok_or_else(|| Error::GridFormat("empty document".into()))?
            .trim();
        if version != GRID_FORMAT_VERSION {
            return Err(Error::GridFormat(format!(
                "unknown format version {version:?} (expected {GRID_FORMAT_VERSION:?})"
            )));
        }
        let tol_line = next_line(&mut lines, "solve_tolerance")?;
        let solve_tolerance = parse_field(&tol_line, "solve_tolerance")?;
        let n_mu = parse_field::<usize>(&next_line(&mut lines, "log_mu_knots")?, "log_mu_knots")?;
        let log_mu_knots = parse_floats(&next_line(&mut lines, "log mu knot values")?, n_mu)?;
        let n_nu = parse_field::<usize>(&next_line(&mut lines, "nu_knots")?, "nu_knots")?;
        let nu_knots = parse_floats(&next_line(&mut lines, "nu knot values")?, n_nu)?;
        let marker = next_line(&mut lines, "eta_values")?;
        if marker.trim() != "eta_values" {
            return Err(Error::GridFormat(format!(
                "expected eta_values marker, got {marker:?}"
            )));
        }
        let mut eta_values = Vec::with_capacity(n_mu * n_nu);
        for _ in 0..n_mu {
            let row = parse_floats(&next_line(&mut lines, "eta row")?, n_nu)?;
            eta_values.extend(row);
        }
        check_knots("log_mu_knots", &log_mu_knots)?;
        check_knots("nu_knots", &nu_knots)?;
        Ok(LambdaGrid {
            log_mu_knots,
            nu_knots,
            eta_values,
            solve_tolerance,
            version: version.to_string(),
        })
    }
}

/// Cell index and interpolation weight for a query inside the knot hull.
/// Queries at the last knot map to the previous cell with weight exactly 1.
fn locate(knots: &[f64], q: f64) -> (usize, f64) {
    if knots.len() == 1 {
        return (0, 0.0);
    }
    let idx = match knots.iter().position(|&k| q < k) {
        Some(0) => 0,
        Some(p) => p - 1,
        None => knots.len() - 2,
    };
    let t = (q - knots[idx]) / (knots[idx + 1] - knots[idx]);
    (idx, t)
}

fn join_g17(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format_g17(*v))
        .collect::<Vec<_>>()
        .join(" ")
}

fn next_line<'a>(lines: &mut std::str::Lines<'a>, what: &str) -> Result<String> {
    lines
        .next()
        .map(|s| s.to_string())
        .ok_or_else(|| Error::GridFormat(format!("missing {what} line")))
}

fn parse_field<T: std::str::FromStr>(line: &str, key: &str) -> Result<T> {
    let rest = line
        .trim()
        .strip_prefix(key)
        .ok_or_else(|| Error::GridFormat(format!("expected {key}, got {line:?}")))?;
    rest.trim()
        .parse::<T>()
        .map_err(|_| Error::GridFormat(format!("bad {key} value in {line:?}")))
}

fn parse_floats(line: &str, expected: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = line
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| Error::GridFormat(format!("bad float {tok:?}")))
        })
        .collect::<Result<_>>()?;
    if values.len() != expected {
        return Err(Error::GridFormat(format!(
            "expected {expected} values, got {}",
            values.len()
        )));
    }
    Ok(values)
}
