//! Strong error estimation on coupled paths and empirical convergence rates.
//!
//! Every Monte Carlo path draws one Brownian path on the reference grid. The
//! reference solution (randomized Milstein, one fine cell per step) and each
//! coarse solution are computed on that same path, the coarse ones with the
//! reference grid as their quadrature sub-grid, so the observed differences
//! measure discretization error rather than sampling noise.

use std::fmt::Write as _;

use log::warn;
use rayon::prelude::*;

use crate::error::{Result, SvieError};
use crate::problem::SvieProblem;
use crate::randomness::{generate_fine_noise, GridSpec};
use crate::scheme::{simulate, SchemeTag};

/// One row per coarse level: `sqrt(E|X_N^h - X_ref(T)|²)` and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub coarse_n: usize,
    pub h: f64,
    pub l2_error: f64,
    pub std_error: f64,
    pub paths: usize,
}

/// Rows sorted by descending step size.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

pub const CSV_HEADER: &str = "N,h,l2_error,std_error,paths";

impl ErrorTable {
    pub fn new(mut rows: Vec<ErrorRow>) -> Self {
        rows.sort_by(|a, b| b.h.total_cmp(&a.h));
        Self { rows }
    }

    /// CSV with [`CSV_HEADER`] and 10 significant digits per real column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.coarse_n,
                format_significant(r.h, 10),
                format_significant(r.l2_error, 10),
                format_significant(r.std_error, 10),
                r.paths
            );
        }
        out
    }
}

/// Decimal (non-exponent) rendering of `x` with `digits` significant digits.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".to_string() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i64;
    // rounding can carry into the next decade, e.g. 9.9999999999 -> 10.00000000
    let decimals = |m: i64| (digits as i64 - 1 - m).max(0) as usize;
    let s = format!("{:.*}", decimals(magnitude), x);
    let rounded: f64 = s.parse().unwrap_or(x);
    let m2 = rounded.abs().log10().floor() as i64;
    if m2 != magnitude {
        format!("{:.*}", decimals(m2), x)
    } else {
        s
    }
}

/// Least-squares fit of `log2(error)` against `log2(h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `min{1 - 2β, 1 - α}`.
    pub theoretical: f64,
    /// Temporal Hölder exponent of the exact solution, `min{1/2 - β, 1 - α}`.
    pub holder: f64,
}

/// Strong convergence order `min{1 - 2β, 1 - α}` of the randomized Milstein scheme.
pub fn theoretical_rate(alpha: f64, beta: f64) -> f64 {
    (1.0 - 2.0 * beta).min(1.0 - alpha)
}

/// Hölder exponent `min{1/2 - β, 1 - α}` of the solution paths.
pub fn holder_exponent(alpha: f64, beta: f64) -> f64 {
    (0.5 - beta).min(1.0 - alpha)
}

pub fn estimate_rate(table: &ErrorTable, alpha: f64, beta: f64) -> Result<RateEstimate> {
    let mut points = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        if row.l2_error > 0.0 && row.l2_error.is_finite() && row.h > 0.0 {
            points.push((row.h.log2(), row.l2_error.log2()));
        } else {
            warn!("excluding N = {} from the rate fit: error {}", row.coarse_n, row.l2_error);
        }
    }
    if points.len() < 2 {
        return Err(SvieError::InsufficientData(points.len()));
    }
    let k = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return Err(SvieError::InsufficientData(1));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    Ok(RateEstimate {
        slope,
        intercept,
        r_squared,
        theoretical: theoretical_rate(alpha, beta),
        holder: holder_exponent(alpha, beta),
    })
}

/// Settings of a coupled strong-error study beyond the problem itself.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyOptions {
    pub levels: Vec<usize>,
    pub reference_n: usize,
    pub paths: usize,
    pub seed: u64,
    /// Scheme run on the coarse levels; the reference is always randomized Milstein.
    pub scheme: SchemeTag,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl StudyOptions {
    /// Reference `2^8` steps, 500 paths, levels `2^4..2^7`.
    pub fn paper_defaults(seed: u64) -> Self {
        Self {
            levels: vec![16, 32, 64, 128],
            reference_n: 256,
            paths: 500,
            seed,
            scheme: SchemeTag::RandomizedMilstein,
            threads: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.paths < 2 {
            return Err(SvieError::Domain(format!("need at least 2 paths, got {}", self.paths)));
        }
        if self.levels.is_empty() {
            return Err(SvieError::InvalidGrid("no coarse levels".into()));
        }
        if self.reference_n == 0 {
            return Err(SvieError::InvalidGrid("reference step count must be positive".into()));
        }
        for &level in &self.levels {
            if level == 0 || self.reference_n % level != 0 {
                return Err(SvieError::NotDivisible { len: self.reference_n, factor: level });
            }
        }
        Ok(())
    }
}

/// Squared terminal errors `|X_N^h - X_ref(T)|²` of one path, one per level.
fn path_errors(problem: &SvieProblem, options: &StudyOptions, path: u64) -> Result<Vec<f64>> {
    let horizon = problem.horizon();
    let reference_grid = GridSpec::new(horizon, options.reference_n, 1)?;
    let mut tau_levels = options.levels.clone();
    tau_levels.push(options.reference_n);
    tau_levels.sort_unstable();
    tau_levels.dedup();
    let noise = generate_fine_noise(options.seed, path, &reference_grid, &tau_levels)?;
    let reference = simulate(problem, &reference_grid, &noise, SchemeTag::RandomizedMilstein)?;
    options
        .levels
        .iter()
        .map(|&level| {
            let grid = GridSpec::new(horizon, level, options.reference_n / level)?;
            let coarse = simulate(problem, &grid, &noise, options.scheme)?;
            let e = coarse.terminal() - reference.terminal();
            Ok(e * e)
        })
        .collect()
}

/// Monte Carlo strong error at `T` for each level against the reference solution.
pub fn strong_error(problem: &SvieProblem, options: &StudyOptions) -> Result<ErrorTable> {
    options.validate()?;
    let run = || -> Result<Vec<Vec<f64>>> {
        (0..options.paths as u64)
            .into_par_iter()
            .map(|p| path_errors(problem, options, p))
            .collect()
    };
    let per_path = match options.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| SvieError::Domain(format!("cannot build thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };

    let paths = options.paths;
    let rows = options
        .levels
        .iter()
        .enumerate()
        .map(|(i, &level)| {
            // fixed path order keeps the reduction independent of scheduling
            let squared: Vec<f64> = per_path.iter().map(|errs| errs[i]).collect();
            let (l2_error, std_error) = root_mean_with_error(&squared);
            ErrorRow {
                coarse_n: level,
                h: problem.horizon() / level as f64,
                l2_error,
                std_error,
                paths,
            }
        })
        .collect();
    Ok(ErrorTable::new(rows))
}

/// `sqrt(mean)` of squared errors and its delta-method standard error
/// `sd(e²) / (2 sqrt(M) sqrt(mean))`.
fn root_mean_with_error(squared: &[f64]) -> (f64, f64) {
    let m = squared.len() as f64;
    let mean = squared.iter().sum::<f64>() / m;
    if mean == 0.0 {
        return (0.0, 0.0);
    }
    let var = squared.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let root = mean.sqrt();
    (root, (var / m).sqrt() / (2.0 * root))
}
