//! Time-stepping schemes on a coarse grid with fine-grid stochastic quadrature.
//!
//! All three schemes are convolutions: `X_n` is rebuilt from the whole history
//! `X_0, ..., X_{n-1}` at every step because the kernel weights depend on `t_n`.
//!
//! * [`SchemeTag::RandomizedMilstein`]: drift evaluated at the stage value
//!   `Y_j` placed at the random node `t_{j-1} + τ_j h`, plus the `σ'`-weighted
//!   double-integral corrections.
//! * [`SchemeTag::RandomizedEM`]: the same without the corrections.
//! * [`SchemeTag::ClassicalEM`]: left-point drift with exact kernel weights.
//!
//! The correction for step `j` is `Σ_s (t_n - s)^{-β} σ'(X_{j-1}) A_j(s) ΔB_s`
//! over the fine cells `s` of `[t_{j-1}, t_j)`. The inner accumulation
//! `A_j(s)` does not depend on `n`, so it is computed once per step and kept in
//! a [`StageCache`]; this brings the correction cost from `O(N³ F²)` down to
//! `O(N² F²)` kernel evaluations for `N` steps with `F` fine cells each.

use std::borrow::Cow;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Result, SvieError};
use crate::kernel::{kernel_at_lag, lag_power, KernelExponent};
use crate::problem::SvieProblem;
use crate::quadrature::LagTable;
use crate::randomness::{FineNoise, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeTag {
    RandomizedMilstein,
    RandomizedEM,
    ClassicalEM,
}

impl SchemeTag {
    pub const ALL: [SchemeTag; 3] = [Self::RandomizedMilstein, Self::RandomizedEM, Self::ClassicalEM];

    /// Short name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            Self::RandomizedMilstein => "rmilstein",
            Self::RandomizedEM => "rem",
            Self::ClassicalEM => "em",
        }
    }

    pub fn uses_tau(self) -> bool {
        !matches!(self, Self::ClassicalEM)
    }
}

impl fmt::Display for SchemeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for SchemeTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.cli_name() == s)
            .ok_or_else(|| format!("unknown scheme '{s}' (expected rmilstein, rem or em)"))
    }
}

/// Coarse-node values `X_0^h, ..., X_N^h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub level: usize,
    pub horizon: f64,
    pub values: Vec<f64>,
    pub scheme: SchemeTag,
}

impl Trajectory {
    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("trajectory holds at least X_0")
    }

    /// `(n, t_n, X_n)` triples.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let h = self.horizon / self.level as f64;
        self.values.iter().enumerate().map(move |(n, &x)| (n, n as f64 * h, x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulateOptions {
    /// Keep the inner accumulations `A_j(s)` across outer steps. Turning this
    /// off recomputes them for every `n` and exists for cross-checking.
    pub reuse_stage_cache: bool,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self { reuse_stage_cache: true }
    }
}

/// Per-step data that does not depend on the outer index `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageEntry {
    /// `Y_j^{h,τ}`.
    pub stage_value: f64,
    /// `b(Y_j^{h,τ})`.
    pub stage_drift: f64,
    /// `A_j(s)` at the left ends `s = t_{j-1} + m ĥ`, `m = 0..refine`.
    pub inner: Vec<f64>,
}

/// Stage values and inner accumulations for steps `1..=len()`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageCache {
    entries: Vec<StageEntry>,
}

impl StageCache {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry of step `j`, `1 ≤ j ≤ len()`.
    pub fn get(&self, j: usize) -> Option<&StageEntry> {
        j.checked_sub(1).and_then(|i| self.entries.get(i))
    }

    /// Fills the cache for every step whose history is known, i.e. steps
    /// `1..=history.len()`.
    pub fn build(
        problem: &SvieProblem,
        grid: &GridSpec,
        noise: &FineNoise,
        history: &[f64],
    ) -> Result<Self> {
        let increments = checked_increments(grid, noise)?;
        let taus = level_taus(noise, grid.coarse_n())?;
        let engine = Engine::new(problem, grid, &increments, Some(taus));
        let coeffs = Coefficients::from_history(problem, history);
        let entries = (1..=history.len())
            .map(|j| engine.stage_entry(&coeffs, history[j - 1], j, true))
            .collect::<Result<_>>()?;
        Ok(Self { entries })
    }
}

/// `b`, `σ`, `σ'` evaluated along the history.
#[derive(Debug, Default)]
struct Coefficients {
    drift: Vec<f64>,
    diffusion: Vec<f64>,
    derivative: Vec<f64>,
}

impl Coefficients {
    fn from_history(problem: &SvieProblem, history: &[f64]) -> Self {
        let mut c = Self::default();
        for &x in history {
            c.push(problem, x);
        }
        c
    }

    fn push(&mut self, problem: &SvieProblem, x: f64) {
        self.drift.push(problem.drift(x));
        self.diffusion.push(problem.diffusion(x));
        self.derivative.push(problem.diffusion_derivative(x));
    }
}

struct Engine<'a> {
    problem: &'a SvieProblem,
    grid: GridSpec,
    increments: &'a [f64],
    taus: Option<&'a [f64]>,
    alpha: KernelExponent,
    beta: KernelExponent,
    table: LagTable,
}

impl<'a> Engine<'a> {
    fn new(
        problem: &'a SvieProblem,
        grid: &GridSpec,
        increments: &'a [f64],
        taus: Option<&'a [f64]>,
    ) -> Self {
        Self {
            problem,
            grid: *grid,
            increments,
            taus,
            alpha: problem.alpha(),
            beta: problem.beta(),
            table: LagTable::new(grid.fine_step(), grid.fine_cells(), problem.beta(), problem.alpha()),
        }
    }

    /// Fine cells of coarse step `k` (1-based), i.e. of `[t_{k-1}, t_k)`.
    #[inline]
    fn cells(&self, k: usize) -> Range<usize> {
        let f = self.grid.refine();
        (k - 1) * f..k * f
    }

    fn tau(&self, j: usize) -> Result<f64> {
        self.taus
            .and_then(|t| t.get(j - 1))
            .copied()
            .ok_or(SvieError::MissingTau { level: self.grid.coarse_n(), step: j })
    }

    /// `Y_j^{h,τ}` from the coefficients of `X_0..X_{j-1}`.
    fn stage_value(&self, coeffs: &Coefficients, x_prev: f64, j: usize) -> Result<f64> {
        let h = self.grid.step();
        let hat = self.grid.fine_step();
        let f = self.grid.refine();
        let tau = self.tau(j)?;
        let start = (j - 1) * f;
        // t_{j-1} + τ_j h sits `offset` past the fine node `start`
        let offset = tau * h;
        let p = 1.0 - self.alpha.value();

        let mut drift_history = 0.0;
        let mut noise_history = 0.0;
        for i in 1..j {
            let cells = self.cells(i);
            let (a, b) = (cells.start, cells.end);
            let moved = (lag_power((start - a) as f64 * hat + offset, p)
                - lag_power((start - b) as f64 * hat + offset, p))
                / p;
            drift_history +=
                coeffs.drift[i - 1] * (moved - self.table.drift_integral(start, a, b));
            let mut acc = 0.0;
            for r in cells {
                let lag = (start - r) as f64 * hat;
                acc += (kernel_at_lag(self.beta, lag + offset) - self.table.kernel(start - r))
                    * self.increments[r];
            }
            noise_history += coeffs.diffusion[i - 1] * acc;
        }

        let local_drift = coeffs.drift[j - 1] * lag_power(offset, p) / p;

        // the Brownian window stops at the last fine node not after t_{j-1} + τ_j h
        let covered = ((tau * f as f64).floor() as usize).min(f - 1);
        let mut acc = 0.0;
        for r in start..start + covered {
            acc += kernel_at_lag(self.beta, offset - (r - start) as f64 * hat) * self.increments[r];
        }
        let local_noise = coeffs.diffusion[j - 1] * acc;

        let mut y = x_prev;
        y += drift_history;
        y += noise_history;
        y += local_drift;
        y += local_noise;
        Ok(y)
    }

    /// `A_j(s)` for the fine left ends `s` of step `j`.
    fn inner_accumulations(&self, coeffs: &Coefficients, j: usize) -> Vec<f64> {
        let f = self.grid.refine();
        let anchor = (j - 1) * f;
        let table = &self.table;
        (anchor..anchor + f)
            .map(|s| {
                let mut drift_difference = 0.0;
                let mut noise_difference = 0.0;
                for k in 1..j {
                    let cells = self.cells(k);
                    let (a, b) = (cells.start, cells.end);
                    drift_difference += coeffs.drift[k - 1]
                        * (table.drift_integral(s, a, b) - table.drift_integral(anchor, a, b));
                    noise_difference += coeffs.diffusion[k - 1]
                        * table.difference_increments(s, anchor, self.increments, cells);
                }
                let local_drift = coeffs.drift[j - 1] * table.drift_integral(s, anchor, s);
                let local_noise =
                    coeffs.diffusion[j - 1] * table.weighted_increments(s, self.increments, anchor..s);
                drift_difference + local_drift + noise_difference + local_noise
            })
            .collect()
    }

    fn stage_entry(
        &self,
        coeffs: &Coefficients,
        x_prev: f64,
        j: usize,
        with_inner: bool,
    ) -> Result<StageEntry> {
        let stage_value = self.stage_value(coeffs, x_prev, j)?;
        Ok(StageEntry {
            stage_value,
            stage_drift: self.problem.drift(stage_value),
            inner: if with_inner { self.inner_accumulations(coeffs, j) } else { Vec::new() },
        })
    }

    /// `X_n` for the randomized schemes. `inner(j)` supplies `A_j` when the
    /// Milstein corrections are wanted.
    fn randomized_value<'c, I>(
        &self,
        coeffs: &Coefficients,
        stage_drift: &[f64],
        n: usize,
        inner: Option<I>,
    ) -> Result<f64>
    where
        I: Fn(usize) -> Result<Cow<'c, [f64]>>,
    {
        let h = self.grid.step();
        let t_n = n * self.grid.refine();
        let mut drift = 0.0;
        let mut diffusion = 0.0;
        let mut correction = 0.0;
        for j in 1..=n {
            let tau = self.tau(j)?;
            let lag = ((n + 1 - j) as f64 - tau) * h;
            drift += h * kernel_at_lag(self.alpha, lag) * stage_drift[j - 1];
            diffusion += coeffs.diffusion[j - 1]
                * self.table.weighted_increments(t_n, self.increments, self.cells(j));
            if let Some(inner) = &inner {
                let a = inner(j)?;
                let mut acc = 0.0;
                for (m, i) in self.cells(j).enumerate() {
                    acc += self.table.kernel(t_n - i) * a[m] * self.increments[i];
                }
                correction += coeffs.derivative[j - 1] * acc;
            }
        }
        Ok(self.problem.x0() + drift + diffusion + correction)
    }

    fn classical_value(&self, coeffs: &Coefficients, n: usize) -> f64 {
        let t_n = n * self.grid.refine();
        let mut drift = 0.0;
        let mut diffusion = 0.0;
        for j in 1..=n {
            let cells = self.cells(j);
            drift += coeffs.drift[j - 1] * self.table.drift_integral(t_n, cells.start, cells.end);
            diffusion += coeffs.diffusion[j - 1]
                * self.table.weighted_increments(t_n, self.increments, cells);
        }
        self.problem.x0() + drift + diffusion
    }
}

fn checked_increments<'n>(grid: &GridSpec, noise: &'n FineNoise) -> Result<Cow<'n, [f64]>> {
    let rel = (noise.horizon() - grid.horizon()).abs() / grid.horizon();
    if rel > 1e-12 {
        return Err(SvieError::InvalidGrid(format!(
            "noise covers [0, {}] but the grid covers [0, {}]",
            noise.horizon(),
            grid.horizon()
        )));
    }
    noise.increments_for(grid.fine_cells())
}

fn level_taus(noise: &FineNoise, level: usize) -> Result<&[f64]> {
    noise.taus(level).ok_or(SvieError::MissingTau { level, step: 1 })
}

fn check_history(history: &[f64], index: usize, grid: &GridSpec) -> Result<()> {
    if index == 0 || index > grid.coarse_n() {
        return Err(SvieError::Domain(format!(
            "step {index} outside 1..={}",
            grid.coarse_n()
        )));
    }
    if history.len() != index {
        return Err(SvieError::Domain(format!(
            "step {index} needs {index} history values, got {}",
            history.len()
        )));
    }
    Ok(())
}

/// Stage value `Y_j^{h,τ}` from the history `X_0..X_{j-1}` (`history.len() == j`).
pub fn stage_y(
    problem: &SvieProblem,
    grid: &GridSpec,
    noise: &FineNoise,
    history: &[f64],
    j: usize,
) -> Result<f64> {
    check_history(history, j, grid)?;
    let increments = checked_increments(grid, noise)?;
    let taus = level_taus(noise, grid.coarse_n())?;
    let engine = Engine::new(problem, grid, &increments, Some(taus));
    let coeffs = Coefficients::from_history(problem, history);
    engine.stage_value(&coeffs, history[j - 1], j)
}

/// Randomized Milstein value `X_n^h` from the history `X_0..X_{n-1}` and a
/// cache covering steps `1..=n`.
pub fn step_x(
    problem: &SvieProblem,
    grid: &GridSpec,
    noise: &FineNoise,
    history: &[f64],
    cache: &StageCache,
    n: usize,
) -> Result<f64> {
    check_history(history, n, grid)?;
    if cache.len() < n {
        return Err(SvieError::MissingCache(cache.len() + 1));
    }
    let increments = checked_increments(grid, noise)?;
    let taus = level_taus(noise, grid.coarse_n())?;
    let engine = Engine::new(problem, grid, &increments, Some(taus));
    let coeffs = Coefficients::from_history(problem, history);
    let stage_drift: Vec<f64> = cache.entries[..n].iter().map(|e| e.stage_drift).collect();
    let refine = grid.refine();
    engine.randomized_value(
        &coeffs,
        &stage_drift,
        n,
        Some(|j: usize| {
            let entry = cache.get(j).ok_or(SvieError::MissingCache(j))?;
            if entry.inner.len() != refine {
                return Err(SvieError::MissingCache(j));
            }
            Ok(Cow::Borrowed(entry.inner.as_slice()))
        }),
    )
}

pub fn simulate(
    problem: &SvieProblem,
    grid: &GridSpec,
    noise: &FineNoise,
    scheme: SchemeTag,
) -> Result<Trajectory> {
    simulate_with(problem, grid, noise, scheme, &SimulateOptions::default())
}

/// Runs `scheme` over all `N` coarse steps of `grid` on one noise realization.
pub fn simulate_with(
    problem: &SvieProblem,
    grid: &GridSpec,
    noise: &FineNoise,
    scheme: SchemeTag,
    options: &SimulateOptions,
) -> Result<Trajectory> {
    let n_steps = grid.coarse_n();
    let increments = checked_increments(grid, noise)?;
    let taus = if scheme.uses_tau() { Some(level_taus(noise, n_steps)?) } else { None };
    let engine = Engine::new(problem, grid, &increments, taus);

    let mut values = Vec::with_capacity(n_steps + 1);
    values.push(problem.x0());
    let mut coeffs = Coefficients::default();
    let mut cache = StageCache::default();
    let keep_inner = scheme == SchemeTag::RandomizedMilstein && options.reuse_stage_cache;
    let mut stage_drift = Vec::with_capacity(n_steps);

    for n in 1..=n_steps {
        let x_prev = values[n - 1];
        coeffs.push(problem, x_prev);
        let x = match scheme {
            SchemeTag::ClassicalEM => engine.classical_value(&coeffs, n),
            SchemeTag::RandomizedEM => {
                let entry = engine.stage_entry(&coeffs, x_prev, n, false)?;
                stage_drift.push(entry.stage_drift);
                engine.randomized_value(&coeffs, &stage_drift, n, None::<fn(usize) -> Result<Cow<'static, [f64]>>>)?
            }
            SchemeTag::RandomizedMilstein => {
                let entry = engine.stage_entry(&coeffs, x_prev, n, keep_inner)?;
                stage_drift.push(entry.stage_drift);
                cache.entries.push(entry);
                if keep_inner {
                    engine.randomized_value(
                        &coeffs,
                        &stage_drift,
                        n,
                        Some(|j: usize| Ok(Cow::Borrowed(cache.entries[j - 1].inner.as_slice()))),
                    )?
                } else {
                    engine.randomized_value(
                        &coeffs,
                        &stage_drift,
                        n,
                        Some(|j: usize| Ok(Cow::Owned(engine.inner_accumulations(&coeffs, j)))),
                    )?
                }
            }
        };
        values.push(x);
    }

    Ok(Trajectory { level: n_steps, horizon: grid.horizon(), values, scheme })
}
