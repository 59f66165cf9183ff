//! Random inputs of one simulated path: Brownian increments on a fine grid and
//! the uniform drift nodes `τ_j` attached to coarse steps.
//!
//! Both come from ChaCha8 streams keyed by `(master_seed, stream tag)` with the
//! path index as the ChaCha stream id, so a path's noise depends only on
//! `(master_seed, path_index)` and never on the order in which paths are
//! simulated. The Brownian stream and the `τ` streams use different tags and
//! are therefore independent.

use std::borrow::Cow;
use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SvieError};

const BROWNIAN_TAG: u64 = 0x4252_4f57_4e49_414e;
const TAU_TAG: u64 = 0x5441_555f_4e4f_4445;

/// Uniform partition of `[0, T]` into `coarse_n` steps, each split into
/// `refine` fine cells for the stochastic quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    horizon: f64,
    coarse_n: usize,
    refine: usize,
}

impl GridSpec {
    pub fn new(horizon: f64, coarse_n: usize, refine: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(SvieError::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if coarse_n == 0 || refine == 0 {
            return Err(SvieError::InvalidGrid(format!(
                "step count and refinement must be at least 1, got N = {coarse_n}, refine = {refine}"
            )));
        }
        coarse_n
            .checked_mul(refine)
            .ok_or_else(|| SvieError::InvalidGrid("fine cell count overflows".into()))?;
        Ok(Self { horizon, coarse_n, refine })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn coarse_n(&self) -> usize {
        self.coarse_n
    }

    pub fn refine(&self) -> usize {
        self.refine
    }

    pub fn fine_cells(&self) -> usize {
        self.coarse_n * self.refine
    }

    /// Coarse step `h = T / N`.
    pub fn step(&self) -> f64 {
        self.horizon / self.coarse_n as f64
    }

    /// Fine step `ĥ = T / (N · refine)`.
    pub fn fine_step(&self) -> f64 {
        self.horizon / self.fine_cells() as f64
    }

    /// Coarse node `t_n`, placed on the fine grid as `(n · refine) · ĥ`.
    pub fn node(&self, n: usize) -> f64 {
        self.fine_node(n * self.refine)
    }

    pub fn fine_node(&self, m: usize) -> f64 {
        m as f64 * self.fine_step()
    }
}

/// Brownian increments of one path on its finest grid together with the
/// `τ_j` draws for every coarse level that will be simulated on it.
#[derive(Debug, Clone, PartialEq)]
pub struct FineNoise {
    horizon: f64,
    fine_step: f64,
    fine_increments: Vec<f64>,
    taus_by_level: BTreeMap<usize, Vec<f64>>,
}

impl FineNoise {
    /// Assembles noise from explicit parts. Every `τ` must lie in `(0, 1)`.
    pub fn from_parts(
        horizon: f64,
        fine_increments: Vec<f64>,
        taus_by_level: BTreeMap<usize, Vec<f64>>,
    ) -> Result<Self> {
        if fine_increments.is_empty() {
            return Err(SvieError::InvalidGrid("no fine increments".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(SvieError::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        for (&level, taus) in &taus_by_level {
            if taus.len() != level {
                return Err(SvieError::InvalidGrid(format!(
                    "level {level} carries {} uniform draws",
                    taus.len()
                )));
            }
            if let Some(bad) = taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
                return Err(SvieError::Domain(format!("tau = {bad} is outside (0, 1)")));
            }
        }
        Ok(Self {
            horizon,
            fine_step: horizon / fine_increments.len() as f64,
            fine_increments,
            taus_by_level,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn fine_step(&self) -> f64 {
        self.fine_step
    }

    pub fn fine_increments(&self) -> &[f64] {
        &self.fine_increments
    }

    pub fn levels(&self) -> impl Iterator<Item = usize> + '_ {
        self.taus_by_level.keys().copied()
    }

    pub fn taus(&self, level: usize) -> Option<&[f64]> {
        self.taus_by_level.get(&level).map(Vec::as_slice)
    }

    /// Increments on a grid with `cells` cells, summing fine increments when
    /// the noise is finer than requested.
    pub fn increments_for(&self, cells: usize) -> Result<Cow<'_, [f64]>> {
        let len = self.fine_increments.len();
        if cells == 0 || len % cells != 0 {
            return Err(SvieError::NotDivisible { len, factor: cells.max(1) });
        }
        if cells == len {
            Ok(Cow::Borrowed(&self.fine_increments))
        } else {
            coarsen_increments(&self.fine_increments, len / cells).map(Cow::Owned)
        }
    }
}

/// Draws the Brownian increments for `grid.fine_cells()` cells and an
/// independent set of `τ` values for each coarse level in `levels`.
pub fn generate_fine_noise(
    master_seed: u64,
    path_index: u64,
    grid: &GridSpec,
    levels: &[usize],
) -> Result<FineNoise> {
    if levels.is_empty() {
        return Err(SvieError::InvalidGrid("no coarse levels requested".into()));
    }
    let cells = grid.fine_cells();
    let fine_step = grid.fine_step();
    let scale = fine_step.sqrt();
    let mut rng = stream_rng(master_seed, BROWNIAN_TAG, path_index);
    let fine_increments: Vec<f64> = (0..cells)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();

    let mut taus_by_level = BTreeMap::new();
    for &level in levels {
        if level == 0 {
            return Err(SvieError::InvalidGrid("coarse level must be at least 1".into()));
        }
        let mut rng = stream_rng(master_seed, TAU_TAG ^ (level as u64).rotate_left(32), path_index);
        let taus: Vec<f64> = (0..level).map(|_| open_unit(&mut rng)).collect();
        taus_by_level.insert(level, taus);
    }

    Ok(FineNoise {
        horizon: grid.horizon(),
        fine_step,
        fine_increments,
        taus_by_level,
    })
}

/// Sums consecutive blocks of `factor` increments, left to right.
pub fn coarsen_increments(fine: &[f64], factor: usize) -> Result<Vec<f64>> {
    if factor == 0 || fine.len() % factor != 0 {
        return Err(SvieError::NotDivisible { len: fine.len(), factor });
    }
    Ok(fine
        .chunks_exact(factor)
        .map(|block| block.iter().fold(0.0, |acc, x| acc + x))
        .collect())
}

/// The stored `τ_j` of coarse level `level`, `1 ≤ j ≤ level`.
pub fn tau_for_step(noise: &FineNoise, level: usize, j: usize) -> Result<f64> {
    noise
        .taus(level)
        .and_then(|taus| j.checked_sub(1).and_then(|i| taus.get(i)))
        .copied()
        .ok_or(SvieError::MissingTau { level, step: j })
}

fn stream_rng(master_seed: u64, tag: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ tag);
    rng.set_stream(path_index);
    rng
}

/// Uniform on `[0, 1)` with an exact zero moved to the smallest positive double.
fn open_unit(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    if u == 0.0 {
        f64::from_bits(1)
    } else {
        u
    }
}
