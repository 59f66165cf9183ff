//! Discretized singular integrals over windows of the fine grid.
//!
//! Stochastic (`dB`) integrals are left-point Riemann–Stieltjes sums on the
//! fine Brownian grid; the kernel is always evaluated at the left end of a
//! cell, so a window that ends at the singularity still gives finite terms.
//! Lebesgue (`dr`) integrals of the power kernels use exact antiderivatives.

use std::ops::Range;

use crate::error::{Result, SvieError};
use crate::kernel::{integral_unchecked, kernel_at_lag, lag_power, KernelExponent};
use crate::randomness::FineNoise;

/// Integrator of a singular integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Against {
    /// Lebesgue measure `dr`.
    Time,
    /// Brownian increments `dB_r`.
    Brownian,
}

/// Brownian increments on a uniform grid starting at `t = 0`.
#[derive(Debug, Clone, Copy)]
pub struct FinePath<'a> {
    increments: &'a [f64],
    step: f64,
}

impl<'a> FinePath<'a> {
    pub fn new(increments: &'a [f64], step: f64) -> Self {
        Self { increments, step }
    }

    pub fn from_noise(noise: &'a FineNoise) -> Self {
        Self::new(noise.fine_increments(), noise.fine_step())
    }

    pub fn increments(&self) -> &'a [f64] {
        self.increments
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn cells(&self) -> usize {
        self.increments.len()
    }

    #[inline]
    pub fn node(&self, m: usize) -> f64 {
        m as f64 * self.step
    }

    /// Fine node index of time `t`, if `t` sits on the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = t / self.step;
        let m = x.round();
        if !(m >= 0.0) || (x - m).abs() > 1e-9 * m.max(1.0) {
            return Err(SvieError::Misaligned { time: t, step: self.step });
        }
        let m = m as usize;
        if m > self.cells() {
            return Err(SvieError::Domain(format!(
                "time {t} lies beyond the end of the path at {}",
                self.node(self.cells())
            )));
        }
        Ok(m)
    }

    fn window(&self, a: f64, b: f64) -> Result<Range<usize>> {
        if a > b {
            return Err(SvieError::Domain(format!("window [{a}, {b}] is reversed")));
        }
        Ok(self.index_of(a)?..self.index_of(b)?)
    }
}

/// `Σ_i (t* - r_i)^{-γ} ΔB_i` over fine cells `cells`; requires `r_i < t*`.
#[inline]
pub(crate) fn kernel_weighted_increments(
    gamma: KernelExponent,
    t_star: f64,
    path: &FinePath<'_>,
    cells: Range<usize>,
) -> f64 {
    let mut acc = 0.0;
    for i in cells {
        acc += kernel_at_lag(gamma, t_star - path.node(i)) * path.increments[i];
    }
    acc
}

/// `Σ_i [(s - r_i)^{-γ} - (anchor - r_i)^{-γ}] ΔB_i`; requires `r_i < anchor ≤ s`.
#[inline]
pub(crate) fn kernel_difference_increments(
    gamma: KernelExponent,
    s: f64,
    anchor: f64,
    path: &FinePath<'_>,
    cells: Range<usize>,
) -> f64 {
    let mut acc = 0.0;
    for i in cells {
        let r = path.node(i);
        acc += (kernel_at_lag(gamma, s - r) - kernel_at_lag(gamma, anchor - r)) * path.increments[i];
    }
    acc
}

/// `∫_a^b [(s - r)^{-γ} - (anchor - r)^{-γ}] dr` in closed form; requires `b ≤ anchor ≤ s`.
#[inline]
pub(crate) fn kernel_difference_integral(
    gamma: KernelExponent,
    s: f64,
    anchor: f64,
    a: f64,
    b: f64,
) -> f64 {
    integral_unchecked(gamma, s, a, b) - integral_unchecked(gamma, anchor, a, b)
}

/// Kernel values on a uniform grid, indexed by the integer lag between nodes.
///
/// When every time involved sits on the fine grid, `(t - r)^{-γ}` depends only
/// on `(t - r) / ĥ`; a single table then replaces all transcendental calls of
/// the fine-grid sums.
#[derive(Debug, Clone)]
pub struct LagTable {
    step: f64,
    /// `(L ĥ)^{-γ}` for the Brownian kernel, `L ≥ 1`; entry 0 is unused.
    kernel: Vec<f64>,
    /// `(L ĥ)^{1-γ'}` for the drift kernel antiderivative, `L ≥ 0`.
    antiderivative: Vec<f64>,
    drift_power: f64,
}

impl LagTable {
    /// Tables up to lag `max_lag` for a Brownian kernel `γ` and a drift kernel `γ'`.
    pub fn new(step: f64, max_lag: usize, brownian: KernelExponent, drift: KernelExponent) -> Self {
        let drift_power = 1.0 - drift.value();
        let kernel = (0..=max_lag)
            .map(|l| if l == 0 { f64::INFINITY } else { kernel_at_lag(brownian, l as f64 * step) })
            .collect();
        let antiderivative = (0..=max_lag).map(|l| lag_power(l as f64 * step, drift_power)).collect();
        Self { step, kernel, antiderivative, drift_power }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `(L ĥ)^{-γ}`.
    #[inline]
    pub fn kernel(&self, lag: usize) -> f64 {
        self.kernel[lag]
    }

    /// `∫_{aĥ}^{bĥ} (tĥ - r)^{-γ'} dr` for node indices `a ≤ b ≤ t`.
    #[inline]
    pub fn drift_integral(&self, t: usize, a: usize, b: usize) -> f64 {
        (self.antiderivative[t - a] - self.antiderivative[t - b]) / self.drift_power
    }

    /// `Σ_{i ∈ cells} (tĥ - iĥ)^{-γ} ΔB_i`; requires `i < t`.
    #[inline]
    pub fn weighted_increments(&self, t: usize, increments: &[f64], cells: Range<usize>) -> f64 {
        let mut acc = 0.0;
        for i in cells {
            acc += self.kernel[t - i] * increments[i];
        }
        acc
    }

    /// `Σ_{i ∈ cells} [(sĥ - iĥ)^{-γ} - (aĥ - iĥ)^{-γ}] ΔB_i`; requires `i < a ≤ s`.
    #[inline]
    pub fn difference_increments(
        &self,
        s: usize,
        anchor: usize,
        increments: &[f64],
        cells: Range<usize>,
    ) -> f64 {
        let mut acc = 0.0;
        for i in cells {
            acc += (self.kernel[s - i] - self.kernel[anchor - i]) * increments[i];
        }
        acc
    }
}

/// Left-point sum for `∫_a^b (t* - s)^{-γ} · state · dB_s`.
pub fn singular_ito_sum(
    gamma: KernelExponent,
    t_star: f64,
    window: (f64, f64),
    state_value: f64,
    path: &FinePath<'_>,
) -> Result<f64> {
    let (a, b) = window;
    if b > t_star {
        return Err(SvieError::Domain(format!(
            "window end {b} lies past the kernel singularity {t_star}"
        )));
    }
    let cells = path.window(a, b)?;
    Ok(state_value * kernel_weighted_increments(gamma, t_star, path, cells))
}

/// `∫_{window} [(s - r)^{-γ} - (anchor - r)^{-γ}] · state` against `dr` or `dB_r`.
pub fn difference_kernel_sum(
    gamma: KernelExponent,
    s: f64,
    anchor: f64,
    window: (f64, f64),
    state_value: f64,
    path: &FinePath<'_>,
    against: Against,
) -> Result<f64> {
    let (a, b) = window;
    if !(a <= b && b <= anchor && anchor <= s) {
        return Err(SvieError::Domain(format!(
            "need window [{a}, {b}] <= anchor {anchor} <= s {s}"
        )));
    }
    let cells = path.window(a, b)?;
    if anchor == s {
        return Ok(0.0);
    }
    let raw = match against {
        Against::Time => kernel_difference_integral(gamma, s, anchor, a, b),
        Against::Brownian => kernel_difference_increments(gamma, s, anchor, path, cells),
    };
    Ok(state_value * raw)
}

/// `∫_{start}^{s} (s - r)^{-γ} · state` against `dr` (exact) or `dB_r` (left-point sum).
pub fn local_singular_sum(
    gamma: KernelExponent,
    s: f64,
    start: f64,
    state_value: f64,
    path: &FinePath<'_>,
    against: Against,
) -> Result<f64> {
    if start > s {
        return Err(SvieError::Domain(format!("window start {start} lies after s = {s}")));
    }
    let cells = path.window(start, s)?;
    let raw = match against {
        Against::Time => integral_unchecked(gamma, s, start, s),
        Against::Brownian => kernel_weighted_increments(gamma, s, path, cells),
    };
    Ok(state_value * raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::integral_power_kernel;

    fn g(x: f64) -> KernelExponent {
        KernelExponent::new(x).unwrap()
    }

    #[test]
    fn zero_state_gives_zero() {
        let dw = [0.3, -0.1, 0.2, 0.05];
        let p = FinePath::new(&dw, 0.25);
        assert_eq!(singular_ito_sum(g(0.3), 1.0, (0.0, 1.0), 0.0, &p).unwrap(), 0.0);
        assert_eq!(
            local_singular_sum(g(0.3), 1.0, 0.0, 0.0, &p, Against::Brownian).unwrap(),
            0.0
        );
    }

    #[test]
    fn single_cell_sum() {
        let h = 0.125;
        let w = 0.37;
        let dw = [w, 0.0];
        let p = FinePath::new(&dw, h);
        let v = singular_ito_sum(g(0.3), 2.0 * h, (0.0, h), 1.0, &p).unwrap();
        assert!((v - (2.0 * h).powf(-0.3) * w).abs() < 1e-15);
        // abutting the singularity uses the left endpoint
        let v = singular_ito_sum(g(0.3), h, (0.0, h), 1.0, &p).unwrap();
        assert!((v - h.powf(-0.3) * w).abs() < 1e-14);
    }

    #[test]
    fn misaligned_window_rejected() {
        let dw = [0.0; 8];
        let p = FinePath::new(&dw, 0.125);
        assert!(matches!(
            singular_ito_sum(g(0.3), 1.0, (0.0, 0.3), 1.0, &p),
            Err(SvieError::Misaligned { .. })
        ));
        assert!(singular_ito_sum(g(0.3), 0.5, (0.0, 0.75), 1.0, &p).is_err());
        assert!(singular_ito_sum(g(0.3), 2.0, (0.0, 1.5), 1.0, &p).is_err());
    }

    #[test]
    fn deterministic_surrogate_matches_closed_form() {
        // ΔB_k = ĥ turns the sum into a left Riemann sum of the kernel
        let gamma = g(0.4);
        let h = 0.25;
        let t_star = h;
        let exact = integral_power_kernel(gamma, t_star, 0.0, h).unwrap();
        let mut errors = Vec::new();
        for refine in [16usize, 64] {
            let step = h / refine as f64;
            let dw = vec![step; refine];
            let p = FinePath::new(&dw, step);
            let v = singular_ito_sum(gamma, t_star, (0.0, h), 1.0, &p).unwrap();
            let err = (v - exact).abs();
            assert!(err <= 2.0 * step.powf(1.0 - 0.4) / 0.6, "{refine}: {err}");
            errors.push(err);
        }
        assert!(errors[1] < errors[0]);
    }

    #[test]
    fn difference_vanishes_when_s_equals_anchor() {
        let dw = [0.1, -0.3, 0.2, 0.4];
        let p = FinePath::new(&dw, 0.25);
        for against in [Against::Time, Against::Brownian] {
            let v = difference_kernel_sum(g(0.3), 0.75, 0.75, (0.0, 0.5), 2.0, &p, against).unwrap();
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn difference_time_flavor() {
        let dw = [0.0; 4];
        let p = FinePath::new(&dw, 0.25);
        let v = difference_kernel_sum(g(0.3), 0.75, 0.5, (0.0, 0.25), 1.0, &p, Against::Time)
            .unwrap();
        // frozen from a 30-digit quadrature of (0.75-r)^{-0.3} - (0.5-r)^{-0.3} on [0, 0.25]
        assert!((v - -0.049_445_005_057_576_42).abs() < 1e-12, "{v}");
    }

    #[test]
    fn difference_brownian_single_cell() {
        let w = -0.42;
        let dw = [w, 0.0, 0.0, 0.0];
        let p = FinePath::new(&dw, 0.25);
        let v = difference_kernel_sum(g(0.3), 0.75, 0.5, (0.0, 0.25), 1.0, &p, Against::Brownian)
            .unwrap();
        let want = (0.75f64.powf(-0.3) - 0.5f64.powf(-0.3)) * w;
        assert!((v - want).abs() < 1e-15);
    }

    #[test]
    fn difference_ordering_errors() {
        let dw = [0.0; 4];
        let p = FinePath::new(&dw, 0.25);
        assert!(difference_kernel_sum(g(0.3), 0.5, 0.75, (0.0, 0.25), 1.0, &p, Against::Time).is_err());
        assert!(difference_kernel_sum(g(0.3), 1.0, 0.25, (0.0, 0.5), 1.0, &p, Against::Time).is_err());
    }

    #[test]
    fn local_sums() {
        let dw = [0.1, -0.2, 0.05, 0.3, 0.0, 0.0, 0.0, 0.0];
        let p = FinePath::new(&dw, 0.25);
        assert_eq!(local_singular_sum(g(0.3), 0.5, 0.5, 1.0, &p, Against::Brownian).unwrap(), 0.0);
        assert_eq!(local_singular_sum(g(0.3), 0.5, 0.5, 1.0, &p, Against::Time).unwrap(), 0.0);
        let v = local_singular_sum(g(0.25), 1.0, 0.0, 1.0, &p, Against::Time).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-15);
        // four cells r = 0, 0.25, 0.5, 0.75 below s = 1
        let v = local_singular_sum(g(0.3), 1.0, 0.0, 1.0, &p, Against::Brownian).unwrap();
        let want = 0.1 * 1.0 + -0.2 * 0.75f64.powf(-0.3) + 0.05 * 0.5f64.powf(-0.3)
            + 0.3 * 0.25f64.powf(-0.3);
        assert!((v - want).abs() < 1e-14, "{v} {want}");
        assert!(local_singular_sum(g(0.3), 0.5, 0.75, 1.0, &p, Against::Time).is_err());
    }
}
