//! Weakly singular power kernels `(t - s)^{-γ}` with `0 < γ < 1`.
//!
//! Every power of a time lag in the crate goes through [`lag_power`], so the
//! scheme, the quadrature sums and the closed-form integrals agree bit for bit
//! on kernel values.

use crate::error::{Result, SvieError};

/// Exponent `γ` of a power kernel, restricted to the open interval `(0, 1)`.
///
/// Problem exponents `α, β` live in `(0, 1/2)` and are checked when a problem
/// is built; the kernel layer also accepts derived exponents such as `2β`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct KernelExponent(f64);

impl KernelExponent {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma > 0.0 && gamma < 1.0 {
            Ok(Self(gamma))
        } else {
            Err(SvieError::InvalidExponent {
                name: "kernel exponent",
                range: "(0, 1)",
                value: gamma,
            })
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `2γ` as a kernel exponent, when it stays below one.
    pub fn doubled(self) -> Result<Self> {
        Self::new(2.0 * self.0)
    }
}

/// `lag^p` for `lag ≥ 0`, computed as `exp(p · ln lag)`; `0^p = 0` for `p > 0`.
#[inline]
pub fn lag_power(lag: f64, p: f64) -> f64 {
    if lag == 0.0 && p > 0.0 {
        0.0
    } else {
        (p * lag.ln()).exp()
    }
}

/// Kernel value at a strictly positive lag `t - s`.
#[inline]
pub(crate) fn kernel_at_lag(gamma: KernelExponent, lag: f64) -> f64 {
    lag_power(lag, -gamma.0)
}

/// Antiderivative piece `(t* - a)^{1-γ} - (t* - b)^{1-γ}` divided by `1 - γ`,
/// without argument checks.
#[inline]
pub(crate) fn integral_unchecked(gamma: KernelExponent, t_star: f64, a: f64, b: f64) -> f64 {
    let p = 1.0 - gamma.0;
    (lag_power(t_star - a, p) - lag_power(t_star - b, p)) / p
}

/// `(t - s)^{-γ}` for `s < t`.
pub fn eval_kernel(gamma: KernelExponent, t: f64, s: f64) -> Result<f64> {
    if !(s < t) {
        return Err(SvieError::Domain(format!(
            "kernel needs s < t, got s = {s}, t = {t}"
        )));
    }
    Ok(kernel_at_lag(gamma, t - s))
}

/// Exact `∫_a^b (t* - s)^{-γ} ds` for `a ≤ b ≤ t*`.
pub fn integral_power_kernel(gamma: KernelExponent, t_star: f64, a: f64, b: f64) -> Result<f64> {
    if a > b || b > t_star {
        return Err(SvieError::Domain(format!(
            "integration window needs a <= b <= t*, got a = {a}, b = {b}, t* = {t_star}"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    Ok(integral_unchecked(gamma, t_star, a, b).max(0.0))
}

/// Second moment of the randomized drift weight,
/// `E_τ |h (t_n - (t_{j-1} + τ h))^{-α}|² = h^{2(1-α)} / (1-2α) · [(n+1-j)^{1-2α} - (n-j)^{1-2α}]`
/// for `τ ~ U(0, 1)`.
pub fn expected_randomized_weight_sq(
    alpha: KernelExponent,
    n: usize,
    j: usize,
    h: f64,
) -> Result<f64> {
    if j == 0 || j > n {
        return Err(SvieError::Domain(format!("need 1 <= j <= n, got j = {j}, n = {n}")));
    }
    if !(h > 0.0) {
        return Err(SvieError::Domain(format!("step must be positive, got {h}")));
    }
    let a = alpha.value();
    let p = 1.0 - 2.0 * a;
    if !(p > 0.0) {
        return Err(SvieError::Domain(format!(
            "second moment is infinite for alpha = {a} >= 1/2"
        )));
    }
    let upper = lag_power((n + 1 - j) as f64, p);
    let lower = lag_power((n - j) as f64, p);
    Ok(lag_power(h, 2.0 * (1.0 - a)) / p * (upper - lower))
}
