//! Equation instances and finite-sample checks of the coefficient assumptions.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SvieError};
use crate::kernel::KernelExponent;

/// A pure scalar coefficient map.
pub type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Name of the sine/cosine benchmark instance.
pub const PAPER_SIN_COS: &str = "paper-sin-cos";
/// `b ≡ 0, σ ≡ 0`: every trajectory stays at `x0`.
pub const ZERO: &str = "zero";
/// `b ≡ 1, σ ≡ 0`: deterministic Volterra equation with solution `x0 + t^{1-α}/(1-α)`.
pub const UNIT_DRIFT: &str = "unit-drift";
/// `b(x) = |sin x|, σ ≡ 1`: additive noise, so the Milstein correction vanishes.
pub const ADDITIVE_NOISE: &str = "additive-noise";

pub const BUILTIN_NAMES: [&str; 4] = [PAPER_SIN_COS, ZERO, UNIT_DRIFT, ADDITIVE_NOISE];

/// Initial value used by the builtin instances.
pub const DEFAULT_X0: f64 = 0.0;

/// Scalar SVIE
/// `X(t) = x0 + ∫_0^t (t-s)^{-α} b(X(s)) ds + ∫_0^t (t-s)^{-β} σ(X(s)) dB_s` on `[0, T]`.
#[derive(Clone)]
pub struct SvieProblem {
    x0: f64,
    horizon: f64,
    alpha: KernelExponent,
    beta: KernelExponent,
    drift: Coefficient,
    diffusion: Coefficient,
    diffusion_derivative: Coefficient,
}

impl fmt::Debug for SvieProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SvieProblem")
            .field("x0", &self.x0)
            .field("horizon", &self.horizon)
            .field("alpha", &self.alpha.value())
            .field("beta", &self.beta.value())
            .finish_non_exhaustive()
    }
}

/// Checks that a problem exponent lies in `(0, 1/2)`.
pub fn problem_exponent(name: &'static str, value: f64) -> Result<KernelExponent> {
    if value.is_finite() && value > 0.0 && value < 0.5 {
        KernelExponent::new(value)
    } else {
        Err(SvieError::InvalidExponent { name, range: "(0, 0.5)", value })
    }
}

impl SvieProblem {
    pub fn new<B, S, D>(
        x0: f64,
        horizon: f64,
        alpha: f64,
        beta: f64,
        drift: B,
        diffusion: S,
        diffusion_derivative: D,
    ) -> Result<Self>
    where
        B: Fn(f64) -> f64 + Send + Sync + 'static,
        S: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let alpha = problem_exponent("alpha", alpha)?;
        let beta = problem_exponent("beta", beta)?;
        if !x0.is_finite() {
            return Err(SvieError::InvalidProblem(format!("x0 must be finite, got {x0}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(SvieError::InvalidProblem(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Ok(Self {
            x0,
            horizon,
            alpha,
            beta,
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            diffusion_derivative: Arc::new(diffusion_derivative),
        })
    }

    /// `b(x) = |sin x|`, `σ(x) = cos x`, `T = 1`, started at the kink `x0 = 0` of the drift.
    pub fn builtin_benchmark(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(DEFAULT_X0, 1.0, alpha, beta, |x: f64| x.sin().abs(), f64::cos, |x: f64| -x.sin())
    }

    /// Looks up a builtin instance by name.
    pub fn builtin(name: &str, alpha: f64, beta: f64) -> Result<Self> {
        match name {
            PAPER_SIN_COS => Self::builtin_benchmark(alpha, beta),
            ZERO => Self::new(DEFAULT_X0, 1.0, alpha, beta, |_| 0.0, |_| 0.0, |_| 0.0),
            UNIT_DRIFT => Self::new(DEFAULT_X0, 1.0, alpha, beta, |_| 1.0, |_| 0.0, |_| 0.0),
            ADDITIVE_NOISE => {
                Self::new(DEFAULT_X0, 1.0, alpha, beta, |x: f64| x.sin().abs(), |_| 1.0, |_| 0.0)
            }
            other => Err(SvieError::InvalidProblem(format!(
                "unknown problem '{other}' (known: {})",
                BUILTIN_NAMES.join(", ")
            ))),
        }
    }

    pub fn with_x0(mut self, x0: f64) -> Result<Self> {
        if !x0.is_finite() {
            return Err(SvieError::InvalidProblem(format!("x0 must be finite, got {x0}")));
        }
        self.x0 = x0;
        Ok(self)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn alpha(&self) -> KernelExponent {
        self.alpha
    }

    pub fn beta(&self) -> KernelExponent {
        self.beta
    }

    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }

    #[inline]
    pub fn diffusion(&self, x: f64) -> f64 {
        (self.diffusion)(x)
    }

    #[inline]
    pub fn diffusion_derivative(&self, x: f64) -> f64 {
        (self.diffusion_derivative)(x)
    }
}

/// Declared constants for the assumption checks: a common Lipschitz bound for
/// `b` and `σ`, and a bound on `σ'` and its Lipschitz constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionBounds {
    pub lipschitz: f64,
    pub derivative: f64,
}

impl Default for AssumptionBounds {
    /// Sharp constants for the sine/cosine benchmark, plus a little slack for rounding.
    fn default() -> Self {
        Self { lipschitz: 1.0 + 1e-9, derivative: 1.0 + 1e-9 }
    }
}

pub const PROBE_RANGE: (f64, f64) = (-10.0, 10.0);
pub const PROBE_PAIRS: usize = 1000;
pub const DERIVATIVE_TOLERANCE: f64 = 1e-6;
const FD_STEP: f64 = 1e-5;
const PROBE_SEED: u64 = 0x5052_4f42;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    DriftLipschitz,
    DiffusionLipschitz,
    DerivativeBounded,
    DerivativeLipschitz,
    DerivativeConsistent,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::DriftLipschitz => "drift Lipschitz",
            Self::DiffusionLipschitz => "diffusion Lipschitz",
            Self::DerivativeBounded => "diffusion derivative bounded",
            Self::DerivativeLipschitz => "diffusion derivative Lipschitz",
            Self::DerivativeConsistent => "diffusion derivative matches finite difference",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub passed: bool,
    /// First probe pair `(x, y)` that violated the check. Single-point checks
    /// report `(x, x)`.
    pub witness: Option<(f64, f64)>,
    /// Largest observed ratio against the bound (slope, value or mismatch).
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, assumption: Assumption) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.assumption == assumption)
    }
}

fn probe_pairs() -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let (lo, hi) = PROBE_RANGE;
    (0..PROBE_PAIRS)
        .map(|i| {
            let x = rng.random_range(lo..hi);
            // every other pair is close together so local slopes are seen
            let y = if i % 2 == 0 {
                rng.random_range(lo..hi)
            } else {
                (x + rng.random_range(-1e-3..1e-3)).clamp(lo, hi)
            };
            (x, y)
        })
        .filter(|(x, y)| x != y)
        .collect()
}

fn pair_check<F>(assumption: Assumption, pairs: &[(f64, f64)], bound: f64, f: F) -> AssumptionCheck
where
    F: Fn(f64) -> f64,
{
    let mut witness = None;
    let mut worst = 0.0f64;
    for &(x, y) in pairs {
        let slope = (f(x) - f(y)).abs() / (x - y).abs();
        if !(slope <= bound) && witness.is_none() {
            witness = Some((x, y));
        }
        worst = worst.max(slope);
    }
    AssumptionCheck { assumption, passed: witness.is_none(), witness, worst }
}

fn point_check<F>(assumption: Assumption, pairs: &[(f64, f64)], bound: f64, f: F) -> AssumptionCheck
where
    F: Fn(f64) -> f64,
{
    let mut witness = None;
    let mut worst = 0.0f64;
    for x in pairs.iter().flat_map(|&(x, y)| [x, y]) {
        let v = f(x);
        if !(v <= bound) && witness.is_none() {
            witness = Some((x, x));
        }
        worst = worst.max(v);
    }
    AssumptionCheck { assumption, passed: witness.is_none(), witness, worst }
}

/// Probes the Lipschitz and smoothness assumptions on a fixed set of point
/// pairs in [`PROBE_RANGE`]. Failures are reported, never returned as errors.
pub fn validate(problem: &SvieProblem, bounds: &AssumptionBounds) -> ValidationReport {
    let pairs = probe_pairs();
    let checks = vec![
        pair_check(Assumption::DriftLipschitz, &pairs, bounds.lipschitz, |x| problem.drift(x)),
        pair_check(Assumption::DiffusionLipschitz, &pairs, bounds.lipschitz, |x| {
            problem.diffusion(x)
        }),
        point_check(Assumption::DerivativeBounded, &pairs, bounds.derivative, |x| {
            problem.diffusion_derivative(x).abs()
        }),
        pair_check(Assumption::DerivativeLipschitz, &pairs, bounds.derivative, |x| {
            problem.diffusion_derivative(x)
        }),
        point_check(Assumption::DerivativeConsistent, &pairs, DERIVATIVE_TOLERANCE, |x| {
            let fd = (problem.diffusion(x + FD_STEP) - problem.diffusion(x - FD_STEP)) / (2.0 * FD_STEP);
            (problem.diffusion_derivative(x) - fd).abs()
        }),
    ];
    ValidationReport { checks }
}
