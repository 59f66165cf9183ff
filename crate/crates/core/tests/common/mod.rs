//! Test-only oracles, written independently of the library's code paths.
#![allow(dead_code)]

/// Coefficients and exponents for the straight-line scheme oracle.
pub struct OracleProblem<'a> {
    pub x0: f64,
    pub horizon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub b: &'a dyn Fn(f64) -> f64,
    pub sigma: &'a dyn Fn(f64) -> f64,
    pub dsigma: &'a dyn Fn(f64) -> f64,
}

/// `∫_a^b (t - r)^{-g} dr` via `powf`.
fn int_pow(g: f64, t: f64, a: f64, b: f64) -> f64 {
    ((t - a).powf(1.0 - g) - (t - b).powf(1.0 - g)) / (1.0 - g)
}

/// Randomized Milstein by direct transcription of the scheme, recomputing
/// every stage value and inner integral from scratch at every outer step.
/// `dw` has `n_steps * refine` entries, `taus` has `n_steps` entries.
pub fn milstein_oracle(
    p: &OracleProblem<'_>,
    n_steps: usize,
    refine: usize,
    dw: &[f64],
    taus: &[f64],
) -> Vec<f64> {
    let h = p.horizon / n_steps as f64;
    let hh = h / refine as f64;
    let t = |n: usize| n as f64 * h;
    let r = |k: usize| k as f64 * hh;
    let (al, be) = (p.alpha, p.beta);
    let mut x = vec![p.x0];
    for n in 1..=n_steps {
        let mut total = p.x0;
        for j in 1..=n {
            let tj = t(j - 1);
            let u = tj + taus[j - 1] * h;
            // stage value
            let mut y = x[j - 1];
            for i in 1..j {
                y += (p.b)(x[i - 1]) * (int_pow(al, u, t(i - 1), t(i)) - int_pow(al, tj, t(i - 1), t(i)));
            }
            for i in 1..j {
                for k in (i - 1) * refine..i * refine {
                    y += (p.sigma)(x[i - 1]) * ((u - r(k)).powf(-be) - (tj - r(k)).powf(-be)) * dw[k];
                }
            }
            y += (p.b)(x[j - 1]) * (taus[j - 1] * h).powf(1.0 - al) / (1.0 - al);
            for k in (j - 1) * refine..j * refine {
                if r(k + 1) <= u {
                    y += (p.sigma)(x[j - 1]) * (u - r(k)).powf(-be) * dw[k];
                }
            }
            total += h * (t(n) - u).powf(-al) * (p.b)(y);

            for k in (j - 1) * refine..j * refine {
                let s = r(k);
                total += (t(n) - s).powf(-be) * (p.sigma)(x[j - 1]) * dw[k];
                // inner accumulation at s
                let mut a = 0.0;
                for i in 1..j {
                    a += (p.b)(x[i - 1]) * (int_pow(al, s, t(i - 1), t(i)) - int_pow(al, tj, t(i - 1), t(i)));
                }
                a += (p.b)(x[j - 1]) * (s - tj).powf(1.0 - al) / (1.0 - al);
                for i in 1..j {
                    for l in (i - 1) * refine..i * refine {
                        a += (p.sigma)(x[i - 1]) * ((s - r(l)).powf(-be) - (tj - r(l)).powf(-be)) * dw[l];
                    }
                }
                for l in (j - 1) * refine..k {
                    a += (p.sigma)(x[j - 1]) * (s - r(l)).powf(-be) * dw[l];
                }
                total += (t(n) - s).powf(-be) * (p.dsigma)(x[j - 1]) * a * dw[k];
            }
        }
        x.push(total);
    }
    x
}

/// Stage value `Y_j` computed the same straight-line way.
pub fn stage_oracle(
    p: &OracleProblem<'_>,
    n_steps: usize,
    refine: usize,
    dw: &[f64],
    taus: &[f64],
    history: &[f64],
    j: usize,
) -> f64 {
    let h = p.horizon / n_steps as f64;
    let hh = h / refine as f64;
    let t = |n: usize| n as f64 * h;
    let r = |k: usize| k as f64 * hh;
    let tj = t(j - 1);
    let u = tj + taus[j - 1] * h;
    let mut y = history[j - 1];
    for i in 1..j {
        let xi = history[i - 1];
        y += (p.b)(xi) * (int_pow(p.alpha, u, t(i - 1), t(i)) - int_pow(p.alpha, tj, t(i - 1), t(i)));
        for k in (i - 1) * refine..i * refine {
            y += (p.sigma)(xi) * ((u - r(k)).powf(-p.beta) - (tj - r(k)).powf(-p.beta)) * dw[k];
        }
    }
    y += (p.b)(history[j - 1]) * (taus[j - 1] * h).powf(1.0 - p.alpha) / (1.0 - p.alpha);
    for k in (j - 1) * refine..j * refine {
        if r(k + 1) <= u {
            y += (p.sigma)(history[j - 1]) * (u - r(k)).powf(-p.beta) * dw[k];
        }
    }
    y
}

/// Tanh-sinh quadrature of `f` over `[a, b]`; tolerates integrable endpoint
/// singularities. `f` receives `(x, b - x)` with the distance to `b` computed
/// without cancellation.
pub fn tanh_sinh<F: Fn(f64, f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let pi2 = std::f64::consts::FRAC_PI_2;
    let mut step = 1.0;
    let mut prev = f64::NAN;
    for _level in 0..12 {
        let mut sum = 0.0;
        let mut k = 0i64;
        loop {
            let t = k as f64 * step;
            let sh = pi2 * t.sinh();
            let ch = pi2 * t.cosh();
            let w = ch / sh.cosh().powi(2);
            let dist_right = half / (sh.exp() * sh.cosh());
            let mut term = 0.0;
            if dist_right > 0.0 {
                let x_pos = b - dist_right;
                term += w * f(x_pos, dist_right);
                if k != 0 {
                    let x_neg = a + dist_right;
                    term += w * f(x_neg, b - x_neg);
                }
            }
            sum += term;
            if w < 1e-300 || t > 6.5 {
                break;
            }
            k += 1;
        }
        let est = half * step * sum;
        if (est - prev).abs() <= 1e-14 * est.abs().max(1e-300) {
            return est;
        }
        prev = est;
        step *= 0.5;
    }
    prev
}

/// `d` of the two-sided Kolmogorov–Smirnov test of a sample against U(0, 1).
pub fn ks_uniform(mut sample: Vec<f64>) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = x - i as f64 / n;
            let hi = (i + 1) as f64 / n - x;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
