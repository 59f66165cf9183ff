mod common;

use common::{median, milstein_oracle, rel_close, stage_oracle, OracleProblem};
use proptest::prelude::*;
use svie_core::randomness::generate_fine_noise;
use svie_core::scheme::{simulate_with, stage_y, step_x, StageCache};
use svie_core::{
    simulate, GridSpec, SchemeTag, SimulateOptions, SvieProblem,
};

fn sin_cos(x0: f64, alpha: f64, beta: f64) -> SvieProblem {
    SvieProblem::builtin_benchmark(alpha, beta).unwrap().with_x0(x0).unwrap()
}

fn oracle_run(x0: f64, alpha: f64, beta: f64, n: usize, refine: usize, seed: u64, path: u64) -> (Vec<f64>, Vec<f64>) {
    let problem = sin_cos(x0, alpha, beta);
    let grid = GridSpec::new(1.0, n, refine).unwrap();
    let noise = generate_fine_noise(seed, path, &grid, &[n]).unwrap();
    let engine = simulate(&problem, &grid, &noise, SchemeTag::RandomizedMilstein).unwrap();
    let b = |x: f64| x.sin().abs();
    let s = |x: f64| x.cos();
    let ds = |x: f64| -x.sin();
    let op = OracleProblem { x0, horizon: 1.0, alpha, beta, b: &b, sigma: &s, dsigma: &ds };
    let oracle = milstein_oracle(&op, n, refine, noise.fine_increments(), noise.taus(n).unwrap());
    (engine.values, oracle)
}

#[test]
fn engine_matches_oracle_on_small_grids() {
    for &(n, refine) in &[(2, 1), (4, 1), (2, 3), (4, 2)] {
        for path in 0..5 {
            let (engine, oracle) = oracle_run(0.7, 0.3, 0.2, n, refine, 17, path);
            for (k, (a, b)) in engine.iter().zip(&oracle).enumerate() {
                assert!(rel_close(*a, *b, 1e-12), "N={n} F={refine} path {path} node {k}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn stage_value_matches_oracle() {
    let problem = sin_cos(0.4, 0.25, 0.15);
    let b = |x: f64| x.sin().abs();
    let s = |x: f64| x.cos();
    let ds = |x: f64| -x.sin();
    let op = OracleProblem { x0: 0.4, horizon: 1.0, alpha: 0.25, beta: 0.15, b: &b, sigma: &s, dsigma: &ds };
    for refine in [1, 4] {
        let grid = GridSpec::new(1.0, 4, refine).unwrap();
        let noise = generate_fine_noise(8, 2, &grid, &[4]).unwrap();
        let traj = simulate(&problem, &grid, &noise, SchemeTag::RandomizedMilstein).unwrap();
        for j in 1..=4 {
            let history = &traj.values[..j];
            let y = stage_y(&problem, &grid, &noise, history, j).unwrap();
            let expected = stage_oracle(&op, 4, refine, noise.fine_increments(), noise.taus(4).unwrap(), history, j);
            assert!(rel_close(y, expected, 1e-12), "F={refine} j={j}: {y} vs {expected}");
        }
    }
}

#[test]
fn step_by_step_api_reproduces_simulate() {
    let problem = sin_cos(0.2, 0.3, 0.1);
    let grid = GridSpec::new(1.0, 6, 2).unwrap();
    let noise = generate_fine_noise(4, 1, &grid, &[6]).unwrap();
    let traj = simulate(&problem, &grid, &noise, SchemeTag::RandomizedMilstein).unwrap();
    let cache = StageCache::build(&problem, &grid, &noise, &traj.values[..6]).unwrap();
    for n in 1..=6 {
        let x = step_x(&problem, &grid, &noise, &traj.values[..n], &cache, n).unwrap();
        assert!(rel_close(x, traj.values[n], 1e-13), "n={n}");
    }
}

#[test]
fn constant_diffusion_makes_milstein_equal_randomized_em() {
    let problem = SvieProblem::builtin("additive-noise", 0.3, 0.2).unwrap();
    let grid = GridSpec::new(1.0, 16, 4).unwrap();
    for path in 0..5 {
        let noise = generate_fine_noise(6, path, &grid, &[16]).unwrap();
        let m = simulate(&problem, &grid, &noise, SchemeTag::RandomizedMilstein).unwrap();
        let e = simulate(&problem, &grid, &noise, SchemeTag::RandomizedEM).unwrap();
        assert_eq!(m.values, e.values);
    }
}

#[test]
fn vanishing_coefficients_freeze_the_state() {
    let problem = SvieProblem::builtin("zero", 0.2, 0.2).unwrap().with_x0(1.5).unwrap();
    let grid = GridSpec::new(1.0, 8, 2).unwrap();
    let noise = generate_fine_noise(1, 0, &grid, &[8]).unwrap();
    for scheme in SchemeTag::ALL {
        let traj = simulate(&problem, &grid, &noise, scheme).unwrap();
        assert!(traj.values.iter().all(|&x| x == 1.5), "{scheme}");
    }
}

#[test]
fn unit_drift_converges_to_closed_form() {
    let alpha = 0.3;
    let problem = SvieProblem::builtin("unit-drift", alpha, 0.2).unwrap();
    let exact = problem.x0() + 1.0 / (1.0 - alpha);
    let errors: Vec<f64> = [16usize, 128]
        .iter()
        .map(|&n| {
            let grid = GridSpec::new(1.0, n, 1).unwrap();
            let errs = (0..50)
                .map(|p| {
                    let noise = generate_fine_noise(12, p, &grid, &[n]).unwrap();
                    (simulate(&problem, &grid, &noise, SchemeTag::RandomizedMilstein).unwrap().terminal() - exact).abs()
                })
                .collect();
            median(errs)
        })
        .collect();
    assert!(errors[1] < errors[0], "{errors:?}");
    assert!(errors[1] < 1e-2, "{errors:?}");

    // the classical rule integrates a constant drift exactly
    let grid = GridSpec::new(1.0, 16, 1).unwrap();
    let noise = generate_fine_noise(12, 0, &grid, &[16]).unwrap();
    let em = simulate(&problem, &grid, &noise, SchemeTag::ClassicalEM).unwrap();
    assert!(rel_close(em.terminal(), exact, 1e-13));
}

#[test]
fn second_moment_stays_bounded() {
    let problem = sin_cos(0.0, 0.3, 0.1);
    let grid = GridSpec::new(1.0, 64, 1).unwrap();
    let batch = |range: std::ops::Range<u64>| {
        range
            .map(|p| {
                let noise = generate_fine_noise(77, p, &grid, &[64]).unwrap();
                let traj = simulate(&problem, &grid, &noise, SchemeTag::RandomizedMilstein).unwrap();
                traj.values.iter().map(|x| x * x).fold(0.0, f64::max)
            })
            .sum::<f64>()
            / 100.0
    };
    let (a, b) = (batch(0..100), batch(100..200));
    assert!(a.is_finite() && b.is_finite());
    assert!(a < 2.0 * b && b < 2.0 * a, "{a} vs {b}");
}

#[test]
fn refining_the_grid_changes_the_path() {
    let problem = sin_cos(0.0, 0.3, 0.1);
    let fine = GridSpec::new(1.0, 32, 1).unwrap();
    let noise = generate_fine_noise(3, 0, &fine, &[16, 32]).unwrap();
    let coarse = GridSpec::new(1.0, 16, 2).unwrap();
    let a = simulate(&problem, &coarse, &noise, SchemeTag::RandomizedMilstein).unwrap();
    let b = simulate(&problem, &fine, &noise, SchemeTag::RandomizedMilstein).unwrap();
    assert_ne!(a.terminal(), b.terminal());
    assert_eq!(a.values.len(), 17);
    assert_eq!(b.values.len(), 33);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>(), path in 0u64..100, scheme_ix in 0usize..3) {
        let problem = sin_cos(0.1, 0.2, 0.3);
        let grid = GridSpec::new(1.0, 8, 2).unwrap();
        let scheme = SchemeTag::ALL[scheme_ix];
        let n1 = generate_fine_noise(seed, path, &grid, &[8]).unwrap();
        let n2 = generate_fine_noise(seed, path, &grid, &[8]).unwrap();
        let a = simulate(&problem, &grid, &n1, scheme).unwrap();
        let b = simulate(&problem, &grid, &n2, scheme).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cache_does_not_change_results(seed in any::<u64>(), alpha in 0.05f64..0.45, beta in 0.05f64..0.45) {
        let problem = sin_cos(0.3, alpha, beta);
        let grid = GridSpec::new(1.0, 8, 3).unwrap();
        let noise = generate_fine_noise(seed, 0, &grid, &[8]).unwrap();
        let cached = simulate(&problem, &grid, &noise, SchemeTag::RandomizedMilstein).unwrap();
        let fresh = simulate_with(&problem, &grid, &noise, SchemeTag::RandomizedMilstein,
            &SimulateOptions { reuse_stage_cache: false }).unwrap();
        for (a, b) in cached.values.iter().zip(&fresh.values) {
            prop_assert!(rel_close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn oracle_agreement_holds_for_random_exponents(seed in any::<u64>(), alpha in 0.05f64..0.45, beta in 0.05f64..0.45, x0 in -2.0f64..2.0) {
        let (engine, oracle) = oracle_run(x0, alpha, beta, 4, 2, seed, 0);
        for (a, b) in engine.iter().zip(&oracle) {
            prop_assert!(rel_close(*a, *b, 1e-11), "{} vs {}", a, b);
        }
    }
}
