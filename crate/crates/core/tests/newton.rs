//! Newton's method on the discretized profile equation.

use whitham_cusp::continuation::{amplitude_constraint, local_profile, solve_at_amplitude, LocalSeed};
use whitham_cusp::profile::{newton_solve, residual, sup_norm, trivial_branch, NewtonOptions, TrivialSign};
use whitham_cusp::{CollocationGrid, WaveProfile};

fn seed_errors(eps: f64, grid: &CollocationGrid) -> (f64, f64) {
    let sol = solve_at_amplitude(eps, 1, grid, &NewtonOptions::default()).unwrap();
    let seed = local_profile(eps, 1, grid).unwrap();
    let dphi: Vec<f64> = sol
        .profile
        .values
        .iter()
        .zip(&seed.values)
        .map(|(a, b)| a - b)
        .collect();
    (sup_norm(&dphi), sol.profile.c - seed.c)
}

#[test]
fn local_expansion_is_third_order_in_profile() {
    let grid = CollocationGrid::new(256).unwrap();
    let errs: Vec<(f64, f64)> = [2e-3, 1e-3, 5e-4]
        .iter()
        .map(|&e| seed_errors(e, &grid))
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0].0 / w[1].0;
        assert!((ratio - 8.0).abs() <= 2.0, "profile error ratio {ratio}");
    }
    // wavespeed error is fourth order; bounded by the largest-ε constant
    let c4 = errs[0].1.abs() / 2e-3f64.powi(4);
    for (&eps, e) in [1e-3f64, 5e-4].iter().zip(&errs[1..]) {
        assert!(
            e.1.abs() <= 2.0 * c4 * eps.powi(4) + 1e-15,
            "c error {:e} at {eps}",
            e.1
        );
    }
}

#[test]
fn fixed_speed_solve_from_the_expansion_is_third_order() {
    let grid = CollocationGrid::new(256).unwrap();
    let errs: Vec<f64> = [2e-3, 1e-3, 5e-4]
        .iter()
        .map(|&eps| {
            let seed = local_profile(eps, 1, &grid).unwrap();
            let sol = newton_solve(&seed, &grid, None, &NewtonOptions::default()).unwrap();
            assert_eq!(sol.profile.c, seed.c);
            let d: Vec<f64> = sol.profile.values.iter().zip(&seed.values).map(|(a, b)| a - b).collect();
            sup_norm(&d)
        })
        .collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1] - 8.0).abs() <= 2.0, "ratio {}", w[0] / w[1]);
    }
}

#[test]
fn tail_converges_quadratically() {
    let grid = CollocationGrid::new(128).unwrap();
    let eps = 0.05;
    let guess = local_profile(eps, 1, &grid).unwrap();
    let opts = NewtonOptions {
        tol: 1e-14,
        max_iter: 25,
    };
    let sol = newton_solve(
        &guess,
        &grid,
        Some(&amplitude_constraint(1, eps, &grid).unwrap()),
        &opts,
    )
    .unwrap();
    let h = &sol.residual_history;
    assert!(h.len() >= 3, "history {h:?}");
    for w in h.windows(2) {
        if w[0] < 1e-3 && w[1] > 1e-13 {
            assert!(w[1] <= 10.0 * w[0] * w[0], "not quadratic: {h:?}");
        }
    }
}

#[test]
fn trivial_solutions_are_fixed_points() {
    let grid = CollocationGrid::new(64).unwrap();
    for c in [0.3, 0.7, 1.2] {
        for sign in [TrivialSign::Plus, TrivialSign::Minus] {
            let p = WaveProfile::constant(c, trivial_branch(c, sign), 64);
            let sol = newton_solve(&p, &grid, None, &NewtonOptions::default()).unwrap();
            assert!(sol.iterations <= 1);
        }
    }
}

#[test]
fn sign_symmetry_maps_solutions_to_solutions() {
    let grid = CollocationGrid::new(128).unwrap();
    let sol = solve_at_amplitude(0.03, 1, &grid, &NewtonOptions::default()).unwrap();
    let r = sup_norm(&residual(&sol.profile.negated(), &grid).unwrap());
    assert!(r < 1e-12);
}

#[test]
fn wave_number_two_bifurcates_from_its_own_speed() {
    let grid = CollocationGrid::new(64).unwrap();
    let sol = solve_at_amplitude(0.01, 2, &grid, &NewtonOptions::default()).unwrap();
    let seed = LocalSeed::new(2, 0.01).unwrap();
    assert!((sol.profile.c - seed.wavespeed(0.01)).abs() < 1e-5);
    // period π: φ(x) = φ(π - x)
    let v = &sol.profile.values;
    for m in 0..64 {
        assert!((v[m] - v[63 - m]).abs() < 1e-10);
    }
}
