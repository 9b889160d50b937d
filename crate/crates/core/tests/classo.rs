mod common;

use common::*;
use foloc::classo::{kkt_certificate, lambda_max, soft_threshold, solve, ClassoProblem, SolverOptions};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

fn problem(seed: u64, q: usize, d: usize) -> (DMatrix<Complex64>, DVector<Complex64>) {
    let mut r = rng(seed);
    (random_cmatrix(&mut r, q, d), random_cvector(&mut r, q))
}

#[test]
fn matches_proximal_gradient_oracle() {
    let (h, y) = problem(7, 4, 8);
    let lam = 0.3 * lambda_max(&h, &y);
    let cd = solve(&ClassoProblem::new(h.clone(), y.clone(), lam).unwrap(), &SolverOptions::default()).unwrap();
    assert!(cd.converged());
    let oracle = fista(&h, &y, lam, 50_000);
    let f_or = lasso_objective(&h, &y, lam, &oracle);
    assert!((cd.objective - f_or).abs() <= 1e-6 * f_or.max(1.0), "{} vs {f_or}", cd.objective);
    assert!((&cd.coefficients - &oracle).norm() < 1e-4);
}

#[test]
fn kkt_detects_perturbation() {
    let (h, y) = problem(11, 5, 9);
    let p = ClassoProblem::new(h.clone(), y.clone(), 0.4 * lambda_max(&h, &y)).unwrap();
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert!(kkt_certificate(&p, &sol.coefficients, 1e-6).ok);

    let mut bumped = sol.coefficients.clone();
    let i = bumped.iter().position(|v| v.norm() > 0.0).expect("some nonzero");
    bumped[i] += Complex64::new(1e-2, -1e-2);
    assert!(!kkt_certificate(&p, &bumped, 1e-6).ok);

    let mut spurious = sol.coefficients.clone();
    let j = spurious.iter().position(|v| v.norm() == 0.0).expect("some zero");
    spurious[j] = Complex64::new(0.05, 0.0);
    assert!(!kkt_certificate(&p, &spurious, 1e-6).ok);
}

#[test]
fn lambda_max_boundary() {
    for seed in 0..10 {
        let (h, y) = problem(seed, 3, 7);
        let lmax = lambda_max(&h, &y);
        let above = solve(&ClassoProblem::new(h.clone(), y.clone(), lmax * 1.0001).unwrap(), &SolverOptions::default()).unwrap();
        assert!(above.coefficients.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
        assert_eq!(above.sweeps, 1);
        let below = solve(&ClassoProblem::new(h, y, lmax * 0.99).unwrap(), &SolverOptions::default()).unwrap();
        assert!(below.nonzeros() >= 1);
    }
}

#[test]
fn lambda_zero_square_is_least_squares() {
    let mut r = rng(3);
    let h = DMatrix::<Complex64>::identity(6, 6) * Complex64::new(3.0, 0.0) + random_cmatrix(&mut r, 6, 6) * Complex64::new(0.3, 0.0);
    let y = random_cvector(&mut r, 6);
    let direct = h.clone().lu().solve(&y).unwrap();
    let sol = solve(&ClassoProblem::new(h, y, 0.0).unwrap(), &SolverOptions::default()).unwrap();
    assert!((sol.coefficients - direct).camax() < 1e-8);
}

#[test]
fn warm_start_reaches_the_same_minimizer() {
    let (h, y) = problem(21, 6, 10);
    let lmax = lambda_max(&h, &y);
    let p = ClassoProblem::new(h, y, 0.2 * lmax).unwrap();
    let cold = solve(&p, &SolverOptions::default()).unwrap();
    let start = solve(&p.with_lambda(0.5 * lmax).unwrap(), &SolverOptions::default()).unwrap().coefficients;
    let warm = solve(&p, &SolverOptions { warm_start: Some(start), ..SolverOptions::default() }).unwrap();
    assert!((cold.coefficients - warm.coefficients).camax() < 1e-7);
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // The prox value beats every point of a dense polar grid around it.
    #[test]
    fn soft_threshold_minimizes_prox_objective(rho in complex(), lambda in 0.0..4.0f64) {
        let s = soft_threshold(rho, lambda);
        let f = |u: Complex64| 0.5 * (u - rho).norm_sqr() + lambda * u.norm();
        let best = f(s);
        for i in 0..60 {
            for j in 0..48 {
                let r = 8.0 * i as f64 / 59.0;
                let t = 2.0 * std::f64::consts::PI * j as f64 / 48.0;
                prop_assert!(best <= f(Complex64::from_polar(r, t)) + 1e-12);
            }
        }
    }

    #[test]
    fn solution_scales_and_rotates_with_data(seed in 0u64..1000, c in 0.1..10.0f64, theta in -3.0..3.0f64, frac in 0.05..0.9f64) {
        let (h, y) = problem(seed, 4, 7);
        let lam = frac * lambda_max(&h, &y);
        let opts = SolverOptions { tol: 1e-12, ..SolverOptions::default() };
        let base = solve(&ClassoProblem::new(h.clone(), y.clone(), lam).unwrap(), &opts).unwrap();

        let scaled = solve(&ClassoProblem::new(h.clone(), &y * Complex64::new(c, 0.0), c * lam).unwrap(), &opts).unwrap();
        let expect = &base.coefficients * Complex64::new(c, 0.0);
        prop_assert!((scaled.coefficients - &expect).camax() <= 1e-7 * (1.0 + expect.camax()));

        let rot = Complex64::from_polar(1.0, theta);
        let rotated = solve(&ClassoProblem::new(h, &y * rot, lam).unwrap(), &opts).unwrap();
        let expect = &base.coefficients * rot;
        prop_assert!((rotated.coefficients - &expect).camax() <= 1e-7 * (1.0 + expect.camax()));
    }

    #[test]
    fn objective_never_increases(seed in 0u64..1000, frac in 0.01..0.9f64) {
        let (h, y) = problem(seed, 5, 9);
        let lam = frac * lambda_max(&h, &y);
        let p = ClassoProblem::new(h, y, lam).unwrap();
        let sol = solve(&p, &SolverOptions { record_trace: true, ..SolverOptions::default() }).unwrap();
        let mut prev = p.objective(&DVector::zeros(p.dim()));
        for r in &sol.trace {
            prop_assert!(r.objective <= prev * (1.0 + 1e-12) + 1e-15);
            prev = r.objective;
        }
    }
}
