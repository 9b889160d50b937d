mod common;

use std::f64::consts::PI;

use common::*;
use foloc::lti::{discretize, generate_input, simulate, transfer_at, ContinuousModel, DiscreteModel, ForcedInputConfig, SinusoidSpec};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn discretization_matches_series_oracle() {
    for seed in 0..5 {
        let mut r = rng(seed);
        let (a, b, c) = random_stable(&mut r, 8, 3, 2);
        let t = 1.0 / 30.0;
        let dm = discretize(&ContinuousModel::new(a.clone(), b.clone(), c).unwrap(), t).unwrap();
        let mut aug = DMatrix::zeros(11, 11);
        aug.view_mut((0, 0), (8, 8)).copy_from(&(&a * t));
        aug.view_mut((0, 8), (8, 3)).copy_from(&(&b * t));
        let e = taylor_expm(&aug);
        let ad = e.view((0, 0), (8, 8));
        let bd = e.view((0, 8), (8, 3));
        assert!((dm.a() - ad).amax() <= 1e-10 * ad.amax().max(1.0));
        assert!((dm.b() - bd).amax() <= 1e-10 * bd.amax().max(1.0));
    }
}

#[test]
fn zoh_matches_fine_rk4() {
    let mut r = rng(42);
    let (a, b, c) = random_stable(&mut r, 8, 2, 3);
    let t = 1.0 / 30.0;
    let dm = discretize(&ContinuousModel::new(a.clone(), b.clone(), c.clone()).unwrap(), t).unwrap();
    let u = DMatrix::from_fn(2, 120, |_, _| r.sample::<f64, _>(StandardNormal));
    let y = simulate(&dm, &u, None).unwrap();
    let oracle = rk4_zoh_outputs(&a, &b, &c, &u, t, 200);
    assert!((&y - &oracle).amax() <= 1e-8 * oracle.amax());
}

#[test]
fn transfer_is_conjugate_symmetric() {
    let mut r = rng(5);
    let (a, b, c) = random_stable(&mut r, 6, 3, 2);
    let dm = discretize(&ContinuousModel::new(a, b, c).unwrap(), 0.05).unwrap();
    for _ in 0..10 {
        let w: f64 = r.random_range(-PI..PI);
        let pos = transfer_at(&dm, w).unwrap();
        let neg = transfer_at(&dm, -w).unwrap();
        assert!((pos - neg.conjugate()).camax() < 1e-12);
    }
}

#[test]
fn scalar_transfer_closed_form() {
    let dm = DiscreteModel::new(DMatrix::from_element(1, 1, 0.7), DMatrix::from_element(1, 1, 1.5), DMatrix::from_element(1, 1, -2.0), 0.1).unwrap();
    for w in [0.0, 0.3, 1.0, 2.5, PI] {
        let z = num_complex::Complex64::from_polar(1.0, w);
        let expect = -2.0 * 1.5 / (z - 0.7);
        assert!((transfer_at(&dm, w).unwrap()[(0, 0)] - expect).norm() < 1e-12);
    }
}

#[test]
fn simulation_is_linear() {
    let mut r = rng(9);
    let (a, b, c) = random_stable(&mut r, 6, 2, 2);
    let dm = discretize(&ContinuousModel::new(a, b, c).unwrap(), 0.05).unwrap();
    let u1 = DMatrix::from_fn(2, 200, |_, _| r.sample::<f64, _>(StandardNormal));
    let u2 = DMatrix::from_fn(2, 200, |_, _| r.sample::<f64, _>(StandardNormal));
    let lhs = simulate(&dm, &(&u1 + &u2), None).unwrap();
    let rhs = simulate(&dm, &u1, None).unwrap() + simulate(&dm, &u2, None).unwrap();
    assert!((lhs - rhs).amax() < 1e-12);
}

#[test]
fn opposite_phases_cancel() {
    let cfg = ForcedInputConfig::new(
        2,
        vec![
            SinusoidSpec { location: 1, amplitude: 0.3, frequency_hz: 1.2, phase_rad: 0.4 },
            SinusoidSpec { location: 1, amplitude: 0.3, frequency_hz: 1.2, phase_rad: 0.4 + PI },
        ],
    );
    let u = generate_input(&cfg, 1.0 / 30.0, 0..100).unwrap();
    assert!(u.amax() < 1e-15);
}
