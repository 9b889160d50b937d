use std::collections::BTreeSet;

use foloc::bench::*;
use foloc::Error;

fn set(v: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    v.iter().copied().collect()
}

#[test]
fn two_state_eigenvalues() {
    let params = SystemParams { states: 2, inputs: 1, outputs: 1, modal_freq_hz: [1.0, 1.0], damping: [0.1, 0.1], ..SystemParams::default() };
    let model = random_stable_system(&params, 3).unwrap();
    let w0 = 2.0 * std::f64::consts::PI;
    let mut eig: Vec<_> = model.a().complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| a.im.total_cmp(&b.im));
    let wd = w0 * (1.0f64 - 0.01).sqrt();
    assert!((eig[0] - num_complex::Complex64::new(-0.1 * w0, -wd)).norm() < 1e-10);
    assert!((eig[1] - num_complex::Complex64::new(-0.1 * w0, wd)).norm() < 1e-10);
}

#[test]
fn generator_is_stable_repeatable_and_normalized() {
    let params = SystemParams::default();
    for seed in 0..5 {
        let a = random_stable_system(&params, seed).unwrap();
        let b = random_stable_system(&params, seed).unwrap();
        assert!(a.spectral_abscissa() < 0.0);
        assert_eq!(a.a(), b.a());
        assert_eq!(a.b(), b.b());
        assert_eq!(a.c(), b.c());
        for col in a.b().column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-12);
        }
        for row in a.c().row_iter() {
            assert!((row.norm() - 1.0).abs() < 1e-12);
        }
    }
    assert_ne!(random_stable_system(&params, 0).unwrap().a(), random_stable_system(&params, 1).unwrap().a());
    let odd = SystemParams { states: 7, ..SystemParams::default() };
    assert!(matches!(random_stable_system(&odd, 0), Err(Error::Config(_))));
}

#[test]
fn rates_follow_the_definitions() {
    let truth = set(&[(0, 1), (0, 2), (1, 3), (2, 4), (3, 5), (4, 6)]);
    assert_eq!(tpr_fpr(&truth, &truth).unwrap(), (1.0, 0.0));
    let est = set(&[(0, 1), (0, 2), (1, 3), (2, 4), (3, 5), (9, 9), (8, 8)]);
    let (tpr, fpr) = tpr_fpr(&truth, &est).unwrap();
    assert!((tpr - 5.0 / 6.0).abs() < 1e-15 && (fpr - 2.0 / 6.0).abs() < 1e-15);
    assert_eq!(tpr_fpr(&truth, &BTreeSet::new()).unwrap(), (0.0, 0.0));
    assert!(matches!(tpr_fpr(&BTreeSet::new(), &truth), Err(Error::UndefinedMetric)));
}

fn small_noisy() -> ScenarioSpec {
    let mut s = default_scenario().unwrap();
    s.seeds = (0..6).collect();
    s
}

#[test]
fn unregularized_fit_is_dense() {
    let mut s = small_noisy();
    s.alphas = vec![0.0];
    let r = sweep_alpha(&s).unwrap();
    assert!(r.cells.iter().all(|c| c.tpr == 1.0 && c.fpr > 0.0));
}

#[test]
fn alpha_one_recovers_nothing() {
    let mut s = small_noisy();
    s.alphas = vec![1.0];
    let r = sweep_alpha(&s).unwrap();
    assert!(r.cells.iter().all(|c| c.tpr == 0.0 && c.fpr == 0.0));
}

#[test]
fn fpr_trend_is_non_increasing() {
    let r = sweep_alpha(&small_noisy()).unwrap();
    let fpr: Vec<f64> = r.summary.iter().map(|s| s.fpr_mean).collect();
    for i in 2..fpr.len() {
        // one grid point of slack
        assert!(fpr[i] <= fpr[i - 1].max(fpr[i - 2]) + 1e-12, "alpha {}: {fpr:?}", r.summary[i].alpha);
    }
}

#[test]
fn sweeps_are_deterministic() {
    let s = small_noisy();
    assert_eq!(sweep_alpha(&s).unwrap(), sweep_alpha(&s).unwrap());
}

#[test]
fn noise_free_sweep_has_a_perfect_window_and_zero_spread() {
    let mut s = default_scenario().unwrap();
    s.snr_db = None;
    s.seeds = vec![0, 1, 2];
    let r = sweep_alpha(&s).unwrap();
    assert!(r.all_perfect.is_some());
    for row in estimate_statistics(&s, 1e-3).unwrap() {
        assert_eq!(row.detected, 3);
        assert!(row.amplitude_std <= 1e-12 * row.amplitude_mean);
        assert!(row.phase_std <= 1e-12);
        assert!(row.frequency_exact());
    }
}

#[test]
fn off_grid_frequencies_need_the_tag() {
    let mut s = default_scenario().unwrap();
    s.forcing.sinusoids[0].frequency_hz = 2.02;
    assert!(matches!(s.validate(), Err(Error::Config(_))));
    s.off_grid = true;
    s.validate().unwrap();
}
