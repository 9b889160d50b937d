//! Independent reference implementations used as test oracles. None of them
//! share code with the library beyond the matrix types.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cgauss(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_cmatrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| cgauss(rng))
}

pub fn random_cvector(rng: &mut ChaCha8Rng, len: usize) -> DVector<Complex64> {
    DVector::from_fn(len, |_, _| cgauss(rng))
}

pub fn lasso_objective(h: &DMatrix<Complex64>, y: &DVector<Complex64>, lambda: f64, u: &DVector<Complex64>) -> f64 {
    0.5 * (y - h * u).norm_squared() + lambda * u.iter().map(|v| v.norm()).sum::<f64>()
}

fn prox(v: Complex64, t: f64) -> Complex64 {
    let r = v.norm();
    if r <= t {
        Complex64::new(0.0, 0.0)
    } else {
        v * ((r - t) / r)
    }
}

/// FISTA on `½‖y − Hu‖² + λ‖u‖₁`, step `1/σ_max(H)²`, with gradient-based
/// momentum restart. Stops once the prox-gradient mapping at the current
/// iterate falls below 1e-11.
pub fn fista(h: &DMatrix<Complex64>, y: &DVector<Complex64>, lambda: f64, iters: usize) -> DVector<Complex64> {
    let lip = h.clone().svd(false, false).singular_values[0].powi(2);
    let step = 1.0 / lip;
    let d = h.ncols();
    let mut x = DVector::<Complex64>::zeros(d);
    let mut z = x.clone();
    let mut t = 1.0_f64;
    for it in 0..iters {
        let grad = h.ad_mul(&(h * &z - y));
        let next = (&z - grad * Complex64::new(step, 0.0)).map(|v| prox(v, step * lambda));
        let restart = (&z - &next).dotc(&(&next - &x)).re > 0.0;
        if restart {
            z = next.clone();
            t = 1.0;
        } else {
            let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            z = &next + (&next - &x) * Complex64::new((t - 1.0) / tn, 0.0);
            t = tn;
        }
        x = next;
        if it % 50 == 49 {
            let g = h.ad_mul(&(h * &x - y));
            let p = (&x - g * Complex64::new(step, 0.0)).map(|v| prox(v, step * lambda));
            if (&x - p).camax() / step < 1e-11 {
                break;
            }
        }
    }
    x
}

/// Scaled-and-squared 50-term Taylor series.
pub fn taylor_expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a.abs().row_sum().max();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / 2f64.powi(s);
    let n = a.nrows();
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=50 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Classic RK4 on `ẋ = Ax + Bu` with `u` held over each sample period, using
/// `substeps` steps per period. Returns `C x[k]` for every sample.
pub fn rk4_zoh_outputs(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    u: &DMatrix<f64>,
    period: f64,
    substeps: usize,
) -> DMatrix<f64> {
    let n = a.nrows();
    let h = period / substeps as f64;
    let mut x = DVector::<f64>::zeros(n);
    let mut out = DMatrix::zeros(c.nrows(), u.ncols());
    for k in 0..u.ncols() {
        out.set_column(k, &(c * &x));
        let bu = b * u.column(k);
        let f = |x: &DVector<f64>| a * x + &bu;
        for _ in 0..substeps {
            let k1 = f(&x);
            let k2 = f(&(&x + &k1 * (h / 2.0)));
            let k3 = f(&(&x + &k2 * (h / 2.0)));
            let k4 = f(&(&x + &k3 * h));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
    }
    out
}

/// Direct-sum scaled windowed DFT of one channel, exponent on the absolute index.
pub fn direct_dft(y: &[f64], transient: usize, window: &[f64]) -> Vec<Complex64> {
    let n = window.len();
    let gain: f64 = window.iter().sum();
    (0..n)
        .map(|q| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let k = transient + j;
                let angle = -2.0 * PI * ((q * k) % n) as f64 / n as f64;
                acc += Complex64::from_polar(y[k] * window[j], angle);
            }
            acc * (2.0 / gain)
        })
        .collect()
}

/// Random stable `(A, B, C)` with `A = S diag-blocks S⁻¹` for a random
/// (non-orthogonal) `S`, independent of the library's generator.
pub fn random_stable(rng: &mut ChaCha8Rng, n: usize, m: usize, p: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let mut d = DMatrix::zeros(n, n);
    for i in (0..n).step_by(2) {
        let w = 2.0 * PI * rng.random_range(0.2..3.0);
        let zeta: f64 = rng.random_range(0.05..0.5);
        let (s, wd) = (-zeta * w, w * (1.0 - zeta * zeta).sqrt());
        d[(i, i)] = s;
        d[(i + 1, i + 1)] = s;
        d[(i, i + 1)] = wd;
        d[(i + 1, i)] = -wd;
    }
    let s = DMatrix::<f64>::identity(n, n) + DMatrix::from_fn(n, n, |_, _| 0.2 * rng.sample::<f64, _>(StandardNormal));
    let a = &s * d * s.clone().try_inverse().expect("perturbed identity is invertible");
    let b = DMatrix::from_fn(n, m, |_, _| rng.sample(StandardNormal));
    let c = DMatrix::from_fn(p, n, |_, _| rng.sample(StandardNormal));
    (a, b, c)
}
