//! Continuous plants, zero-order-hold discretization, discrete transfer
//! matrices and sampled simulation under multi-sinusoid forcing.

use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm::expm;

/// Condition estimate above which `transfer_at` refuses to solve.
pub const MAX_CONDITION: f64 = 1e14;

/// Continuous-time plant `x' = A x + B u`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
}

fn check_dims(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::config(format!(
            "A must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Err(Error::config("model has no states"));
    }
    if b.nrows() != n || b.ncols() == 0 {
        return Err(Error::config(format!(
            "B must be {n}xm with m >= 1, got {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    if c.ncols() != n || c.nrows() == 0 {
        return Err(Error::config(format!(
            "C must be px{n} with p >= 1, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    if a.iter().chain(b.iter()).chain(c.iter()).any(|v| !v.is_finite()) {
        return Err(Error::config("model matrices contain non-finite entries"));
    }
    Ok(())
}

impl ContinuousModel {
    /// Builds a model, rejecting inconsistent dimensions and any `A` with an
    /// eigenvalue in the closed right half-plane.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let model = Self::with_unchecked_stability(a, b, c)?;
        let abscissa = model.spectral_abscissa();
        if abscissa >= 0.0 {
            return Err(Error::config(format!(
                "A is not asymptotically stable (max real eigenvalue part {abscissa:.3e})"
            )));
        }
        Ok(model)
    }

    /// Builds a model checking only dimensions. Used for marginal cases such
    /// as integrators where `exp(AT)` is still well defined.
    pub fn with_unchecked_stability(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
    ) -> Result<Self> {
        check_dims(&a, &b, &c)?;
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Largest real part over the eigenvalues of `A`.
    pub fn spectral_abscissa(&self) -> f64 {
        self.a
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Sampled plant `x[k+1] = A_d x[k] + B_d u[k]`, `y[k] = C x[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    period: f64,
}

impl DiscreteModel {
    /// Builds a discrete model, rejecting `period <= 0` and spectral radius `>= 1`.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, period: f64) -> Result<Self> {
        check_dims(&a, &b, &c)?;
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::config(format!("sampling period must be > 0, got {period}")));
        }
        let model = Self { a, b, c, period };
        let rho = model.spectral_radius();
        if rho >= 1.0 {
            return Err(Error::config(format!(
                "A_d is not Schur stable (spectral radius {rho:.6})"
            )));
        }
        Ok(model)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Sampling period `T` in seconds.
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.period
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.a
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Smallest `L` with `rho(A_d)^L < 1e-4`, i.e. the free response has
    /// decayed to 0.01% of its initial size.
    pub fn transient_cutoff(&self) -> usize {
        let rho = self.spectral_radius();
        if rho <= 0.0 {
            return 1;
        }
        let l = (1e-4f64.ln() / rho.ln()).floor() as usize + 1;
        l.max(1)
    }
}

/// Exact zero-order-hold discretization.
///
/// `A_d` and `B_d` are read off the top blocks of `exp([[A, B], [0, 0]] T)`.
pub fn discretize(model: &ContinuousModel, period: f64) -> Result<DiscreteModel> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::config(format!("sampling period must be > 0, got {period}")));
    }
    let n = model.states();
    let m = model.inputs();
    let mut aug = DMatrix::<f64>::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(model.a() * period));
    aug.view_mut((0, n), (n, m)).copy_from(&(model.b() * period));
    let e = expm(&aug)?;
    Ok(DiscreteModel {
        a: e.view((0, 0), (n, n)).into_owned(),
        b: e.view((0, n), (n, m)).into_owned(),
        c: model.c().clone(),
        period,
    })
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Evaluates `H(e^{jΩ}) = C (e^{jΩ} I - A_d)^{-1} B_d` with one LU solve.
///
/// `omega` is in radians per sample.
pub fn transfer_at(model: &DiscreteModel, omega: f64) -> Result<DMatrix<Complex64>> {
    let n = model.states();
    let z = Complex64::from_polar(1.0, omega);
    let mut resolvent = to_complex(model.a()).map(|v| -v);
    for i in 0..n {
        resolvent[(i, i)] += z;
    }
    let lu = resolvent.lu();
    let diag = lu.u().diagonal();
    let (lo, hi) = diag
        .iter()
        .map(|d| d.norm())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    // Pivot-ratio estimate; a lower bound on the true 2-norm condition number.
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let x = lu
        .solve(&to_complex(model.b()))
        .ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
    Ok(to_complex(model.c()) * x)
}

/// One sinusoidal component `a sin(2π f t + φ)` injected at input `location`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidSpec {
    pub location: usize,
    pub amplitude: f64,
    pub frequency_hz: f64,
    pub phase_rad: f64,
}

/// Ground-truth forcing: a sparse set of sinusoids over `inputs` candidate locations.
///
/// Sparsity of the active locations is a convention of the scenarios, not
/// something checked here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcedInputConfig {
    pub inputs: usize,
    pub sinusoids: Vec<SinusoidSpec>,
}

impl ForcedInputConfig {
    pub fn new(inputs: usize, sinusoids: Vec<SinusoidSpec>) -> Self {
        Self { inputs, sinusoids }
    }

    /// Checks locations, non-negative amplitudes and `0 < f < F/2`.
    pub fn validate(&self, period: f64) -> Result<()> {
        let nyquist = 0.5 / period;
        for (i, s) in self.sinusoids.iter().enumerate() {
            if s.location >= self.inputs {
                return Err(Error::config(format!(
                    "sinusoid {i}: location {} out of range for {} inputs",
                    s.location, self.inputs
                )));
            }
            if !(s.amplitude >= 0.0 && s.amplitude.is_finite()) {
                return Err(Error::config(format!("sinusoid {i}: amplitude must be >= 0")));
            }
            if !(s.frequency_hz > 0.0 && s.frequency_hz < nyquist) {
                return Err(Error::config(format!(
                    "sinusoid {i}: frequency {} Hz outside (0, {nyquist}) Hz",
                    s.frequency_hz
                )));
            }
            if !s.phase_rad.is_finite() {
                return Err(Error::config(format!("sinusoid {i}: phase must be finite")));
            }
        }
        Ok(())
    }
}

/// Samples the forcing at `t = kT` for every `k` in `samples`; one row per input.
pub fn generate_input(
    config: &ForcedInputConfig,
    period: f64,
    samples: Range<usize>,
) -> Result<DMatrix<f64>> {
    config.validate(period)?;
    let len = samples.len();
    let mut u = DMatrix::zeros(config.inputs, len);
    for s in &config.sinusoids {
        let w = 2.0 * PI * s.frequency_hz * period;
        for (col, k) in samples.clone().enumerate() {
            u[(s.location, col)] += s.amplitude * (w * k as f64 + s.phase_rad).sin();
        }
    }
    Ok(u)
}

/// Runs the difference equation from `x0` (zero when `None`) and returns one
/// output column per input column.
pub fn simulate(
    model: &DiscreteModel,
    input: &DMatrix<f64>,
    x0: Option<&DVector<f64>>,
) -> Result<DMatrix<f64>> {
    if input.nrows() != model.inputs() {
        return Err(Error::config(format!(
            "input has {} rows, model has {} inputs",
            input.nrows(),
            model.inputs()
        )));
    }
    if input.ncols() == 0 {
        return Err(Error::config("input has no samples"));
    }
    let mut x = match x0 {
        Some(x0) if x0.len() != model.states() => {
            return Err(Error::config(format!(
                "x0 has length {}, model has {} states",
                x0.len(),
                model.states()
            )))
        }
        Some(x0) => x0.clone(),
        None => DVector::zeros(model.states()),
    };
    let mut y = DMatrix::zeros(model.outputs(), input.ncols());
    for k in 0..input.ncols() {
        y.set_column(k, &(model.c() * &x));
        x = model.a() * &x + model.b() * input.column(k);
    }
    Ok(y)
}

/// Adds white Gaussian noise channel by channel at the requested SNR.
///
/// The signal power of channel `i` is the mean square of its samples over
/// `reference` (the whole record when `None`), and the noise variance is that
/// power divided by `10^(snr_db / 10)`. All-zero channels receive no noise.
/// `snr_db = +inf` disables noise.
pub fn add_noise(
    measurements: &DMatrix<f64>,
    snr_db: f64,
    seed: u64,
    reference: Option<Range<usize>>,
) -> Result<DMatrix<f64>> {
    if measurements.is_empty() {
        return Err(Error::config("measurements are empty"));
    }
    if snr_db.is_nan() {
        return Err(Error::config("snr_db is NaN"));
    }
    if snr_db == f64::INFINITY {
        return Ok(measurements.clone());
    }
    let reference = reference.unwrap_or(0..measurements.ncols());
    if reference.is_empty() || reference.end > measurements.ncols() {
        return Err(Error::config(format!(
            "noise reference window {reference:?} outside record of {} samples",
            measurements.ncols()
        )));
    }
    let ratio = 10f64.powf(snr_db / 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = measurements.clone();
    for i in 0..out.nrows() {
        let power = reference
            .clone()
            .map(|k| measurements[(i, k)].powi(2))
            .sum::<f64>()
            / reference.len() as f64;
        let sigma = (power / ratio).sqrt();
        if sigma == 0.0 {
            continue;
        }
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::config(e.to_string()))?;
        for k in 0..out.ncols() {
            out[(i, k)] += normal.sample(&mut rng);
        }
    }
    Ok(out)
}
