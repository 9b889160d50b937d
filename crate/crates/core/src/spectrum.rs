//! Scaled, windowed N-point DFT of post-transient measurements and
//! threshold detection of the active frequency bins.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[serde(alias = "rectangular")]
    Rect,
    #[default]
    Hamming,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rect => vec![1.0; len],
            Window::Hamming => hamming_window(len),
        }
    }
}

/// Symmetric Hamming window `0.54 - 0.46 cos(2πk / (N-1))`.
///
/// # Panics
/// If `len < 2`.
pub fn hamming_window(len: usize) -> Vec<f64> {
    assert!(len >= 2, "Hamming window needs at least two samples");
    let denom = (len - 1) as f64;
    (0..len)
        .map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / denom).cos())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    /// DFT length `N`.
    pub dft_len: usize,
    /// Number of leading samples `L` discarded as transient.
    pub transient: usize,
    /// Detection threshold `τ` on the cross-channel maximum modulus.
    pub threshold: f64,
    pub window: Window,
}

impl SpectrumConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dft_len < 2 {
            return Err(Error::config(format!("DFT length must be >= 2, got {}", self.dft_len)));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::config(format!("threshold must be > 0, got {}", self.threshold)));
        }
        Ok(())
    }
}

/// Scaled DFT of every channel plus the detected bin set.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// `p x N`; entry `(i, q)` is `Ỹ_i[q]`.
    pub coeffs: DMatrix<Complex64>,
    /// Detected bins in ascending order, all in `[1, N/2)`.
    pub bins: Vec<usize>,
    pub transient: usize,
    pub window: Window,
}

impl SpectrumResult {
    pub fn dft_len(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn channels(&self) -> usize {
        self.coeffs.nrows()
    }

    /// `K`, the number of detected bins.
    pub fn k(&self) -> usize {
        self.bins.len()
    }

    /// `‖Ỹ[q]‖∞` over channels.
    pub fn channel_max(&self, q: usize) -> f64 {
        self.coeffs.column(q).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Normalized angular frequency `2π l / N` (rad/sample) of a bin.
    pub fn bin_omega(&self, bin: usize) -> f64 {
        2.0 * PI * bin as f64 / self.dft_len() as f64
    }

    pub fn bin_frequencies(&self) -> Vec<f64> {
        self.bins.iter().map(|&l| self.bin_omega(l)).collect()
    }

    /// One-sided bins eligible for detection, `1 .. ceil(N/2)`.
    pub fn positive_bins(&self) -> std::ops::Range<usize> {
        1..self.dft_len().div_ceil(2)
    }
}

/// Computes `Ỹ[q] = (2/N') Σ_{k=L}^{L+N-1} y[k] w[k-L] e^{-j2πqk/N}`.
///
/// `N' = Σw` is the coherent gain of the window, so an on-grid sinusoid of
/// amplitude `a` shows up with modulus `a` at its bin for either window. The
/// exponent uses the absolute sample index, which keeps the phase referenced
/// to `k = 0`. The returned result has no detected bins yet.
pub fn windowed_dft(measurements: &DMatrix<f64>, config: &SpectrumConfig) -> Result<SpectrumResult> {
    config.validate()?;
    let n = config.dft_len;
    let needed = config.transient + n;
    if measurements.ncols() < needed {
        return Err(Error::RecordTooShort { needed, got: measurements.ncols() });
    }
    let window = config.window.coefficients(n);
    let gain: f64 = window.iter().sum();
    let scale = 2.0 / gain;

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    // e^{-j2πqL/N} moves the DFT origin from k = L back to k = 0.
    let shift: Vec<Complex64> = (0..n)
        .map(|q| {
            let turns = ((q as u128 * config.transient as u128) % n as u128) as f64 / n as f64;
            Complex64::from_polar(scale, -2.0 * PI * turns)
        })
        .collect();

    let mut coeffs = DMatrix::zeros(measurements.nrows(), n);
    let mut buf = vec![Complex64::default(); n];
    for i in 0..measurements.nrows() {
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = Complex64::new(measurements[(i, config.transient + k)] * window[k], 0.0);
        }
        fft.process(&mut buf);
        for q in 0..n {
            coeffs[(i, q)] = buf[q] * shift[q];
        }
    }
    Ok(SpectrumResult { coeffs, bins: Vec::new(), transient: config.transient, window: config.window })
}

/// Sets `S = {l in [1, N/2) : ‖Ỹ[l]‖∞ > τ}`. An empty `S` is a valid outcome
/// meaning no oscillation was detected.
pub fn detect_bins(mut result: SpectrumResult, threshold: f64) -> Result<SpectrumResult> {
    if !(threshold > 0.0) {
        return Err(Error::config(format!("threshold must be > 0, got {threshold}")));
    }
    result.bins = result
        .positive_bins()
        .filter(|&l| result.channel_max(l) > threshold)
        .collect();
    Ok(result)
}

/// `windowed_dft` followed by `detect_bins` with the configured threshold.
pub fn analyze(measurements: &DMatrix<f64>, config: &SpectrumConfig) -> Result<SpectrumResult> {
    detect_bins(windowed_dft(measurements, config)?, config.threshold)
}

/// Empirical threshold: `factor` times the `quantile` of `‖Ỹ[l]‖∞` over the
/// one-sided bins. With most bins holding only noise, a median-based pick
/// tracks the noise floor. This is a convenience on top of the user-supplied
/// threshold, not part of the detection rule itself.
pub fn suggest_threshold(result: &SpectrumResult, quantile: f64, factor: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&quantile) || !(factor > 0.0) {
        return Err(Error::config("quantile must be in [0, 1] and factor > 0"));
    }
    let mut mags: Vec<f64> = result.positive_bins().map(|l| result.channel_max(l)).collect();
    if mags.is_empty() {
        return Err(Error::config("spectrum has no positive-frequency bins"));
    }
    mags.sort_by(f64::total_cmp);
    let idx = ((mags.len() - 1) as f64 * quantile).round() as usize;
    Ok(factor * mags[idx])
}
