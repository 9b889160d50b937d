//! Synthetic test systems, Monte-Carlo α sweeps and parameter statistics.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classo::SolverOptions;
use crate::error::{Error, Result};
use crate::expm::expm;
use crate::io::ModelFile;
use crate::localizer::{
    build_stacked, localize_spectrum, recover_parameters, solve_stacked, wrap_phase, Regularization,
};
use crate::lti::{
    add_noise, discretize, generate_input, simulate, ContinuousModel, DiscreteModel,
    ForcedInputConfig, SinusoidSpec,
};
use crate::spectrum::{analyze, SpectrumConfig, Window};

/// Parameters of the synthetic oscillatory plant.
///
/// The plant has `states / 2` damped oscillator blocks. Input `j` drives
/// block `j mod (states / 2)` and sensor `s` observes block
/// `sensor_blocks[s]`, so transfer columns are local: an input is seen mainly
/// by sensors on or near its own block. `coupling` sets how strongly the
/// blocks are mixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
    /// Inclusive range of undamped modal frequencies in Hz.
    pub modal_freq_hz: [f64; 2],
    /// Inclusive range of modal damping ratios.
    pub damping: [f64; 2],
    /// Scale of the random skew-symmetric generator of the similarity.
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    /// Block observed by each sensor; distinct random blocks when absent.
    #[serde(default)]
    pub sensor_blocks: Option<Vec<usize>>,
}

fn default_coupling() -> f64 {
    0.3
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            states: 32,
            inputs: 16,
            outputs: 3,
            modal_freq_hz: [0.5, 3.5],
            damping: [0.5, 0.8],
            coupling: default_coupling(),
            sensor_blocks: None,
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn unit_on_block(rng: &mut ChaCha8Rng, n: usize, block: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    let (x, y): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
    let norm = x.hypot(y);
    v[2 * block] = x / norm;
    v[2 * block + 1] = y / norm;
    v
}

/// Builds a stable plant from `n/2` damped 2x2 oscillator blocks.
///
/// Block `i` is `[[σ, ω_d], [−ω_d, σ]]` with `σ = −ζω₀`, `ω_d = ω₀√(1−ζ²)`,
/// so its eigenvalues are `−ζω₀ ± jω_d`. The block-diagonal matrix is
/// conjugated by the orthogonal `S = exp(c (G − Gᵀ) / √(2n))` with Gaussian
/// `G`, so `cond(S) = 1` and the spectrum is preserved exactly. Columns of
/// `B` and rows of `C` are unit Gaussian vectors supported on their blocks.
pub fn random_stable_system(params: &SystemParams, seed: u64) -> Result<ContinuousModel> {
    let SystemParams { states: n, inputs: m, outputs: p, modal_freq_hz, damping, coupling, .. } =
        *params;
    if n == 0 || n % 2 != 0 {
        return Err(Error::config(format!("states must be even and positive, got {n}")));
    }
    let blocks = n / 2;
    if m == 0 || p == 0 || m > n || p > blocks {
        return Err(Error::config(format!(
            "need 1 <= inputs <= states and 1 <= outputs <= states/2, got m={m}, p={p}, n={n}"
        )));
    }
    if !(modal_freq_hz[0] > 0.0 && modal_freq_hz[0] <= modal_freq_hz[1]) {
        return Err(Error::config("modal frequency range must satisfy 0 < lo <= hi"));
    }
    if !(damping[0] > 0.0 && damping[0] <= damping[1] && damping[1] < 1.0) {
        return Err(Error::config("damping range must satisfy 0 < lo <= hi < 1"));
    }
    if !(coupling >= 0.0 && coupling.is_finite()) {
        return Err(Error::config("coupling must be finite and >= 0"));
    }
    if let Some(sb) = &params.sensor_blocks {
        if sb.len() != p || sb.iter().any(|&b| b >= blocks) {
            return Err(Error::config(format!(
                "sensor_blocks must list {p} block indices below {blocks}"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modal = DMatrix::zeros(n, n);
    for i in 0..blocks {
        let w0 = 2.0 * PI * uniform(&mut rng, modal_freq_hz);
        let zeta = uniform(&mut rng, damping);
        let sigma = -zeta * w0;
        let wd = w0 * (1.0 - zeta * zeta).sqrt();
        let j = 2 * i;
        modal[(j, j)] = sigma;
        modal[(j + 1, j + 1)] = sigma;
        modal[(j, j + 1)] = wd;
        modal[(j + 1, j)] = -wd;
    }

    let g = gaussian(&mut rng, n, n);
    let skew = (&g - g.transpose()) * (coupling / (2.0 * n as f64).sqrt());
    let s = expm(&skew)?;
    let a = &s * modal * s.transpose();

    let mut b = DMatrix::zeros(n, m);
    for j in 0..m {
        b.set_column(j, &unit_on_block(&mut rng, n, j % blocks));
    }
    let sensors = match &params.sensor_blocks {
        Some(sb) => sb.clone(),
        None => rand::seq::index::sample(&mut rng, blocks, p).into_vec(),
    };
    let mut c = DMatrix::zeros(p, n);
    for (row, &blk) in sensors.iter().enumerate() {
        c.set_row(row, &unit_on_block(&mut rng, n, blk).transpose());
    }
    ContinuousModel::new(a, b, c)
}

/// Where a scenario's plant comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSource {
    Generated { params: SystemParams, seed: u64 },
    File { path: PathBuf },
    Inline { model: ModelFile },
}

impl ModelSource {
    pub fn load(&self) -> Result<ContinuousModel> {
        match self {
            ModelSource::Generated { params, seed } => random_stable_system(params, *seed),
            ModelSource::File { path } => crate::io::read_model(path),
            ModelSource::Inline { model } => model.to_model(),
        }
    }
}

fn default_sample_rate() -> f64 {
    30.0
}

fn default_dft_len() -> usize {
    600
}

/// A complete experiment: plant, forcing, noise, DFT settings and sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub model: ModelSource,
    pub forcing: ForcedInputConfig,
    /// `None` means noise-free measurements.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_dft_len")]
    pub dft_len: usize,
    /// Transient cutoff `L`; derived from the model when absent.
    #[serde(default)]
    pub transient: Option<usize>,
    #[serde(default)]
    pub window: Window,
    pub tau: f64,
    pub seeds: Vec<u64>,
    pub alphas: Vec<f64>,
    /// Allows ground-truth frequencies off the DFT grid.
    #[serde(default)]
    pub off_grid: bool,
}

/// 50 evenly spaced points covering `[0, 1]`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..50).map(|i| i as f64 / 49.0).collect()
}

impl ScenarioSpec {
    pub fn period(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    /// DFT bin of a frequency, rounded to the nearest grid point.
    pub fn bin_of(&self, frequency_hz: f64) -> usize {
        (frequency_hz * self.dft_len as f64 / self.sample_rate_hz).round() as usize
    }

    /// Ground-truth `(location, bin)` support.
    pub fn true_support(&self) -> BTreeSet<(usize, usize)> {
        self.forcing
            .sinusoids
            .iter()
            .filter(|s| s.amplitude > 0.0)
            .map(|s| (s.location, self.bin_of(s.frequency_hz)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::config("sample rate must be > 0"));
        }
        if self.dft_len < 2 {
            return Err(Error::config("DFT length must be >= 2"));
        }
        if !(self.tau > 0.0) {
            return Err(Error::config("tau must be > 0"));
        }
        if self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::config("alpha grid must lie in [0, 1]"));
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() {
                return Err(Error::config("snr_db is NaN"));
            }
        }
        self.forcing.validate(self.period())?;
        if !self.off_grid {
            let step = self.sample_rate_hz / self.dft_len as f64;
            for s in &self.forcing.sinusoids {
                let cycles = s.frequency_hz / step;
                if (cycles - cycles.round()).abs() > 1e-9 {
                    return Err(Error::config(format!(
                        "frequency {} Hz is not a multiple of F/N = {step} Hz \
                         (mark the scenario off_grid to allow this)",
                        s.frequency_hz
                    )));
                }
            }
        }
        Ok(())
    }

    /// Discretizes the plant and simulates the noise-free record of `L + N` samples.
    pub fn prepare(&self) -> Result<PreparedScenario> {
        self.validate()?;
        let plant = self.model.load()?;
        if plant.inputs() != self.forcing.inputs {
            return Err(Error::config(format!(
                "forcing has {} locations, model has {} inputs",
                self.forcing.inputs,
                plant.inputs()
            )));
        }
        let model = discretize(&plant, self.period())?;
        let transient = self.transient.unwrap_or_else(|| model.transient_cutoff());
        let len = transient + self.dft_len;
        let u = generate_input(&self.forcing, self.period(), 0..len)?;
        let clean = simulate(&model, &u, None)?;
        Ok(PreparedScenario { spec: self.clone(), model, transient, clean, truth: self.true_support() })
    }
}

/// A scenario with its plant discretized and noise-free output simulated.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub spec: ScenarioSpec,
    pub model: DiscreteModel,
    pub transient: usize,
    /// `p x (L + N)` noise-free measurements.
    pub clean: DMatrix<f64>,
    pub truth: BTreeSet<(usize, usize)>,
}

impl PreparedScenario {
    pub fn spectrum_config(&self) -> SpectrumConfig {
        SpectrumConfig {
            dft_len: self.spec.dft_len,
            transient: self.transient,
            threshold: self.spec.tau,
            window: self.spec.window,
        }
    }

    /// Measurements for one noise realization.
    pub fn measurements(&self, seed: u64) -> Result<DMatrix<f64>> {
        match self.spec.snr_db {
            None => Ok(self.clean.clone()),
            Some(snr) => add_noise(
                &self.clean,
                snr,
                seed,
                Some(self.transient..self.transient + self.spec.dft_len),
            ),
        }
    }
}

/// Source layout of the default scenario: `(location, frequency_hz, phase_rad)`,
/// three locations with two sinusoids each.
pub const DEFAULT_SOURCES: [(usize, f64, f64); 6] = [
    (3, 2.0, 0.3),
    (3, 2.5, 0.4),
    (9, 1.5, 0.1),
    (9, 1.0, 0.3),
    (12, 3.5, 0.1),
    (12, 0.8, 0.2),
];

/// System seed of the default scenario.
pub const DEFAULT_SYSTEM_SEED: u64 = 8;

/// Sets each amplitude so that the sinusoid's peak in the output spectrum,
/// `a·‖H(e^{jω̃})[:, location]‖∞`, equals `peak`. Detection with a single
/// threshold then treats every source alike.
pub fn equalized_forcing(
    model: &DiscreteModel,
    sources: &[(usize, f64, f64)],
    peak: f64,
) -> Result<ForcedInputConfig> {
    let sinusoids = sources
        .iter()
        .map(|&(location, frequency_hz, phase_rad)| {
            if location >= model.inputs() {
                return Err(Error::config(format!("location {location} out of range")));
            }
            let h = crate::lti::transfer_at(model, 2.0 * PI * frequency_hz * model.period())?;
            let gain = h.column(location).iter().map(|v| v.norm()).fold(0.0, f64::max);
            if gain == 0.0 {
                return Err(Error::config(format!("location {location} is unobservable at {frequency_hz} Hz")));
            }
            Ok(SinusoidSpec { location, amplitude: peak / gain, frequency_hz, phase_rad })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForcedInputConfig::new(model.inputs(), sinusoids))
}

/// Builds a scenario around a generated plant with equalized source amplitudes.
///
/// The spectral peak level is `0.01` times the mean source gain, so the
/// amplitudes land around 0.01 p.u., and `τ = 0.65` of that level: above the
/// first Hamming sidelobe bins (0.43 of a peak) plus noise, below the peaks.
pub fn equalized_scenario(
    params: SystemParams,
    system_seed: u64,
    sources: &[(usize, f64, f64)],
    snr_db: Option<f64>,
    seeds: Vec<u64>,
) -> Result<ScenarioSpec> {
    let sample_rate_hz = default_sample_rate();
    let plant = random_stable_system(&params, system_seed)?;
    let model = discretize(&plant, 1.0 / sample_rate_hz)?;
    let unit = equalized_forcing(&model, sources, 1.0)?;
    let mean_gain =
        unit.sinusoids.iter().map(|s| 1.0 / s.amplitude).sum::<f64>() / unit.sinusoids.len() as f64;
    let peak = 0.01 * mean_gain;
    let forcing = equalized_forcing(&model, sources, peak)?;
    Ok(ScenarioSpec {
        model: ModelSource::Generated { params, seed: system_seed },
        forcing,
        snr_db,
        sample_rate_hz,
        dft_len: default_dft_len(),
        transient: None,
        window: Window::Hamming,
        tau: 0.65 * peak,
        seeds,
        alphas: default_alpha_grid(),
        off_grid: false,
    })
}

/// The desk-scale default: 32 states, 16 inputs, 3 sensors placed on the
/// blocks of the 3 source locations, 2 sinusoids per source, SNR 10 dB and
/// 20 noise realizations.
pub fn default_scenario() -> Result<ScenarioSpec> {
    let params = SystemParams { sensor_blocks: Some(vec![3, 9, 12]), ..SystemParams::default() };
    equalized_scenario(params, DEFAULT_SYSTEM_SEED, &DEFAULT_SOURCES, Some(10.0), (0..20).collect())
}

/// Four candidate locations, two sensors, sources at locations 0 and 3 with
/// two sinusoids each; one frequency is shared by both sources, so the
/// spectrum shows three peaks. Noise-free.
pub fn shared_frequency_scenario() -> Result<ScenarioSpec> {
    let params = SystemParams {
        states: 8,
        inputs: 4,
        outputs: 2,
        sensor_blocks: Some(vec![0, 3]),
        ..SystemParams::default()
    };
    let sources = [(0, 1.0, 0.3), (0, 2.0, -0.5), (3, 1.5, 1.1), (3, 1.0, 0.8)];
    equalized_scenario(params, 1, &sources, None, vec![0])
}

/// Support-level rates with the true-support size as denominator for both.
///
/// `FPR` can therefore exceed 1 when the estimate is much denser than the truth.
pub fn tpr_fpr(
    truth: &BTreeSet<(usize, usize)>,
    estimate: &BTreeSet<(usize, usize)>,
) -> Result<(f64, f64)> {
    if truth.is_empty() {
        return Err(Error::UndefinedMetric);
    }
    let hits = estimate.intersection(truth).count() as f64;
    let misses = estimate.difference(truth).count() as f64;
    let denom = truth.len() as f64;
    Ok((hits / denom, misses / denom))
}

/// False positives over true negatives in a universe of `universe` candidate entries.
pub fn conventional_fpr(
    truth: &BTreeSet<(usize, usize)>,
    estimate: &BTreeSet<(usize, usize)>,
    universe: usize,
) -> f64 {
    let negatives = universe.saturating_sub(truth.len());
    if negatives == 0 {
        return 0.0;
    }
    estimate.difference(truth).count() as f64 / negatives as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub alpha: f64,
    pub seed: u64,
    pub tpr: f64,
    pub fpr: f64,
    /// FP / (candidate entries − true entries), candidates being every
    /// location at every true or detected bin.
    pub fpr_conventional: f64,
    pub detected_bins: usize,
}

impl SweepCell {
    pub fn perfect(&self) -> bool {
        self.tpr == 1.0 && self.fpr == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSummary {
    pub alpha: f64,
    pub tpr_mean: f64,
    pub tpr_min: f64,
    pub tpr_max: f64,
    pub fpr_mean: f64,
    pub fpr_min: f64,
    pub fpr_max: f64,
    /// Realizations with `(TPR, FPR) = (1, 0)`.
    pub perfect: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub seeds: usize,
    /// Cells in (seed, alpha) order following the scenario's lists.
    pub cells: Vec<SweepCell>,
    /// One row per alpha, ascending.
    pub summary: Vec<AlphaSummary>,
    /// The α achieving `(1, 0)` for the most realizations.
    pub best_alpha: Option<f64>,
    /// Widest contiguous α interval where every realization is perfect.
    pub all_perfect: Option<(f64, f64)>,
}

impl SweepResult {
    /// Widest contiguous α interval (over the ascending grid) where at least
    /// `fraction` of the realizations are perfect.
    pub fn window_with_fraction(&self, fraction: f64) -> Option<(f64, f64)> {
        let needed = (fraction * self.seeds as f64).ceil() as usize;
        widest_run(&self.summary, |s| s.perfect >= needed.max(1))
    }

    /// Lower edge of [`SweepResult::window_with_fraction`]: the least shrinkage
    /// that still recovers the support in `fraction` of the realizations.
    /// Amplitude bias grows with α, so estimates are best read here.
    pub fn operating_alpha(&self, fraction: f64) -> Option<f64> {
        self.window_with_fraction(fraction).map(|(lo, _)| lo)
    }
}

fn widest_run(summary: &[AlphaSummary], keep: impl Fn(&AlphaSummary) -> bool) -> Option<(f64, f64)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, s) in summary.iter().enumerate() {
        match (keep(s), start) {
            (true, None) => start = Some(i),
            (false, Some(st)) => {
                if best.is_none_or(|(a, b)| i - 1 - st > b - a) {
                    best = Some((st, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(st) = start {
        let end = summary.len() - 1;
        if best.is_none_or(|(a, b)| end - st > b - a) {
            best = Some((st, end));
        }
    }
    best.map(|(a, b)| (summary[a].alpha, summary[b].alpha))
}

fn tag(seed: u64, alpha: f64) -> impl Fn(Error) -> Error {
    move |e| Error::AtRealization { seed, alpha, source: Box::new(e) }
}

/// Runs one noise realization across the whole α grid, warm-starting each
/// solve from the previous (larger) λ.
fn sweep_realization(
    prepared: &PreparedScenario,
    seed: u64,
    opts: &SolverOptions,
) -> Result<Vec<SweepCell>> {
    let spec = &prepared.spec;
    let fail = tag(seed, f64::NAN);
    let y = prepared.measurements(seed).map_err(&fail)?;
    let spectrum = analyze(&y, &prepared.spectrum_config()).map_err(&fail)?;
    let truth = &prepared.truth;
    let m = prepared.model.inputs();

    let mut order: Vec<usize> = (0..spec.alphas.len()).collect();
    order.sort_by(|&a, &b| spec.alphas[b].total_cmp(&spec.alphas[a]));
    let mut cells = vec![None; spec.alphas.len()];

    let detected: BTreeSet<usize> = spectrum.bins.iter().copied().collect();
    let universe = m * truth.iter().map(|&(_, b)| b).chain(detected.iter().copied()).collect::<BTreeSet<_>>().len();

    if spectrum.k() == 0 {
        for &i in &order {
            let alpha = spec.alphas[i];
            let (tpr, fpr) = tpr_fpr(truth, &BTreeSet::new()).map_err(tag(seed, alpha))?;
            cells[i] = Some(SweepCell { alpha, seed, tpr, fpr, fpr_conventional: 0.0, detected_bins: 0 });
        }
    } else {
        let system = build_stacked(&prepared.model, &spectrum).map_err(&fail)?;
        let lambda_max = system.lambda_max();
        let mut warm: Option<Vec<DVector<Complex64>>> = None;
        for &i in &order {
            let alpha = spec.alphas[i];
            let fail = tag(seed, alpha);
            let solutions =
                solve_stacked(&system, alpha * lambda_max, opts, warm.as_deref()).map_err(&fail)?;
            let report = recover_parameters(&solutions, &spectrum, prepared.model.period()).map_err(&fail)?;
            let est = report.support();
            let (tpr, fpr) = tpr_fpr(truth, &est).map_err(&fail)?;
            cells[i] = Some(SweepCell {
                alpha,
                seed,
                tpr,
                fpr,
                fpr_conventional: conventional_fpr(truth, &est, universe),
                detected_bins: spectrum.k(),
            });
            warm = Some(solutions.into_iter().map(|s| s.coefficients).collect());
        }
    }
    Ok(cells.into_iter().map(|c| c.expect("every alpha visited")).collect())
}

/// Monte-Carlo sensitivity of the support recovery to `α = λ/λ_max`.
///
/// Each seed is one noise realization; `λ_max` is recomputed per realization.
/// Realizations run in parallel and are collected in seed order, so the
/// result does not depend on scheduling.
pub fn sweep_alpha(scenario: &ScenarioSpec) -> Result<SweepResult> {
    let prepared = scenario.prepare()?;
    sweep_prepared(&prepared, &SolverOptions::default())
}

pub fn sweep_prepared(prepared: &PreparedScenario, opts: &SolverOptions) -> Result<SweepResult> {
    let spec = &prepared.spec;
    if spec.seeds.is_empty() {
        return Err(Error::config("sweep needs at least one seed"));
    }
    if spec.alphas.is_empty() {
        return Err(Error::config("sweep needs at least one alpha"));
    }
    if prepared.truth.is_empty() {
        return Err(Error::UndefinedMetric);
    }
    let per_seed: Vec<Vec<SweepCell>> = spec
        .seeds
        .par_iter()
        .map(|&seed| sweep_realization(prepared, seed, opts))
        .collect::<Result<_>>()?;

    let mut alphas: Vec<(usize, f64)> = spec.alphas.iter().copied().enumerate().collect();
    alphas.sort_by(|a, b| a.1.total_cmp(&b.1));
    let summary: Vec<AlphaSummary> = alphas
        .iter()
        .map(|&(i, alpha)| {
            let col: Vec<&SweepCell> = per_seed.iter().map(|cells| &cells[i]).collect();
            let count = col.len() as f64;
            let stat = |f: fn(&SweepCell) -> f64| {
                let vals: Vec<f64> = col.iter().map(|c| f(c)).collect();
                (
                    vals.iter().sum::<f64>() / count,
                    vals.iter().copied().fold(f64::INFINITY, f64::min),
                    vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                )
            };
            let (tpr_mean, tpr_min, tpr_max) = stat(|c| c.tpr);
            let (fpr_mean, fpr_min, fpr_max) = stat(|c| c.fpr);
            AlphaSummary {
                alpha,
                tpr_mean,
                tpr_min,
                tpr_max,
                fpr_mean,
                fpr_min,
                fpr_max,
                perfect: col.iter().filter(|c| c.perfect()).count(),
            }
        })
        .collect();

    let best_count = summary.iter().map(|s| s.perfect).max().unwrap_or(0);
    let best_alpha = if best_count == 0 {
        None
    } else {
        let tied: Vec<f64> = summary.iter().filter(|s| s.perfect == best_count).map(|s| s.alpha).collect();
        Some(tied[tied.len() / 2])
    };
    let seeds = spec.seeds.len();
    let all_perfect = widest_run(&summary, |s| s.perfect == seeds);

    Ok(SweepResult {
        seeds,
        cells: per_seed.into_iter().flatten().collect(),
        summary,
        best_alpha,
        all_perfect,
    })
}

/// Table-style statistics of the estimates for one ground-truth sinusoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub truth: SinusoidSpec,
    pub true_bin: usize,
    /// Realizations with an estimate at exactly `(location, true_bin)`.
    pub detected: usize,
    /// Realizations with an estimate at this location only at a neighbouring bin.
    pub off_bin: usize,
    /// Realizations with nothing at this location near the true frequency.
    pub missed: usize,
    /// Frequency of the true bin when every detection landed on it.
    pub estimated_frequency_hz: Option<f64>,
    pub amplitude_mean: f64,
    pub amplitude_std: f64,
    /// Phase estimates are unwrapped around the true phase before averaging.
    pub phase_mean: f64,
    pub phase_std: f64,
}

impl EstimateRow {
    pub fn frequency_exact(&self) -> bool {
        self.detected > 0 && self.off_bin == 0
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Localizes every realization at a fixed α and tabulates amplitude and
/// phase statistics per ground-truth sinusoid. Missed realizations are
/// counted and left out of the mean and standard deviation.
pub fn estimate_statistics(scenario: &ScenarioSpec, alpha: f64) -> Result<Vec<EstimateRow>> {
    let prepared = scenario.prepare()?;
    estimate_prepared(&prepared, alpha, &SolverOptions::default())
}

pub fn estimate_prepared(
    prepared: &PreparedScenario,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<Vec<EstimateRow>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::config(format!("alpha must be in [0, 1), got {alpha}")));
    }
    let spec = &prepared.spec;
    if spec.seeds.is_empty() {
        return Err(Error::config("statistics need at least one seed"));
    }
    let reports = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            let fail = tag(seed, alpha);
            let y = prepared.measurements(seed).map_err(&fail)?;
            let spectrum = analyze(&y, &prepared.spectrum_config()).map_err(&fail)?;
            localize_spectrum(&prepared.model, &spectrum, Regularization::Alpha(alpha), opts).map_err(&fail)
        })
        .collect::<Result<Vec<_>>>()?;

    let step = spec.sample_rate_hz / spec.dft_len as f64;
    Ok(spec
        .forcing
        .sinusoids
        .iter()
        .map(|truth| {
            let true_bin = spec.bin_of(truth.frequency_hz);
            let (mut amps, mut phases) = (Vec::new(), Vec::new());
            let (mut off_bin, mut missed) = (0, 0);
            for r in &reports {
                if let Some(e) = r.find(truth.location, true_bin) {
                    amps.push(e.amplitude);
                    phases.push(truth.phase_rad + wrap_phase(e.phase_rad - truth.phase_rad));
                } else if r
                    .sources
                    .iter()
                    .any(|e| e.location == truth.location && e.bin.abs_diff(true_bin) <= 2)
                {
                    off_bin += 1;
                } else {
                    missed += 1;
                }
            }
            let (amplitude_mean, amplitude_std) = mean_std(&amps);
            let (phase_mean, phase_std) = mean_std(&phases);
            let detected = amps.len();
            EstimateRow {
                truth: *truth,
                true_bin,
                detected,
                off_bin,
                missed,
                estimated_frequency_hz: (detected > 0 && off_bin == 0).then(|| true_bin as f64 * step),
                amplitude_mean,
                amplitude_std,
                phase_mean,
                phase_std,
            }
        })
        .collect())
}
