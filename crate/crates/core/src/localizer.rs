//! End-to-end source localization: stack the detected bins against the
//! model's transfer matrices, solve one complex-LASSO per bin, and read
//! locations and sinusoid parameters off the nonzero entries.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classo::{self, ClassoProblem, ClassoSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::lti::{transfer_at, DiscreteModel};
use crate::spectrum::{analyze, SpectrumConfig, SpectrumResult};

/// Entries below this fraction of the largest estimated modulus count as zero.
pub const SUPPORT_EPS: f64 = 1e-6;

/// Two columns whose |cosine| exceeds `1 - COLLINEAR_EPS` are reported as collinear.
pub const COLLINEAR_EPS: f64 = 1e-6;

/// Per-bin observations `Ỹ[l]` and transfer blocks `H(e^{j2πl/N})`.
///
/// The block-diagonal stacked operator is kept as its `K` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedSystem {
    pub bins: Vec<usize>,
    pub dft_len: usize,
    pub observations: Vec<DVector<Complex64>>,
    pub blocks: Vec<DMatrix<Complex64>>,
}

impl StackedSystem {
    pub fn k(&self) -> usize {
        self.bins.len()
    }

    pub fn outputs(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.nrows())
    }

    pub fn inputs(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.ncols())
    }

    /// `Y_K`, length `pK`.
    pub fn stacked_observations(&self) -> DVector<Complex64> {
        let parts: Vec<Complex64> = self.observations.iter().flat_map(|y| y.iter().copied()).collect();
        DVector::from_vec(parts)
    }

    /// Dense `pK x mK` block-diagonal `H_K`. Only needed for cross-checks.
    pub fn materialize(&self) -> DMatrix<Complex64> {
        let (p, m, k) = (self.outputs(), self.inputs(), self.k());
        let mut h = DMatrix::zeros(p * k, m * k);
        for (i, block) in self.blocks.iter().enumerate() {
            h.view_mut((i * p, i * m), (p, m)).copy_from(block);
        }
        h
    }

    /// `λ_max` of the stacked problem, the maximum over bins of the per-bin values.
    pub fn lambda_max(&self) -> f64 {
        self.blocks
            .iter()
            .zip(&self.observations)
            .map(|(h, y)| classo::lambda_max(h, y))
            .fold(0.0, f64::max)
    }

    /// Human-readable notes about pairs of (numerically) collinear columns.
    pub fn collinearity_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (bin, block) in self.bins.iter().zip(&self.blocks) {
            let norms: Vec<f64> = block.column_iter().map(|c| c.norm()).collect();
            for i in 0..block.ncols() {
                for j in i + 1..block.ncols() {
                    if norms[i] == 0.0 || norms[j] == 0.0 {
                        continue;
                    }
                    let cos = block.column(i).dotc(&block.column(j)).norm() / (norms[i] * norms[j]);
                    if cos > 1.0 - COLLINEAR_EPS {
                        out.push(format!(
                            "bin {bin}: locations {i} and {j} have collinear transfer columns; \
                             the split between them is not unique"
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Evaluates the transfer matrix at each detected bin and pairs it with `Ỹ[l]`.
pub fn build_stacked(model: &DiscreteModel, spectrum: &SpectrumResult) -> Result<StackedSystem> {
    if spectrum.k() == 0 {
        return Err(Error::config("no detected bins to stack"));
    }
    if spectrum.channels() != model.outputs() {
        return Err(Error::config(format!(
            "spectrum has {} channels, model has {} outputs",
            spectrum.channels(),
            model.outputs()
        )));
    }
    let blocks = spectrum
        .bins
        .iter()
        .map(|&l| transfer_at(model, spectrum.bin_omega(l)).map_err(|e| at_bin(l, e)))
        .collect::<Result<Vec<_>>>()?;
    let observations = spectrum.bins.iter().map(|&l| spectrum.coeffs.column(l).into_owned()).collect();
    Ok(StackedSystem { bins: spectrum.bins.clone(), dft_len: spectrum.dft_len(), observations, blocks })
}

fn at_bin(bin: usize, e: Error) -> Error {
    Error::AtBin { bin, source: Box::new(e) }
}

/// Solves the `K` per-bin problems independently. Block-diagonality of `H_K`
/// makes this the same minimizer as the stacked problem.
///
/// `warm` supplies one starting vector per bin.
pub fn solve_stacked(
    system: &StackedSystem,
    lambda: f64,
    opts: &SolverOptions,
    warm: Option<&[DVector<Complex64>]>,
) -> Result<Vec<ClassoSolution>> {
    if let Some(w) = warm {
        if w.len() != system.k() {
            return Err(Error::config(format!(
                "{} warm starts for {} bins",
                w.len(),
                system.k()
            )));
        }
    }
    (0..system.k())
        .into_par_iter()
        .map(|i| {
            let bin = system.bins[i];
            let problem = ClassoProblem::new(system.blocks[i].clone(), system.observations[i].clone(), lambda)
                .map_err(|e| at_bin(bin, e))?;
            let mut o = opts.clone();
            if let Some(w) = warm {
                o.warm_start = Some(w[i].clone());
            }
            classo::solve(&problem, &o).map_err(|e| at_bin(bin, e))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    Ok,
    NoOscillationDetected,
}

/// One nonzero `(location, bin)` entry turned into sinusoid parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceEstimate {
    pub location: usize,
    pub bin: usize,
    pub frequency_hz: f64,
    pub amplitude: f64,
    pub phase_rad: f64,
    pub real: f64,
    pub imag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSolution {
    pub bin: usize,
    pub frequency_hz: f64,
    /// `Û[e^{jω̃_l}]`, one entry per candidate location.
    pub coefficients: Vec<Complex64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub lambda: f64,
    pub lambda_max: f64,
    pub sweeps: Vec<usize>,
    pub all_converged: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub status: ReportStatus,
    pub dft_len: usize,
    pub sample_rate_hz: f64,
    pub bins: Vec<BinSolution>,
    pub sources: Vec<SourceEstimate>,
    pub diagnostics: Diagnostics,
}

impl LocalizationReport {
    pub fn empty(dft_len: usize, sample_rate_hz: f64) -> Self {
        Self {
            status: ReportStatus::NoOscillationDetected,
            dft_len,
            sample_rate_hz,
            bins: Vec::new(),
            sources: Vec::new(),
            diagnostics: Diagnostics { all_converged: true, ..Default::default() },
        }
    }

    /// Estimated `(location, bin)` pairs.
    pub fn support(&self) -> BTreeSet<(usize, usize)> {
        self.sources.iter().map(|s| (s.location, s.bin)).collect()
    }

    /// Distinct source locations.
    pub fn locations(&self) -> BTreeSet<usize> {
        self.sources.iter().map(|s| s.location).collect()
    }

    pub fn find(&self, location: usize, bin: usize) -> Option<&SourceEstimate> {
        self.sources.iter().find(|s| s.location == location && s.bin == bin)
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let mut w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Turns per-bin solutions into source estimates.
///
/// For an on-grid input `a sin(ω̃ k + φ)` the scaled DFT is `−j a e^{jφ}`, so
/// amplitude is `|û|`, phase is `arg(û) + π/2`, and the frequency is
/// `l / (N T)` Hz.
pub fn recover_parameters(
    solutions: &[ClassoSolution],
    spectrum: &SpectrumResult,
    period: f64,
) -> Result<LocalizationReport> {
    if solutions.len() != spectrum.k() {
        return Err(Error::config(format!(
            "{} solutions for {} detected bins",
            solutions.len(),
            spectrum.k()
        )));
    }
    let n = spectrum.dft_len();
    let rate = 1.0 / period;
    if spectrum.k() == 0 {
        return Ok(LocalizationReport::empty(n, rate));
    }
    let floor = SUPPORT_EPS
        * solutions
            .iter()
            .flat_map(|s| s.coefficients.iter().map(|v| v.norm()))
            .fold(0.0, f64::max);

    let mut bins = Vec::with_capacity(solutions.len());
    let mut sources = Vec::new();
    for (sol, &bin) in solutions.iter().zip(&spectrum.bins) {
        if sol.coefficients.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(at_bin(bin, Error::config("non-finite solution entry")));
        }
        let frequency_hz = bin as f64 * rate / n as f64;
        for (location, u) in sol.coefficients.iter().enumerate() {
            let amplitude = u.norm();
            if amplitude == 0.0 || amplitude <= floor {
                continue;
            }
            sources.push(SourceEstimate {
                location,
                bin,
                frequency_hz,
                amplitude,
                phase_rad: wrap_phase(u.arg() + PI / 2.0),
                real: u.re,
                imag: u.im,
            });
        }
        bins.push(BinSolution { bin, frequency_hz, coefficients: sol.coefficients.iter().copied().collect() });
    }
    sources.sort_by_key(|s| (s.location, s.bin));

    Ok(LocalizationReport {
        status: ReportStatus::Ok,
        dft_len: n,
        sample_rate_hz: rate,
        bins,
        sources,
        diagnostics: Diagnostics {
            sweeps: solutions.iter().map(|s| s.sweeps).collect(),
            all_converged: solutions.iter().all(|s| s.converged()),
            ..Default::default()
        },
    })
}

/// Regularization weight, either absolute or relative to the stacked `λ_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularization {
    Lambda(f64),
    Alpha(f64),
}

impl Regularization {
    pub fn resolve(self, lambda_max: f64) -> Result<f64> {
        match self {
            Regularization::Lambda(l) if l >= 0.0 && l.is_finite() => Ok(l),
            Regularization::Alpha(a) if a >= 0.0 && a.is_finite() => Ok(a * lambda_max),
            other => Err(Error::config(format!("invalid regularization {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizeConfig {
    pub spectrum: SpectrumConfig,
    pub regularization: Regularization,
    pub solver: SolverOptions,
}

/// Windowed DFT, bin detection, stacking, per-bin LASSO and parameter recovery.
///
/// An empty detection yields a report with status `NoOscillationDetected`.
pub fn localize(
    model: &DiscreteModel,
    measurements: &DMatrix<f64>,
    config: &LocalizeConfig,
) -> Result<LocalizationReport> {
    if measurements.nrows() != model.outputs() {
        return Err(Error::config(format!(
            "measurements have {} channels, model has {} outputs",
            measurements.nrows(),
            model.outputs()
        )));
    }
    let spectrum = analyze(measurements, &config.spectrum)?;
    localize_spectrum(model, &spectrum, config.regularization, &config.solver)
}

/// The part of [`localize`] after detection, for callers that already hold a spectrum.
pub fn localize_spectrum(
    model: &DiscreteModel,
    spectrum: &SpectrumResult,
    regularization: Regularization,
    solver: &SolverOptions,
) -> Result<LocalizationReport> {
    localize_detailed(model, spectrum, regularization, solver).map(|(report, _)| report)
}

/// [`localize_spectrum`] that also hands back the per-bin solver output,
/// in detected-bin order.
pub fn localize_detailed(
    model: &DiscreteModel,
    spectrum: &SpectrumResult,
    regularization: Regularization,
    solver: &SolverOptions,
) -> Result<(LocalizationReport, Vec<ClassoSolution>)> {
    if spectrum.k() == 0 {
        return Ok((LocalizationReport::empty(spectrum.dft_len(), model.sample_rate()), Vec::new()));
    }
    let system = build_stacked(model, spectrum)?;
    let lambda_max = system.lambda_max();
    let lambda = regularization.resolve(lambda_max)?;
    let solutions = solve_stacked(&system, lambda, solver, None)?;
    let mut report = recover_parameters(&solutions, spectrum, model.period())?;
    report.diagnostics.lambda = lambda;
    report.diagnostics.lambda_max = lambda_max;
    report.diagnostics.warnings = system.collinearity_warnings();
    if lambda == 0.0 && model.outputs() < model.inputs() {
        report.diagnostics.warnings.push(format!(
            "lambda = 0 with {} outputs and {} inputs: the least-squares problem is \
             underdetermined and the support is not meaningful",
            model.outputs(),
            model.inputs()
        ));
    }
    if !report.diagnostics.all_converged {
        report.diagnostics.warnings.push("solver hit the sweep limit on at least one bin".into());
    }
    Ok((report, solutions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Window;

    #[test]
    fn phase_wrapping() {
        assert!((wrap_phase(PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_phase(0.3) - 0.3).abs() < 1e-15);
    }

    fn spectrum_with_bins(bins: Vec<usize>, n: usize) -> SpectrumResult {
        SpectrumResult { coeffs: DMatrix::zeros(1, n), bins, transient: 0, window: Window::Rect }
    }

    fn solution(coeffs: Vec<Complex64>) -> ClassoSolution {
        ClassoSolution {
            coefficients: DVector::from_vec(coeffs),
            sweeps: 1,
            final_delta: 0.0,
            objective: 0.0,
            status: classo::SolveStatus::Converged,
            trace: vec![],
        }
    }

    #[test]
    fn recovery_inverts_sine_dft_identity() {
        let (a, phi, l, n, period) = (0.35, -2.2, 40, 600, 1.0 / 30.0);
        let u = Complex64::new(0.0, -1.0) * a * Complex64::from_polar(1.0, phi);
        let sols = vec![solution(vec![Complex64::new(0.0, 0.0), u])];
        let r = recover_parameters(&sols, &spectrum_with_bins(vec![l], n), period).unwrap();
        assert_eq!(r.sources.len(), 1);
        let s = r.sources[0];
        assert_eq!((s.location, s.bin), (1, l));
        assert!((s.amplitude - a).abs() < 1e-15);
        assert!((s.phase_rad - phi).abs() < 1e-12);
        assert!((s.frequency_hz - 2.0).abs() < 1e-12);
    }

    #[test]
    fn all_zero_solution_gives_empty_support() {
        let sols = vec![solution(vec![Complex64::new(0.0, 0.0); 3])];
        let r = recover_parameters(&sols, &spectrum_with_bins(vec![5], 64), 0.1).unwrap();
        assert!(r.sources.is_empty());
        assert_eq!(r.status, ReportStatus::Ok);
    }

    #[test]
    fn round_off_entries_are_dropped() {
        let sols = vec![solution(vec![Complex64::new(1.0, 0.0), Complex64::new(1e-9, 0.0)])];
        let r = recover_parameters(&sols, &spectrum_with_bins(vec![5], 64), 0.1).unwrap();
        assert_eq!(r.support(), [(0, 5)].into_iter().collect());
    }

    #[test]
    fn regularization_resolution() {
        assert_eq!(Regularization::Alpha(0.25).resolve(8.0).unwrap(), 2.0);
        assert_eq!(Regularization::Lambda(3.0).resolve(8.0).unwrap(), 3.0);
        assert!(Regularization::Alpha(-0.1).resolve(1.0).is_err());
    }

    #[test]
    fn collinear_columns_are_flagged() {
        let col = [Complex64::new(1.0, 0.5), Complex64::new(-0.2, 1.0)];
        let block = DMatrix::from_fn(2, 3, |i, j| if j < 2 { col[i] * (j as f64 + 1.0) } else { Complex64::new(i as f64, 1.0) });
        let sys = StackedSystem {
            bins: vec![3],
            dft_len: 16,
            observations: vec![DVector::zeros(2)],
            blocks: vec![block],
        };
        let w = sys.collinearity_warnings();
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("locations 0 and 1"));
    }
}
