//! File formats: model JSON/CSV, forcing JSON, measurement and spectrum CSV,
//! localization reports, scenarios and sweep tables.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bench::{EstimateRow, ScenarioSpec, SweepResult};
use crate::error::{Error, Result};
use crate::localizer::{Diagnostics, LocalizationReport, ReportStatus};
use crate::lti::{ContinuousModel, SinusoidSpec};
use crate::spectrum::SpectrumResult;

/// `{"A": [[..]], "B": [[..]], "C": [[..]]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
}

fn rows_to_matrix(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if nrows == 0 || ncols == 0 {
        return Err(Error::Parse(format!("matrix {name} is empty")));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::Parse(format!(
            "matrix {name}: row {i} has {} entries, expected {ncols}",
            rows[i].len()
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl ModelFile {
    pub fn from_model(model: &ContinuousModel) -> Self {
        Self { a: matrix_to_rows(model.a()), b: matrix_to_rows(model.b()), c: matrix_to_rows(model.c()) }
    }

    pub fn to_model(&self) -> Result<ContinuousModel> {
        ContinuousModel::new(
            rows_to_matrix("A", &self.a)?,
            rows_to_matrix("B", &self.b)?,
            rows_to_matrix("C", &self.c)?,
        )
    }
}

pub fn read_model_json<R: Read>(reader: R) -> Result<ContinuousModel> {
    let file: ModelFile = serde_json::from_reader(reader)?;
    file.to_model()
}

pub fn write_model_json<W: Write>(writer: W, model: &ContinuousModel) -> Result<()> {
    serde_json::to_writer_pretty(writer, &ModelFile::from_model(model))?;
    Ok(())
}

/// Parses a headerless numeric CSV matrix, one row per line.
pub fn parse_matrix_csv<R: BufRead>(reader: R, name: &str) -> Result<DMatrix<f64>> {
    let mut rows = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|e| {
                    Error::Parse(format!("{name}: line {}: {e}: {t:?}", lineno + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    rows_to_matrix(name, &rows)
}

pub fn write_matrix_csv<W: Write>(mut w: W, m: &DMatrix<f64>) -> Result<()> {
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Writes `A.csv`, `B.csv` and `C.csv` into `dir`, creating it if needed.
pub fn write_model_csv_dir(dir: &Path, model: &ContinuousModel) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, m) in [("A", model.a()), ("B", model.b()), ("C", model.c())] {
        let f = fs::File::create(dir.join(format!("{name}.csv")))?;
        write_matrix_csv(std::io::BufWriter::new(f), m)?;
    }
    Ok(())
}

/// Loads a model from a JSON file, or from a directory holding `A.csv`,
/// `B.csv` and `C.csv`.
pub fn read_model(path: &Path) -> Result<ContinuousModel> {
    if path.is_dir() {
        let load = |name: &str| -> Result<DMatrix<f64>> {
            let f = fs::File::open(path.join(format!("{name}.csv")))?;
            parse_matrix_csv(BufReader::new(f), name)
        };
        ContinuousModel::new(load("A")?, load("B")?, load("C")?)
    } else {
        read_model_json(BufReader::new(fs::File::open(path)?))
    }
}

/// Forcing description: a JSON list of `{location, amplitude, frequency_hz, phase_rad}`.
pub fn read_sinusoids_json<R: Read>(reader: R) -> Result<Vec<SinusoidSpec>> {
    Ok(serde_json::from_reader(reader)?)
}

/// Writes one row per sample and one column per channel, preceded by `# fs=<Hz>`.
pub fn write_measurements_csv<W: Write>(mut w: W, sample_rate_hz: f64, y: &DMatrix<f64>) -> Result<()> {
    writeln!(w, "# fs={sample_rate_hz}")?;
    for k in 0..y.ncols() {
        let row: Vec<String> = (0..y.nrows()).map(|i| format!("{:e}", y[(i, k)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a measurement CSV; returns the sampling rate and a `p x S` matrix.
pub fn read_measurements_csv<R: BufRead>(reader: R) -> Result<(f64, DMatrix<f64>)> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("measurement file is empty".into()))??;
    let rate = header
        .trim()
        .strip_prefix('#')
        .and_then(|rest| rest.trim().strip_prefix("fs="))
        .ok_or_else(|| Error::Parse(format!("expected '# fs=<Hz>' header, got {header:?}")))?
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad sampling rate: {e}")))?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Parse(format!("sampling rate must be > 0, got {rate}")));
    }
    let rest: String = lines.collect::<std::io::Result<Vec<_>>>()?.join("\n");
    let samples = parse_matrix_csv(rest.as_bytes(), "measurements")?;
    Ok((rate, samples.transpose()))
}

/// One-sided spectrum export: bins `0 ..= N/2`, one row per (bin, channel).
pub fn write_spectrum_csv<W: Write>(mut w: W, spectrum: &SpectrumResult, sample_rate_hz: f64) -> Result<()> {
    let n = spectrum.dft_len();
    writeln!(w, "bin,frequency_hz,channel,real,imag,modulus")?;
    for q in 0..=n / 2 {
        let f = q as f64 * sample_rate_hz / n as f64;
        for i in 0..spectrum.channels() {
            let v = spectrum.coeffs[(i, q)];
            writeln!(w, "{q},{f},{i},{:e},{:e},{:e}", v.re, v.im, v.norm())?;
        }
    }
    Ok(())
}

/// Whitespace-separated `frequency_hz max_modulus` columns for plotting.
pub fn write_spectrum_dat<W: Write>(mut w: W, spectrum: &SpectrumResult, sample_rate_hz: f64) -> Result<()> {
    let n = spectrum.dft_len();
    writeln!(w, "# frequency_hz max_channel_modulus")?;
    for q in 0..=n / 2 {
        writeln!(w, "{} {:e}", q as f64 * sample_rate_hz / n as f64, spectrum.channel_max(q))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedBins {
    pub tau: f64,
    pub dft_len: usize,
    pub transient: usize,
    pub bins: Vec<usize>,
    pub frequencies_hz: Vec<f64>,
}

impl DetectedBins {
    pub fn new(spectrum: &SpectrumResult, tau: f64, sample_rate_hz: f64) -> Self {
        let n = spectrum.dft_len();
        Self {
            tau,
            dft_len: n,
            transient: spectrum.transient,
            bins: spectrum.bins.clone(),
            frequencies_hz: spectrum.bins.iter().map(|&l| l as f64 * sample_rate_hz / n as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionEntry {
    pub location: usize,
    pub amplitude: f64,
    pub phase_rad: f64,
    pub real: f64,
    pub imag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEntry {
    pub bin: usize,
    pub frequency_hz: f64,
    pub solutions: Vec<SolutionEntry>,
}

/// On-disk report: `{status, bins: [{frequency_hz, solutions: [...]}], diagnostics}`.
///
/// `solutions` lists the nonzero entries of each bin's estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub status: ReportStatus,
    pub bins: Vec<BinEntry>,
    pub diagnostics: Diagnostics,
}

impl From<&LocalizationReport> for ReportDocument {
    fn from(r: &LocalizationReport) -> Self {
        let bins = r
            .bins
            .iter()
            .map(|b| BinEntry {
                bin: b.bin,
                frequency_hz: b.frequency_hz,
                solutions: r
                    .sources
                    .iter()
                    .filter(|s| s.bin == b.bin)
                    .map(|s| SolutionEntry {
                        location: s.location,
                        amplitude: s.amplitude,
                        phase_rad: s.phase_rad,
                        real: s.real,
                        imag: s.imag,
                    })
                    .collect(),
            })
            .collect();
        Self { status: r.status, bins, diagnostics: r.diagnostics.clone() }
    }
}

impl ReportDocument {
    pub fn source_count(&self) -> usize {
        self.bins.iter().map(|b| b.solutions.len()).sum()
    }

    pub fn locations(&self) -> std::collections::BTreeSet<usize> {
        self.bins.iter().flat_map(|b| b.solutions.iter().map(|s| s.location)).collect()
    }
}

pub fn write_report_json<W: Write>(w: W, report: &LocalizationReport) -> Result<()> {
    serde_json::to_writer_pretty(w, &ReportDocument::from(report))?;
    Ok(())
}

pub fn read_report_json<R: Read>(r: R) -> Result<ReportDocument> {
    Ok(serde_json::from_reader(r)?)
}

pub const REPORT_CSV_HEADER: &str = "location,bin,frequency_hz,amplitude,phase_rad,real,imag";

/// Flat report: one row per nonzero `(location, bin)` entry.
pub fn write_report_csv<W: Write>(mut w: W, report: &LocalizationReport) -> Result<()> {
    writeln!(w, "{REPORT_CSV_HEADER}")?;
    for s in &report.sources {
        writeln!(
            w,
            "{},{},{},{:e},{},{:e},{:e}",
            s.location, s.bin, s.frequency_hz, s.amplitude, s.phase_rad, s.real, s.imag
        )?;
    }
    Ok(())
}

pub fn read_report_csv<R: BufRead>(r: R) -> Result<Vec<(usize, usize, SolutionEntry)>> {
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == REPORT_CSV_HEADER => {}
        _ => return Err(Error::Parse("missing report CSV header".into())),
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 7 {
            return Err(Error::Parse(format!("report row has {} fields: {line:?}", f.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("{e}: {s:?}")));
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{e}: {s:?}")));
        out.push((
            int(f[0])?,
            int(f[1])?,
            SolutionEntry {
                location: int(f[0])?,
                amplitude: num(f[3])?,
                phase_rad: num(f[4])?,
                real: num(f[5])?,
                imag: num(f[6])?,
            },
        ));
    }
    Ok(out)
}

pub fn read_scenario_json<R: Read>(r: R) -> Result<ScenarioSpec> {
    Ok(serde_json::from_reader(r)?)
}

pub fn write_scenario_json<W: Write>(w: W, scenario: &ScenarioSpec) -> Result<()> {
    serde_json::to_writer_pretty(w, scenario)?;
    Ok(())
}

/// `alpha,seed,tpr,fpr,fpr_conventional,detected_bins`
pub fn write_sweep_csv<W: Write>(mut w: W, result: &SweepResult) -> Result<()> {
    writeln!(w, "alpha,seed,tpr,fpr,fpr_conventional,detected_bins")?;
    for c in &result.cells {
        writeln!(w, "{},{},{},{},{},{}", c.alpha, c.seed, c.tpr, c.fpr, c.fpr_conventional, c.detected_bins)?;
    }
    Ok(())
}

pub fn write_sweep_summary_csv<W: Write>(mut w: W, result: &SweepResult) -> Result<()> {
    writeln!(w, "alpha,tpr_mean,tpr_min,tpr_max,fpr_mean,fpr_min,fpr_max,perfect_seeds")?;
    for s in &result.summary {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            s.alpha, s.tpr_mean, s.tpr_min, s.tpr_max, s.fpr_mean, s.fpr_min, s.fpr_max, s.perfect
        )?;
    }
    Ok(())
}

/// gnuplot-friendly TPR/FPR curves with min/max error bars.
pub fn write_sweep_dat<W: Write>(mut w: W, result: &SweepResult) -> Result<()> {
    writeln!(w, "# alpha tpr_mean tpr_min tpr_max fpr_mean fpr_min fpr_max")?;
    for s in &result.summary {
        writeln!(
            w,
            "{} {} {} {} {} {} {}",
            s.alpha, s.tpr_mean, s.tpr_min, s.tpr_max, s.fpr_mean, s.fpr_min, s.fpr_max
        )?;
    }
    Ok(())
}

/// Table-shaped estimates: truth, estimate mean and standard deviation per sinusoid.
pub fn write_estimates_csv<W: Write>(mut w: W, rows: &[EstimateRow]) -> Result<()> {
    writeln!(
        w,
        "location,true_amplitude,amplitude_mean,amplitude_std,true_frequency_hz,estimated_frequency_hz,\
         true_phase_rad,phase_mean,phase_std,detected,off_bin,missed"
    )?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |f| f.to_string());
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.truth.location,
            r.truth.amplitude,
            r.amplitude_mean,
            r.amplitude_std,
            r.truth.frequency_hz,
            opt(r.estimated_frequency_hz),
            r.truth.phase_rad,
            r.phase_mean,
            r.phase_std,
            r.detected,
            r.off_bin,
            r.missed
        )?;
    }
    Ok(())
}
