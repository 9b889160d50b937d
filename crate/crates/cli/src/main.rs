use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use foloc::bench::{
    estimate_statistics, random_stable_system, sweep_alpha, ModelSource, ScenarioSpec, SystemParams,
};
use foloc::classo::SolverOptions;
use foloc::io;
use foloc::localizer::{localize_detailed, Regularization, ReportStatus};
use foloc::lti::{add_noise, discretize, generate_input, simulate, ForcedInputConfig};
use foloc::spectrum::{analyze, SpectrumConfig, Window};
use foloc::{Error, Result};

const EXIT_STATUS: &str = "\
Exit status:
  0  success
  2  configuration error: bad flags, missing or malformed input files,
     inconsistent dimensions, record shorter than L + N
  3  numerical error: overflow in the matrix exponential, ill-conditioned
     transfer matrix, non-finite solver iterate
  4  no bin exceeded the threshold (localize only; the empty report is
     still written)";

#[derive(Parser)]
#[command(
    name = "foloc",
    version,
    about = "Localize sparse forced-oscillation sources from sampled sensor records",
    after_help = EXIT_STATUS
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random stable continuous-time plant and write it as a model file.
    #[command(after_help = EXIT_STATUS)]
    GenSystem(GenSystemArgs),
    /// Simulate sensor measurements of a plant driven by sinusoidal inputs.
    #[command(after_help = EXIT_STATUS)]
    Simulate(SimulateArgs),
    /// Compute the windowed spectrum of a measurement file and detect bins above tau.
    #[command(after_help = EXIT_STATUS)]
    Spectrum(SpectrumArgs),
    /// Detect oscillation bins and localize the sources driving them.
    #[command(after_help = EXIT_STATUS)]
    Localize(LocalizeArgs),
    /// Monte-Carlo sweep of TPR/FPR over the alpha grid of a scenario.
    #[command(after_help = EXIT_STATUS)]
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Rect,
    Hamming,
}

impl From<WindowArg> for Window {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::Rect => Window::Rect,
            WindowArg::Hamming => Window::Hamming,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct DftArgs {
    /// DFT length N (samples in the analysis window).
    #[arg(long = "N", value_name = "N", default_value_t = 600)]
    dft_len: usize,
    /// Transient cutoff L: samples skipped before the window. Default: where the
    /// model's free response has decayed below 1e-4 (localize), or the last N
    /// samples of the record (spectrum).
    #[arg(long = "L", value_name = "L")]
    transient: Option<usize>,
    /// Window applied before the DFT.
    #[arg(long, value_enum, default_value_t = WindowArg::Hamming)]
    window: WindowArg,
}

impl DftArgs {
    fn config(&self, default_transient: usize, tau: f64) -> SpectrumConfig {
        SpectrumConfig {
            dft_len: self.dft_len,
            transient: self.transient.unwrap_or(default_transient),
            threshold: tau,
            window: self.window.into(),
        }
    }
}

#[derive(Args)]
struct GenSystemArgs {
    /// Number of states n (even).
    #[arg(long, default_value_t = 32)]
    states: usize,
    /// Number of inputs m (candidate source locations).
    #[arg(long, default_value_t = 16)]
    inputs: usize,
    /// Number of sensors p.
    #[arg(long, default_value_t = 3)]
    outputs: usize,
    /// Range of modal frequencies in Hz, as LO,HI.
    #[arg(long, value_delimiter = ',', num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.5, 3.5])]
    modal_freq_hz: Vec<f64>,
    /// Range of modal damping ratios, as LO,HI.
    #[arg(long, value_delimiter = ',', num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.5, 0.8])]
    damping: Vec<f64>,
    /// Scale of the random orthogonal mixing between modes.
    #[arg(long, default_value_t = 0.3)]
    coupling: f64,
    /// Modal blocks observed by the sensors, comma separated (one per sensor).
    /// Default: drawn at random.
    #[arg(long, value_delimiter = ',')]
    sensor_blocks: Option<Vec<usize>>,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// json writes one file; csv writes A.csv, B.csv, C.csv into the output directory.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file (json) or directory (csv).
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON supplying plant, forcing, rate, N and L.
    #[arg(long, required_unless_present_all = ["model", "forcing"])]
    scenario: Option<PathBuf>,
    /// Model file (JSON, or a directory of A/B/C CSVs). Overrides the scenario's plant.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Forcing JSON: list of {location, amplitude, frequency_hz, phase_rad}.
    /// Overrides the scenario's forcing.
    #[arg(long)]
    forcing: Option<PathBuf>,
    /// Sampling rate F in Hz when no scenario is given.
    #[arg(long, default_value_t = 30.0)]
    sample_rate: f64,
    /// Window length N; the record holds L + N samples.
    #[arg(long = "N", value_name = "N")]
    dft_len: Option<usize>,
    /// Transient length L. Default: the scenario's, else where the plant's
    /// free response has decayed below 1e-4.
    #[arg(long = "L", value_name = "L")]
    transient: Option<usize>,
    /// Signal-to-noise ratio in dB of the added white Gaussian noise.
    /// Default: the scenario's, else noise-free.
    #[arg(long = "snr-db", allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// Noise seed. Default: the scenario's first seed, else 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Output measurement CSV.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Measurement CSV (`# fs=<Hz>` header, one row per sample).
    #[arg(long)]
    measurements: PathBuf,
    /// Detection threshold tau > 0 on the scaled spectrum modulus.
    #[arg(long)]
    tau: f64,
    #[command(flatten)]
    dft: DftArgs,
    /// Output directory for spectrum.csv, spectrum.dat and bins.json.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("reg").required(true).args(["alpha", "lambda"])))]
struct LocalizeArgs {
    /// Model file (JSON, or a directory of A/B/C CSVs), continuous time.
    #[arg(long)]
    model: PathBuf,
    /// Measurement CSV (`# fs=<Hz>` header, one row per sample).
    #[arg(long)]
    measurements: PathBuf,
    /// Detection threshold tau > 0 on the scaled spectrum modulus.
    #[arg(long)]
    tau: f64,
    /// Regularization relative to lambda_max of the detected bins, in [0, 1].
    #[arg(long)]
    alpha: Option<f64>,
    /// Absolute regularization weight lambda >= 0.
    #[arg(long)]
    lambda: Option<f64>,
    #[command(flatten)]
    dft: DftArgs,
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the per-sweep solver trace of every bin to this CSV.
    #[arg(long)]
    solver_trace: Option<PathBuf>,
    /// Coordinate descent stopping tolerance on the largest coefficient change.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Sweep limit per bin.
    #[arg(long, default_value_t = 10_000)]
    max_sweeps: usize,
    /// Output report file.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario JSON.
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario's SNR in dB.
    #[arg(long = "snr-db", allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// Override the scenario's realizations with seeds 0..COUNT.
    #[arg(long, value_name = "COUNT")]
    seeds: Option<u64>,
    /// Fraction of realizations that must be perfect inside the reported alpha window.
    #[arg(long, default_value_t = 0.8)]
    fraction: f64,
    /// Output directory for sweep.csv, sweep_summary.csv, sweep.dat, sweep.json
    /// and estimates.csv.
    #[arg(short, long)]
    output: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))
}

fn gen_system(args: GenSystemArgs) -> Result<()> {
    let params = SystemParams {
        states: args.states,
        inputs: args.inputs,
        outputs: args.outputs,
        modal_freq_hz: [args.modal_freq_hz[0], args.modal_freq_hz[1]],
        damping: [args.damping[0], args.damping[1]],
        coupling: args.coupling,
        sensor_blocks: args.sensor_blocks,
    };
    let model = random_stable_system(&params, args.seed)?;
    match args.format {
        Format::Json => {
            let mut w = create(&args.output)?;
            io::write_model_json(&mut w, &model)?;
            w.flush()?;
        }
        Format::Csv => io::write_model_csv_dir(&args.output, &model)?,
    }
    eprintln!(
        "wrote {} states, {} inputs, {} outputs to {}",
        model.states(),
        model.inputs(),
        model.outputs(),
        args.output.display()
    );
    Ok(())
}

fn simulate_cmd(args: SimulateArgs) -> Result<()> {
    let forcing = |inputs: usize| -> Result<Option<ForcedInputConfig>> {
        args.forcing
            .as_deref()
            .map(|p| Ok(ForcedInputConfig::new(inputs, io::read_sinusoids_json(open(p)?)?)))
            .transpose()
    };
    let (rate, y) = if let Some(path) = &args.scenario {
        let mut spec = io::read_scenario_json(open(path)?)?;
        if let Some(m) = &args.model {
            spec.model = ModelSource::File { path: m.clone() };
        }
        if let Some(n) = args.dft_len {
            spec.dft_len = n;
        }
        if args.transient.is_some() {
            spec.transient = args.transient;
        }
        if args.snr_db.is_some() {
            spec.snr_db = args.snr_db;
        }
        if let Some(f) = forcing(spec.forcing.inputs)? {
            spec.forcing = f;
        }
        let seed = args.seed.or(spec.seeds.first().copied()).unwrap_or(0);
        let prepared = spec.prepare()?;
        (spec.sample_rate_hz, prepared.measurements(seed)?)
    } else {
        let model_path = args.model.as_deref().expect("clap enforces --model");
        let plant = io::read_model(model_path)?;
        let forcing = forcing(plant.inputs())?.expect("clap enforces --forcing");
        let period = 1.0 / args.sample_rate;
        let model = discretize(&plant, period)?;
        let transient = args.transient.unwrap_or_else(|| model.transient_cutoff());
        let n = args.dft_len.unwrap_or(600);
        let u = generate_input(&forcing, period, 0..transient + n)?;
        let clean = simulate(&model, &u, None)?;
        let y = match args.snr_db {
            Some(snr) => add_noise(&clean, snr, args.seed.unwrap_or(0), Some(transient..transient + n))?,
            None => clean,
        };
        (args.sample_rate, y)
    };
    let mut w = create(&args.output)?;
    io::write_measurements_csv(&mut w, rate, &y)?;
    w.flush()?;
    eprintln!("wrote {} samples of {} channels to {}", y.ncols(), y.nrows(), args.output.display());
    Ok(())
}

fn spectrum_cmd(args: SpectrumArgs) -> Result<()> {
    let (rate, y) = io::read_measurements_csv(open(&args.measurements)?)?;
    let spectrum = analyze(&y, &args.dft.config(y.ncols().saturating_sub(args.dft.dft_len), args.tau))?;
    fs::create_dir_all(&args.output)?;
    let mut w = create(&args.output.join("spectrum.csv"))?;
    io::write_spectrum_csv(&mut w, &spectrum, rate)?;
    w.flush()?;
    let mut w = create(&args.output.join("spectrum.dat"))?;
    io::write_spectrum_dat(&mut w, &spectrum, rate)?;
    w.flush()?;
    let detected = io::DetectedBins::new(&spectrum, args.tau, rate);
    let mut w = create(&args.output.join("bins.json"))?;
    serde_json::to_writer_pretty(&mut w, &detected)?;
    w.flush()?;
    for (bin, f) in detected.bins.iter().zip(&detected.frequencies_hz) {
        println!("bin {bin}\t{f} Hz\t{:e}", spectrum.channel_max(*bin));
    }
    eprintln!("{} bin(s) above tau = {}", detected.bins.len(), args.tau);
    Ok(())
}

/// Returns whether anything was detected.
fn localize_cmd(args: LocalizeArgs) -> Result<bool> {
    let plant = io::read_model(&args.model)?;
    let (rate, y) = io::read_measurements_csv(open(&args.measurements)?)?;
    let model = discretize(&plant, 1.0 / rate)?;
    if y.nrows() != model.outputs() {
        return Err(Error::Config(format!(
            "measurements have {} channels, model has {} outputs",
            y.nrows(),
            model.outputs()
        )));
    }
    let regularization = match (args.alpha, args.lambda) {
        (Some(a), None) if (0.0..=1.0).contains(&a) => Regularization::Alpha(a),
        (Some(a), None) => return Err(Error::Config(format!("--alpha must lie in [0, 1], got {a}"))),
        (None, Some(l)) => Regularization::Lambda(l),
        _ => unreachable!("clap enforces exactly one of --alpha/--lambda"),
    };
    let solver = SolverOptions {
        tol: args.tol,
        max_sweeps: args.max_sweeps,
        record_trace: args.solver_trace.is_some(),
        ..SolverOptions::default()
    };
    let spectrum = analyze(&y, &args.dft.config(model.transient_cutoff(), args.tau))?;
    let (report, solutions) = localize_detailed(&model, &spectrum, regularization, &solver)?;

    let mut w = create(&args.output)?;
    match args.format {
        Format::Json => io::write_report_json(&mut w, &report)?,
        Format::Csv => io::write_report_csv(&mut w, &report)?,
    }
    w.flush()?;
    if let Some(path) = &args.solver_trace {
        let mut w = create(path)?;
        writeln!(w, "bin,sweep,lambda,objective,nonzeros,max_delta")?;
        for (bin, sol) in spectrum.bins.iter().zip(&solutions) {
            for r in &sol.trace {
                writeln!(w, "{bin},{},{:e},{:e},{},{:e}", r.sweep, r.lambda, r.objective, r.nonzeros, r.max_delta)?;
            }
        }
        w.flush()?;
    }

    for warning in &report.diagnostics.warnings {
        eprintln!("warning: {warning}");
    }
    for s in &report.sources {
        println!(
            "location {}\t{} Hz\tamplitude {:.6e}\tphase {:.6} rad",
            s.location, s.frequency_hz, s.amplitude, s.phase_rad
        );
    }
    eprintln!(
        "{} bin(s), {} source entr{} at {} location(s), lambda = {:e} (lambda_max = {:e})",
        report.bins.len(),
        report.sources.len(),
        if report.sources.len() == 1 { "y" } else { "ies" },
        report.locations().len(),
        report.diagnostics.lambda,
        report.diagnostics.lambda_max
    );
    Ok(report.status == ReportStatus::Ok)
}

fn sweep_cmd(args: SweepArgs) -> Result<()> {
    let mut spec: ScenarioSpec = io::read_scenario_json(open(&args.scenario)?)?;
    if args.snr_db.is_some() {
        spec.snr_db = args.snr_db;
    }
    if let Some(count) = args.seeds {
        spec.seeds = (0..count).collect();
    }
    if !(args.fraction > 0.0 && args.fraction <= 1.0) {
        return Err(Error::Config(format!("--fraction must lie in (0, 1], got {}", args.fraction)));
    }
    let result = sweep_alpha(&spec)?;
    let out = &args.output;
    fs::create_dir_all(out)?;
    let mut w = create(&out.join("sweep.csv"))?;
    io::write_sweep_csv(&mut w, &result)?;
    w.flush()?;
    let mut w = create(&out.join("sweep_summary.csv"))?;
    io::write_sweep_summary_csv(&mut w, &result)?;
    w.flush()?;
    let mut w = create(&out.join("sweep.dat"))?;
    io::write_sweep_dat(&mut w, &result)?;
    w.flush()?;
    let mut w = create(&out.join("sweep.json"))?;
    serde_json::to_writer_pretty(&mut w, &result)?;
    w.flush()?;

    match result.all_perfect {
        Some((lo, hi)) => println!("all {} realizations perfect for alpha in [{lo:.4}, {hi:.4}]", result.seeds),
        None => println!("no alpha is perfect for all {} realizations", result.seeds),
    }
    match result.window_with_fraction(args.fraction) {
        Some((lo, hi)) => {
            println!("at least {:.0}% perfect for alpha in [{lo:.4}, {hi:.4}]", 100.0 * args.fraction);
            let rows = estimate_statistics(&spec, lo)?;
            let mut w = create(&out.join("estimates.csv"))?;
            io::write_estimates_csv(&mut w, &rows)?;
            w.flush()?;
            println!("estimates at alpha = {lo:.4} written to estimates.csv");
        }
        None => println!("no alpha reaches {:.0}% perfect realizations", 100.0 * args.fraction),
    }
    if let Some(a) = result.best_alpha {
        println!("best alpha {a:.4}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GenSystem(a) => gen_system(a).map(|_| true),
        Command::Simulate(a) => simulate_cmd(a).map(|_| true),
        Command::Spectrum(a) => spectrum_cmd(a).map(|_| true),
        Command::Localize(a) => localize_cmd(a),
        Command::Sweep(a) => sweep_cmd(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("foloc: no oscillation detected above tau");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("foloc: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
