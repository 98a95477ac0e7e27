//! Command-line drivers: PSWF tables, sample simulation, single analyses
//! and scaling scans.

pub mod config;
pub mod fit;
pub mod io;
pub mod scan;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use prolate::pfd::{analyze, AnalyzeOptions, BandSpec, EstimateReport, Status, ThresholdPolicy};
use prolate::pswf::build_basis;
use prolate::signal::make_samples;

use crate::config::{read_config, read_spectrum_file, write_spectrum_file, ScanConfig, SimulateConfig, SpectrumSource};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INCREASE_M: i32 = 2;
pub const EXIT_ILL_CONDITIONED: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] prolate::Error),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn parse(path: &Path, e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(format!("{}: {e}", path.display()))
        } else {
            CliError::Parse(format!("{}: {e}", path.display()))
        }
    }

    pub fn csv(path: &Path, e: csv::Error) -> Self {
        if e.is_io_error() {
            CliError::Io(format!("{}: {e}", path.display()))
        } else {
            CliError::Parse(format!("{}: {e}", path.display()))
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(prolate::Error::IllConditioned { .. }) => EXIT_ILL_CONDITIONED,
            _ => EXIT_IO,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "prolate", version, about = "Prolate filter diagonalization toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate a prolate basis as CSV.
    Pswf(PswfArgs),
    /// Emulate Hadamard-test samples of a line spectrum.
    Simulate(SimulateArgs),
    /// Estimate the in-band frequencies of a samples file.
    Analyze(AnalyzeArgs),
    /// Run a T_max or overlap scan.
    Scan(ScanArgs),
}

#[derive(Debug, Args)]
pub struct PswfArgs {
    /// Bandwidth parameter c = W·T (uses W = 1, T = c).
    #[arg(long, conflicts_with_all = ["w", "t"], required_unless_present_all = ["w", "t"])]
    pub c: Option<f64>,
    #[arg(long = "W", requires = "t")]
    pub w: Option<f64>,
    #[arg(long = "T", requires = "w")]
    pub t: Option<f64>,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Blind,
    Validation,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub band_center: f64,
    /// Half-width W_f of the band.
    #[arg(long)]
    pub band_width: f64,
    /// Guess dimension; defaults to ⌊W_f T/π⌋.
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long, value_enum, default_value = "blind")]
    pub mode: ModeArg,
    /// Known spectrum (JSON), required in validation mode.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    /// Declared spectral range for blind bounds.
    #[arg(long, allow_hyphen_values = true)]
    pub e_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub e_hi: Option<f64>,
    /// Declared off-band mass for blind bounds.
    #[arg(long, default_value_t = 1.0)]
    pub offband_mass: f64,
    /// Declared W_C around the band center.
    #[arg(long)]
    pub signal_bandwidth: Option<f64>,
    #[arg(long)]
    pub known_m: Option<usize>,
    #[arg(long, conflicts_with = "threshold")]
    pub kappa: Option<f64>,
    /// Fixed detection threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub allow_large_m: bool,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_IO } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let res = match cli.command {
        Command::Pswf(a) => cmd_pswf(&a).map(|_| EXIT_OK),
        Command::Simulate(a) => cmd_simulate(&a).map(|_| EXIT_OK),
        Command::Analyze(a) => cmd_analyze(&a).map(|r| status_code(r.status)),
        Command::Scan(a) => cmd_scan(&a).map(|_| EXIT_OK),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn status_code(s: Status) -> i32 {
    match s {
        Status::Ok => EXIT_OK,
        Status::IncreaseM => EXIT_INCREASE_M,
        Status::IllConditioned => EXIT_ILL_CONDITIONED,
    }
}

pub fn cmd_pswf(a: &PswfArgs) -> Result<(), CliError> {
    let (w, t) = match (a.c, a.w, a.t) {
        (Some(c), _, _) => (1.0, c),
        (None, Some(w), Some(t)) => (w, t),
        _ => return Err(CliError::Config("give --c or both --W and --T".into())),
    };
    let basis = build_basis(w, t, a.n_max, 1e-13)?;
    let mut out = csv::Writer::from_path(&a.out).map_err(|e| CliError::csv(&a.out, e))?;
    let err = |e| CliError::csv(&a.out, e);
    out.write_record(["n", "gamma", "one_minus_gamma", "chi", "xi_at_T", "c_extra", "c_intra", "asymptotic_floor"]).map_err(err)?;
    for n in 0..=a.n_max {
        let m = basis.mode(n);
        out.write_record([
            n.to_string(),
            io::fmt_f64(m.gamma),
            io::fmt_f64(m.one_minus_gamma),
            io::fmt_f64(m.chi),
            io::fmt_f64(m.xi_at_t),
            io::fmt_f64(m.c_extra),
            io::fmt_f64(m.c_intra),
            m.asymptotic_floor.to_string(),
        ])
        .map_err(err)?;
    }
    out.flush().map_err(|e| CliError::io(&a.out, e))
}

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let cfg: SimulateConfig = read_config(&a.config)?;
    cfg.shots.validate()?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let base = config_dir(&a.config);
    let spec = cfg.spectrum.load(cfg.band.as_ref(), &base, seed)?;
    let grid = cfg.grid()?;
    let samples = make_samples(&spec, grid, cfg.shots.shots(grid.n_s), seed)?;
    let spectrum_file = match &cfg.spectrum {
        SpectrumSource::File { path } => Some(path.display().to_string()),
        SpectrumSource::Random(_) => {
            let p = a.out.with_extension("spectrum.json");
            write_spectrum_file(&p, &spec)?;
            p.file_name().map(|f| f.to_string_lossy().into_owned())
        }
        SpectrumSource::Lines { .. } => None,
    };
    io::write_samples(&a.out, &samples, spectrum_file)
}

pub fn analyze_options(a: &AnalyzeArgs) -> Result<AnalyzeOptions, CliError> {
    let mut opts = match a.mode {
        ModeArg::Validation => {
            let path = a.spectrum.as_ref().ok_or_else(|| CliError::Config("validation mode needs --spectrum".into()))?;
            AnalyzeOptions::validation(read_spectrum_file(path)?)
        }
        ModeArg::Blind => {
            let (Some(lo), Some(hi)) = (a.e_lo, a.e_hi) else {
                return Err(CliError::Config("blind mode needs --e-lo and --e-hi".into()));
            };
            AnalyzeOptions::blind(lo, hi, a.offband_mass)
        }
    };
    opts.m_guess = a.m;
    opts.known_m = a.known_m;
    opts.signal_bandwidth = a.signal_bandwidth;
    opts.allow_large_m = a.allow_large_m;
    if let Some(kappa) = a.kappa {
        opts.threshold = ThresholdPolicy::Auto { kappa };
    }
    if let Some(value) = a.threshold {
        opts.threshold = ThresholdPolicy::Fixed { value };
    }
    Ok(opts)
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> Result<EstimateReport, CliError> {
    let samples = io::read_samples(&a.samples)?;
    let band = BandSpec::new(a.band_center, a.band_width)?;
    let report = analyze(&samples, band, &analyze_options(a)?)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &a.report {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e))?,
        None => print!("{text}"),
    }
    Ok(report)
}

pub fn cmd_scan(a: &ScanArgs) -> Result<scan::ScanResult, CliError> {
    let cfg: ScanConfig = read_config(&a.config)?;
    let r = scan::run_scan(&cfg, &config_dir(&a.config))?;
    scan::write_scan(&a.out, &cfg, &r)?;
    Ok(r)
}
