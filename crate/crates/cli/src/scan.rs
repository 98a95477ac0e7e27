//! `T_max` and overlap scans.

use std::path::Path;

use prolate::pfd::{analyze_with_setup, AnalyzeOptions, BandSpec, PfdSetup, SetupOptions, ThresholdPolicy};
use prolate::signal::{make_samples, runtime, LineSpectrum, SampleGrid};
use rayon::prelude::*;

use crate::config::{Axis, ModeConfig, ScanConfig, SpectrumSource};
use crate::fit::{bin_average, fit_fixed_exponent, fit_power_law, Bins};
use crate::io::fmt_f64;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub index: usize,
    pub seed: u64,
    /// `T_max`, or the in-band weight for overlap scans.
    pub x: f64,
    pub t_max: f64,
    pub n_s: usize,
    pub shots: u64,
    pub runtime: f64,
    pub status: String,
    pub m: usize,
    /// Absolute errors against the in-band lines, ascending in frequency;
    /// empty when the estimate count differs.
    pub errors: Vec<f64>,
    pub mean_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSummary {
    pub axis: Axis,
    pub bins: Bins,
    /// `(a, b, rms)` over the bin means.
    pub slope: Option<(f64, f64, f64)>,
    /// `(a, rms)` at the configured exponent; only for the configured axis.
    pub fixed: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSummary {
    pub weight: f64,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub points: Vec<PointResult>,
    pub axes: Vec<AxisSummary>,
    pub weights: Vec<WeightSummary>,
    /// Number of in-band lines, the width of the error columns.
    pub n_in: usize,
}

/// Worker count from `PROLATE_THREADS`, else rayon's default.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("PROLATE_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| CliError::Config(format!("PROLATE_THREADS must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(CliError::Config("PROLATE_THREADS must be positive".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn in_band_lines(spec: &LineSpectrum, band: &BandSpec) -> Vec<f64> {
    spec.freqs().iter().copied().filter(|e| band.contains(*e)).collect()
}

fn extent(spec: &LineSpectrum, band: &BandSpec) -> f64 {
    spec.freqs().iter().fold(0.0f64, |m, e| m.max((e - band.omega_star).abs()))
}

struct Job {
    index: usize,
    seed: u64,
    x: f64,
}

fn options(cfg: &ScanConfig, spec: &LineSpectrum, n_in: usize) -> AnalyzeOptions {
    let mut opts = match cfg.mode {
        ModeConfig::Validation => AnalyzeOptions::validation(spec.clone()),
        ModeConfig::Blind { e_lo, e_hi, offband_mass } => AnalyzeOptions::blind(e_lo, e_hi, offband_mass),
    };
    opts.m_guess = cfg.m_guess;
    opts.known_m = cfg.known_m.then_some(n_in);
    if let Some(kappa) = cfg.kappa {
        opts.threshold = ThresholdPolicy::Auto { kappa };
    }
    opts
}

fn run_point(cfg: &ScanConfig, band: &BandSpec, spec: &LineSpectrum, setup: &PfdSetup, job: &Job) -> PointResult {
    let grid = setup.grid;
    let shots = cfg.shots.shots(grid.n_s);
    let truth = in_band_lines(spec, band);
    let mut out = PointResult {
        index: job.index,
        seed: job.seed,
        x: job.x,
        t_max: grid.t_max(),
        n_s: grid.n_s,
        shots: shots.unwrap_or(0),
        runtime: runtime(shots.unwrap_or(0), grid.n_s, grid.w_s),
        status: "error".into(),
        m: 0,
        errors: Vec::new(),
        mean_error: f64::NAN,
    };
    let report = make_samples(spec, grid, shots, job.seed).and_then(|s| analyze_with_setup(&s, setup, &options(cfg, spec, truth.len())));
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            eprintln!("warning: point {}: {e}", job.index);
            return out;
        }
    };
    out.status = serde_json::to_value(report.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    out.m = report.m;
    if report.freqs.len() == truth.len() {
        out.errors = report.freqs.iter().zip(&truth).map(|(e, t)| (e - t).abs()).collect();
        out.mean_error = out.errors.iter().sum::<f64>() / out.errors.len().max(1) as f64;
    }
    out
}

fn setup_for(cfg: &ScanConfig, band: BandSpec, grid: SampleGrid, spec: &LineSpectrum) -> Result<PfdSetup, CliError> {
    let m_guess = cfg.m_guess.unwrap_or_else(|| PfdSetup::default_guess(&band, &grid));
    let w_c = match cfg.mode {
        ModeConfig::Validation => Some(extent(spec, &band)),
        ModeConfig::Blind { .. } => None,
    };
    Ok(PfdSetup::new(band, grid, m_guess, SetupOptions { signal_bandwidth: w_c, allow_large_m: false })?)
}

/// Runs every point of the scan; results are independent of the worker count.
pub fn run_scan(cfg: &ScanConfig, base: &Path) -> Result<ScanResult, CliError> {
    cfg.validate()?;
    let band = cfg.band.spec()?;
    let pool = thread_pool()?;
    let per = cfg.seeds_per_point;
    let mut result = match (&cfg.sweep, &cfg.overlap) {
        (Some(sweep), _) => {
            let spec = cfg.spectrum.load(Some(&cfg.band), base, cfg.seed)?;
            let n_in = in_band_lines(&spec, &band).len();
            let tmaxes = sweep.values();
            let groups: Vec<Result<Vec<PointResult>, CliError>> = pool.install(|| {
                tmaxes
                    .par_iter()
                    .enumerate()
                    .map(|(p, &t_max)| {
                        let grid = SampleGrid::for_tmax(cfg.w_s, t_max)?;
                        let setup = setup_for(cfg, band, grid, &spec)?;
                        Ok((0..per)
                            .map(|s| {
                                let index = p * per + s;
                                let job = Job { index, seed: cfg.seed ^ index as u64, x: t_max };
                                run_point(cfg, &band, &spec, &setup, &job)
                            })
                            .collect())
                    })
                    .collect()
            });
            let mut points = Vec::new();
            for g in groups {
                points.extend(g?);
            }
            ScanResult { points, axes: Vec::new(), weights: Vec::new(), n_in }
        }
        (None, Some(ov)) => {
            let SpectrumSource::Random(gen) = &cfg.spectrum else {
                return Err(CliError::Config("overlap: needs a random spectrum".into()));
            };
            let grid = SampleGrid::for_tmax(cfg.w_s, ov.t_max)?;
            let jobs: Vec<(f64, Job)> = ov
                .weights
                .iter()
                .enumerate()
                .flat_map(|(p, &w)| {
                    (0..per).map(move |s| {
                        let index = p * per + s;
                        (w, Job { index, seed: cfg.seed ^ index as u64, x: w })
                    })
                })
                .collect();
            let points: Vec<Result<PointResult, CliError>> = pool.install(|| {
                jobs.par_iter()
                    .map(|(w, job)| {
                        let mut g = gen.clone();
                        g.in_band_weight = *w;
                        // the line positions depend on the seed only, not on the weight
                        let spec = g.generate(&band, cfg.seed ^ (job.index % per) as u64)?;
                        let setup = setup_for(cfg, band, grid, &spec)?;
                        Ok(run_point(cfg, &band, &spec, &setup, job))
                    })
                    .collect()
            });
            let points = points.into_iter().collect::<Result<Vec<_>, _>>()?;
            ScanResult { points, axes: Vec::new(), weights: Vec::new(), n_in: gen.in_band }
        }
        (None, None) => unreachable!("validated"),
    };
    summarize(cfg, &mut result);
    Ok(result)
}

fn summarize(cfg: &ScanConfig, r: &mut ScanResult) {
    let ok: Vec<&PointResult> = r.points.iter().filter(|p| p.mean_error.is_finite() && p.mean_error > 0.0).collect();
    if cfg.overlap.is_some() {
        let mut ws: Vec<f64> = r.points.iter().map(|p| p.x).collect();
        ws.dedup();
        for w in ws {
            let ys: Vec<f64> = ok.iter().filter(|p| p.x == w).map(|p| p.mean_error).collect();
            let n = ys.len() as f64;
            let mean = ys.iter().sum::<f64>() / n;
            let std = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n).sqrt();
            r.weights.push(WeightSummary { weight: w, mean, std, count: ys.len() });
        }
        return;
    }
    for axis in [Axis::Runtime, Axis::Tmax] {
        let pts: Vec<(f64, f64)> = ok
            .iter()
            .map(|p| (if axis == Axis::Runtime { p.runtime } else { p.t_max }, p.mean_error))
            .collect();
        let bins = bin_average(&pts, cfg.bins);
        let binned: Vec<(f64, f64)> = bins.centers.iter().copied().zip(bins.means.iter().copied()).collect();
        let slope = fit_power_law(&binned).ok();
        let fixed = if axis == cfg.axis { fit_fixed_exponent(&binned, cfg.fixed_exponent).ok() } else { None };
        if !pts.is_empty() {
            r.axes.push(AxisSummary { axis, bins, slope, fixed });
        }
    }
}

/// One CSV for point, bin and fit rows; unused cells stay empty.
pub fn write_scan(path: &Path, cfg: &ScanConfig, r: &ScanResult) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let mut header: Vec<String> =
        ["kind", "axis", "index", "seed", "x", "t_max", "n_s", "shots", "runtime", "status", "m", "mean_error", "std_error", "count"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    header.extend((0..r.n_in).map(|i| format!("err_{i}")));
    w.write_record(&header).map_err(|e| CliError::csv(path, e))?;
    let width = header.len();
    let mut emit = |cells: Vec<String>| -> Result<(), CliError> {
        let mut cells = cells;
        cells.resize(width, String::new());
        w.write_record(&cells).map_err(|e| CliError::csv(path, e))
    };
    let e = String::new;
    for p in &r.points {
        let mut cells = vec![
            "point".into(),
            e(),
            p.index.to_string(),
            p.seed.to_string(),
            fmt_f64(p.x),
            fmt_f64(p.t_max),
            p.n_s.to_string(),
            p.shots.to_string(),
            fmt_f64(p.runtime),
            p.status.clone(),
            p.m.to_string(),
            fmt_f64(p.mean_error),
            e(),
            e(),
        ];
        cells.extend(p.errors.iter().map(|x| fmt_f64(*x)));
        emit(cells)?;
    }
    for a in &r.axes {
        for i in 0..a.bins.centers.len() {
            let (c, m, s, n) = (a.bins.centers[i], a.bins.means[i], a.bins.stds[i], a.bins.counts[i]);
            emit(vec!["bin".into(), a.axis.name().into(), i.to_string(), e(), fmt_f64(c), e(), e(), e(), e(), e(), e(), fmt_f64(m), fmt_f64(s), n.to_string()])?;
        }
        let nb = a.bins.centers.len().to_string();
        if let Some((pa, pb, rms)) = a.slope {
            emit(vec!["fit_slope".into(), a.axis.name().into(), e(), e(), fmt_f64(pb), e(), e(), e(), e(), e(), e(), fmt_f64(pa), fmt_f64(rms), nb.clone()])?;
        }
        if let Some((pa, rms)) = a.fixed {
            emit(vec!["fit_fixed".into(), a.axis.name().into(), e(), e(), fmt_f64(cfg.fixed_exponent), e(), e(), e(), e(), e(), e(), fmt_f64(pa), fmt_f64(rms), nb])?;
        }
    }
    for (i, s) in r.weights.iter().enumerate() {
        emit(vec!["weight".into(), e(), i.to_string(), e(), fmt_f64(s.weight), e(), e(), e(), e(), e(), e(), fmt_f64(s.mean), fmt_f64(s.std), s.count.to_string()])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
