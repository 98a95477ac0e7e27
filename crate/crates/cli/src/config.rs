//! JSON configuration for `simulate` and `scan`.

use std::path::{Path, PathBuf};

use prolate::pfd::BandSpec;
use prolate::signal::{shots_schedule, LineSpectrum, SampleGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub omega_star: f64,
    pub w_f: f64,
}

impl Band {
    pub fn spec(&self) -> Result<BandSpec, CliError> {
        Ok(BandSpec::new(self.omega_star, self.w_f)?)
    }
}

/// Where the line spectrum comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumSource {
    Lines {
        freqs: Vec<f64>,
        weights: Vec<f64>,
        #[serde(default)]
        normalize: bool,
    },
    /// JSON file holding `{"freqs": [...], "weights": [...]}`.
    File { path: PathBuf },
    Random(RandomSpectrum),
}

/// Seeded random lines: `in_band` of them inside the band, the rest in
/// `range` but outside it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpectrum {
    pub count: usize,
    pub in_band: usize,
    pub range: [f64; 2],
    /// Total weight of the in-band lines.
    pub in_band_weight: f64,
    /// Minimum distance between in-band lines.
    #[serde(default)]
    pub min_gap: f64,
    /// In-band lines stay this fraction of `W_f` away from the band edges.
    #[serde(default = "default_edge_margin")]
    pub edge_margin: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_edge_margin() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumFile {
    freqs: Vec<f64>,
    weights: Vec<f64>,
}

pub fn read_spectrum_file(path: &Path) -> Result<LineSpectrum, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let f: SpectrumFile = serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))?;
    Ok(LineSpectrum::new(f.freqs, f.weights)?)
}

pub fn write_spectrum_file(path: &Path, spec: &LineSpectrum) -> Result<(), CliError> {
    let f = SpectrumFile { freqs: spec.freqs().to_vec(), weights: spec.weights().to_vec() };
    let text = serde_json::to_string_pretty(&f).expect("plain data serializes");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

impl SpectrumSource {
    /// Resolves relative file paths against `base`.
    pub fn load(&self, band: Option<&Band>, base: &Path, seed: u64) -> Result<LineSpectrum, CliError> {
        match self {
            SpectrumSource::Lines { freqs, weights, normalize } => {
                let s = if *normalize {
                    LineSpectrum::normalized(freqs.clone(), weights.clone())
                } else {
                    LineSpectrum::new(freqs.clone(), weights.clone())
                };
                Ok(s?)
            }
            SpectrumSource::File { path } => read_spectrum_file(&base.join(path)),
            SpectrumSource::Random(r) => {
                let band = band.ok_or_else(|| CliError::Config("spectrum: random spectra need a `band`".into()))?;
                r.generate(&band.spec()?, r.seed.unwrap_or(seed))
            }
        }
    }
}

impl RandomSpectrum {
    pub fn validate(&self, band: &BandSpec) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(format!("spectrum: {m}")));
        if self.in_band > self.count {
            return bad(format!("in_band = {} exceeds count = {}", self.in_band, self.count));
        }
        if self.in_band == 0 {
            return bad("in_band must be positive".into());
        }
        if !(self.in_band_weight > 0.0 && self.in_band_weight <= 1.0) {
            return bad(format!("in_band_weight must lie in (0, 1], got {}", self.in_band_weight));
        }
        if self.count == self.in_band && self.in_band_weight != 1.0 {
            return bad("in_band_weight must be 1 without off-band lines".into());
        }
        if !(0.0..1.0).contains(&self.edge_margin) {
            return bad(format!("edge_margin must lie in [0, 1), got {}", self.edge_margin));
        }
        let [lo, hi] = self.range;
        if !(lo < band.omega_star - band.w_f && hi > band.omega_star + band.w_f) && self.count > self.in_band {
            return bad(format!("range [{lo}, {hi}] leaves no room outside the band"));
        }
        let inner = 2.0 * band.w_f * (1.0 - self.edge_margin);
        if self.min_gap * (self.in_band as f64 - 1.0) >= inner {
            return bad(format!("{} lines with min_gap {} do not fit in the band", self.in_band, self.min_gap));
        }
        Ok(())
    }

    /// Same seed gives the same spectrum.
    pub fn generate(&self, band: &BandSpec, seed: u64) -> Result<LineSpectrum, CliError> {
        self.validate(band)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = band.w_f * (1.0 - self.edge_margin);
        let mut fin: Vec<f64> = Vec::with_capacity(self.in_band);
        let mut tries = 0usize;
        while fin.len() < self.in_band {
            let x = band.omega_star + rng.random_range(-half..=half);
            if fin.iter().all(|y| (x - y).abs() >= self.min_gap) {
                fin.push(x);
            }
            tries += 1;
            if tries > 100_000 {
                return Err(CliError::Config("spectrum: could not place in-band lines with the requested min_gap".into()));
            }
        }
        let [lo, hi] = self.range;
        let mut fout = Vec::with_capacity(self.count - self.in_band);
        while fout.len() < self.count - self.in_band {
            let x = rng.random_range(lo..=hi);
            if (x - band.omega_star).abs() > band.w_f {
                fout.push(x);
            }
        }
        let mut win: Vec<f64> = (0..self.in_band).map(|_| rng.random_range(0.1..1.0)).collect();
        let mut wout: Vec<f64> = (0..fout.len()).map(|_| rng.random_range(0.1..1.0)).collect();
        let si: f64 = win.iter().sum();
        win.iter_mut().for_each(|w| *w *= self.in_band_weight / si);
        if !wout.is_empty() {
            let so: f64 = wout.iter().sum();
            wout.iter_mut().for_each(|w| *w *= (1.0 - self.in_band_weight) / so);
        }
        fin.extend(fout);
        win.extend(wout);
        Ok(LineSpectrum::normalized(fin, win)?)
    }
}

/// Shots per quadrature.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShotsRule {
    Exact,
    Fixed { shots: u64 },
    /// `⌈F·√(N_s ln N_s)⌉`.
    Schedule {
        #[serde(rename = "F")]
        f: f64,
    },
}

impl ShotsRule {
    pub fn shots(&self, n_s: usize) -> Option<u64> {
        match *self {
            ShotsRule::Exact => None,
            ShotsRule::Fixed { shots } => Some(shots),
            ShotsRule::Schedule { f } => Some(shots_schedule(n_s, f)),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match *self {
            ShotsRule::Fixed { shots: 0 } => Err(CliError::Config("shots: fixed shots must be positive".into())),
            ShotsRule::Schedule { f } if !(f > 0.0) => Err(CliError::Config(format!("shots: F must be positive, got {f}"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub spectrum: SpectrumSource,
    #[serde(default)]
    pub band: Option<Band>,
    #[serde(rename = "W_s")]
    pub w_s: f64,
    #[serde(rename = "N_s", default)]
    pub n_s: Option<usize>,
    /// Rounded to the nearest even `N_s`.
    #[serde(rename = "T_max", default)]
    pub t_max: Option<f64>,
    pub shots: ShotsRule,
    #[serde(default)]
    pub seed: u64,
}

impl SimulateConfig {
    pub fn grid(&self) -> Result<SampleGrid, CliError> {
        match (self.n_s, self.t_max) {
            (Some(n), None) => Ok(SampleGrid::new(self.w_s, n)?),
            (None, Some(t)) => Ok(SampleGrid::for_tmax(self.w_s, t)?),
            _ => Err(CliError::Config("exactly one of `N_s` and `T_max` is required".into())),
        }
    }
}

/// Declared assumptions for blind analyses.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeConfig {
    Validation,
    Blind { e_lo: f64, e_hi: f64, offband_mass: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Runtime,
    Tmax,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::Runtime => "runtime",
            Axis::Tmax => "tmax",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Log-spaced when set.
    #[serde(default)]
    pub log: bool,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.start];
        }
        (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                if self.log {
                    (self.start.ln() + s * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + s * (self.stop - self.start)
                }
            })
            .collect()
    }
}

/// Sweep of the in-band weight at fixed `T_max`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapSweep {
    pub weights: Vec<f64>,
    #[serde(rename = "T_max")]
    pub t_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub spectrum: SpectrumSource,
    pub band: Band,
    #[serde(rename = "W_s")]
    pub w_s: f64,
    pub shots: ShotsRule,
    /// `T_max` sweep; ignored by overlap scans.
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub overlap: Option<OverlapSweep>,
    #[serde(default = "one")]
    pub seeds_per_point: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_axis")]
    pub axis: Axis,
    #[serde(default = "default_exponent")]
    pub fixed_exponent: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "M", default)]
    pub m_guess: Option<usize>,
    /// Fix `m` to the number of in-band lines instead of detecting it.
    #[serde(default)]
    pub known_m: bool,
    #[serde(default = "default_mode")]
    pub mode: ModeConfig,
    #[serde(default)]
    pub kappa: Option<f64>,
}

fn one() -> usize {
    1
}

fn default_bins() -> usize {
    20
}

fn default_axis() -> Axis {
    Axis::Runtime
}

fn default_exponent() -> f64 {
    -1.0
}

fn default_mode() -> ModeConfig {
    ModeConfig::Validation
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        self.band.spec()?;
        self.shots.validate()?;
        if !(self.w_s > 0.0) {
            return bad("W_s must be positive");
        }
        if self.seeds_per_point == 0 {
            return bad("seeds_per_point must be positive");
        }
        if self.bins == 0 {
            return bad("bins must be positive");
        }
        match (&self.sweep, &self.overlap) {
            (Some(s), None) => {
                if !(s.start > 0.0 && s.start < s.stop) {
                    return bad("sweep: need 0 < start < stop");
                }
                if s.points < self.bins {
                    return bad("sweep: points must be at least bins");
                }
                if self.axis == Axis::Runtime && matches!(self.shots, ShotsRule::Exact) {
                    return bad("axis: runtime needs a finite shot budget");
                }
            }
            (None, Some(o)) => {
                if o.weights.is_empty() || o.weights.iter().any(|w| !(*w > 0.0 && *w <= 1.0)) {
                    return bad("overlap: weights must lie in (0, 1]");
                }
                if !(o.t_max > 0.0) {
                    return bad("overlap: T_max must be positive");
                }
                if !matches!(self.spectrum, SpectrumSource::Random(_)) {
                    return bad("overlap: needs a random spectrum");
                }
            }
            _ => return bad("exactly one of `sweep` and `overlap` is required"),
        }
        Ok(())
    }
}

/// Reads a JSON config, naming the offending field on schema errors.
pub fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))
}
