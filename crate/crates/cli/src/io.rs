//! Samples CSV and its metadata sidecar.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use prolate::signal::{SampleGrid, SampleSet};
use prolate::C64;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SAMPLES_HEADER: [&str; 5] = ["k", "t", "re", "im", "shots"];

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    #[serde(rename = "W_s")]
    pub w_s: f64,
    #[serde(rename = "N_s")]
    pub n_s: usize,
    pub seed: u64,
    pub shots: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum_file: Option<String>,
}

/// `samples.csv` → `samples.json`.
pub fn sidecar_path(samples: &Path) -> PathBuf {
    samples.with_extension("json")
}

pub fn write_samples(path: &Path, samples: &SampleSet, spectrum_file: Option<String>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    w.write_record(SAMPLES_HEADER).map_err(|e| CliError::csv(path, e))?;
    let n = samples.grid.n_s as i64;
    let shots = samples.shots_per_sample.to_string();
    for k in -n..=n {
        let v = samples.value(k);
        let rec = [k.to_string(), fmt_f64(samples.grid.node(k)), fmt_f64(v.re), fmt_f64(v.im), shots.clone()];
        w.write_record(&rec).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    let meta = SampleMeta {
        w_s: samples.grid.w_s,
        n_s: samples.grid.n_s,
        seed: samples.seed,
        shots: samples.shots_per_sample,
        spectrum_file,
    };
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(&meta).expect("plain data serializes");
    std::fs::write(&side, text + "\n").map_err(|e| CliError::io(&side, e))
}

/// Reads a samples CSV. `W_s` comes from the sidecar when present, else
/// from the node spacing.
pub fn read_samples(path: &Path) -> Result<SampleSet, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let header = r.headers().map_err(|e| CliError::csv(path, e))?.clone();
    if header.iter().ne(SAMPLES_HEADER) {
        return Err(CliError::Parse(format!("{}: header must be `k,t,re,im,shots`", path.display())));
    }
    let mut rows: Vec<(i64, f64, C64, u64)> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let field = |i: usize| -> Result<&str, CliError> {
            rec.get(i).ok_or_else(|| CliError::Parse(format!("{}: row {} is missing `{}`", path.display(), line + 2, SAMPLES_HEADER[i])))
        };
        let num = |i: usize| -> Result<f64, CliError> {
            field(i)?.trim().parse::<f64>().map_err(|e| CliError::Parse(format!("{}: row {} field `{}`: {e}", path.display(), line + 2, SAMPLES_HEADER[i])))
        };
        let k = field(0)?.trim().parse::<i64>().map_err(|e| CliError::Parse(format!("{}: row {} field `k`: {e}", path.display(), line + 2)))?;
        let shots = field(4)?.trim().parse::<u64>().map_err(|e| CliError::Parse(format!("{}: row {} field `shots`: {e}", path.display(), line + 2)))?;
        rows.push((k, num(1)?, C64::new(num(2)?, num(3)?), shots));
    }
    let n = match rows.first() {
        Some(r) if r.0 < 0 => (-r.0) as usize,
        _ => return Err(CliError::Parse(format!("{}: expected rows for k = -N_s..N_s", path.display()))),
    };
    if rows.len() != 2 * n + 1 || rows.iter().enumerate().any(|(i, r)| r.0 != i as i64 - n as i64) {
        return Err(CliError::Parse(format!("{}: expected {} consecutive rows for k = -{n}..{n}, found {}", path.display(), 2 * n + 1, rows.len())));
    }
    let shots = rows[0].3;
    let side = sidecar_path(path);
    let (w_s, seed) = if side.exists() {
        let text = std::fs::read_to_string(&side).map_err(|e| CliError::io(&side, e))?;
        let meta: SampleMeta = serde_json::from_str(&text).map_err(|e| CliError::parse(&side, e))?;
        if meta.n_s != n {
            return Err(CliError::Parse(format!("{}: N_s = {} but the samples file has {n}", side.display(), meta.n_s)));
        }
        (meta.w_s, meta.seed)
    } else {
        (PI * n as f64 / rows[2 * n].1, 0)
    };
    let grid = SampleGrid::new(w_s, n)?;
    let values = rows.iter().map(|r| r.2).collect();
    Ok(SampleSet::new(grid, values, shots, seed)?)
}
