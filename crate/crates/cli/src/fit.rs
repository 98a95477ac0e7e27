//! Power-law fits and log-binned averages.

use crate::CliError;

fn check_positive(points: &[(f64, f64)]) -> Result<(), CliError> {
    if points.is_empty() {
        return Err(CliError::Config("fit needs at least one point".into()));
    }
    if let Some(p) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(CliError::Config(format!("fit needs positive data, got ({}, {})", p.0, p.1)));
    }
    Ok(())
}

/// `y = a·x^b` with `b` fixed, least squares in log space. Returns `(a, rms)`.
pub fn fit_fixed_exponent(points: &[(f64, f64)], b: f64) -> Result<(f64, f64), CliError> {
    check_positive(points)?;
    let r: Vec<f64> = points.iter().map(|(x, y)| y.ln() - b * x.ln()).collect();
    let log_a = r.iter().sum::<f64>() / r.len() as f64;
    let rms = (r.iter().map(|v| (v - log_a).powi(2)).sum::<f64>() / r.len() as f64).sqrt();
    Ok((log_a.exp(), rms))
}

/// Free-slope `y = a·x^b`. Returns `(a, b, rms)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<(f64, f64, f64), CliError> {
    check_positive(points)?;
    if points.len() < 2 {
        return Err(CliError::Config("slope fit needs at least two points".into()));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(CliError::Config("slope fit needs distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let log_a = my - b * mx;
    let rms = (lx.iter().zip(&ly).map(|(x, y)| (y - log_a - b * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok((log_a.exp(), b, rms))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bins {
    /// Geometric bin centers.
    pub centers: Vec<f64>,
    pub means: Vec<f64>,
    /// Population standard deviations.
    pub stds: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width bins in `ln x`; empty bins are omitted. Points with
/// nonpositive or non-finite `x` or non-finite `y` are skipped.
pub fn bin_average(points: &[(f64, f64)], bins: usize) -> Bins {
    let pts: Vec<(f64, f64)> = points.iter().copied().filter(|(x, y)| *x > 0.0 && x.is_finite() && y.is_finite()).collect();
    let mut out = Bins { centers: vec![], means: vec![], stds: vec![], counts: vec![] };
    if pts.is_empty() || bins == 0 {
        return out;
    }
    let lo = pts.iter().map(|p| p.0.ln()).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0.ln()).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); bins];
    for (x, y) in &pts {
        let i = if width > 0.0 { (((x.ln() - lo) / width) as usize).min(bins - 1) } else { 0 };
        groups[i].push(*y);
    }
    for (i, g) in groups.iter().enumerate() {
        if g.is_empty() {
            continue;
        }
        let n = g.len() as f64;
        let mean = g.iter().sum::<f64>() / n;
        let var = g.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
        let center = if width > 0.0 { (lo + (i as f64 + 0.5) * width).exp() } else { lo.exp() };
        out.centers.push(center);
        out.means.push(mean);
        out.stds.push(var.sqrt());
        out.counts.push(g.len());
    }
    out
}
