//! Truncated prolate sampling series and its truncation error bound.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::pswf::ProlateBasis;

/// Samples `f(kπ/W)` for `k ∈ [-K, K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSamples {
    pub rate_w: f64,
    /// Index `i` holds `k = i - K`.
    pub values: Vec<C64>,
}

impl UniformSamples {
    pub fn from_fn(rate_w: f64, half_count: usize, f: impl Fn(f64) -> C64) -> Self {
        let values = (-(half_count as i64)..=half_count as i64).map(|k| f(k as f64 * PI / rate_w)).collect();
        Self { rate_w, values }
    }

    /// Samples of `f` on the grid of `basis`: `K = ⌊TW/π⌋`.
    pub fn for_basis(basis: &ProlateBasis, f: impl Fn(f64) -> C64) -> Self {
        let k = (basis.params.c / PI + 1e-12).floor() as usize;
        Self::from_fn(basis.params.w, k, f)
    }

    pub fn half_count(&self) -> usize {
        self.values.len() / 2
    }

    pub fn node(&self, i: usize) -> f64 {
        (i as f64 - self.half_count() as f64) * PI / self.rate_w
    }
}

/// `ξ_n(kπ/W)` for the modes `n < N` at every sample node; rows are nodes.
#[derive(Debug, Clone)]
pub struct SamplingKernel {
    pub n_modes: usize,
    pub rows: Vec<Vec<f64>>,
}

impl SamplingKernel {
    pub fn new(basis: &ProlateBasis, samples: &UniformSamples, n_modes: usize) -> Result<Self> {
        check_grid(basis, samples, n_modes)?;
        let rows = (0..samples.values.len())
            .map(|i| {
                let mut v = basis.eval_all(samples.node(i));
                v.truncate(n_modes);
                v
            })
            .collect();
        Ok(Self { n_modes, rows })
    }

    /// `(π/W) Σ_k f(t_k) ξ_n(t_k)` for `n < N`.
    pub fn coefficients(&self, samples: &UniformSamples) -> Vec<C64> {
        let h = PI / samples.rate_w;
        let mut out = vec![C64::new(0.0, 0.0); self.n_modes];
        for (row, f) in self.rows.iter().zip(&samples.values) {
            for (o, x) in out.iter_mut().zip(row) {
                *o += f * x;
            }
        }
        out.iter().map(|x| x * h).collect()
    }
}

fn check_grid(basis: &ProlateBasis, samples: &UniformSamples, n_modes: usize) -> Result<()> {
    if n_modes > basis.modes.len() {
        return Err(Error::InvalidInput(format!("N = {n_modes} exceeds the {} available modes", basis.modes.len())));
    }
    if (samples.rate_w - basis.params.w).abs() > 1e-12 * basis.params.w {
        return Err(Error::InvalidInput(format!("sample rate {} does not match basis bandwidth {}", samples.rate_w, basis.params.w)));
    }
    Ok(())
}

/// `f_N(t) = (π/W) Σ_{n<N} Σ_k f(kπ/W) ξ_n(kπ/W) ξ_n(t)`.
pub fn prolate_interpolate(basis: &ProlateBasis, samples: &UniformSamples, n_modes: usize, t: f64) -> Result<C64> {
    let kernel = SamplingKernel::new(basis, samples, n_modes)?;
    let coeffs = kernel.coefficients(samples);
    Ok(evaluate_series(basis, &coeffs, t))
}

/// `Σ_n coeffs[n] ξ_n(t)`.
pub fn evaluate_series(basis: &ProlateBasis, coeffs: &[C64], t: f64) -> C64 {
    let vals = basis.eval_all(t);
    coeffs.iter().zip(&vals).map(|(c, v)| c * v).sum()
}

/// Weights `w_k` such that `Σ_k w_k f(kπ/W) = ∫_{-T}^{T} f_N(t) dt`, for
/// `k ∈ [-K, K]`. Only even modes contribute.
pub fn quadrature_weights(basis: &ProlateBasis, n_modes: usize, half_count: usize) -> Result<Vec<f64>> {
    if n_modes > basis.modes.len() {
        return Err(Error::InvalidInput(format!("N = {n_modes} exceeds the {} available modes", basis.modes.len())));
    }
    let p = &basis.params;
    let h = PI / p.w;
    let at0 = basis.eval_all(0.0);
    // ∫_{-T}^{T} ξ_n = conj(μ_n) √(T/W) ξ_n(0), real for even n
    let integrals: Vec<f64> = (0..n_modes)
        .map(|n| if n % 2 == 1 { 0.0 } else { basis.mode(n).mu.re * (p.t / p.w).sqrt() * at0[n] })
        .collect();
    let mut w = vec![0.0; 2 * half_count + 1];
    for k in 0..=half_count {
        let vals = basis.eval_all(k as f64 * h);
        let s: f64 = integrals.iter().zip(&vals).map(|(a, b)| a * b).sum();
        w[half_count + k] = h * s;
        w[half_count - k] = h * s;
    }
    Ok(w)
}

/// Truncation bound `(‖f‖²_{>T} + 2(π/W)‖f‖_{>T}‖f'‖_{>T}) Σ_{n<N} γ_n(1-γ_n)C_n
/// + ‖f‖²_{>T}/(1-γ_N)` with `C_n = 1 + 2(π/W) C_extra,n`.
pub fn truncation_bound(basis: &ProlateBasis, n_modes: usize, tail_energy: f64, tail_deriv_energy: f64) -> Result<f64> {
    if n_modes > basis.n_max() {
        return Err(Error::InvalidInput(format!("N = {n_modes} exceeds n_max = {}", basis.n_max())));
    }
    if tail_energy < 0.0 || tail_deriv_energy < 0.0 {
        return Err(Error::InvalidInput("tail energies must be nonnegative".into()));
    }
    let h = PI / basis.params.w;
    let sum: f64 = basis.modes[..n_modes]
        .iter()
        .map(|m| m.gamma * m.one_minus_gamma * (1.0 + 2.0 * h * m.c_extra))
        .sum();
    let pre = tail_energy + 2.0 * h * tail_energy.sqrt() * tail_deriv_energy.sqrt();
    Ok(pre * sum + tail_energy / basis.mode(n_modes).one_minus_gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pswf::build_basis;
    use crate::quadrature::GaussLegendre;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn zero_tail_gives_zero_bound() {
        let b = build_basis(1.0, 10.0, 12, 1e-13).unwrap();
        assert_eq!(truncation_bound(&b, 5, 0.0, 0.0).unwrap(), 0.0);
        assert!(truncation_bound(&b, 13, 0.1, 0.1).is_err());
        for n in 0..12 {
            assert!(truncation_bound(&b, n, 1e-3, 1e-2).unwrap() >= 0.0);
        }
    }

    #[test]
    fn reconstructs_xi0_within_bound() {
        let b = build_basis(1.0, 10.0, 14, 1e-13).unwrap();
        let s = UniformSamples::for_basis(&b, |t| c(b.eval(0, t)));
        let gl = GaussLegendre::new(200);
        let m0 = b.mode(0);
        let tail_d = m0.one_minus_gamma * m0.c_extra * m0.c_extra;
        for n in 1..=b.params.c_tilde.floor() as usize {
            let k = SamplingKernel::new(&b, &s, n).unwrap();
            let coeffs = k.coefficients(&s);
            let err = gl.integrate(-10.0, 10.0, |t| (evaluate_series(&b, &coeffs, t) - b.eval(0, t)).norm_sqr());
            let bound = truncation_bound(&b, n, m0.one_minus_gamma, tail_d).unwrap();
            assert!(err <= bound, "N={n}: {err} > {bound}");
        }
    }

    #[test]
    #[ignore = "cos(Wt/2) has infinite energy outside [-T, T]; measured errors are 3e-2..2e-1 for c = 20..40"]
    fn reconstructs_narrowband_cosine() {
        let (w, t) = (1.0, 20.0);
        let b = build_basis(w, t, 20, 1e-13).unwrap();
        let f = |x: f64| (w * x / 2.0).cos();
        let s = UniformSamples::for_basis(&b, |x| c(f(x)));
        let n = (2.0 * w * t / PI).floor() as usize;
        let k = SamplingKernel::new(&b, &s, n).unwrap();
        let coeffs = k.coefficients(&s);
        for i in 0..=100 {
            let x = -0.8 * t + 1.6 * t * i as f64 / 100.0;
            assert!((evaluate_series(&b, &coeffs, x).re - f(x)).abs() <= 1e-4, "t={x}");
        }
        // near-collocation at a node
        let node = 3.0 * PI / w;
        assert!((evaluate_series(&b, &coeffs, node).re - f(node)).abs() < 1e-4);
    }

    #[test]
    fn quadrature_weights_integrate_band_limited_functions() {
        let (w, t) = (3.0, 3.0 * PI);
        let b = build_basis(w, t, 20, 1e-13).unwrap();
        let kk = (w * t / PI).round() as usize;
        let wts = quadrature_weights(&b, 19, kk).unwrap();
        // f = cos(1.1 t): ∫_{-T}^{T} = 2 sin(1.1 T)/1.1, sampled integration accurate to the truncation bound
        let approx: f64 = (0..wts.len()).map(|i| wts[i] * (1.1 * (i as f64 - kk as f64) * PI / w).cos()).sum();
        let exact = 2.0 * (1.1 * t).sin() / 1.1;
        assert!((approx - exact).abs() < 0.05 * (1.0 + exact.abs()));
        assert!((wts[0] - wts[wts.len() - 1]).abs() < 1e-15);
    }
}
