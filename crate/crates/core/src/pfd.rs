//! Sampled prolate filter diagonalization: pencil construction from samples
//! or by quadrature, the analytic error machinery, amplitude estimation and
//! the end-to-end analysis pipeline.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, CMatrix, HermitianMatrix};
use crate::pswf::{build_basis, build_basis_with, BuildOptions, ProlateBasis, TailMode};
use crate::quadrature::{CompensatedSum, GaussLegendre};
use crate::sampling::{quadrature_weights, truncation_bound};
use crate::signal::{LineSpectrum, SampleGrid, SampleSet};
use crate::subspace::{run_known_m, run_protocol, Detection, Gep, RefinedGep};

const BASIS_TOL: f64 = 1e-13;
/// Relative floor on the detection threshold: pencil rounding.
const THRESHOLD_FLOOR: f64 = 1e-12;
/// Multiple of machine epsilon used for the rounding floor of error intervals.
const INTERVAL_FLOOR_ULPS: f64 = 64.0;

/// Target band `[ω* - W_f, ω* + W_f]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub omega_star: f64,
    pub w_f: f64,
}

impl BandSpec {
    pub fn new(omega_star: f64, w_f: f64) -> Result<Self> {
        if !(w_f > 0.0) || !w_f.is_finite() || !omega_star.is_finite() {
            return Err(Error::InvalidInput(format!("band half-width must be positive, got {w_f}")));
        }
        Ok(Self { omega_star, w_f })
    }

    pub fn contains(&self, e: f64) -> bool {
        (e - self.omega_star).abs() <= self.w_f
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SetupOptions {
    /// Declared bandwidth `W_C` of the shifted signal; defaults to `W_s - W_f`.
    pub signal_bandwidth: Option<f64>,
    /// Permits `M > ⌊2W_fT/π⌋`.
    pub allow_large_m: bool,
}

/// Bases, grid and precomputed filter tables for one `(band, grid, M)`.
#[derive(Debug, Clone)]
pub struct PfdSetup {
    pub band: BandSpec,
    pub grid: SampleGrid,
    pub t: f64,
    pub m_guess: usize,
    pub w_c: f64,
    pub basis_f: ProlateBasis,
    pub basis_s: ProlateBasis,
    pub dual_f: ProlateBasis,
    /// `w(k)` for `k ∈ [-N_s/2, N_s/2]`.
    pub weights: Vec<f64>,
    /// `w(k) ξ_l(t_k)`, rows `k`, columns `l ≤ n_max` of the filter basis.
    phi: Vec<Vec<f64>>,
    /// `w(k) ξ_l'(t_k)`.
    dphi: Vec<Vec<f64>>,
    xi_plus: Vec<f64>,
    xi_minus: Vec<f64>,
    proxy_cache: Arc<Mutex<Vec<(usize, (f64, f64))>>>,
}

impl PfdSetup {
    pub fn new(band: BandSpec, grid: SampleGrid, m_guess: usize, opts: SetupOptions) -> Result<Self> {
        let t = grid.half_duration();
        let c_f = band.w_f * t;
        let ct_f = 2.0 * c_f / PI;
        if m_guess == 0 {
            return Err(Error::InvalidInput("guess dimension must be positive".into()));
        }
        if !opts.allow_large_m && m_guess as f64 > ct_f.floor() {
            return Err(Error::InvalidInput(format!("M = {m_guess} exceeds ⌊2W_fT/π⌋ = {}", ct_f.floor())));
        }
        let w_c = opts.signal_bandwidth.unwrap_or(grid.w_s - band.w_f);
        if !(w_c >= 0.0) || grid.w_s < w_c + band.w_f - 1e-12 {
            return Err(Error::InvalidInput(format!(
                "sampling rate W_s = {} below W_C + W_f = {}",
                grid.w_s,
                w_c + band.w_f
            )));
        }
        let n_f = m_guess.max(ct_f.ceil() as usize) + 3;
        let basis_f = build_basis(band.w_f, t, n_f, BASIS_TOL)?;
        let dual_f = basis_f.dual()?;
        let n_s = grid.n_s;
        let basis_s = build_basis_with(grid.w_s, t, n_s + 1, BuildOptions { tail: TailMode::Subtraction, ..BuildOptions::default() })?;
        let half = n_s / 2;
        let weights = quadrature_weights(&basis_s, n_s + 1, half)?;
        let mut phi = Vec::with_capacity(2 * half + 1);
        let mut dphi = Vec::with_capacity(2 * half + 1);
        for (i, w) in weights.iter().enumerate() {
            let (v, d) = basis_f.eval_all_both(grid.node(i as i64 - half as i64));
            phi.push(v.iter().map(|x| w * x).collect());
            dphi.push(d.iter().map(|x| w * x).collect());
        }
        let xi_plus = basis_f.eval_all(t);
        let xi_minus = basis_f.eval_all(-t);
        Ok(Self { band, grid, t, m_guess, w_c, basis_f, basis_s, dual_f, weights, phi, dphi, xi_plus, xi_minus, proxy_cache: Arc::default() })
    }

    /// Default guess dimension `⌊W_f T/π⌋` for a grid.
    pub fn default_guess(band: &BandSpec, grid: &SampleGrid) -> usize {
        ((band.w_f * grid.half_duration() / PI).floor() as usize).max(1)
    }

    pub fn c_f(&self) -> f64 {
        self.band.w_f * self.t
    }

    pub fn n_filters(&self) -> usize {
        self.basis_f.modes.len()
    }

    fn half(&self) -> i64 {
        self.grid.n_s as i64 / 2
    }
}

/// Non-symmetrized `(A, B)` of the sampled pencil as a linear map of the
/// sample vector (index `i ↔ k = i - N_s`).
fn raw_sampled_pencil(setup: &PfdSetup, values: &[C64], m: usize) -> (CMatrix, CMatrix) {
    let n_s = setup.grid.n_s as i64;
    let nk = setup.phi.len();
    let sample = |k: i64| values[(k + n_s) as usize];
    // inner sums: (C Φ)[k2][l] and (C Φ')[k2][l]
    let mut cphi = vec![vec![C64::new(0.0, 0.0); m]; nk];
    let mut cdphi = vec![vec![C64::new(0.0, 0.0); m]; nk];
    for (i2, (row, drow)) in cphi.iter_mut().zip(cdphi.iter_mut()).enumerate() {
        for l in 0..m {
            let (mut br, mut bi, mut ar, mut ai) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
            for i1 in 0..nk {
                let c = sample(i2 as i64 - i1 as i64);
                let (p, dp) = (setup.phi[i1][l], setup.dphi[i1][l]);
                br.add(c.re * p);
                bi.add(c.im * p);
                ar.add(c.re * dp);
                ai.add(c.im * dp);
            }
            row[l] = C64::new(br.value(), bi.value());
            drow[l] = C64::new(ar.value(), ai.value());
        }
    }
    outer_pencil(setup, m, &cphi, &cdphi, sample)
}

/// Raw pencil of a sample vector supported on the lags `(d, C(t_d))`.
fn sparse_sampled_pencil(setup: &PfdSetup, lags: &[(i64, C64)], m: usize) -> (CMatrix, CMatrix) {
    let nk = setup.phi.len() as i64;
    let sample = |k: i64| lags.iter().filter(|(d, _)| *d == k).map(|(_, z)| *z).sum::<C64>();
    let mut cphi = vec![vec![C64::new(0.0, 0.0); m]; nk as usize];
    let mut cdphi = cphi.clone();
    for i2 in 0..nk {
        for &(d, z) in lags {
            let i1 = i2 - d;
            if (0..nk).contains(&i1) {
                let (p, dp) = (&setup.phi[i1 as usize], &setup.dphi[i1 as usize]);
                for l in 0..m {
                    cphi[i2 as usize][l] += z * p[l];
                    cdphi[i2 as usize][l] += z * dp[l];
                }
            }
        }
    }
    outer_pencil(setup, m, &cphi, &cdphi, sample)
}

fn outer_pencil(setup: &PfdSetup, m: usize, cphi: &[Vec<C64>], cdphi: &[Vec<C64>], sample: impl Fn(i64) -> C64) -> (CMatrix, CMatrix) {
    let half = setup.half();
    let nk = setup.phi.len();
    let mut a = CMatrix::zeros(m, m);
    let mut b = CMatrix::zeros(m, m);
    for s in 0..m {
        for l in 0..m {
            let (mut br, mut bi, mut ar, mut ai) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
            for i2 in 0..nk {
                let k = i2 as i64 - half;
                let p = setup.phi[i2][s];
                br.add(p * cphi[i2][l].re);
                bi.add(p * cphi[i2][l].im);
                // C(t_k - T) ξ_l(T) - C(t_k + T) ξ_l(-T)
                let bnd = sample(k - half) * setup.xi_plus[l] - sample(k + half) * setup.xi_minus[l];
                let inner = cdphi[i2][l] - bnd;
                ar.add(p * inner.re);
                ai.add(p * inner.im);
            }
            b[(s, l)] = C64::new(br.value(), bi.value());
            // -i (re + i im) = im - i re
            a[(s, l)] = C64::new(ai.value(), -ar.value());
        }
    }
    (a, b)
}

/// Sampled pencil from already shifted samples.
pub fn build_gep_sampled(samples: &SampleSet, setup: &PfdSetup) -> Result<Gep> {
    build_gep_sampled_m(samples, setup, setup.m_guess)
}

/// Sampled pencil of dimension `m`.
pub fn build_gep_sampled_m(samples: &SampleSet, setup: &PfdSetup, m: usize) -> Result<Gep> {
    check_samples(samples, setup)?;
    if m == 0 || m > setup.n_filters() {
        return Err(Error::InvalidInput(format!("pencil dimension {m} outside 1..={}", setup.n_filters())));
    }
    let (a, b) = raw_sampled_pencil(setup, &samples.values, m);
    Gep::new(HermitianMatrix::new(a)?, HermitianMatrix::new(b)?)
}

fn check_samples(samples: &SampleSet, setup: &PfdSetup) -> Result<()> {
    if samples.grid.n_s != setup.grid.n_s || (samples.grid.w_s - setup.grid.w_s).abs() > 1e-12 * setup.grid.w_s {
        return Err(Error::InvalidInput(format!(
            "samples on grid (W_s={}, N_s={}) but setup expects (W_s={}, N_s={})",
            samples.grid.w_s, samples.grid.n_s, setup.grid.w_s, setup.grid.n_s
        )));
    }
    if samples.values.len() != setup.grid.len() {
        return Err(Error::InvalidInput(format!("expected {} samples, got {}", setup.grid.len(), samples.values.len())));
    }
    Ok(())
}

/// Continuous-time signal for the quadrature pencil, already centered on the band.
pub trait ContinuousSignal {
    fn value(&self, t: f64) -> C64;
    /// Exact `C'(t)` when available.
    fn derivative(&self, _t: f64) -> Option<C64> {
        None
    }
    /// Line representation, enabling the separable evaluation.
    fn lines(&self) -> Option<&LineSpectrum> {
        None
    }
}

impl ContinuousSignal for LineSpectrum {
    fn value(&self, t: f64) -> C64 {
        self.eval_exact(t)
    }
    fn derivative(&self, t: f64) -> Option<C64> {
        Some(self.eval_deriv(t))
    }
    fn lines(&self) -> Option<&LineSpectrum> {
        Some(self)
    }
}

/// Wraps a closure as a [`ContinuousSignal`].
pub struct FnSignal<F: Fn(f64) -> C64>(pub F);

impl<F: Fn(f64) -> C64> ContinuousSignal for FnSignal<F> {
    fn value(&self, t: f64) -> C64 {
        (self.0)(t)
    }
}

/// Gauss-Legendre order adequate for lines up to `|E| ≤ e_max`.
pub fn default_quad_order(setup: &PfdSetup, e_max: f64) -> usize {
    ((e_max + setup.band.w_f) * setup.t).ceil() as usize + 4 * setup.n_filters() + 64
}

/// Quadrature pencil `∫∫ ξ_s(τ) C(τ - t) ξ_l(t)` and its `-i∂_τ` companion.
pub fn build_gep_quadrature(signal: &dyn ContinuousSignal, setup: &PfdSetup, m: usize, quad_order: usize) -> Result<Gep> {
    if m == 0 || m > setup.n_filters() {
        return Err(Error::InvalidInput(format!("pencil dimension {m} outside 1..={}", setup.n_filters())));
    }
    let (nodes, wts) = GaussLegendre::new(quad_order).on_interval(-setup.t, setup.t);
    let vals: Vec<Vec<f64>> = nodes.iter().map(|&x| setup.basis_f.eval_all(x)[..m].to_vec()).collect();
    let mut a = CMatrix::zeros(m, m);
    let mut b = CMatrix::zeros(m, m);
    if let Some(lines) = signal.lines() {
        for (e, w) in lines.freqs().iter().zip(lines.weights()) {
            let g = filter_transforms(&nodes, &wts, &vals, *e, m);
            for s in 0..m {
                for l in 0..m {
                    let v = g[s].conj() * g[l] * *w;
                    b[(s, l)] = b[(s, l)] + v;
                    a[(s, l)] = a[(s, l)] + v * *e;
                }
            }
        }
    } else {
        let h = 1e-6 / setup.grid.w_s;
        let q = nodes.len();
        for s in 0..m {
            for l in 0..m {
                let (mut br, mut bi, mut ar, mut ai) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
                for i in 0..q {
                    for j in 0..q {
                        let d = nodes[i] - nodes[j];
                        let wgt = wts[i] * wts[j] * vals[i][s] * vals[j][l];
                        let c = signal.value(d);
                        let dc = signal.derivative(d).unwrap_or_else(|| (signal.value(d + h) - signal.value(d - h)) / (2.0 * h));
                        br.add(wgt * c.re);
                        bi.add(wgt * c.im);
                        ar.add(wgt * dc.re);
                        ai.add(wgt * dc.im);
                    }
                }
                b[(s, l)] = C64::new(br.value(), bi.value());
                a[(s, l)] = C64::new(ai.value(), -ar.value());
            }
        }
    }
    Gep::new(HermitianMatrix::new(a)?, HermitianMatrix::new(b)?)
}

/// `G_l(E) = ∫_{-T}^{T} ξ_l(t) e^{-iEt} dt` by the given rule.
fn filter_transforms(nodes: &[f64], wts: &[f64], vals: &[Vec<f64>], e: f64, m: usize) -> Vec<C64> {
    (0..m)
        .map(|l| {
            let (mut re, mut im) = (CompensatedSum::new(), CompensatedSum::new());
            for ((x, w), v) in nodes.iter().zip(wts).zip(vals) {
                let p = C64::from_polar(w * v[l], -e * x);
                re.add(p.re);
                im.add(p.im);
            }
            C64::new(re.value(), im.value())
        })
        .collect()
}

/// `ε_M = 2π Σ_{l<M} γ_l (1-γ_l) C_extra,l` with the constants of the dual basis.
pub fn eps_prlt(setup: &PfdSetup, m: usize) -> Result<f64> {
    if m > setup.dual_f.modes.len() {
        return Err(Error::InvalidInput(format!("M = {m} exceeds the {} available filters", setup.dual_f.modes.len())));
    }
    Ok(2.0 * PI * setup.dual_f.modes[..m].iter().map(|d| d.gamma * d.one_minus_gamma * d.c_extra).sum::<f64>())
}

/// `ε_M·offband_mass + ‖δB‖`.
pub fn noise_weight_bound(eps_prlt: f64, offband_mass: f64, delta_b_bound: f64) -> Result<f64> {
    if !(0.0..=1.0 + 1e-12).contains(&offband_mass) || !(delta_b_bound >= 0.0) {
        return Err(Error::InvalidInput(format!("off-band mass {offband_mass} or δB bound {delta_b_bound} out of range")));
    }
    Ok(eps_prlt * offband_mass + delta_b_bound)
}

/// Entrywise analytic bounds on the sampling errors `|δA_sl|`, `|δB_sl|`
/// for exact samples of a signal of bandwidth `W_C`, returned as Frobenius
/// norms of the leading `m × m` blocks.
pub fn sampling_delta_bounds(setup: &PfdSetup, m: usize) -> Result<(f64, f64)> {
    let t = setup.t;
    let wc = setup.w_c;
    let n = setup.grid.n_s + 1;
    let bs = &setup.basis_s;
    let root2t = (2.0 * t).sqrt();
    let tb = |tail: f64, dtail: f64| -> Result<f64> { Ok(truncation_bound(bs, n, tail, dtail)?.max(0.0).sqrt()) };
    let mut inner_b = Vec::with_capacity(m);
    let mut inner_a = Vec::with_capacity(m);
    let mut outer_b = Vec::with_capacity(m);
    let mut outer_a = Vec::with_capacity(m);
    let mut abs_sum = Vec::with_capacity(m);
    for l in 0..m {
        let md = setup.basis_f.mode(l);
        let omg = md.one_minus_gamma;
        let ce2 = md.c_extra * md.c_extra;
        let wf = setup.band.w_f;
        // f = C(τ - t) ξ_l(t), p = C(τ - t) ξ_l'(t)
        inner_b.push(tb(omg, 2.0 * omg * (ce2 + wc * wc))?);
        inner_a.push(tb(omg * ce2, 2.0 * wc * wc * omg * ce2 + 2.0 * wf * wf * md.deriv_norm * md.deriv_norm)?);
        // h = ξ_s g_l with |g_l| ≤ √(2T), |g_l'| ≤ W_C √(2T); q = ξ_s g_l'
        outer_b.push(tb(2.0 * t * omg, 4.0 * t * omg * (ce2 + wc * wc))?);
        outer_a.push(tb(2.0 * t * wc * wc * omg, 4.0 * t * wc * wc * omg * (ce2 + wc * wc))?);
        abs_sum.push(setup.phi.iter().map(|r| r[l].abs()).sum::<f64>());
    }
    let (mut fa, mut fb) = (0.0, 0.0);
    for s in 0..m {
        for l in 0..m {
            let db = root2t * outer_b[s] + abs_sum[s] * root2t * inner_b[l];
            let da = root2t * outer_a[s] + abs_sum[s] * root2t * inner_a[l];
            fb += db * db;
            fa += da * da;
        }
    }
    Ok((fa.sqrt(), fb.sqrt()))
}

/// Noise scales `ρ_A, ρ_B = √(‖Σ_j H_j²‖/2)`, where `H_j` are the Hermitian
/// coefficient matrices of the map from the real and imaginary sample
/// perturbations at `k = 1..N_s` to the pencil. `σ_shot ρ` is the operator-norm
/// standard deviation of the pencil noise for complex sample noise of
/// standard deviation `σ_shot`. Cached per setup and dimension.
pub fn shot_noise_proxies(setup: &PfdSetup, m: usize) -> Result<(f64, f64)> {
    if let Some(v) = setup.proxy_cache.lock().ok().and_then(|c| c.iter().find(|(mm, _)| *mm == m).map(|(_, v)| *v)) {
        return Ok(v);
    }
    let n_s = setup.grid.n_s as i64;
    let mut va = CMatrix::zeros(m, m);
    let mut vb = CMatrix::zeros(m, m);
    for k in 1..=n_s {
        for z in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
            let (a, b) = sparse_sampled_pencil(setup, &[(k, z), (-k, z.conj())], m);
            let ha = HermitianMatrix::new(a)?.into_matrix();
            let hb = HermitianMatrix::new(b)?.into_matrix();
            va = va.add(&ha.matmul(&ha));
            vb = vb.add(&hb.matmul(&hb));
        }
    }
    let lmax = |v: CMatrix| -> Result<f64> { Ok(herm_eig(&HermitianMatrix::new(v)?)?.values[0].max(0.0)) };
    let out = ((lmax(va)? / 2.0).sqrt(), (lmax(vb)? / 2.0).sqrt());
    if let Ok(mut c) = setup.proxy_cache.lock() {
        c.push((m, out));
    }
    Ok(out)
}

/// How the detection threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ThresholdPolicy {
    /// `ε_M + ‖δB‖_analytic + κ σ_shot ρ_B`.
    Auto { kappa: f64 },
    Fixed { value: f64 },
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy::Auto { kappa: 3.0 }
    }
}

/// Threshold and its ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub eps_th: f64,
    pub eps_prlt: f64,
    pub delta_a_analytic: f64,
    pub delta_b_analytic: f64,
    /// `κ σ_shot ρ_A` and `κ σ_shot ρ_B`; zero for exact samples.
    pub shot_a: f64,
    pub shot_b: f64,
}

pub fn threshold(setup: &PfdSetup, m: usize, shots: u64, policy: ThresholdPolicy, b_scale: f64) -> Result<Threshold> {
    threshold_with(setup, m, shots, policy, b_scale, true)
}

/// [`threshold`], leaving the shot-noise terms at zero unless `with_shot`.
pub fn threshold_with(setup: &PfdSetup, m: usize, shots: u64, policy: ThresholdPolicy, b_scale: f64, with_shot: bool) -> Result<Threshold> {
    let eps = eps_prlt(setup, m)?;
    let (da, db) = sampling_delta_bounds(setup, m)?;
    let kappa = match policy {
        ThresholdPolicy::Auto { kappa } => kappa,
        ThresholdPolicy::Fixed { .. } => 0.0,
    };
    let (shot_a, shot_b) = if shots > 0 && with_shot {
        let (ra, rb) = shot_noise_proxies(setup, m)?;
        let sigma = (2.0 / shots as f64).sqrt();
        (kappa.max(0.0) * sigma * ra, kappa.max(0.0) * sigma * rb)
    } else {
        (0.0, 0.0)
    };
    let eps_th = match policy {
        ThresholdPolicy::Auto { .. } => eps + db + shot_b + THRESHOLD_FLOOR * b_scale,
        ThresholdPolicy::Fixed { value } => value,
    };
    Ok(Threshold { eps_th, eps_prlt: eps, delta_a_analytic: da, delta_b_analytic: db, shot_a, shot_b })
}

/// Rows `E_k`, columns the refined filters: `F_M(E) U_m`, or `F_M(E)` itself
/// when `u_m` is `None`. Frequencies are relative to the band center.
pub fn alternant(setup: &PfdSetup, u_m: Option<&CMatrix>, freqs: &[f64], m_guess: usize) -> Result<CMatrix> {
    if m_guess > setup.n_filters() {
        return Err(Error::InvalidInput(format!("M = {m_guess} exceeds the {} available filters", setup.n_filters())));
    }
    let f = CMatrix::from_fn(freqs.len(), m_guess, |k, l| setup.basis_f.ft_time_limited(l, freqs[k]));
    match u_m {
        Some(u) => {
            if u.rows() != m_guess {
                return Err(Error::InvalidInput(format!("refinement has {} rows, expected {m_guess}", u.rows())));
            }
            Ok(f.matmul(u))
        }
        None => Ok(f),
    }
}

/// `G = F^{-†} B_mm F^{-1}`: clipped diagonal and relative off-diagonal mass.
pub fn amplitudes(b_mm: &HermitianMatrix, f: &CMatrix, freqs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = b_mm.dim();
    if f.rows() != m || f.cols() != m {
        return Err(Error::InvalidInput(format!("alternant is {}x{}, expected {m}x{m}", f.rows(), f.cols())));
    }
    let cond = condition_number(f)?;
    if !(cond < 1e12) {
        return Err(Error::Singular(format!("alternant condition number {cond:.3e}; closest frequencies {}", closest_pair(freqs))));
    }
    let finv = f.inverse().map_err(|_| Error::Singular(format!("alternant singular; closest frequencies {}", closest_pair(freqs))))?;
    let g = finv.adjoint().matmul(b_mm.matrix()).matmul(&finv);
    let amps: Vec<f64> = (0..m).map(|i| g[(i, i)].re.max(0.0)).collect();
    let diag2: f64 = (0..m).map(|i| g[(i, i)].norm_sqr()).sum();
    let off2: f64 = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| g[(i, j)].norm_sqr()).sum();
    let offdiag = if diag2 > 0.0 { (off2 / diag2).sqrt() } else { 0.0 };
    Ok((amps, offdiag))
}

fn condition_number(f: &CMatrix) -> Result<f64> {
    let e = herm_eig(&HermitianMatrix::new(f.adjoint().matmul(f))?)?;
    let hi = e.values[0];
    let lo = *e.values.last().unwrap();
    Ok(if lo > 0.0 { (hi / lo).sqrt() } else { f64::INFINITY })
}

fn closest_pair(freqs: &[f64]) -> String {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..freqs.len() {
        for j in i + 1..freqs.len() {
            let d = (freqs[i] - freqs[j]).abs();
            if d < best.0 {
                best = (d, freqs[i], freqs[j]);
            }
        }
    }
    format!("{} and {}", best.1, best.2)
}

/// `ε_th / λ_min(F†F)`, infinite when `F` is singular.
pub fn min_detectable_amplitude(f: &CMatrix, eps_th: f64) -> Result<f64> {
    if eps_th == 0.0 {
        return Ok(0.0);
    }
    let e = herm_eig(&HermitianMatrix::new(f.adjoint().matmul(f))?)?;
    let lo = *e.values.last().unwrap();
    Ok(if lo > 0.0 { eps_th / lo } else { f64::INFINITY })
}

/// Off-band content entering the frequency bounds, relative to the band center.
#[derive(Debug, Clone)]
pub enum OffBand {
    /// Known spectrum (shifted); off-band integrals are exact sums.
    Known(LineSpectrum),
    /// Spectrum declared inside `[e_lo, e_hi]` with off-band mass `mass`.
    Declared { e_lo: f64, e_hi: f64, mass: f64 },
}

impl OffBand {
    fn mass(&self, w_f: f64) -> f64 {
        match self {
            OffBand::Known(s) => s.freqs().iter().zip(s.weights()).filter(|(e, _)| e.abs() > w_f).map(|(_, w)| w).sum(),
            OffBand::Declared { mass, .. } => *mass,
        }
    }

    /// `(∫_{λ<-W_f} (λ - x) dα, ∫_{λ>W_f} (λ - x) dα)`.
    fn integrals(&self, w_f: f64, x: f64) -> (f64, f64) {
        match self {
            OffBand::Known(s) => {
                let mut lo = 0.0;
                let mut hi = 0.0;
                for (e, w) in s.freqs().iter().zip(s.weights()) {
                    if *e < -w_f {
                        lo += w * (e - x);
                    } else if *e > w_f {
                        hi += w * (e - x);
                    }
                }
                (lo, hi)
            }
            OffBand::Declared { e_lo, e_hi, mass } => ((e_lo - x) * mass, (e_hi - x) * mass),
        }
    }
}

/// Sampling and noise perturbations `δA`, `δB` of the pencil.
#[derive(Debug, Clone)]
pub enum DeltaTerms {
    None,
    /// Measured `M × M` differences.
    Measured { da: CMatrix, db: CMatrix },
    /// Spectral-norm bounds.
    Bounded { da: f64, db: f64 },
}

/// Per-frequency bounds `lower ≤ Ẽ_i - E_i ≤ upper` (band-centered frame).
/// `None` when `λ_m(B_M^m) ≤ noise_bound`.
pub fn error_bounds(
    refined: &RefinedGep,
    est: &[f64],
    eps_prlt: f64,
    w_f: f64,
    offband: &OffBand,
    deltas: &DeltaTerms,
    noise_bound: f64,
) -> Result<Option<Vec<(f64, f64)>>> {
    if est.len() != refined.m {
        return Err(Error::InvalidInput(format!("{} estimates for a dimension-{} pencil", est.len(), refined.m)));
    }
    if let OffBand::Declared { e_lo, e_hi, mass } = offband {
        if *e_lo > -w_f || *e_hi < w_f || !(0.0..=1.0).contains(mass) {
            return Err(Error::InvalidInput(format!("declared range [{e_lo}, {e_hi}] must contain the band and mass must lie in [0, 1]")));
        }
    }
    let den = refined.lambda_min_b - noise_bound;
    if !(den > 0.0) {
        return Ok(None);
    }
    // |F v|² ranges over [λ_m - nb, λ_1 + nb] for unit v
    let den_max = refined.b_spectrum[0] + noise_bound;
    let na = refined.a_mm.matrix().frobenius();
    let nb = refined.b_mm.matrix().frobenius();
    let mut out = Vec::with_capacity(est.len());
    for &x in est {
        let (ilo, ihi) = offband.integrals(w_f, x);
        let (dlo, dhi) = match deltas {
            DeltaTerms::None => (0.0, 0.0),
            DeltaTerms::Bounded { da, db } => {
                let r = da + x.abs() * db;
                (-r, r)
            }
            DeltaTerms::Measured { da, db } => {
                let d = da.sub(&db.scale(C64::new(x, 0.0)));
                let dm = HermitianMatrix::new(d)?.congruence(&refined.u_m);
                let v = herm_eig(&dm)?.values;
                (*v.last().unwrap(), v[0])
            }
        };
        let floor = INTERVAL_FLOOR_ULPS * f64::EPSILON * (na + x.abs() * nb) / den;
        let (lo, hi) = (eps_prlt * ilo + dlo, eps_prlt * ihi + dhi);
        let lo = if lo <= 0.0 { lo / den } else { lo / den_max };
        let hi = if hi >= 0.0 { hi / den } else { hi / den_max };
        out.push((lo - floor, hi + floor));
    }
    Ok(Some(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    #[serde(rename = "increase_M")]
    IncreaseM,
    IllConditioned,
}

/// Ground truth for validation runs, or declared assumptions for blind runs.
#[derive(Debug, Clone)]
pub enum BoundMode {
    /// Unshifted known spectrum; `δA`, `δB` measured against the quadrature pencil.
    Validation(LineSpectrum),
    /// Unshifted declared spectral range and off-band mass.
    Blind { e_lo: f64, e_hi: f64, offband_mass: f64 },
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    /// Guess dimension; defaults to `⌊W_f T/π⌋`.
    pub m_guess: Option<usize>,
    /// Skips detection.
    pub known_m: Option<usize>,
    pub threshold: ThresholdPolicy,
    pub mode: BoundMode,
    /// Declared `W_C`; validation runs default to the spectrum's extent.
    pub signal_bandwidth: Option<f64>,
    pub allow_large_m: bool,
}

impl AnalyzeOptions {
    pub fn blind(e_lo: f64, e_hi: f64, offband_mass: f64) -> Self {
        Self {
            m_guess: None,
            known_m: None,
            threshold: ThresholdPolicy::default(),
            mode: BoundMode::Blind { e_lo, e_hi, offband_mass },
            signal_bandwidth: None,
            allow_large_m: false,
        }
    }

    pub fn validation(spectrum: LineSpectrum) -> Self {
        Self { mode: BoundMode::Validation(spectrum), ..Self::blind(0.0, 0.0, 1.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub omega_star: f64,
    pub w_f: f64,
    pub w_s: f64,
    pub n_s: usize,
    pub t: f64,
    #[serde(rename = "M")]
    pub m_guess: usize,
    pub w_c: f64,
    pub shots: u64,
    pub eps_th: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub m: usize,
    /// Unshifted, ascending.
    pub freqs: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub error_intervals: Vec<[f64; 2]>,
    pub intervals_valid: bool,
    pub eps_prlt: f64,
    #[serde(rename = "lambda_min_B")]
    pub lambda_min_b: f64,
    pub noise_weight_bound: f64,
    pub min_detectable_amp: f64,
    pub offdiag_mass: f64,
    pub status: Status,
    pub mode: String,
    /// `measured` or `analytic`.
    pub delta_source: String,
    /// Spectrum of `B_M`, descending.
    pub b_spectrum: Vec<f64>,
    pub params: ReportParams,
}

/// Shift, sampled pencil, protocol, amplitudes and error bounds.
pub fn analyze(samples: &SampleSet, band: BandSpec, opts: &AnalyzeOptions) -> Result<EstimateReport> {
    let grid = samples.grid;
    let m_guess = opts.m_guess.unwrap_or_else(|| PfdSetup::default_guess(&band, &grid));
    let w_c = match (&opts.mode, opts.signal_bandwidth) {
        (_, Some(w)) => Some(w),
        (BoundMode::Validation(s), None) => Some(s.freqs().iter().fold(0.0f64, |m, e| m.max((e - band.omega_star).abs()))),
        (BoundMode::Blind { .. }, None) => None,
    };
    let setup = PfdSetup::new(band, grid, m_guess, SetupOptions { signal_bandwidth: w_c, allow_large_m: opts.allow_large_m })?;
    analyze_with_setup(samples, &setup, opts)
}

/// [`analyze`] with a prebuilt setup.
pub fn analyze_with_setup(samples: &SampleSet, setup: &PfdSetup, opts: &AnalyzeOptions) -> Result<EstimateReport> {
    let band = setup.band;
    let shifted = samples.shift(band.omega_star);
    let gep = build_gep_sampled(&shifted, setup)?;
    let m_guess = setup.m_guess;
    let b_scale = herm_eig(&gep.b)?.values[0].abs().max(f64::MIN_POSITIVE);
    let need_shot = matches!(opts.mode, BoundMode::Blind { .. }) || opts.known_m.is_none();
    let th = threshold_with(setup, m_guess, samples.shots_per_sample, opts.threshold, b_scale, need_shot)?;

    let (detection, est, refined) = match opts.known_m {
        Some(m) => {
            let (v, r, _) = run_known_m(&gep, m)?;
            let det = if m == m_guess { Detection::IncreaseM(m) } else { Detection::Detected(m) };
            (det, v, Some(r))
        }
        None => {
            let out = run_protocol(&gep, th.eps_th)?;
            (out.detection, out.eigenvalues, out.refined)
        }
    };
    let mut status = match detection {
        Detection::IncreaseM(_) if opts.known_m.is_none() => Status::IncreaseM,
        _ => Status::Ok,
    };
    let params = ReportParams {
        omega_star: band.omega_star,
        w_f: band.w_f,
        w_s: setup.grid.w_s,
        n_s: setup.grid.n_s,
        t: setup.t,
        m_guess,
        w_c: setup.w_c,
        shots: samples.shots_per_sample,
        eps_th: th.eps_th,
    };
    let (mode_name, offband, deltas, delta_source) = match &opts.mode {
        BoundMode::Validation(spec) => {
            let shifted_spec = spec.shift(band.omega_star);
            let q = default_quad_order(setup, shifted_spec.freqs().iter().fold(0.0f64, |m, e| m.max(e.abs())));
            let quad = build_gep_quadrature(&shifted_spec, setup, m_guess, q)?;
            let da = gep.a.matrix().sub(quad.a.matrix());
            let db = gep.b.matrix().sub(quad.b.matrix());
            ("validation", OffBand::Known(shifted_spec), DeltaTerms::Measured { da, db }, "measured")
        }
        BoundMode::Blind { e_lo, e_hi, offband_mass } => (
            "blind",
            OffBand::Declared { e_lo: e_lo - band.omega_star, e_hi: e_hi - band.omega_star, mass: *offband_mass },
            DeltaTerms::Bounded { da: th.delta_a_analytic + th.shot_a, db: th.delta_b_analytic + th.shot_b },
            "analytic",
        ),
    };
    let db_norm = match &deltas {
        DeltaTerms::Measured { db, .. } => spectral_norm(db)?,
        DeltaTerms::Bounded { db, .. } => *db,
        DeltaTerms::None => 0.0,
    };
    let noise_bound = noise_weight_bound(th.eps_prlt, offband.mass(band.w_f).min(1.0), db_norm)?;

    let Some(refined) = refined else {
        return Ok(EstimateReport {
            m: 0,
            freqs: Vec::new(),
            amplitudes: Vec::new(),
            error_intervals: Vec::new(),
            intervals_valid: true,
            eps_prlt: th.eps_prlt,
            lambda_min_b: 0.0,
            noise_weight_bound: noise_bound,
            min_detectable_amp: 0.0,
            offdiag_mass: 0.0,
            status,
            mode: mode_name.into(),
            delta_source: delta_source.into(),
            b_spectrum: herm_eig(&gep.b)?.values,
            params,
        });
    };

    let f = alternant(setup, Some(&refined.u_m), &est, m_guess)?;
    let (amps, offdiag) = match amplitudes(&refined.b_mm, &f, &est) {
        Ok(x) => x,
        Err(Error::Singular(_)) => (vec![f64::NAN; est.len()], f64::NAN),
        Err(e) => return Err(e),
    };
    let min_amp = min_detectable_amplitude(&f, th.eps_th)?;
    let bounds = error_bounds(&refined, &est, th.eps_prlt, band.w_f, &offband, &deltas, noise_bound)?;
    let (intervals, valid) = match bounds {
        Some(b) => (b.into_iter().map(|(l, h)| [l, h]).collect(), true),
        None => {
            if status == Status::Ok {
                status = Status::IllConditioned;
            }
            (vec![[f64::NEG_INFINITY, f64::INFINITY]; est.len()], false)
        }
    };
    Ok(EstimateReport {
        m: refined.m,
        freqs: est.iter().map(|e| e + band.omega_star).collect(),
        amplitudes: amps,
        error_intervals: intervals,
        intervals_valid: valid,
        eps_prlt: th.eps_prlt,
        lambda_min_b: refined.lambda_min_b,
        noise_weight_bound: noise_bound,
        min_detectable_amp: min_amp,
        offdiag_mass: offdiag,
        status,
        mode: mode_name.into(),
        delta_source: delta_source.into(),
        b_spectrum: refined.b_spectrum.clone(),
        params,
    })
}

fn spectral_norm(m: &CMatrix) -> Result<f64> {
    let e = herm_eig(&HermitianMatrix::new(m.adjoint().matmul(m))?)?;
    Ok(e.values[0].max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::make_samples;

    fn setup(w_f: f64, w_s: f64, n_s: usize, m: usize, w_c: f64) -> PfdSetup {
        let grid = SampleGrid::new(w_s, n_s).unwrap();
        PfdSetup::new(BandSpec::new(0.0, w_f).unwrap(), grid, m, SetupOptions { signal_bandwidth: Some(w_c), allow_large_m: false }).unwrap()
    }

    #[test]
    fn setup_enforces_invariants() {
        let grid = SampleGrid::new(PI, 40).unwrap();
        assert!((grid.half_duration() - 20.0).abs() < 1e-12);
        let band = BandSpec::new(0.0, 1.0).unwrap();
        assert!(PfdSetup::new(band, grid, 13, SetupOptions::default()).is_err());
        assert!(PfdSetup::new(band, grid, 4, SetupOptions { signal_bandwidth: Some(2.5), allow_large_m: false }).is_err());
        assert!(BandSpec::new(0.0, 0.0).is_err());
        assert_eq!(PfdSetup::default_guess(&band, &grid), 6);
    }

    #[test]
    fn centered_single_line() {
        let s = setup(1.0, 2.0, 24, 1, 0.5);
        let spec = LineSpectrum::new(vec![0.0], vec![1.0]).unwrap();
        let samples = make_samples(&spec, s.grid, None, 0).unwrap();
        let gep = build_gep_sampled(&samples, &s).unwrap();
        assert!(gep.a[(0, 0)].re.abs() < 1e-10 * gep.b[(0, 0)].re);
        let q = build_gep_quadrature(&spec, &s, 1, default_quad_order(&s, 0.0)).unwrap();
        assert!(q.a[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn quadrature_pencil_single_and_symmetric_lines() {
        let s = setup(1.0, PI, 40, 6, 2.0);
        let spec = LineSpectrum::new(vec![0.37], vec![1.0]).unwrap();
        let q = build_gep_quadrature(&spec, &s, 1, default_quad_order(&s, 0.37)).unwrap();
        assert!((q.a[(0, 0)].re / q.b[(0, 0)].re - 0.37).abs() < 1e-9);
        let sym = LineSpectrum::new(vec![-0.4, 0.4, 1.7], vec![0.4, 0.4, 0.2]).unwrap();
        let g = build_gep_quadrature(&sym, &s, 6, default_quad_order(&s, 1.7)).unwrap();
        let (vals, _, _) = run_known_m(&g, 2).unwrap();
        assert!((vals[0] + vals[1]).abs() < 1e-9, "{vals:?}");
        // B equals the alternant factorization F†ΛF
        let f = alternant(&s, None, sym.freqs(), 6).unwrap();
        let fl = CMatrix::from_fn(3, 6, |k, l| f[(k, l)] * sym.weights()[k]);
        let b = f.adjoint().matmul(&fl);
        assert!(b.sub(g.b.matrix()).max_abs() < 1e-10 * b.max_abs());
    }

    #[test]
    fn generic_quadrature_matches_separable_form() {
        let s = setup(1.0, 2.0, 16, 2, 1.0);
        let spec = LineSpectrum::new(vec![-0.3, 0.5], vec![0.6, 0.4]).unwrap();
        let q = 140;
        let exact = build_gep_quadrature(&spec, &s, 2, q).unwrap();
        let f = FnSignal(|t: f64| spec.eval_exact(t));
        let generic = build_gep_quadrature(&f, &s, 2, q).unwrap();
        assert!(exact.b.matrix().sub(generic.b.matrix()).max_abs() < 1e-12);
        assert!(exact.a.matrix().sub(generic.a.matrix()).max_abs() < 1e-6);
    }

    #[test]
    fn sampled_matches_quadrature_pencil() {
        let s = setup(1.0, PI, 40, 6, 2.0);
        let spec = LineSpectrum::new(vec![-1.9, -0.5, 0.2, 0.6, 1.4], vec![0.1, 0.3, 0.25, 0.25, 0.1]).unwrap();
        let samples = make_samples(&spec, s.grid, None, 0).unwrap();
        for m in 1..=6 {
            let sampled = build_gep_sampled_m(&samples, &s, m).unwrap();
            let quad = build_gep_quadrature(&spec, &s, m, default_quad_order(&s, 1.9)).unwrap();
            let rb = sampled.b.matrix().sub(quad.b.matrix()).frobenius() / quad.b.matrix().frobenius();
            let ra = sampled.a.matrix().sub(quad.a.matrix()).frobenius() / quad.a.matrix().frobenius();
            let tol = if m <= 4 { 1e-6 } else { 1e-5 };
            assert!(rb < tol && ra < tol, "M={m}: B rel {rb}, A rel {ra}");
        }
        let sampled = build_gep_sampled(&samples, &s).unwrap();
        let quad = build_gep_quadrature(&spec, &s, 6, default_quad_order(&s, 1.9)).unwrap();
        let (da, db) = sampling_delta_bounds(&s, 6).unwrap();
        assert!(sampled.b.matrix().sub(quad.b.matrix()).frobenius() <= db);
        assert!(sampled.a.matrix().sub(quad.a.matrix()).frobenius() <= da);
    }

    #[test]
    fn sparse_pencil_matches_dense() {
        let s = setup(1.0, PI, 20, 4, 2.0);
        let n_s = s.grid.n_s;
        let z = C64::new(0.3, -0.7);
        let mut e = vec![C64::new(0.0, 0.0); 2 * n_s + 1];
        e[n_s + 3] = z;
        e[n_s - 3] = z.conj();
        let (a1, b1) = raw_sampled_pencil(&s, &e, 4);
        let (a2, b2) = sparse_sampled_pencil(&s, &[(3, z), (-3, z.conj())], 4);
        assert!(a1.sub(&a2).max_abs() < 1e-13 && b1.sub(&b2).max_abs() < 1e-13);
        let (ra, rb) = shot_noise_proxies(&s, 4).unwrap();
        assert!(ra > 0.0 && rb > 0.0);
        assert_eq!(shot_noise_proxies(&s, 4).unwrap(), (ra, rb));
    }

    #[test]
    fn eps_prlt_properties() {
        let s = setup(1.0, PI, 40, 12, 2.0);
        let mut prev = 0.0;
        for m in 1..=12 {
            let e = eps_prlt(&s, m).unwrap();
            assert!(e >= prev);
            prev = e;
        }
        let c = s.c_f();
        let m1 = eps_prlt(&s, 1).unwrap();
        let closed = s.t * PI.powf(1.5) * 8.0 * c.powf(1.5) * (-2.0 * c).exp();
        assert!(m1 <= closed, "{m1} vs {closed}");
        assert!(eps_prlt(&s, 12).unwrap() >= 1e3 * eps_prlt(&s, 6).unwrap());
    }

    #[test]
    fn noise_weight_bound_examples() {
        assert_eq!(noise_weight_bound(0.3, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(noise_weight_bound(0.3, 1.0, 0.0).unwrap(), 0.3);
        assert!(noise_weight_bound(0.3, 1.5, 0.0).is_err());
    }

    #[test]
    fn amplitude_examples() {
        let s = setup(1.0, PI, 40, 6, 2.0);
        let one = LineSpectrum::new(vec![0.3], vec![1.0]).unwrap();
        let g = build_gep_quadrature(&one, &s, 6, default_quad_order(&s, 0.3)).unwrap();
        let (vals, r, _) = run_known_m(&g, 1).unwrap();
        let f = alternant(&s, Some(&r.u_m), &vals, 6).unwrap();
        let (amps, off) = amplitudes(&r.b_mm, &f, &vals).unwrap();
        assert!((amps[0] - 1.0).abs() < 1e-8 && off == 0.0);

        let two = LineSpectrum::new(vec![-0.4, 0.5], vec![0.25, 0.75]).unwrap();
        let g = build_gep_quadrature(&two, &s, 6, default_quad_order(&s, 0.5)).unwrap();
        let (vals, r, _) = run_known_m(&g, 2).unwrap();
        let f = alternant(&s, Some(&r.u_m), &vals, 6).unwrap();
        let (amps, off) = amplitudes(&r.b_mm, &f, &vals).unwrap();
        assert!((amps[0] - 0.25).abs() < 1e-6 && (amps[1] - 0.75).abs() < 1e-6, "{amps:?}");
        assert!(off <= 1e-6);
        assert_eq!(min_detectable_amplitude(&f, 0.0).unwrap(), 0.0);
        assert_eq!(min_detectable_amplitude(&CMatrix::identity(3), 0.2).unwrap(), 0.2);
    }

    #[test]
    fn alternant_collapses_for_near_degenerate_rows() {
        let s = setup(1.0, PI, 40, 6, 2.0);
        let f_close = alternant(&s, None, &[0.2, 0.2 + 1e-6], 6).unwrap();
        let f_same = alternant(&s, None, &[0.2, 0.2], 2).unwrap();
        let f_far = alternant(&s, None, &[-0.5, 0.5], 6).unwrap();
        let smin = |f: &CMatrix| *herm_eig(&HermitianMatrix::new(f.matmul(&f.adjoint())).unwrap()).unwrap().values.last().unwrap();
        assert!(smin(&f_close) < 1e-9 * smin(&f_far));
        assert!(smin(&f_far) > 1e-2);
        assert!(matches!(amplitudes(&HermitianMatrix::from_real_diag(&[1.0, 1.0]), &f_same, &[0.2, 0.2]), Err(Error::Singular(_))));
    }

    #[test]
    fn bounds_vanish_without_offband_content() {
        let s = setup(1.0, PI, 40, 6, 2.0);
        let spec = LineSpectrum::new(vec![-0.3, 0.45], vec![0.5, 0.5]).unwrap();
        let g = build_gep_quadrature(&spec, &s, 6, default_quad_order(&s, 0.45)).unwrap();
        let (vals, r, _) = run_known_m(&g, 2).unwrap();
        let eps = eps_prlt(&s, 6).unwrap();
        let b = error_bounds(&r, &vals, eps, 1.0, &OffBand::Known(spec.clone()), &DeltaTerms::None, 0.0).unwrap().unwrap();
        for ((lo, hi), (v, e)) in b.iter().zip(vals.iter().zip(spec.freqs())) {
            assert!(hi - lo < 1e-12);
            assert!(*lo <= v - e && v - e <= *hi, "{lo} {} {hi}", v - e);
        }
    }

    #[test]
    fn offband_line_below_pulls_estimates_down() {
        let s = setup(1.0, PI, 40, 6, 2.0);
        let spec = LineSpectrum::new(vec![-1.15, 0.1], vec![0.3, 0.7]).unwrap();
        let g = build_gep_quadrature(&spec, &s, 6, default_quad_order(&s, 1.15)).unwrap();
        let (vals, r, _) = run_known_m(&g, 1).unwrap();
        let eps = eps_prlt(&s, 6).unwrap();
        let nb = noise_weight_bound(eps, 0.3, 0.0).unwrap();
        let b = error_bounds(&r, &vals, eps, 1.0, &OffBand::Known(spec), &DeltaTerms::None, nb).unwrap().unwrap();
        let (lo, hi) = b[0];
        assert!(lo < 0.0 && hi.abs() < 1e-12, "{lo} {hi}");
        let err = vals[0] - 0.1;
        assert!(lo <= err && err <= hi, "{lo} {err} {hi}");
    }

    #[test]
    fn analyze_single_line_exact() {
        let grid = SampleGrid::new(3.0, 80).unwrap();
        let spec = LineSpectrum::new(vec![5.2], vec![1.0]).unwrap();
        let samples = make_samples(&spec, grid, None, 0).unwrap();
        let band = BandSpec::new(5.0, 1.0).unwrap();
        let r = analyze(&samples, band, &AnalyzeOptions::validation(spec.clone())).unwrap();
        assert_eq!(r.m, 1);
        assert_eq!(r.status, Status::Ok);
        assert!((r.freqs[0] - 5.2).abs() < 1e-9, "{:?}", r.freqs);
        let err = r.freqs[0] - 5.2;
        assert!(r.error_intervals[0][0] <= err && err <= r.error_intervals[0][1]);
        let blind = analyze(&samples, band, &AnalyzeOptions::blind(3.5, 6.5, 0.0)).unwrap();
        assert_eq!(blind.m, 1);
        assert!((blind.freqs[0] - 5.2).abs() < 1e-9);
        let err = blind.freqs[0] - 5.2;
        assert!(blind.error_intervals[0][0] <= err && err <= blind.error_intervals[0][1]);
    }

    #[test]
    fn analyze_offband_only_detects_nothing() {
        let grid = SampleGrid::new(3.0, 40).unwrap();
        let spec = LineSpectrum::new(vec![3.1, 7.0], vec![0.5, 0.5]).unwrap();
        let samples = make_samples(&spec, grid, None, 0).unwrap();
        let band = BandSpec::new(5.0, 1.0).unwrap();
        let r = analyze(&samples, band, &AnalyzeOptions::blind(3.0, 7.0, 1.0)).unwrap();
        assert_eq!(r.m, 0);
        assert!(r.freqs.is_empty());
    }

    #[test]
    fn analyze_is_shift_covariant() {
        let grid = SampleGrid::new(3.0, 40).unwrap();
        let spec = LineSpectrum::new(vec![4.6, 5.1, 5.5, 6.8], vec![0.1, 0.4, 0.4, 0.1]).unwrap();
        let samples = make_samples(&spec, grid, Some(200), 7).unwrap();
        let opts = AnalyzeOptions { known_m: Some(2), ..AnalyzeOptions::blind(4.0, 7.0, 0.2) };
        let r1 = analyze(&samples, BandSpec::new(5.3, 1.0).unwrap(), &opts).unwrap();
        let a = 0.77;
        let opts2 = AnalyzeOptions { known_m: Some(2), ..AnalyzeOptions::blind(4.0 - a, 7.0 - a, 0.2) };
        let r2 = analyze(&samples.shift(a), BandSpec::new(5.3 - a, 1.0).unwrap(), &opts2).unwrap();
        for (x, y) in r1.freqs.iter().zip(&r2.freqs) {
            assert!((x - (y + a)).abs() < 1e-10, "{x} {y}");
        }
    }
}
