//! Prolate spheroidal wave functions for a bandwidth/duration pair `(W, T)`.
//!
//! Modes are normalized to unit energy on the real line, so that
//! `∫_{-T}^{T} ξ_n² = γ_n`. Internally `ξ_n(t) = √(γ_n/T) ψ_n(t/T)` where
//! `ψ_n` has unit norm on `[-1, 1]` and is expanded in Legendre polynomials.
//! The Fourier convention is `F[f](ω) = ∫ f(t) e^{-iωt} dt`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::tridiag_sym_eig;
use crate::quadrature::{compensated_sum, legendre_series, spherical_bessel_j, CompensatedSum, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProlateParams {
    pub w: f64,
    pub t: f64,
    pub c: f64,
    pub c_tilde: f64,
}

impl ProlateParams {
    pub fn new(w: f64, t: f64) -> Result<Self> {
        if !(w > 0.0 && t > 0.0 && w.is_finite() && t.is_finite()) {
            return Err(Error::InvalidInput(format!("W and T must be positive, got W={w}, T={t}")));
        }
        let c = w * t;
        Ok(Self { w, t, c, c_tilde: 2.0 * c / PI })
    }

    /// `(W', T') = (T, W)`.
    pub fn dual(&self) -> Self {
        Self { w: self.t, t: self.w, c: self.c, c_tilde: self.c_tilde }
    }
}

/// How `1 - γ_n` is obtained when `γ_n` is close to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMode {
    /// Tail-energy quadrature on the band-limited extension where subtraction
    /// loses digits (`c ≤ TAIL_QUADRATURE_MAX_C`), subtraction elsewhere.
    Auto,
    /// Always `1 - γ_n` by subtraction (with the asymptotic floor).
    Subtraction,
}

/// Largest `c` for which [`TailMode::Auto`] integrates tail energies.
pub const TAIL_QUADRATURE_MAX_C: f64 = 64.0;
/// Below this `1 - γ_n` is replaced by its large-`c` asymptotic form, capped
/// at the floor itself.
pub const ASYMPTOTIC_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct ProlateMode {
    pub n: usize,
    /// `a_k` with `ψ_n(x) = Σ a_k P_k(x)`, `x = t/T`.
    pub legendre_coeffs: Vec<f64>,
    /// Eigenvalue of `(T²-t²)ξ'' - 2tξ' + W²(T²-t²)ξ = -χ ξ`.
    pub chi: f64,
    pub gamma: f64,
    pub one_minus_gamma: f64,
    pub asymptotic_floor: bool,
    pub mu: C64,
    pub xi_at_t: f64,
    /// `‖ξ_n'‖` in `L²(ℝ)`; always below `W`.
    pub deriv_norm: f64,
    pub c_extra: f64,
    pub c_intra: f64,
    pub c_intra_tilde: f64,
    /// Set when a regime cap replaced the directly computed constant.
    pub constants_capped: bool,
    /// Exterior coefficients: `ψ_n(x) = Σ β_k j_k(cx)` for all real `x`.
    ext_coeffs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ProlateBasis {
    pub params: ProlateParams,
    pub modes: Vec<ProlateMode>,
    /// Gauss-Legendre rule on `[-T, T]`.
    pub quad_nodes: Vec<f64>,
    pub quad_weights: Vec<f64>,
    /// Number of Legendre coefficients kept.
    pub order: usize,
}

/// Options for [`build_basis_with`].
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub tol: f64,
    pub tail: TailMode,
    /// Cap on the number of Legendre coefficients.
    pub max_order: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { tol: 1e-13, tail: TailMode::Auto, max_order: 1 << 13 }
    }
}

pub fn build_basis(w: f64, t: f64, n_max: usize, tol: f64) -> Result<ProlateBasis> {
    build_basis_with(w, t, n_max, BuildOptions { tol, ..BuildOptions::default() })
}

pub fn build_basis_with(w: f64, t: f64, n_max: usize, opts: BuildOptions) -> Result<ProlateBasis> {
    let params = ProlateParams::new(w, t)?;
    let c = params.c;
    let mut order = (2 * params.c_tilde.ceil() as usize + 30).max(n_max + 30);
    let raw = loop {
        let raw = legendre_eigenmodes(c, order, n_max)?;
        let worst = raw
            .iter()
            .map(|(_, v)| tail_ratio(v))
            .enumerate()
            .fold((0, 0.0), |acc, (n, r)| if r > acc.1 { (n, r) } else { acc });
        if worst.1 < opts.tol {
            break raw;
        }
        if order * 2 > opts.max_order {
            return Err(Error::Truncation { n: worst.0, tail: worst.1 });
        }
        order *= 2;
    };

    let mut modes = Vec::with_capacity(n_max + 1);
    for (n, (chi, d)) in raw.into_iter().enumerate() {
        modes.push(finish_mode(&params, n, chi, d, opts.tail));
    }
    let (quad_nodes, quad_weights) =
        GaussLegendre::new(4 * (n_max + params.c_tilde.ceil() as usize) + 64).on_interval(-t, t);
    Ok(ProlateBasis { params, modes, quad_nodes, quad_weights, order })
}

fn tail_ratio(v: &[f64]) -> f64 {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let k = v.len();
    v[k.saturating_sub(4)..].iter().fold(0.0f64, |m, x| m.max(x.abs())) / max
}

/// Eigenpairs of the Legendre-Galerkin matrix of the prolate operator, in
/// normalized Legendre coefficients `P̄_k = √(k+½) P_k`, for modes `0..=n_max`.
fn legendre_eigenmodes(c: f64, order: usize, n_max: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let c2 = c * c;
    let diag: Vec<f64> = (0..order)
        .map(|k| {
            let k = k as f64;
            k * (k + 1.0) + c2 * (2.0 * k * (k + 1.0) - 1.0) / ((2.0 * k + 3.0) * (2.0 * k - 1.0)) - c2
        })
        .collect();
    let off: Vec<f64> = (0..order)
        .map(|k| {
            let k = k as f64;
            c2 * (k + 2.0) * (k + 1.0) / ((2.0 * k + 3.0) * ((2.0 * k + 1.0) * (2.0 * k + 5.0)).sqrt())
        })
        .collect();
    let mut out: Vec<Option<(f64, Vec<f64>)>> = vec![None; n_max + 1];
    for parity in 0..2 {
        let idx: Vec<usize> = (parity..order).step_by(2).collect();
        let d: Vec<f64> = idx.iter().map(|&k| diag[k]).collect();
        let o: Vec<f64> = idx[..idx.len() - 1].iter().map(|&k| off[k]).collect();
        let eig = tridiag_sym_eig(&d, &o)?;
        for j in 0..idx.len() {
            let n = 2 * j + parity;
            if n > n_max {
                break;
            }
            let mut v = eig.vector(j);
            refine_small_components(&d, &o, eig.values[j], &mut v);
            let mut full = vec![0.0; order];
            for (&k, &x) in idx.iter().zip(&v) {
                full[k] = x;
            }
            out[n] = Some((eig.values[j], full));
        }
    }
    Ok(out.into_iter().map(|m| m.expect("every mode below the order is populated")).collect())
}

/// Replaces components far below the peak by the two-sided three-term
/// recurrence, which keeps tiny leading coefficients (and hence tiny `γ_n`)
/// accurate to relative precision.
fn refine_small_components(d: &[f64], o: &[f64], chi: f64, v: &mut [f64]) {
    let len = v.len();
    if len < 3 {
        return;
    }
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let lo = v.iter().position(|x| x.abs() > 1e-3 * max).unwrap_or(0);
    let hi = v.iter().rposition(|x| x.abs() > 1e-3 * max).unwrap_or(len - 1);
    if lo >= 1 {
        let mut f = vec![0.0; lo + 1];
        f[0] = 1.0;
        f[1] = -(d[0] - chi) * f[0] / o[0];
        for j in 1..lo {
            f[j + 1] = -((d[j] - chi) * f[j] + o[j - 1] * f[j - 1]) / o[j];
        }
        if f[lo] != 0.0 && f.iter().all(|x| x.is_finite()) {
            let s = v[lo] / f[lo];
            for j in 0..lo {
                v[j] = f[j] * s;
            }
        }
    }
    if hi + 1 < len {
        let top = len - 1;
        let mut b = vec![0.0; len];
        b[top] = 1.0;
        b[top - 1] = -(d[top] - chi) * b[top] / o[top - 1];
        let mut j = top - 1;
        while j > hi {
            b[j - 1] = -((d[j] - chi) * b[j] + o[j] * b[j + 1]) / o[j - 1];
            j -= 1;
            if b[j].abs() > 1e200 {
                for x in b[j..].iter_mut() {
                    *x *= 1e-200;
                }
            }
        }
        if b[hi] != 0.0 && b[hi..].iter().all(|x| x.is_finite()) {
            let s = v[hi] / b[hi];
            for j in hi + 1..len {
                v[j] = b[j] * s;
            }
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}

fn finish_mode(params: &ProlateParams, n: usize, chi: f64, d: Vec<f64>, tail: TailMode) -> ProlateMode {
    let c = params.c;
    let mut a: Vec<f64> = d.iter().enumerate().map(|(k, x)| x * (k as f64 + 0.5).sqrt()).collect();
    let (psi0, dpsi0) = legendre_series(&a, 0.0);
    // λ_std with λψ(x) = ∫_{-1}^{1} e^{icxy} ψ(y) dy; λ = iⁿ|λ| under the sign convention
    let lam_abs = if n % 2 == 0 {
        if psi0 < 0.0 {
            a.iter_mut().for_each(|x| *x = -*x);
        }
        (2f64.sqrt() * d[0] / psi0).abs()
    } else {
        if dpsi0 < 0.0 {
            a.iter_mut().for_each(|x| *x = -*x);
        }
        (c * (2.0f64 / 3.0).sqrt() * d[1] / dpsi0).abs()
    };
    let gamma = (c * lam_abs * lam_abs / (2.0 * PI)).min(1.0);
    let phase = i_pow(n);
    let mu = phase * (2.0 * PI * gamma).sqrt();

    // β_k = 2 a_k i^k / λ, real for a definite-parity mode
    let ext_coeffs: Vec<f64> = a
        .iter()
        .enumerate()
        .map(|(k, &ak)| {
            if ak == 0.0 {
                0.0
            } else {
                let r = i_pow(k) * (2.0 * ak) / (phase * lam_abs);
                r.re
            }
        })
        .collect();

    let (psi1, _) = legendre_series(&a, 1.0);
    let xi_at_t = (gamma / params.t).sqrt() * psi1;
    // ∫x²ψ² = ‖X d‖² with x P̄_k = α_k P̄_{k+1} + α_{k-1} P̄_{k-1}
    let dn: Vec<f64> = a.iter().enumerate().map(|(k, x)| x / (k as f64 + 0.5).sqrt()).collect();
    let alpha = |k: usize| (k as f64 + 1.0) / ((2.0 * k as f64 + 1.0) * (2.0 * k as f64 + 3.0)).sqrt();
    let x2psi2 = compensated_sum((0..=dn.len()).map(|j| {
        let up = if j >= 1 { alpha(j - 1) * dn[j - 1] } else { 0.0 };
        let down = if j + 1 < dn.len() { alpha(j) * dn[j + 1] } else { 0.0 };
        (up + down).powi(2)
    }));
    let deriv_norm = params.w * x2psi2.sqrt();

    let mut mode = ProlateMode {
        n,
        legendre_coeffs: a,
        chi,
        gamma,
        one_minus_gamma: 1.0 - gamma,
        asymptotic_floor: false,
        mu,
        xi_at_t,
        deriv_norm,
        c_extra: 0.0,
        c_intra: 0.0,
        c_intra_tilde: 0.0,
        constants_capped: false,
        ext_coeffs,
    };
    mode.one_minus_gamma = one_minus_gamma(&mode, c, tail);
    if mode.one_minus_gamma < ASYMPTOTIC_FLOOR {
        mode.one_minus_gamma = asymptotic_one_minus_gamma(n, c).min(ASYMPTOTIC_FLOOR);
        mode.asymptotic_floor = true;
    }
    if mode.gamma > 0.5 {
        mode.gamma = 1.0 - mode.one_minus_gamma;
        mode.mu = phase * (2.0 * PI * mode.gamma).sqrt();
    }
    let (ce, ci, cit, capped) = constants_from(params, &mode);
    mode.c_extra = ce;
    mode.c_intra = ci;
    mode.c_intra_tilde = cit;
    mode.constants_capped = capped;
    mode
}

fn i_pow(k: usize) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

fn one_minus_gamma(mode: &ProlateMode, c: f64, tail: TailMode) -> f64 {
    let sub = 1.0 - mode.gamma;
    if sub >= 1e-6 || mode.gamma < 0.5 || tail == TailMode::Subtraction || c > TAIL_QUADRATURE_MAX_C {
        return sub;
    }
    2.0 * mode.gamma * exterior_energy(&mode.ext_coeffs, c)
}

/// `∫_1^∞ ψ_ext(x)² dx`.
fn exterior_energy(beta: &[f64], c: f64) -> f64 {
    let max = beta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let k_eff = beta.iter().rposition(|x| x.abs() > 1e-18 * max).unwrap_or(0) + 1;
    let beta = &beta[..k_eff];
    let kmax = k_eff - 1;
    let r_end = 64f64.max((k_eff * k_eff) as f64 / c);
    let h = (PI / c).min(0.5);
    let panels = ((r_end - 1.0) / h).ceil() as usize;
    let h = (r_end - 1.0) / panels as f64;
    let gl = GaussLegendre::new(16);
    let mut acc = CompensatedSum::new();
    for p in 0..panels {
        let a = 1.0 + p as f64 * h;
        let (xs, ws) = gl.on_interval(a, a + h);
        for (x, w) in xs.iter().zip(&ws) {
            let j = spherical_bessel_j(kmax, c * x);
            let v: f64 = beta.iter().zip(&j).map(|(b, j)| b * j).sum();
            acc.add(w * v * v);
        }
    }
    // beyond r_end: ψ = (A sin z + B cos z)/z with polynomials A, B in u = 1/z
    let z_end = c * r_end;
    let u_end = 1.0 / z_end;
    let glu = GaussLegendre::new(k_eff + 8);
    let (us, wu) = glu.on_interval(0.0, u_end);
    let mut avg = CompensatedSum::new();
    for (u, w) in us.iter().zip(&wu) {
        let (a, b) = asymptotic_ab(beta, *u);
        avg.add(w * 0.5 * (a * a + b * b));
    }
    let (a, b) = asymptotic_ab(beta, u_end);
    // ∫_Z^∞ [p cos2z + q sin2z]/z² dz ≈ (-p sin2Z + q cos2Z)/(2Z²)
    let p = 0.5 * (b * b - a * a);
    let q = a * b;
    let osc = (-p * (2.0 * z_end).sin() + q * (2.0 * z_end).cos()) / (2.0 * z_end * z_end);
    acc.add(avg.value() / c);
    acc.add(osc / c);
    acc.value()
}

/// `(A(u), B(u))` with `Σ β_k j_k(z) = (A sin z + B cos z)/z`, `u = 1/z`.
fn asymptotic_ab(beta: &[f64], u: f64) -> (f64, f64) {
    let (mut a_sum, mut b_sum) = (0.0, 0.0);
    for (k, &bk) in beta.iter().enumerate() {
        if bk == 0.0 {
            continue;
        }
        let kf = k as f64;
        let (mut p, mut q) = (0.0, 0.0);
        let mut term = 1.0;
        for j in 0..=k {
            let signed = match j % 4 {
                0 | 1 => term,
                _ => -term,
            };
            if j % 2 == 0 {
                p += signed;
            } else {
                q += signed;
            }
            let jf = j as f64;
            term *= (kf + jf + 1.0) * (kf - jf) / (2.0 * (jf + 1.0)) * u;
        }
        let (cs, sn) = match k % 4 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
        a_sum += bk * (cs * p + sn * q);
        b_sum += bk * (-sn * p + cs * q);
    }
    (a_sum, b_sum)
}

/// Large-`c` asymptotic form `4√π 2^{3n} c^{n+½} e^{-2c} / n!`.
pub fn asymptotic_one_minus_gamma(n: usize, c: f64) -> f64 {
    assert!(c > 0.0, "c must be positive");
    let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    let ln = 4f64.ln() + 0.5 * PI.ln() + 3.0 * n as f64 * 2f64.ln() + (n as f64 + 0.5) * c.ln() - 2.0 * c - ln_fact;
    ln.exp()
}

fn constants_from(params: &ProlateParams, m: &ProlateMode) -> (f64, f64, f64, bool) {
    let (w, t) = (params.w, params.t);
    let n = m.n as f64;
    let dn2 = m.deriv_norm * m.deriv_norm;
    let boundary = m.chi * m.xi_at_t * m.xi_at_t / t;
    let c_n = (dn2 + m.chi * m.chi / (4.0 * t * t)).sqrt();
    let eq96 = w * ((1.0 + params.c * params.c / 4.0).sqrt() + params.c / 2.0);
    let below = n <= params.c_tilde.floor() - 1.0;
    let above = n >= params.c_tilde.ceil();

    let mut capped = false;
    let extra_cap = if below {
        (c_n - m.chi / (2.0 * t)).min(eq96)
    } else if above {
        w
    } else {
        eq96.max(w)
    };
    let r_extra = dn2 - boundary / m.one_minus_gamma;
    let mut c_extra = if r_extra >= 0.0 { r_extra.sqrt() } else { f64::NAN };
    if !(c_extra <= extra_cap) {
        c_extra = extra_cap;
        capped = true;
    }
    let intra_cap = if below { w } else if above { c_n + m.chi / (2.0 * t) } else { f64::INFINITY };
    let r_intra = dn2 + boundary / m.gamma;
    let mut c_intra = if r_intra >= 0.0 { r_intra.sqrt() } else { f64::NAN };
    if !(c_intra <= intra_cap) {
        c_intra = intra_cap;
        capped = true;
    }
    let c_intra_tilde = if m.n == 0 { c_intra + m.xi_at_t * m.xi_at_t / m.gamma } else { c_intra };
    (c_extra, c_intra, c_intra_tilde, capped)
}

impl ProlateBasis {
    pub fn n_max(&self) -> usize {
        self.modes.len() - 1
    }

    pub fn mode(&self, n: usize) -> &ProlateMode {
        &self.modes[n]
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.gamma).collect()
    }

    /// `ξ_n(t)` on the whole real line.
    pub fn eval(&self, n: usize, t: f64) -> f64 {
        self.eval_both(n, t).0
    }

    pub fn eval_deriv(&self, n: usize, t: f64) -> f64 {
        self.eval_both(n, t).1
    }

    /// `(ξ_n(t), ξ_n'(t))`.
    pub fn eval_both(&self, n: usize, t: f64) -> (f64, f64) {
        let m = &self.modes[n];
        let p = &self.params;
        let s = (m.gamma / p.t).sqrt();
        let x = t / p.t;
        if x.abs() <= 1.0 {
            let (v, d) = legendre_series(&m.legendre_coeffs, x);
            (s * v, s * d / p.t)
        } else {
            let (v, d) = exterior(&m.ext_coeffs, p.c, x);
            (s * v, s * d / p.t)
        }
    }

    /// Values of every mode at `t`.
    pub fn eval_all(&self, t: f64) -> Vec<f64> {
        self.eval_all_both(t).0
    }

    /// Values and derivatives of every mode at `t`, sharing the polynomial tables.
    pub fn eval_all_both(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let p = &self.params;
        let x = t / p.t;
        let kmax = self.modes.iter().map(|m| m.legendre_coeffs.len()).max().unwrap_or(1) - 1;
        let (table, dtable) = if x.abs() <= 1.0 {
            legendre_table(kmax, x)
        } else {
            bessel_table(kmax, p.c, x)
        };
        let mut vals = Vec::with_capacity(self.modes.len());
        let mut ders = Vec::with_capacity(self.modes.len());
        for m in &self.modes {
            let s = (m.gamma / p.t).sqrt();
            let coeffs = if x.abs() <= 1.0 { &m.legendre_coeffs } else { &m.ext_coeffs };
            let (mut v, mut d) = (0.0, 0.0);
            for ((a, pk), dk) in coeffs.iter().zip(&table).zip(&dtable) {
                v += a * pk;
                d += a * dk;
            }
            vals.push(s * v);
            ders.push(s * d / p.t);
        }
        (vals, ders)
    }

    /// The basis with bandwidth and duration exchanged, checked against the
    /// rescaling identity `ξ̃_n(ω) = √(T/W) ξ_n(Tω/W)`.
    pub fn dual(&self) -> Result<ProlateBasis> {
        let p = self.params;
        let d = self.dual_unchecked();
        let ratio = (p.t / p.w).sqrt();
        for n in 0..=self.n_max().min(6) {
            for &frac in &[0.0, 0.37, 0.91, 1.6, 3.2] {
                let omega = frac * p.w;
                let lhs = d.eval(n, omega);
                let rhs = ratio * self.eval(n, p.t * omega / p.w);
                if (lhs - rhs).abs() > 1e-6 * (1.0 + rhs.abs()) {
                    return Err(Error::Consistency(format!("dual rescaling identity violated for n={n} at ω={omega}: {lhs} vs {rhs}")));
                }
            }
        }
        Ok(d)
    }

    fn dual_unchecked(&self) -> ProlateBasis {
        let params = self.params.dual();
        let modes = self
            .modes
            .iter()
            .map(|m| {
                let mut d = m.clone();
                d.xi_at_t = (m.gamma / params.t).sqrt() * legendre_series(&m.legendre_coeffs, 1.0).0;
                d.deriv_norm = m.deriv_norm / self.params.w * params.w;
                let (ce, ci, cit, capped) = constants_from(&params, &d);
                d.c_extra = ce;
                d.c_intra = ci;
                d.c_intra_tilde = cit;
                d.constants_capped = capped;
                d
            })
            .collect();
        let n = self.quad_nodes.len();
        let (quad_nodes, quad_weights) = GaussLegendre::new(n).on_interval(-params.t, params.t);
        ProlateBasis { params, modes, quad_nodes, quad_weights, order: self.order }
    }

    /// `∫_{-T}^{T} ξ_n(t) e^{-iωt} dt = conj(μ_n) ξ̃_n(ω)`.
    pub fn ft_time_limited(&self, n: usize, omega: f64) -> C64 {
        let p = &self.params;
        let dual_val = (p.t / p.w).sqrt() * self.eval(n, p.t * omega / p.w);
        self.modes[n].mu.conj() * dual_val
    }

    /// `(C_extra, C_intra, C̃_intra)` of mode `n`.
    pub fn concentration_constants(&self, n: usize) -> (f64, f64, f64) {
        let m = &self.modes[n];
        (m.c_extra, m.c_intra, m.c_intra_tilde)
    }
}

fn legendre_table(kmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; kmax + 1];
    let mut d = vec![0.0; kmax + 1];
    p[0] = 1.0;
    if kmax >= 1 {
        p[1] = x;
        d[1] = 1.0;
    }
    for k in 1..kmax {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        d[k + 1] = d[k - 1] + (2.0 * kf + 1.0) * p[k];
    }
    (p, d)
}

/// `j_k(cx)` and `d/dx j_k(cx)`.
fn bessel_table(kmax: usize, c: f64, x: f64) -> (Vec<f64>, Vec<f64>) {
    let z = c * x;
    let j = spherical_bessel_j(kmax + 1, z);
    let mut d = vec![0.0; kmax + 1];
    // j_k' = k/z j_k - j_{k+1}
    for k in 0..=kmax {
        d[k] = c * (k as f64 / z * j[k] - j[k + 1]);
    }
    (j[..=kmax].to_vec(), d)
}

fn exterior(beta: &[f64], c: f64, x: f64) -> (f64, f64) {
    let (j, dj) = bessel_table(beta.len() - 1, c, x);
    let v = beta.iter().zip(&j).map(|(b, j)| b * j).sum();
    let d = beta.iter().zip(&dj).map(|(b, j)| b * j).sum();
    (v, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{herm_eig, CMatrix, HermitianMatrix};

    /// Eigenvalues of the sinc kernel on `[-1, 1]` by Nyström discretization.
    fn nystrom_gammas(c: f64, nodes: usize) -> Vec<f64> {
        let gl = GaussLegendre::new(nodes);
        let k = CMatrix::from_fn(nodes, nodes, |i, j| {
            let (x, y) = (gl.nodes[i], gl.nodes[j]);
            let kern = if i == j { c / PI } else { (c * (x - y)).sin() / (PI * (x - y)) };
            C64::new((gl.weights[i] * gl.weights[j]).sqrt() * kern, 0.0)
        });
        herm_eig(&HermitianMatrix::new(k).unwrap()).unwrap().values
    }

    #[test]
    fn gammas_match_nystrom_oracle() {
        let b = build_basis(2.0, 5.0, 12, 1e-13).unwrap();
        let ny = nystrom_gammas(10.0, 120);
        for n in 0..=12 {
            let m = b.mode(n);
            assert!((m.gamma - ny[n]).abs() < 1e-11, "n={n}: {} vs {}", m.gamma, ny[n]);
            let omg = 1.0 - ny[n];
            if omg > 1e-9 {
                assert!((m.one_minus_gamma / omg - 1.0).abs() < 1e-6, "n={n}: {} vs {omg}", m.one_minus_gamma);
            }
        }
        assert!((b.mode(0).one_minus_gamma / 4.62e-8 - 1.0).abs() < 0.25);
    }

    #[test]
    fn landau_signature_at_unit_essential_dimension() {
        let b = build_basis(1.0, PI / 2.0, 4, 1e-13).unwrap();
        assert!(b.mode(0).gamma >= 0.5 && 0.5 >= b.mode(1).gamma);
    }

    #[test]
    fn normalization_and_parity() {
        let b = build_basis(1.5, 3.0, 8, 1e-13).unwrap();
        for m in &b.modes {
            let inside: f64 = b.quad_nodes.iter().zip(&b.quad_weights).map(|(&t, &w)| w * b.eval(m.n, t).powi(2)).sum();
            assert!((inside - m.gamma).abs() < 1e-10);
            assert!(((m.mu.norm_sqr()) / (2.0 * PI * m.gamma) - 1.0).abs() < 1e-12);
            for (k, a) in m.legendre_coeffs.iter().enumerate() {
                if k % 2 != m.n % 2 {
                    assert_eq!(*a, 0.0);
                }
            }
            if m.n % 2 == 1 {
                assert_eq!(b.eval(m.n, 0.0), 0.0);
                assert!(b.eval_deriv(m.n, 0.0) > 0.0);
                assert!((b.eval(m.n, 1.3) + b.eval(m.n, -1.3)).abs() < 1e-14);
            } else {
                assert!(b.eval(m.n, 0.0) > 0.0);
                assert!(b.eval_deriv(m.n, 0.0).abs() < 1e-14);
                assert!((b.eval(m.n, 4.1) - b.eval(m.n, -4.1)).abs() < 1e-12);
            }
            assert!(m.deriv_norm < b.params.w);
        }
    }

    #[test]
    fn extension_is_continuous_at_boundary() {
        let b = build_basis(2.0, 5.0, 12, 1e-13).unwrap();
        for n in 0..=12 {
            let m = b.mode(n);
            let inside = legendre_series(&m.legendre_coeffs, 1.0);
            let outside = exterior(&m.ext_coeffs, 10.0, 1.0);
            assert!((inside.0 - outside.0).abs() < 1e-8 * (1.0 + inside.0.abs()), "n={n}");
            assert!((inside.1 - outside.1).abs() < 1e-7 * (1.0 + inside.1.abs()), "n={n}");
        }
    }

    #[test]
    fn asymptotic_examples() {
        let a0 = asymptotic_one_minus_gamma(0, 10.0);
        assert!((a0 / 4.62e-8 - 1.0).abs() < 1e-3);
        assert!((asymptotic_one_minus_gamma(1, 10.0) / a0 - 80.0).abs() < 1e-9);
        assert!(asymptotic_one_minus_gamma(400, 10.0).is_finite());
    }

    #[test]
    fn trace_rule() {
        for &c in &[2.0, 5.0, 10.0, 20.0] {
            let nmax = (2.0 * c / PI).ceil() as usize + 40;
            let b = build_basis(1.0, c, nmax, 1e-13).unwrap();
            let s: f64 = b.gammas().iter().sum();
            assert!((s - 2.0 * c / PI).abs() < 1e-6, "c={c}: {s}");
        }
    }

    #[test]
    fn dual_swaps_parameters() {
        let b = build_basis(2.0, 3.0, 8, 1e-13).unwrap();
        let d = b.dual().unwrap();
        assert_eq!((d.params.w, d.params.t), (3.0, 2.0));
        for n in 0..=8 {
            assert!((d.mode(n).gamma - b.mode(n).gamma).abs() < 1e-10);
        }
        assert!((d.eval(0, 0.0) - (3.0f64 / 2.0).sqrt() * b.eval(0, 0.0)).abs() < 1e-14);
    }

    #[test]
    fn ft_matches_direct_quadrature() {
        let b = build_basis(2.0, 5.0, 6, 1e-13).unwrap();
        let gl = GaussLegendre::new(400);
        for n in 0..=3 {
            for &omega in &[1.0, 0.0, 3.3] {
                let (ts, ws) = gl.on_interval(-5.0, 5.0);
                let direct: C64 = ts.iter().zip(&ws).map(|(&t, &w)| C64::from_polar(w * b.eval(n, t), -omega * t)).sum();
                let ft = b.ft_time_limited(n, omega);
                assert!((ft - direct).norm() < 1e-8, "n={n} ω={omega}: {ft} vs {direct}");
            }
        }
        let f0 = b.ft_time_limited(0, 0.0);
        assert!(f0.re > 0.0 && f0.im == 0.0);
    }

    #[test]
    fn truncation_error_reported() {
        let r = build_basis_with(1.0, 5.0, 2, BuildOptions { tol: 0.0, max_order: 200, ..BuildOptions::default() });
        assert!(matches!(r, Err(Error::Truncation { .. })));
    }

    #[test]
    fn floored_modes_stay_in_unit_interval() {
        let b = build_basis_with(6.0, 26.0, 160, BuildOptions { tail: TailMode::Subtraction, ..BuildOptions::default() }).unwrap();
        for m in &b.modes {
            assert!((0.0..=1.0).contains(&m.gamma) && m.one_minus_gamma > 0.0, "n={} γ={}", m.n, m.gamma);
            assert!(m.mu.norm().is_finite());
        }
        assert!(b.modes.iter().any(|m| m.asymptotic_floor));
    }
}
