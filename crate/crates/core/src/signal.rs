//! Line-spectrum signals, Hadamard-test sample emulation, sample grids and
//! runtime accounting.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, HermitianMatrix};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const ZERO_WEIGHT: f64 = 1e-14;

/// Discrete spectral measure `Σ w_n δ(E - E_n)` with `Σ w_n = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSpectrum {
    freqs: Vec<f64>,
    weights: Vec<f64>,
}

impl LineSpectrum {
    /// Sorts lines ascending and merges exact duplicates.
    pub fn new(freqs: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if freqs.len() != weights.len() {
            return Err(Error::InvalidInput(format!("{} frequencies but {} weights", freqs.len(), weights.len())));
        }
        if freqs.iter().chain(&weights).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite frequency or weight".into()));
        }
        if let Some(w) = weights.iter().find(|w| **w < 0.0) {
            return Err(Error::InvalidInput(format!("negative weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {total}, expected 1")));
        }
        let mut lines: Vec<(f64, f64)> = freqs.into_iter().zip(weights).collect();
        lines.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(lines.len());
        for (e, w) in lines {
            match out.last_mut() {
                Some(last) if last.0 == e => last.1 += w,
                _ => out.push((e, w)),
            }
        }
        Ok(Self { freqs: out.iter().map(|l| l.0).collect(), weights: out.iter().map(|l| l.1).collect() })
    }

    /// Rescales nonnegative weights to unit mass.
    pub fn normalized(freqs: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("total weight must be positive".into()));
        }
        Self::new(freqs, weights.iter().map(|w| w / total).collect())
    }

    /// Spectral measure of `⟨ψ|e^{iHt}|ψ⟩`. Eigenvalues closer than
    /// `merge_tol` (default `1e-10·‖H‖`) are merged into one line.
    pub fn from_hermitian(h: &HermitianMatrix, psi: &[C64], merge_tol: Option<f64>) -> Result<Self> {
        if psi.len() != h.dim() {
            return Err(Error::InvalidInput(format!("state has length {} but H has dimension {}", psi.len(), h.dim())));
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("state is not normalized: ‖ψ‖ = {norm}")));
        }
        let eig = herm_eig(h)?;
        let n = h.dim();
        let hnorm = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = merge_tol.unwrap_or(1e-10 * hnorm);
        let mut lines: Vec<(f64, f64)> = (0..n)
            .map(|j| {
                let overlap: C64 = (0..n).map(|i| eig.vectors[(i, j)].conj() * psi[i]).sum();
                (eig.values[j], overlap.norm_sqr())
            })
            .collect();
        lines.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut groups: Vec<Vec<(f64, f64)>> = Vec::new();
        for l in lines {
            match groups.last_mut() {
                Some(g) if l.0 - g.last().unwrap().0 <= tol => g.push(l),
                _ => groups.push(vec![l]),
            }
        }
        let mut freqs = Vec::new();
        let mut weights = Vec::new();
        for g in groups {
            let w: f64 = g.iter().map(|l| l.1).sum();
            if w < ZERO_WEIGHT {
                continue;
            }
            freqs.push(g.iter().map(|l| l.0 * l.1).sum::<f64>() / w);
            weights.push(w);
        }
        Self::normalized(freqs, weights)
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// `C(t) = Σ w_n e^{iE_n t}`.
    pub fn eval_exact(&self, t: f64) -> C64 {
        self.freqs.iter().zip(&self.weights).map(|(e, w)| C64::from_polar(*w, e * t)).sum()
    }

    /// `C'(t)`.
    pub fn eval_deriv(&self, t: f64) -> C64 {
        self.freqs.iter().zip(&self.weights).map(|(e, w)| C64::new(0.0, w * e) * C64::from_polar(1.0, e * t)).sum()
    }

    /// Frequencies moved by `-omega`.
    pub fn shift(&self, omega: f64) -> Self {
        Self { freqs: self.freqs.iter().map(|e| e - omega).collect(), weights: self.weights.clone() }
    }

    /// Total weight of lines with `lo ≤ E ≤ hi`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        self.freqs.iter().zip(&self.weights).filter(|(e, _)| **e >= lo && **e <= hi).map(|(_, w)| w).sum()
    }
}

/// One quadrature of the Hadamard test: mean of `shots` outcomes `±1` with
/// `P[+1] = (1 + x)/2`.
pub fn hadamard_quadrature(x: f64, shots: u64, rng: &mut impl Rng) -> Result<f64> {
    if shots == 0 {
        return Err(Error::InvalidInput("shots must be positive".into()));
    }
    let p = (1.0 + x) / 2.0;
    if !(-1e-9..=1.0 + 1e-9).contains(&p) {
        return Err(Error::InvalidInput(format!("outcome probability {p} outside [0, 1]")));
    }
    let dist = Binomial::new(shots, p.clamp(0.0, 1.0)).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let plus = dist.sample(rng) as f64;
    Ok((2.0 * plus - shots as f64) / shots as f64)
}

/// Unbiased Hadamard-test estimate of `C(t)` with `shots` outcomes per quadrature.
pub fn hadamard_estimate(spec: &LineSpectrum, t: f64, shots: u64, rng: &mut impl Rng) -> Result<C64> {
    let c = spec.eval_exact(t);
    let re = hadamard_quadrature(c.re, shots, rng)?;
    let im = hadamard_quadrature(c.im, shots, rng)?;
    Ok(C64::new(re, im))
}

/// Nodes `t_k = πk/W_s` for `k ∈ [-N_s, N_s]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub w_s: f64,
    pub n_s: usize,
}

impl SampleGrid {
    pub fn new(w_s: f64, n_s: usize) -> Result<Self> {
        if !(w_s > 0.0) || !w_s.is_finite() {
            return Err(Error::InvalidInput(format!("sampling rate must be positive, got {w_s}")));
        }
        if n_s == 0 || n_s % 2 == 1 {
            return Err(Error::InvalidInput(format!("N_s must be even and positive, got {n_s}")));
        }
        Ok(Self { w_s, n_s })
    }

    /// Grid with `T_max = πN_s/W_s` rounded to the nearest even `N_s`.
    pub fn for_tmax(w_s: f64, t_max: f64) -> Result<Self> {
        let n = (w_s * t_max / PI / 2.0).round().max(1.0) as usize * 2;
        Self::new(w_s, n)
    }

    pub fn spacing(&self) -> f64 {
        PI / self.w_s
    }

    pub fn node(&self, k: i64) -> f64 {
        k as f64 * PI / self.w_s
    }

    /// `T = πN_s/(2W_s)`, the node `k = N_s/2`.
    pub fn half_duration(&self) -> f64 {
        self.node(self.n_s as i64 / 2)
    }

    pub fn t_max(&self) -> f64 {
        self.node(self.n_s as i64)
    }

    pub fn len(&self) -> usize {
        2 * self.n_s + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Samples of `C` on a [`SampleGrid`]; index `i` holds `k = i - N_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub grid: SampleGrid,
    pub values: Vec<C64>,
    /// Outcomes per quadrature; 0 for exact samples.
    pub shots_per_sample: u64,
    pub seed: u64,
    pub noisy: bool,
}

impl SampleSet {
    /// Checks length and conjugate symmetry.
    pub fn new(grid: SampleGrid, values: Vec<C64>, shots_per_sample: u64, seed: u64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!("expected {} samples, got {}", grid.len(), values.len())));
        }
        let n = grid.n_s;
        for k in 1..=n {
            let (p, m) = (values[n + k], values[n - k]);
            if (p - m.conj()).norm() > 1e-12 * (1.0 + p.norm()) {
                return Err(Error::InvalidInput(format!("samples at k = ±{k} are not conjugate")));
            }
        }
        Ok(Self { grid, values, shots_per_sample, seed, noisy: shots_per_sample > 0 })
    }

    /// `C̃(t_k)`.
    pub fn value(&self, k: i64) -> C64 {
        self.values[(k + self.grid.n_s as i64) as usize]
    }

    /// `C̃(t_k) e^{-iωt_k}`.
    pub fn shift(&self, omega: f64) -> Self {
        let n = self.grid.n_s as i64;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v * C64::from_polar(1.0, -omega * self.grid.node(i as i64 - n)))
            .collect();
        Self { values, ..self.clone() }
    }
}

/// Samples exactly, or with `shots` Hadamard outcomes per quadrature. Each
/// `(k, quadrature)` pair draws from its own stream of the seeded generator,
/// `k = 0` is pinned to 1 and negative `k` are conjugate reflections.
pub fn make_samples(spec: &LineSpectrum, grid: SampleGrid, shots: Option<u64>, seed: u64) -> Result<SampleSet> {
    let n = grid.n_s;
    let mut values = vec![C64::new(0.0, 0.0); grid.len()];
    values[n] = C64::new(1.0, 0.0);
    for k in 1..=n {
        let t = grid.node(k as i64);
        let v = match shots {
            None => spec.eval_exact(t),
            Some(s) => {
                let c = spec.eval_exact(t);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(2 * k as u64);
                let re = hadamard_quadrature(c.re, s, &mut rng)?;
                rng.set_stream(2 * k as u64 + 1);
                rng.set_word_pos(0);
                let im = hadamard_quadrature(c.im, s, &mut rng)?;
                C64::new(re, im)
            }
        };
        values[n + k] = v;
        values[n - k] = v.conj();
    }
    SampleSet::new(grid, values, shots.unwrap_or(0), seed)
}

/// `#shots·(π/W_s)·N_s(N_s - 1)/2`.
pub fn runtime(shots: u64, n_s: usize, w_s: f64) -> f64 {
    let n = n_s as f64;
    shots as f64 * (PI / w_s) * n * (n - 1.0) / 2.0
}

/// `⌈F·√(N_s ln N_s)⌉`.
pub fn shots_schedule(n_s: usize, f: f64) -> u64 {
    let n = n_s as f64;
    (f * (n * n.ln()).sqrt()).ceil() as u64
}

/// `⌈(2/ε²)·ln(4(N_s + 1)/δ)⌉`.
pub fn hoeffding_shots(eps: f64, delta: f64, n_s: usize) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("need 0 < eps, delta < 1, got {eps}, {delta}")));
    }
    Ok((2.0 / (eps * eps) * (4.0 * (n_s as f64 + 1.0) / delta).ln()).ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;

    fn spec2() -> LineSpectrum {
        LineSpectrum::new(vec![0.7, -0.3, 1.9], vec![0.5, 0.3, 0.2]).unwrap()
    }

    #[test]
    fn canonical_order_and_validation() {
        let s = spec2();
        assert_eq!(s.freqs(), &[-0.3, 0.7, 1.9]);
        assert_eq!(s.weights(), &[0.3, 0.5, 0.2]);
        assert!(LineSpectrum::new(vec![1.0], vec![0.9]).is_err());
        assert!(LineSpectrum::new(vec![1.0, 2.0], vec![1.5, -0.5]).is_err());
        let d = LineSpectrum::new(vec![1.0, 1.0], vec![0.25, 0.75]).unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn from_hermitian_diagonal_examples() {
        let h = HermitianMatrix::from_real_diag(&[1.0, 2.0]);
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let s = LineSpectrum::from_hermitian(&h, &[one, zero], None).unwrap();
        assert_eq!(s.freqs(), &[1.0]);
        assert_eq!(s.weights(), &[1.0]);
        let r = C64::new(0.5f64.sqrt(), 0.0);
        let s = LineSpectrum::from_hermitian(&h, &[r, r], None).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s.weights()[0] - 0.5).abs() < 1e-15 && (s.freqs()[1] - 2.0).abs() < 1e-15);
        assert!(LineSpectrum::from_hermitian(&h, &[one, one], None).is_err());
    }

    #[test]
    fn from_hermitian_merges_degenerate_eigenvalues() {
        let h = HermitianMatrix::from_real_diag(&[1.0, 1.0, 3.0]);
        let v = C64::new(1.0 / 3f64.sqrt(), 0.0);
        let s = LineSpectrum::from_hermitian(&h, &[v, v, v], None).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s.weights()[0] - 2.0 / 3.0).abs() < 1e-14);
    }

    fn expm_i(h: &CMatrix, t: f64) -> CMatrix {
        // scaling and squaring on a Taylor series of exp(iHt)
        let n = h.rows();
        let norm = h.frobenius() * t.abs();
        let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
        let x = h.scale(C64::new(0.0, t / 2f64.powi(squarings)));
        let mut term = CMatrix::identity(n);
        let mut sum = CMatrix::identity(n);
        for k in 1..30 {
            term = term.matmul(&x).scale(C64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
        }
        for _ in 0..squarings {
            sum = sum.matmul(&sum);
        }
        sum
    }

    #[test]
    fn from_hermitian_matches_matrix_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 8;
        let m = CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let h = HermitianMatrix::new(m).unwrap();
        let mut psi: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|z| *z /= norm);
        let s = LineSpectrum::from_hermitian(&h, &psi, None).unwrap();
        assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((s.eval_exact(0.0) - 1.0).norm() < 1e-12);
        for _ in 0..10 {
            let t = rng.random_range(-5.0..5.0);
            let u = expm_i(h.matrix(), t);
            let upsi = u.matvec(&psi);
            let direct: C64 = psi.iter().zip(&upsi).map(|(a, b)| a.conj() * b).sum();
            assert!((direct - s.eval_exact(t)).norm() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn eval_exact_basic_properties() {
        let s = spec2();
        assert_eq!(s.eval_exact(0.0), C64::new(1.0, 0.0));
        let single = LineSpectrum::new(vec![2.5], vec![1.0]).unwrap();
        let z = single.eval_exact(1.3);
        assert!((z - C64::from_polar(1.0, 2.5 * 1.3)).norm() < 1e-15);
        assert!((z.norm() - 1.0).abs() < 1e-15);
        for &t in &[0.3, 2.0, 17.5] {
            assert!((s.eval_exact(-t) - s.eval_exact(t).conj()).norm() < 1e-15);
            let h = 1e-6;
            let fd = (s.eval_exact(t + h) - s.eval_exact(t - h)) / (2.0 * h);
            assert!((fd - s.eval_deriv(t)).norm() < 1e-8);
        }
    }

    #[test]
    fn hadamard_deterministic_real_part_for_constant_signal() {
        let s = LineSpectrum::new(vec![0.0], vec![1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let z = hadamard_estimate(&s, 3.0, 7, &mut rng).unwrap();
            assert_eq!(z.re, 1.0);
            assert!(z.im.abs() <= 1.0);
        }
        assert!(hadamard_estimate(&s, 0.0, 0, &mut rng).is_err());
    }

    #[test]
    fn hadamard_converges_with_many_shots() {
        let s = spec2();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = hadamard_estimate(&s, 1.1, 1_000_000, &mut rng).unwrap();
        assert!((z - s.eval_exact(1.1)).norm() <= 5e-3);
    }

    #[test]
    fn hadamard_variance_matches_bernoulli() {
        let s = spec2();
        let t = 0.8;
        let c = s.eval_exact(t);
        let shots = 9;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let reps = 10_000;
        let xs: Vec<f64> = (0..reps).map(|_| hadamard_estimate(&s, t, shots, &mut rng).unwrap().re).collect();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let expect = (1.0 - c.re * c.re) / shots as f64;
        assert!((var / expect - 1.0).abs() < 0.1, "{var} vs {expect}");
    }

    #[test]
    fn grid_and_exact_samples() {
        let g = SampleGrid::new(3.0, 100).unwrap();
        assert!((g.t_max() - 100.0 * PI / 3.0).abs() < 1e-12);
        assert_eq!(g.half_duration(), g.node(50));
        assert!(SampleGrid::new(3.0, 7).is_err());
        let s = spec2();
        let set = make_samples(&s, g, None, 0).unwrap();
        for k in -100..=100i64 {
            assert!((set.value(k) - s.eval_exact(g.node(k))).norm() < 1e-15);
            assert_eq!(set.value(-k), set.value(k).conj());
        }
        assert!(!set.noisy);
    }

    #[test]
    fn noisy_samples_are_reproducible_and_symmetric() {
        let g = SampleGrid::new(2.0, 20).unwrap();
        let s = spec2();
        let a = make_samples(&s, g, Some(13), 42).unwrap();
        let b = make_samples(&s, g, Some(13), 42).unwrap();
        let c = make_samples(&s, g, Some(13), 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert_eq!(a.value(0), C64::new(1.0, 0.0));
        for k in 1..=20i64 {
            assert_eq!(a.value(-k), a.value(k).conj());
            assert!(a.value(k).norm() <= 1.0 + 2.0 / 13f64.sqrt());
        }
    }

    #[test]
    fn hoeffding_bound_holds_empirically() {
        let g = SampleGrid::new(2.0, 40).unwrap();
        let s = spec2();
        let shots = 50;
        let radius = (2.0 * (4.0 * 41.0 / 0.01f64).ln() / shots as f64).sqrt();
        let mut good = 0;
        for seed in 0..200 {
            let set = make_samples(&s, g, Some(shots), seed).unwrap();
            let worst = (0..=40i64).map(|k| (set.value(k) - s.eval_exact(g.node(k))).norm()).fold(0.0, f64::max);
            if worst <= radius {
                good += 1;
            }
        }
        assert!(good >= 198, "{good}/200");
    }

    #[test]
    fn samples_are_unbiased() {
        let g = SampleGrid::new(2.0, 4).unwrap();
        let s = spec2();
        let reps = 10_000;
        let shots = 16;
        let mut sum = vec![C64::new(0.0, 0.0); 5];
        for seed in 0..reps {
            let set = make_samples(&s, g, Some(shots), seed).unwrap();
            for k in 0..5 {
                sum[k] += set.value(k as i64);
            }
        }
        for k in 1..5 {
            let c = s.eval_exact(g.node(k as i64));
            let mean = sum[k] / reps as f64;
            let se_re = ((1.0 - c.re * c.re) / (shots * reps) as f64).sqrt();
            let se_im = ((1.0 - c.im * c.im) / (shots * reps) as f64).sqrt();
            assert!((mean.re - c.re).abs() <= 4.0 * se_re, "k={k}");
            assert!((mean.im - c.im).abs() <= 4.0 * se_im, "k={k}");
        }
    }

    #[test]
    fn shift_examples() {
        let e = 1.7;
        let s = LineSpectrum::new(vec![e], vec![1.0]).unwrap();
        let g = SampleGrid::new(4.0, 16).unwrap();
        let set = make_samples(&s, g, None, 0).unwrap();
        let shifted = set.shift(e);
        for v in &shifted.values {
            assert!((v - 1.0).norm() < 1e-14);
        }
        assert_eq!(set.shift(0.0), set);
        let back = set.shift(0.9).shift(-0.9);
        for (a, b) in back.values.iter().zip(&set.values) {
            assert!((a - b).norm() < 1e-14);
        }
        assert_eq!(s.shift(e).freqs(), &[0.0]);
        assert_eq!(s.shift(0.3).shift(-0.3), s);
    }

    #[test]
    fn runtime_and_shot_rules() {
        assert!((runtime(13, 100, 3.0) - 13.0 * PI / 3.0 * 4950.0).abs() < 1e-9);
        assert!((runtime(13, 100, 3.0) - 67387.2).abs() < 0.1);
        assert_eq!(runtime(1, 1, PI), 0.0);
        assert!((runtime(5, 200, 2.0) / runtime(5, 100, 2.0) - 200.0 * 199.0 / 9900.0).abs() < 1e-12);
        assert_eq!(shots_schedule(100, 2.0), 43);
        for n in 2..300 {
            assert!(shots_schedule(n + 1, 2.0) >= shots_schedule(n, 2.0));
        }
        assert_eq!(hoeffding_shots(0.1, 0.05, 100).unwrap(), 1800);
        let a = hoeffding_shots(0.1, 0.05, 100).unwrap() as f64;
        let b = hoeffding_shots(0.1, 0.05, 201).unwrap() as f64;
        assert!((b - a - 200.0 * 2f64.ln()).abs() < 2.0);
        let q = hoeffding_shots(0.05, 0.05, 100).unwrap() as f64;
        assert!((q / a - 4.0).abs() < 0.01);
        assert!(hoeffding_shots(1.5, 0.1, 10).is_err());
    }

    #[test]
    fn gram_matrix_is_positive_semidefinite() {
        let s = LineSpectrum::new(vec![-2.0, 0.1, 0.15, 3.3], vec![0.1, 0.4, 0.3, 0.2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for r in 1..=8 {
            let ts: Vec<f64> = (0..r).map(|_| rng.random_range(-10.0..10.0)).collect();
            let g = CMatrix::from_fn(r, r, |i, j| s.eval_exact(ts[i] - ts[j]));
            let e = herm_eig(&HermitianMatrix::new(g).unwrap()).unwrap();
            assert!(*e.values.last().unwrap() >= -1e-10);
        }
    }
}
