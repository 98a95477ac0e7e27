//! Gauss-Legendre rules, compensated summation, Legendre series and
//! spherical Bessel functions.

use std::f64::consts::PI;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = CompensatedSum::new();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_pair(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1e-3) {
                    dp = legendre_pair(n, x).1;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let h = 0.5 * (b - a);
        let m = 0.5 * (b + a);
        (
            self.nodes.iter().map(|x| m + h * x).collect(),
            self.weights.iter().map(|w| h * w).collect(),
        )
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let h = 0.5 * (b - a);
        let m = 0.5 * (b + a);
        h * compensated_sum(self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(m + h * x)))
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Value and derivative of `Σ a_k P_k(x)`.
pub fn legendre_series(coeffs: &[f64], x: f64) -> (f64, f64) {
    if coeffs.is_empty() {
        return (0.0, 0.0);
    }
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    let mut val = coeffs[0];
    let mut der = 0.0;
    for (k, &a) in coeffs.iter().enumerate().skip(1) {
        let kf = (k - 1) as f64;
        // P_k from P_{k-1}, P_{k-2}; P'_k = P'_{k-2} + (2k-1) P_{k-1}
        let p_next = if k == 1 { x } else { ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0) };
        let d_next = d_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
        val += a * p;
        der += a * d;
    }
    (val, der)
}

/// `j_0(z), …, j_kmax(z)` for real `z`.
pub fn spherical_bessel_j(kmax: usize, z: f64) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let az = z.abs();
    let j0 = az.sin() / az;
    let j1 = az.sin() / (az * az) - az.cos() / az;
    if az > kmax as f64 {
        out[0] = j0;
        if kmax >= 1 {
            out[1] = j1;
        }
        for k in 1..kmax {
            out[k + 1] = (2 * k + 1) as f64 / az * out[k] - out[k - 1];
        }
    } else {
        // Miller backward recurrence
        let start = kmax + 20 + (az as usize) + (10.0 * (kmax as f64 + 1.0).sqrt()) as usize;
        let mut jp1 = 0.0;
        let mut jk = 1e-300;
        for k in (1..=start).rev() {
            let jm1 = (2 * k + 1) as f64 / az * jk - jp1;
            jp1 = jk;
            jk = jm1;
            if k - 1 <= kmax {
                out[k - 1] = jk;
            }
            if jk.abs() > 1e250 {
                jk *= 1e-250;
                jp1 *= 1e-250;
                for v in out.iter_mut() {
                    *v *= 1e-250;
                }
            }
        }
        // out[0] holds the unnormalized j_0; out[1] the unnormalized j_1
        let scale = if j0.abs() >= j1.abs() || kmax == 0 {
            j0 / out[0]
        } else {
            j1 / out[1]
        };
        for v in out.iter_mut() {
            *v *= scale;
        }
    }
    if z < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let g = GaussLegendre::new(10);
        for p in 0..20 {
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            let q = g.integrate(-1.0, 1.0, |x| x.powi(p));
            assert!((q - exact).abs() < 1e-14, "p={p}");
        }
        assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gl_large_rule_weights() {
        let g = GaussLegendre::new(801);
        assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        let q = g.integrate(0.0, PI, f64::sin);
        assert!((q - 2.0).abs() < 1e-13);
    }

    #[test]
    fn legendre_series_known_values() {
        // P_2 = (3x^2 - 1)/2, P_3 = (5x^3 - 3x)/2
        let (v, d) = legendre_series(&[0.0, 0.0, 1.0, 2.0], 0.3);
        let ev = 0.5 * (3.0 * 0.09 - 1.0) + (5.0 * 0.027 - 0.9);
        let ed = 3.0 * 0.3 + (15.0 * 0.09 - 3.0);
        assert!((v - ev).abs() < 1e-15 && (d - ed).abs() < 1e-14);
        let (v1, d1) = legendre_series(&[0.0, 0.0, 0.0, 0.0, 1.0], 1.0);
        assert!((v1 - 1.0).abs() < 1e-15 && (d1 - 10.0).abs() < 1e-13);
    }

    #[test]
    fn spherical_bessel_closed_forms() {
        for &z in &[0.1, 1.0, 3.7, 12.0, 80.0] {
            let j = spherical_bessel_j(30, z);
            let (s, c) = (z.sin(), z.cos());
            let j2 = (3.0 / (z * z) - 1.0) * s / z - 3.0 * c / (z * z);
            assert!((j[0] - s / z).abs() < 1e-14);
            assert!((j[2] - j2).abs() < 1e-12 * (1.0 + j2.abs()), "z={z}");
            // Wronskian-type cross product: j_{k+1} y_k - j_k y_{k+1} = 1/z^2 is not used; check recurrence
            for k in 1..29 {
                let r = (2 * k + 1) as f64 / z * j[k] - j[k - 1] - j[k + 1];
                assert!(r.abs() < 1e-10 * (j[k].abs() / z + 1e-300).max(1e-300) + 1e-13);
            }
        }
        // small-argument limit j_k(z) ~ z^k/(2k+1)!!
        let j = spherical_bessel_j(5, 1e-3);
        assert!((j[3] / (1e-9 / 105.0) - 1.0).abs() < 1e-5);
        let jn = spherical_bessel_j(5, -2.0);
        let jp = spherical_bessel_j(5, 2.0);
        assert!((jn[3] + jp[3]).abs() < 1e-16 && (jn[2] - jp[2]).abs() < 1e-16);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }
}
