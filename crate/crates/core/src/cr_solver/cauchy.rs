//! The Cauchy transform `Tf(z) = -(1/pi) int_{B_rho} f(zeta) / (zeta - z) dA`.
//!
//! Expanding the kernel in Fourier modes, the `k`-th angular mode of `f`
//! feeds only mode `k - 1` of `Tf`:
//!
//! * `k >= 1`: `(Tf)_{k-1}(r) = -2 int_r^rho f_k(s) (r/s)^{k-1} ds`,
//! * `k <= 0`: `(Tf)_{k-1}(r) =  2 int_0^r  f_k(s) (s/r)^{1-k} ds`.
//!
//! The radial profiles `f_k` are interpolated by piecewise cubics (with the
//! mirrored rings `f_k(-s) = (-1)^k f_k(s)` near the centre) and the kernels
//! integrated by composite Gauss-Legendre, giving one `n_r x n_r` weight
//! matrix per mode. Matrices are computed for `rho = 1` and cached.

use num_complex::Complex64 as C;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::grid::{bin_of_mode, lagrange_weights, mode_of_bin, PlanarField, PolarGrid};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Precomputed radial weights of the transform on a unit-radius grid.
#[derive(Debug)]
pub struct CauchyOperator {
    n_r: usize,
    n_theta: usize,
    /// Per FFT bin of the input, row-major `n_r x n_r`; empty for the Nyquist bin.
    weights: Vec<Vec<f64>>,
}

const GAUSS_POINTS: usize = 8;

impl CauchyOperator {
    /// Shared operator for the resolution of `grid`.
    pub fn for_grid(grid: &PolarGrid) -> Arc<CauchyOperator> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<CauchyOperator>>>> = OnceLock::new();
        let key = (grid.n_r, grid.n_theta);
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(op) = cache.lock().unwrap().get(&key) {
            return op.clone();
        }
        let op = Arc::new(Self::build(grid.n_r, grid.n_theta));
        cache.lock().unwrap().entry(key).or_insert(op).clone()
    }

    fn build(n_r: usize, n_theta: usize) -> Self {
        let gl = gauss_legendre(GAUSS_POINTS);
        let weights = (0..n_theta)
            .map(|b| {
                if b == n_theta / 2 {
                    Vec::new()
                } else {
                    Self::mode_weights(n_r, mode_of_bin(b, n_theta), &gl)
                }
            })
            .collect();
        CauchyOperator { n_r, n_theta, weights }
    }

    fn mode_weights(n_r: usize, k: i64, gl: &[(f64, f64)]) -> Vec<f64> {
        let h = 1.0 / n_r as f64;
        let r = |j: i64| (j as f64 + 0.5) * h;
        let parity = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        // Interval index q covers [r_q, r_{q+1}] (q = -1 means [0, r_0],
        // q = n_r - 1 means [r_{n_r-1}, 1]).
        let interval = |q: i64| -> (f64, f64, i64) {
            let a = if q < 0 { 0.0 } else { r(q) };
            let b = if q == n_r as i64 - 1 { 1.0 } else { r(q + 1) };
            let lo = (q - 1).clamp(-2, n_r as i64 - 4);
            (a, b, lo)
        };
        let mut w = vec![0.0; n_r * n_r];
        for i in 0..n_r {
            let ri = r(i as i64);
            let range: Vec<i64> = if k >= 1 { (i as i64..n_r as i64).collect() } else { (-1..i as i64).collect() };
            for q in range {
                let (a, b, lo) = interval(q);
                let nodes: Vec<f64> = (lo..lo + 4).map(r).collect();
                let scale = k.unsigned_abs() as f64 * h / a.max(0.5 * h);
                let nsub = (0.5 * scale).ceil().clamp(1.0, 64.0) as usize;
                let len = (b - a) / nsub as f64;
                for p in 0..nsub {
                    let (sa, sb) = (a + p as f64 * len, a + (p + 1) as f64 * len);
                    for &(x, gw) in gl {
                        let s = 0.5 * (sa + sb) + 0.5 * (sb - sa) * x;
                        let kern = if k >= 1 { -2.0 * (ri / s).powi((k - 1) as i32) } else { 2.0 * (s / ri).powi((1 - k) as i32) };
                        let base = 0.5 * (sb - sa) * gw * kern;
                        for (m, lw) in lagrange_weights(&nodes, s).into_iter().enumerate() {
                            let j = lo + m as i64;
                            let (col, sign) = if j >= 0 { (j as usize, 1.0) } else { ((-1 - j) as usize, parity) };
                            w[i * n_r + col] += base * lw * sign;
                        }
                    }
                }
            }
        }
        w
    }

    /// Applies the transform to `f` on its own disk.
    pub fn apply(&self, f: &PlanarField) -> PlanarField {
        let g = *f.grid();
        assert_eq!((g.n_r, g.n_theta), (self.n_r, self.n_theta), "operator built for another resolution");
        let (nr, nt) = (self.n_r, self.n_theta);
        let fm = f.modes();
        let mut out = vec![C::new(0.0, 0.0); nr * nt];
        for b in 0..nt {
            let w = &self.weights[b];
            if w.is_empty() {
                continue;
            }
            let ob = bin_of_mode(mode_of_bin(b, nt) - 1, nt);
            for i in 0..nr {
                let row = &w[i * nr..(i + 1) * nr];
                let mut acc = C::new(0.0, 0.0);
                for j in 0..nr {
                    acc += fm[j * nt + b] * row[j];
                }
                out[i * nt + ob] += acc * g.rho;
            }
        }
        PlanarField::from_modes(g, out)
    }
}

/// `Tf` on the grid of `f`.
pub fn cauchy_transform(f: &PlanarField) -> PlanarField {
    CauchyOperator::for_grid(f.grid()).apply(f)
}

/// Relative residual `max |dbar(Tf) - f| / max |f|` and where it is largest.
pub fn transform_residual(tf: &PlanarField, f: &PlanarField) -> (f64, C) {
    let d = tf.dbar().zip_map(f, |a, b| a - b);
    let (m, at) = d.max_abs();
    (m / f.sup_norm().max(f64::MIN_POSITIVE), at)
}
