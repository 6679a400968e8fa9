//! Complex fields on polar tensor grids over a disk `B_rho`.
//!
//! Rings sit at cell centres `r_j = (j + 1/2) rho / n_r`, angles at
//! `theta_l = 2 pi l / n_theta`. Because `(-r, theta)` and `(r, theta + pi)`
//! are the same point, rings mirrored through the centre are available as
//! ghost rings, which gives centred stencils all the way to `r = 0`.

use num_complex::Complex64 as C;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

pub(crate) fn fft_plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let mut p = PLANNER.get_or_init(|| Mutex::new(FftPlanner::new())).lock().unwrap();
    if inverse {
        p.plan_fft_inverse(n)
    } else {
        p.plan_fft_forward(n)
    }
}

/// Signed Fourier mode of FFT bin `m` out of `n`.
pub fn mode_of_bin(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

pub fn bin_of_mode(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarGrid {
    pub rho: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl PolarGrid {
    pub const DEFAULT_NR: usize = 64;
    pub const DEFAULT_NTHETA: usize = 128;

    /// Panics unless `n_r >= 4` and `n_theta` is even and at least 8.
    pub fn new(rho: f64, n_r: usize, n_theta: usize) -> Self {
        assert!(rho > 0.0 && n_r >= 4 && n_theta >= 8 && n_theta % 2 == 0, "invalid polar grid");
        PolarGrid { rho, n_r, n_theta }
    }

    pub fn with_radius(rho: f64) -> Self {
        Self::new(rho, Self::DEFAULT_NR, Self::DEFAULT_NTHETA)
    }

    pub fn dr(&self) -> f64 {
        self.rho / self.n_r as f64
    }

    pub fn r(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dr()
    }

    pub fn theta(&self, l: usize) -> f64 {
        2.0 * PI * l as f64 / self.n_theta as f64
    }

    pub fn point(&self, j: usize, l: usize) -> C {
        C::from_polar(self.r(j), self.theta(l))
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, j: usize, l: usize) -> usize {
        j * self.n_theta + l
    }

    /// Same resolution on another radius.
    pub fn rescaled(&self, rho: f64) -> Self {
        PolarGrid::new(rho, self.n_r, self.n_theta)
    }

    /// Resolution multiplied by `f` in both directions.
    pub fn refined(&self, f: usize) -> Self {
        PolarGrid::new(self.rho, self.n_r * f, self.n_theta * f)
    }
}

/// Lagrange weights for the first derivative at `x0` through `nodes`.
pub(crate) fn derivative_weights(nodes: &[f64], x0: f64) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|i| {
            let mut sum = 0.0;
            for m in 0..n {
                if m == i {
                    continue;
                }
                let mut prod = 1.0 / (nodes[i] - nodes[m]);
                for l in 0..n {
                    if l != i && l != m {
                        prod *= (x0 - nodes[l]) / (nodes[i] - nodes[l]);
                    }
                }
                sum += prod;
            }
            sum
        })
        .collect()
}

/// Lagrange interpolation weights at `x` through `nodes`.
pub(crate) fn lagrange_weights(nodes: &[f64], x: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != i)
                .map(|(_, &xm)| (x - xm) / (nodes[i] - xm))
                .product()
        })
        .collect()
}

/// A complex-valued field sampled on a [`PolarGrid`].
#[derive(Debug, Clone)]
pub struct PlanarField {
    grid: PolarGrid,
    values: Vec<C>,
    modes: OnceLock<Vec<C>>,
}

impl PlanarField {
    pub fn new(grid: PolarGrid, values: Vec<C>) -> Self {
        assert_eq!(values.len(), grid.len());
        PlanarField { grid, values, modes: OnceLock::new() }
    }

    pub fn from_fn(grid: PolarGrid, f: impl Fn(C) -> C) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.n_r {
            for l in 0..grid.n_theta {
                values.push(f(grid.point(j, l)));
            }
        }
        Self::new(grid, values)
    }

    pub fn zeros(grid: PolarGrid) -> Self {
        Self::new(grid, vec![C::new(0.0, 0.0); grid.len()])
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C] {
        &self.values
    }

    pub fn at(&self, j: usize, l: usize) -> C {
        self.values[self.grid.index(j, l)]
    }

    /// Value on ring `j`, which may be a ghost ring `j < 0`.
    fn ring_value(&self, j: i64, l: usize) -> C {
        if j >= 0 {
            self.at(j as usize, l)
        } else {
            let n = self.grid.n_theta;
            self.at((-1 - j) as usize, (l + n / 2) % n)
        }
    }

    pub fn map(&self, f: impl Fn(C) -> C) -> Self {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination with the grid point: `f(z, self(z))`.
    pub fn map_with_point(&self, f: impl Fn(C, C) -> C) -> Self {
        let g = self.grid;
        let mut out = Vec::with_capacity(g.len());
        for j in 0..g.n_r {
            for l in 0..g.n_theta {
                out.push(f(g.point(j, l), self.at(j, l)));
            }
        }
        Self::new(g, out)
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(C, C) -> C) -> Self {
        assert_eq!(self.grid, other.grid, "fields on different grids");
        Self::new(self.grid, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Minimum modulus and the grid point where it is attained.
    pub fn min_abs(&self) -> (f64, C) {
        let mut best = (f64::INFINITY, C::new(0.0, 0.0));
        for j in 0..self.grid.n_r {
            for l in 0..self.grid.n_theta {
                let a = self.at(j, l).norm();
                if a < best.0 {
                    best = (a, self.grid.point(j, l));
                }
            }
        }
        best
    }

    /// Maximum modulus and where it is attained.
    pub fn max_abs(&self) -> (f64, C) {
        let mut best = (-1.0, C::new(0.0, 0.0));
        for j in 0..self.grid.n_r {
            for l in 0..self.grid.n_theta {
                let a = self.at(j, l).norm();
                if a > best.0 {
                    best = (a, self.grid.point(j, l));
                }
            }
        }
        best
    }

    /// Per-ring Fourier coefficients `f_k(r_j)`, normalized so that
    /// `f(r_j, theta) = sum_k f_k e^{i k theta}`; row-major by ring then FFT bin.
    pub fn modes(&self) -> &[C] {
        self.modes.get_or_init(|| {
            let n = self.grid.n_theta;
            let fft = fft_plan(n, false);
            let mut out = self.values.clone();
            for ring in out.chunks_mut(n) {
                fft.process(ring);
                for c in ring.iter_mut() {
                    *c /= n as f64;
                }
            }
            out
        })
    }

    /// Inverse of [`modes`](Self::modes).
    pub fn from_modes(grid: PolarGrid, mut modes: Vec<C>) -> Self {
        let n = grid.n_theta;
        let fft = fft_plan(n, true);
        let coeffs = modes.clone();
        for ring in modes.chunks_mut(n) {
            fft.process(ring);
        }
        let f = Self::new(grid, modes);
        let _ = f.modes.set(coeffs);
        f
    }

    /// Spectral `d/dtheta` (the Nyquist mode is dropped).
    pub fn d_theta(&self) -> Self {
        let n = self.grid.n_theta;
        let mut m = self.modes().to_vec();
        for ring in m.chunks_mut(n) {
            for (b, c) in ring.iter_mut().enumerate() {
                *c *= if b == n / 2 { C::new(0.0, 0.0) } else { C::new(0.0, mode_of_bin(b, n) as f64) };
            }
        }
        Self::from_modes(self.grid, m)
    }

    /// Fourth-order finite-difference `d/dr`; ghost rings at the centre,
    /// one-sided stencils at the rim.
    pub fn d_r(&self) -> Self {
        let g = self.grid;
        let n = g.n_r as i64;
        let h = g.dr();
        let mut out = vec![C::new(0.0, 0.0); g.len()];
        for j in 0..n {
            let lo = (j - 2).min(n - 5);
            let offsets: Vec<i64> = (lo..lo + 5).collect();
            let nodes: Vec<f64> = offsets.iter().map(|&o| (o - j) as f64).collect();
            let w = derivative_weights(&nodes, 0.0);
            for l in 0..g.n_theta {
                let mut acc = C::new(0.0, 0.0);
                for (&o, &wi) in offsets.iter().zip(&w) {
                    acc += self.ring_value(o, l) * wi;
                }
                out[g.index(j as usize, l)] = acc / h;
            }
        }
        Self::new(g, out)
    }

    /// `dbar = (1/2) e^{i theta} (d_r + (i / r) d_theta)`.
    pub fn dbar(&self) -> Self {
        let dr = self.d_r();
        let dt = self.d_theta();
        let g = self.grid;
        let mut out = Vec::with_capacity(g.len());
        for j in 0..g.n_r {
            let r = g.r(j);
            for l in 0..g.n_theta {
                let e = C::from_polar(0.5, g.theta(l));
                out.push(e * (dr.at(j, l) + C::new(0.0, 1.0 / r) * dt.at(j, l)));
            }
        }
        Self::new(g, out)
    }

    /// Trigonometric interpolation on ring `j` (possibly a ghost ring).
    fn ring_interp(&self, j: i64, theta: f64) -> C {
        let n = self.grid.n_theta;
        let (ring, theta) = if j >= 0 { (j as usize, theta) } else { ((-1 - j) as usize, theta + PI) };
        let m = &self.modes()[ring * n..(ring + 1) * n];
        let e = C::from_polar(1.0, theta);
        let mut acc = m[0];
        let mut p = C::new(1.0, 0.0);
        for k in 1..n / 2 {
            p *= e;
            acc += m[k] * p + m[n - k] * p.conj();
        }
        // Nyquist term, symmetrized.
        acc + m[n / 2] * (n as f64 / 2.0 * theta).cos()
    }

    /// Value at an arbitrary point of the closed disk: trigonometric in
    /// `theta`, cubic Lagrange in `r`.
    pub fn eval(&self, z: C) -> C {
        let g = self.grid;
        let (r, theta) = z.to_polar();
        let t = r / g.dr() - 0.5;
        let j0 = ((t.floor() as i64) - 1).clamp(-2, g.n_r as i64 - 4);
        let nodes: Vec<f64> = (j0..j0 + 4).map(|j| (j as f64 + 0.5) * g.dr()).collect();
        let w = lagrange_weights(&nodes, r);
        (0..4).map(|i| self.ring_interp(j0 + i as i64, theta) * w[i]).sum()
    }

    /// Interpolated onto another grid (inside this grid's disk).
    pub fn resample(&self, grid: PolarGrid) -> Self {
        Self::from_fn(grid, |z| self.eval(z))
    }

    /// Interpolation error estimate: round trip through a half-resolution grid.
    pub fn interpolation_error(&self) -> f64 {
        let g = self.grid;
        let coarse = self.resample(PolarGrid::new(g.rho, (g.n_r / 2).max(4), (g.n_theta / 2).max(8)));
        let back = coarse.resample(g);
        self.values.iter().zip(back.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PolarGrid {
        PolarGrid::new(1.0, 32, 64)
    }

    #[test]
    fn modes_round_trip() {
        let f = PlanarField::from_fn(grid(), |z| z * z.conj() + z.exp());
        let g = PlanarField::from_modes(grid(), f.modes().to_vec());
        for (a, b) in f.values().iter().zip(g.values()) {
            assert!((a - b).norm() < 1e-13);
        }
        // z has a single mode k = 1 with radial profile r.
        let z = PlanarField::from_fn(grid(), |z| z);
        let m = &z.modes()[3 * 64..4 * 64];
        assert!((m[1] - C::new(grid().r(3), 0.0)).norm() < 1e-14);
        assert!(m.iter().enumerate().filter(|&(b, _)| b != 1).all(|(_, c)| c.norm() < 1e-14));
    }

    #[test]
    fn dbar_of_simple_fields() {
        let g = grid();
        let zbar = PlanarField::from_fn(g, |z| z.conj()).dbar();
        assert!(zbar.values().iter().all(|v| (v - C::new(1.0, 0.0)).norm() < 1e-10));
        let h = PlanarField::from_fn(g, |z| z.exp() * z * z).dbar();
        assert!(h.sup_norm() < 2e-5, "{}", h.sup_norm());
        let m = PlanarField::from_fn(g, |z| z * z * z.conj()).dbar();
        let exact = PlanarField::from_fn(g, |z| z * z);
        assert!(m.zip_map(&exact, |a, b| a - b).sup_norm() < 1e-8);
    }

    #[test]
    fn interpolation_reproduces_smooth_fields() {
        let f = PlanarField::from_fn(grid(), |z| (z * C::new(0.3, 1.0)).sin() + z.conj() * z);
        for z in [C::new(0.0, 0.0), C::new(0.01, -0.003), C::new(0.5, 0.2), C::new(-0.7, 0.69), C::new(0.999, 0.0)] {
            let exact = (z * C::new(0.3, 1.0)).sin() + z.conj() * z;
            assert!((f.eval(z) - exact).norm() < 1e-6, "{z}: {}", (f.eval(z) - exact).norm());
        }
        assert!(f.interpolation_error() < 1e-4);
    }

    #[test]
    fn derivative_weights_match_textbook_stencil() {
        let w = derivative_weights(&[-2.0, -1.0, 0.0, 1.0, 2.0], 0.0);
        let expected = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
