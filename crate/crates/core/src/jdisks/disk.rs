//! J-holomorphic disks through a point with a prescribed complex tangent.
//!
//! With `P = [e, J(x) e, f, J(x) f]` the structure `Jt(y) = P^{-1} J(x + P y) P`
//! equals `J0` at `y = 0`. Writing `K = Jt - J0`, a map `y(zeta)` solves
//! `d_s y + Jt(y) d_t y = 0` iff `dbar y = -(1/2) K(y) d_t y`, which is
//! iterated as `y = zeta e1 + T[-(1/2) K(y) d_t y] + (holomorphic correction)`
//! with the correction fixing `y(0) = 0` and the complex tangent at 0.

use num_complex::Complex64 as C;

use super::{axpy, complex2, norm4, real4, sub4, JDiskError, V4};
use crate::cr_solver::{bin_of_mode, cauchy_transform, PlanarField, PolarGrid};
use crate::forms::AlmostComplexStructure;
use crate::linalg::{self, Mat4, J0};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskOptions {
    pub n_r: usize,
    pub n_theta: usize,
    /// Iteration stops once the residual is below this.
    pub tol: f64,
    /// Largest residual accepted after `max_iter` iterations.
    pub accept: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for DiskOptions {
    fn default() -> Self {
        DiskOptions { n_r: 64, n_theta: 128, tol: 1e-8, accept: 1e-6, max_iter: 50, max_halvings: 8 }
    }
}

impl DiskOptions {
    pub fn coarse() -> Self {
        DiskOptions { n_r: 32, n_theta: 64, ..Self::default() }
    }
}

/// An embedded J-holomorphic disk `u: B_rho -> R^4`.
#[derive(Debug, Clone)]
pub struct Disk {
    /// Complex components `x1 + i x2` and `x3 + i x4` of `u`.
    pub w: [PlanarField; 2],
    pub center: V4,
    pub kappa: [C; 2],
    pub rho: f64,
    /// `sup |d_s u + J(u) d_t u| / sup |Du|`.
    pub residual: f64,
    pub iterations: usize,
    pub halvings: usize,
    /// Injectivity ratio `min |u(p) - u(q)| / |p - q|` over sampled pairs,
    /// divided by `sup |Du|`.
    pub separation: f64,
    /// Columns `e, J(x) e, f, J(x) f` of the conjugating frame.
    pub frame: Mat4,
}

pub(crate) fn frame_at(jx: &Mat4, kappa: [C; 2]) -> Result<Mat4, JDiskError> {
    frame_with(jx, kappa, None)
}

/// Frame `[e, J e, f, J f]` with `e` along `kappa`; `f` is `hint` (or the
/// best standard basis vector) orthogonalized against `e, J e`.
pub(crate) fn frame_with(jx: &Mat4, kappa: [C; 2], hint: Option<V4>) -> Result<Mat4, JDiskError> {
    let e = real4(kappa);
    let n = norm4(&e);
    if !(n > 0.0) {
        return Err(JDiskError::DegenerateDirection);
    }
    let e = e.map(|v| v / n);
    let je = linalg::mul_vec(jx, &e);
    let candidates: Vec<V4> = match hint {
        Some(f) => vec![f],
        None => (0..4).map(|k| std::array::from_fn(|i| if i == k { 1.0 } else { 0.0 })).collect(),
    };
    let mut best: Option<(f64, Mat4)> = None;
    for mut f in candidates {
        for b in [e, je] {
            let c = super::dot4(&f, &b) / super::dot4(&b, &b);
            f = axpy(-c, &b, &f);
        }
        let nf = norm4(&f);
        if nf < 1e-8 {
            continue;
        }
        let f = f.map(|v| v / nf);
        let jf = linalg::mul_vec(jx, &f);
        let p: Mat4 = std::array::from_fn(|r| [e[r], je[r], f[r], jf[r]]);
        let d = linalg::det(&p).abs();
        if best.as_ref().is_none_or(|b| d > b.0) {
            best = Some((d, p));
        }
    }
    match best {
        Some((d, p)) if d > 1e-8 => Ok(p),
        _ => Err(JDiskError::DegenerateDirection),
    }
}

/// `(d_s, d_t)` of a pair of complex fields at every grid point.
pub(crate) fn st_derivatives(w: &[PlanarField; 2]) -> (Vec<V4>, Vec<V4>) {
    let g = *w[0].grid();
    let dr = [w[0].d_r(), w[1].d_r()];
    let dt = [w[0].d_theta(), w[1].d_theta()];
    let mut ds = Vec::with_capacity(g.len());
    let mut dtt = Vec::with_capacity(g.len());
    for j in 0..g.n_r {
        let r = g.r(j);
        for l in 0..g.n_theta {
            let (s, c) = g.theta(l).sin_cos();
            let pair = |k: usize| (dr[k].at(j, l), dt[k].at(j, l) / r);
            let (a0, b0) = pair(0);
            let (a1, b1) = pair(1);
            ds.push(real4([c * a0 - s * b0, c * a1 - s * b1]));
            dtt.push(real4([s * a0 + c * b0, s * a1 + c * b1]));
        }
    }
    (ds, dtt)
}

/// Residual `sup |u_s + J u_t| / sup |Du|` of a pair of fields.
pub(crate) fn cr_residual_of(j: &AlmostComplexStructure, w: &[PlanarField; 2]) -> f64 {
    let (ds, dt) = st_derivatives(w);
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for i in 0..ds.len() {
        let x = real4([w[0].values()[i], w[1].values()[i]]);
        let jx = j.at(&x);
        let r = axpy(1.0, &linalg::mul_vec(&jx, &dt[i]), &ds[i]);
        num = num.max(norm4(&r));
        den = den.max(norm4(&ds[i])).max(norm4(&dt[i]));
    }
    num / den.max(f64::MIN_POSITIVE)
}

impl Disk {
    pub fn grid(&self) -> &PolarGrid {
        self.w[0].grid()
    }

    pub fn eval(&self, zeta: C) -> V4 {
        real4([self.w[0].eval(zeta), self.w[1].eval(zeta)])
    }

    pub fn point(&self, i: usize) -> V4 {
        real4([self.w[0].values()[i], self.w[1].values()[i]])
    }

    pub fn points(&self) -> Vec<V4> {
        (0..self.grid().len()).map(|i| self.point(i)).collect()
    }

    /// `(d_s u, d_t u)` at every grid point.
    pub fn derivatives(&self) -> (Vec<V4>, Vec<V4>) {
        st_derivatives(&self.w)
    }

    /// The flat disk `x + Re(zeta) e + Im(zeta) J(x) e`.
    pub fn flat(&self, zeta: C) -> V4 {
        let p = &self.frame;
        std::array::from_fn(|r| self.center[r] + zeta.re * p[r][0] + zeta.im * p[r][1])
    }

    /// `sup |u(zeta) - flat(zeta)| / (rho |zeta|)` over the grid.
    pub fn flat_deviation(&self) -> f64 {
        let g = *self.grid();
        let mut worst: f64 = 0.0;
        for j in 0..g.n_r {
            for l in 0..g.n_theta {
                let z = g.point(j, l);
                let d = norm4(&sub4(&self.point(g.index(j, l)), &self.flat(z)));
                worst = worst.max(d / (self.rho * z.norm()));
            }
        }
        worst
    }

    /// Tangent plane at the centre as `(d_s u(0), d_t u(0))`.
    pub fn tangent_at_center(&self) -> (V4, V4) {
        let h = 1e-3 * self.rho;
        let d = |dir: C| {
            let a = self.eval(dir * h);
            let b = self.eval(-dir * h);
            std::array::from_fn(|i| (a[i] - b[i]) / (2.0 * h))
        };
        (d(C::new(1.0, 0.0)), d(C::new(0.0, 1.0)))
    }
}

/// Sampled injectivity ratio and immersion check.
fn separation(w: &[PlanarField; 2]) -> f64 {
    let g = *w[0].grid();
    let (ds, dt) = st_derivatives(w);
    let mut sup_du: f64 = 0.0;
    let mut min_imm = f64::INFINITY;
    for i in 0..ds.len() {
        sup_du = sup_du.max(norm4(&ds[i])).max(norm4(&dt[i]));
        // Smallest singular value of [u_s, u_t].
        let (a, b, c) = (super::dot4(&ds[i], &ds[i]), super::dot4(&ds[i], &dt[i]), super::dot4(&dt[i], &dt[i]));
        let disc = ((a - c).powi(2) + 4.0 * b * b).sqrt();
        min_imm = min_imm.min((0.5 * (a + c - disc)).max(0.0).sqrt());
    }
    let ring_step = (g.n_r / 8).max(1);
    let ang_step = (g.n_theta / 16).max(1);
    let mut samples: Vec<(C, V4)> = vec![(C::new(0.0, 0.0), real4([w[0].eval(C::new(0.0, 0.0)), w[1].eval(C::new(0.0, 0.0))]))];
    for j in (ring_step - 1..g.n_r).step_by(ring_step) {
        for l in (0..g.n_theta).step_by(ang_step) {
            let i = g.index(j, l);
            samples.push((g.point(j, l), real4([w[0].values()[i], w[1].values()[i]])));
        }
    }
    let mut ratio = f64::INFINITY;
    for a in 0..samples.len() {
        for b in a + 1..samples.len() {
            let dz = (samples[a].0 - samples[b].0).norm();
            ratio = ratio.min(norm4(&sub4(&samples[a].1, &samples[b].1)) / dz);
        }
    }
    ratio.min(min_imm) / sup_du.max(f64::MIN_POSITIVE)
}

enum Attempt {
    Done { w: [PlanarField; 2], residual: f64, iterations: usize },
    Failed { residual: f64 },
}

fn solve_fixed(j: &AlmostComplexStructure, x: &V4, p: &Mat4, pinv: &Mat4, grid: PolarGrid, opts: &DiskOptions) -> Attempt {
    let n = grid.len();
    let mut y = [PlanarField::from_fn(grid, |z| z), PlanarField::zeros(grid)];
    let mut residual = f64::INFINITY;
    for it in 0..=opts.max_iter {
        let (ds, dt) = st_derivatives(&y);
        let mut g0 = Vec::with_capacity(n);
        let mut g1 = Vec::with_capacity(n);
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        let mut outside = false;
        for i in 0..n {
            let yi = real4([y[0].values()[i], y[1].values()[i]]);
            let xi: V4 = std::array::from_fn(|r| x[r] + (0..4).map(|c| p[r][c] * yi[c]).sum::<f64>());
            if !j.domain().contains(&xi) {
                outside = true;
            }
            let jt = linalg::mul(pinv, &linalg::mul(&j.at(&xi), p));
            let k = linalg::sub(&jt, &J0);
            let kdt = linalg::mul_vec(&k, &dt[i]);
            let r = axpy(1.0, &linalg::mul_vec(&jt, &dt[i]), &ds[i]);
            num = num.max(norm4(&linalg::mul_vec(p, &r)));
            den = den.max(norm4(&linalg::mul_vec(p, &ds[i]))).max(norm4(&linalg::mul_vec(p, &dt[i])));
            let gc = complex2(&kdt.map(|v| -0.5 * v));
            g0.push(gc[0]);
            g1.push(gc[1]);
        }
        if outside {
            return Attempt::Failed { residual: f64::INFINITY };
        }
        residual = num / den.max(f64::MIN_POSITIVE);
        if !residual.is_finite() {
            return Attempt::Failed { residual };
        }
        if residual <= opts.tol {
            return Attempt::Done { w: y, residual, iterations: it };
        }
        if it == opts.max_iter {
            break;
        }
        let g = [PlanarField::new(grid, g0), PlanarField::new(grid, g1)];
        let t = [cauchy_transform(&g[0]), cauchy_transform(&g[1])];
        let r0 = grid.r(0);
        let b1 = bin_of_mode(1, grid.n_theta);
        let b2 = bin_of_mode(2, grid.n_theta);
        let origin = C::new(0.0, 0.0);
        let v0 = [t[0].eval(origin), t[1].eval(origin)];
        // d/dzeta of T g at 0 for the second component: only input mode 2
        // contributes to output mode 1.
        let a1 = (t[1].modes()[b1] - g[1].modes()[b2]) / r0;
        let new = [
            t[0].map_with_point(|z, v| z + v - v0[0]),
            t[1].map_with_point(|z, v| v - v0[1] - a1 * z),
        ];
        let update = (0..2).map(|c| new[c].zip_map(&y[c], |a, b| a - b).sup_norm()).fold(0.0, f64::max);
        if !(update < grid.rho) {
            return Attempt::Failed { residual };
        }
        y = new;
        if update <= 1e-15 * grid.rho {
            // Stalled at the discretization floor; the final residual decides.
            let w = finalize(&y, x, p);
            let residual = cr_residual_of(j, &w);
            return if residual <= opts.accept {
                Attempt::Done { w: y, residual, iterations: it + 1 }
            } else {
                Attempt::Failed { residual }
            };
        }
    }
    if residual <= opts.accept {
        Attempt::Done { w: y, residual, iterations: opts.max_iter }
    } else {
        Attempt::Failed { residual }
    }
}

fn finalize(y: &[PlanarField; 2], x: &V4, p: &Mat4) -> [PlanarField; 2] {
    let g = *y[0].grid();
    let mut w0 = Vec::with_capacity(g.len());
    let mut w1 = Vec::with_capacity(g.len());
    for i in 0..g.len() {
        let yi = real4([y[0].values()[i], y[1].values()[i]]);
        let xi: V4 = std::array::from_fn(|r| x[r] + (0..4).map(|c| p[r][c] * yi[c]).sum::<f64>());
        let c = complex2(&xi);
        w0.push(c[0]);
        w1.push(c[1]);
    }
    [PlanarField::new(g, w0), PlanarField::new(g, w1)]
}

/// Solve for the J-holomorphic disk through `x` tangent to the complex line
/// `kappa`, halving `rho` on failure.
pub fn solve_disk(j: &AlmostComplexStructure, x: &V4, kappa: [C; 2], rho: f64, opts: &DiskOptions) -> Result<Disk, JDiskError> {
    let jx = j.at(x);
    let p = frame_at(&jx, kappa)?;
    let pinv = linalg::inverse(&p).ok_or(JDiskError::DegenerateDirection)?;
    let mut rho_k = rho;
    let mut last = f64::INFINITY;
    for halvings in 0..=opts.max_halvings {
        let grid = PolarGrid::new(rho_k, opts.n_r, opts.n_theta);
        match solve_fixed(j, x, &p, &pinv, grid, opts) {
            Attempt::Done { w: y, residual, iterations } => {
                let w = finalize(&y, x, &p);
                let separation = separation(&w);
                if !(separation > 1e-2) {
                    return Err(JDiskError::NotEmbedded { separation });
                }
                return Ok(Disk { w, center: *x, kappa, rho: rho_k, residual, iterations, halvings, separation, frame: p });
            }
            Attempt::Failed { residual } => last = residual,
        }
        rho_k /= 2.0;
    }
    Err(JDiskError::NonConvergence { rho: rho_k * 2.0, residual: last })
}
