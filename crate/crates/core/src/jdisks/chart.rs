//! Coordinates `(xi, zeta)` around a J-holomorphic disk in which the fibres
//! `zeta = const` are J-holomorphic disks and, along `xi = 0`, `J` is the
//! standard block-diagonal structure.
//!
//! The chart is `Psi(xi, zeta) = Q(tau(zeta) + G1(zeta) xi, W(zeta))` for a
//! fibre family `Q`, where `Q(tau, W) = u(zeta)` and `G1 = [c, a_Q c]`
//! conjugates the restriction `a_Q` of `J` to the fibre to the rotation block.

use num_complex::Complex64 as C;

use super::{complex2, dot4, norm4, real4, sub4, Disk, FibreFamily, JDiskError, V4};
use crate::cr_solver::{PlanarField, PolarGrid};
use crate::forms::AlmostComplexStructure;
use crate::linalg::{self, Mat4};

type Mat2 = [[f64; 2]; 2];

const ROT90: Mat2 = [[0.0, -1.0], [1.0, 0.0]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartOptions {
    pub n_r: usize,
    pub n_theta: usize,
    /// Chart radius as a fraction of the disk radius.
    pub radius_fraction: f64,
    pub block_tol: f64,
    pub min_angle_degrees: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for ChartOptions {
    fn default() -> Self {
        ChartOptions {
            n_r: 24,
            n_theta: 48,
            radius_fraction: 0.5,
            block_tol: 1e-6,
            min_angle_degrees: 10.0,
            newton_tol: 1e-12,
            newton_max_iter: 60,
        }
    }
}

/// Largest entrywise deviations of the blocks of `DPsi^{-1} J DPsi` along
/// the disk from their normal forms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockDeviation {
    /// Fibre block from the rotation block.
    pub a: f64,
    /// Upper-right block from zero.
    pub b: f64,
    /// Lower-left block from zero.
    pub c: f64,
    /// Disk block from the rotation block.
    pub a_prime: f64,
}

impl BlockDeviation {
    pub fn max(&self) -> f64 {
        self.a.max(self.b).max(self.c).max(self.a_prime)
    }

    fn absorb(&mut self, jt: &Mat4) {
        let block = |r0: usize, c0: usize, target: &Mat2| {
            let mut d: f64 = 0.0;
            for r in 0..2 {
                for c in 0..2 {
                    d = d.max((jt[r0 + r][c0 + c] - target[r][c]).abs());
                }
            }
            d
        };
        let zero = [[0.0; 2]; 2];
        self.a = self.a.max(block(0, 0, &ROT90));
        self.b = self.b.max(block(0, 2, &zero));
        self.c = self.c.max(block(2, 0, &zero));
        self.a_prime = self.a_prime.max(block(2, 2, &ROT90));
    }
}

/// A disk sampled on a polar grid with a transverse vector field `V` and
/// `J V`, the data a trivialization needs.
#[derive(Debug, Clone)]
pub struct DiskFrame {
    pub disk: Disk,
    pub grid: PolarGrid,
    pub points: Vec<V4>,
    pub us: Vec<V4>,
    pub ut: Vec<V4>,
    pub v: Vec<V4>,
    pub jv: Vec<V4>,
}

fn derivative_fields(disk: &Disk) -> [PlanarField; 4] {
    let (ds, dt) = disk.derivatives();
    let g = *disk.grid();
    let comp = |v: &[V4], k: usize| PlanarField::new(g, v.iter().map(|p| complex2(p)[k]).collect());
    [comp(&ds, 0), comp(&ds, 1), comp(&dt, 0), comp(&dt, 1)]
}

impl DiskFrame {
    /// Frame on `grid` (inside the disk) with `V` given per point.
    fn sample(j: &AlmostComplexStructure, disk: &Disk, grid: PolarGrid, v: impl Fn(usize, C) -> V4) -> Self {
        let d = derivative_fields(disk);
        let mut frame = DiskFrame { disk: disk.clone(), grid, points: vec![], us: vec![], ut: vec![], v: vec![], jv: vec![] };
        for jr in 0..grid.n_r {
            for l in 0..grid.n_theta {
                let z = grid.point(jr, l);
                let p = disk.eval(z);
                let vv = v(grid.index(jr, l), z);
                frame.us.push(real4([d[0].eval(z), d[1].eval(z)]));
                frame.ut.push(real4([d[2].eval(z), d[3].eval(z)]));
                frame.jv.push(linalg::mul_vec(&j.at(&p), &vv));
                frame.v.push(vv);
                frame.points.push(p);
            }
        }
        frame
    }

    /// Frame on the disk's own grid with a constant transverse vector.
    pub fn constant(j: &AlmostComplexStructure, disk: &Disk, v: V4) -> Self {
        Self::sample(j, disk, *disk.grid(), |_, _| v)
    }

    /// As [`constant`](Self::constant) on a coarser grid of radius `rho`.
    pub fn constant_on(j: &AlmostComplexStructure, disk: &Disk, grid: PolarGrid, v: V4) -> Self {
        Self::sample(j, disk, grid, |_, _| v)
    }
}

#[derive(Debug, Clone)]
pub struct NormalizedChart {
    pub family: FibreFamily,
    pub frame: DiskFrame,
    pub tau: PlanarField,
    pub w: PlanarField,
    /// Second column of `G1` as a complex number; the first is `1`.
    pub g1: PlanarField,
    pub blocks: BlockDeviation,
    pub transversality_degrees: f64,
    pub newton_iterations: usize,
}

/// Smallest principal angle between `span(a0, a1)` and `span(b0, b1)`.
pub(crate) fn principal_angle_degrees(a: [V4; 2], b: [V4; 2]) -> f64 {
    let orth = |p: [V4; 2]| -> [V4; 2] {
        let e0 = p[0].map(|v| v / norm4(&p[0]));
        let c = dot4(&p[1], &e0);
        let f = sub4(&p[1], &e0.map(|v| v * c));
        [e0, f.map(|v| v / norm4(&f))]
    };
    let (qa, qb) = (orth(a), orth(b));
    let m: Mat2 = std::array::from_fn(|r| std::array::from_fn(|c| dot4(&qa[r], &qb[c])));
    // Largest singular value of the 2x2 matrix m.
    let s = m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2);
    let d = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
    let smax = (0.5 * (s + (s * s - 4.0 * d * d).max(0.0).sqrt())).sqrt().min(1.0);
    smax.acos().to_degrees()
}

fn lstsq_block(m: [V4; 2], target: [V4; 2]) -> Mat2 {
    let g: Mat2 = std::array::from_fn(|r| std::array::from_fn(|c| dot4(&m[r], &m[c])));
    let rhs: Mat2 = std::array::from_fn(|r| std::array::from_fn(|c| dot4(&m[r], &target[c])));
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let inv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
    std::array::from_fn(|r| std::array::from_fn(|c| inv[r][0] * rhs[0][c] + inv[r][1] * rhs[1][c]))
}

impl NormalizedChart {
    pub fn radius(&self) -> f64 {
        self.frame.grid.rho
    }

    pub fn psi(&self, xi: C, zeta: C) -> V4 {
        let g = self.g1.eval(zeta);
        let shift = xi.re + g * xi.im;
        self.family.q(self.tau.eval(zeta) + shift, self.w.eval(zeta))
    }

    /// `(xi, zeta)` with `psi(xi, zeta) = x`, by damped Newton from `(0, 0)`.
    pub fn inverse(&self, x: &V4) -> Result<(C, C), JDiskError> {
        let mut y = [0.0; 4];
        let at = |y: &[f64; 4]| self.psi(C::new(y[0], y[1]), C::new(y[2], y[3]));
        let h = 1e-6 * self.radius();
        for _ in 0..40 {
            let r = sub4(&at(&y), x);
            if norm4(&r) <= 1e-12 {
                return Ok((C::new(y[0], y[1]), C::new(y[2], y[3])));
            }
            let cols: [V4; 4] = std::array::from_fn(|k| {
                let mut a = y;
                let mut b = y;
                a[k] += h;
                b[k] -= h;
                let (pa, pb) = (at(&a), at(&b));
                std::array::from_fn(|i| (pa[i] - pb[i]) / (2.0 * h))
            });
            let jac: Mat4 = std::array::from_fn(|i| std::array::from_fn(|k| cols[k][i]));
            let inv = linalg::inverse(&jac).ok_or(JDiskError::Newton { zeta: C::new(y[2], y[3]) })?;
            let step = linalg::mul_vec(&inv, &r);
            y = std::array::from_fn(|i| y[i] - step[i]);
        }
        Err(JDiskError::Newton { zeta: C::new(y[2], y[3]) })
    }
}

/// Build the normalized chart around `disk` from a family of fibres
/// transverse to it.
pub fn normalize_along_disk(
    j: &AlmostComplexStructure,
    disk: &Disk,
    family: &FibreFamily,
    opts: &ChartOptions,
) -> Result<NormalizedChart, JDiskError> {
    let origin = C::new(0.0, 0.0);
    let pinv = linalg::inverse(&family.frame).ok_or(JDiskError::DegenerateDirection)?;
    let solve = |target: &V4, zeta: C| -> Result<([f64; 4], usize), JDiskError> {
        let d = sub4(target, &family.center);
        let mut y = linalg::mul_vec(&pinv, &d);
        for it in 0..opts.newton_max_iter {
            let q = family.q(C::new(y[0], y[1]), C::new(y[2], y[3]));
            let r = sub4(&q, target);
            if norm4(&r) <= opts.newton_tol {
                let inside = C::new(y[0], y[1]).norm() < family.rho && y[2].abs().max(y[3].abs()) <= family.w_radius;
                return if inside { Ok((y, it)) } else { Err(JDiskError::Newton { zeta }) };
            }
            let step = linalg::mul_vec(&pinv, &r);
            y = std::array::from_fn(|i| y[i] - step[i]);
            if !y.iter().all(|v| v.is_finite()) {
                break;
            }
        }
        Err(JDiskError::Newton { zeta })
    };

    let (ts, tt) = disk.tangent_at_center();
    let (y0, _) = solve(&disk.center, origin)?;
    let (fs, ft) = family.q_xi(C::new(y0[0], y0[1]), C::new(y0[2], y0[3]));
    let degrees = principal_angle_degrees([ts, tt], [fs, ft]);
    if !(degrees > opts.min_angle_degrees) {
        return Err(JDiskError::Transversality { degrees });
    }

    let grid = PolarGrid::new(opts.radius_fraction * disk.rho, opts.n_r, opts.n_theta);
    let n = grid.len();
    let mut tau = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut g1 = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    let mut newton_iterations = 0;
    for jr in 0..grid.n_r {
        for l in 0..grid.n_theta {
            let zeta = grid.point(jr, l);
            let (y, it) = solve(&disk.eval(zeta), zeta)?;
            newton_iterations = newton_iterations.max(it);
            let (t, ww) = (C::new(y[0], y[1]), C::new(y[2], y[3]));
            let (qs, qt) = family.q_xi(t, ww);
            let p = disk.eval(zeta);
            let jp = j.at(&p);
            let a_q = lstsq_block([qs, qt], [linalg::mul_vec(&jp, &qs), linalg::mul_vec(&jp, &qt)]);
            tau.push(t);
            w.push(ww);
            g1.push(C::new(a_q[0][0], a_q[1][0]));
            vs.push(qs);
        }
    }
    let frame = DiskFrame::sample(j, disk, grid, |i, _| vs[i]);

    let mut blocks = BlockDeviation::default();
    for i in 0..n {
        let jp = j.at(&frame.points[i]);
        let col1: V4 = std::array::from_fn(|k| {
            let (qs, qt) = family.q_xi(tau[i], w[i]);
            g1[i].re * qs[k] + g1[i].im * qt[k]
        });
        let cols = [frame.v[i], col1, frame.us[i], frame.ut[i]];
        let dpsi: Mat4 = std::array::from_fn(|r| std::array::from_fn(|c| cols[c][r]));
        let inv = linalg::inverse(&dpsi).ok_or(JDiskError::Normalization { what: "DPsi", deviation: f64::INFINITY })?;
        blocks.absorb(&linalg::mul(&inv, &linalg::mul(&jp, &dpsi)));
    }
    for (what, dev) in [("a", blocks.a), ("b", blocks.b), ("c", blocks.c), ("a'", blocks.a_prime)] {
        if !(dev <= opts.block_tol) {
            return Err(JDiskError::Normalization { what, deviation: dev });
        }
    }
    Ok(NormalizedChart {
        family: family.clone(),
        frame,
        tau: PlanarField::new(grid, tau),
        w: PlanarField::new(grid, w),
        g1: PlanarField::new(grid, g1),
        blocks,
        transversality_degrees: degrees,
        newton_iterations,
    })
}
