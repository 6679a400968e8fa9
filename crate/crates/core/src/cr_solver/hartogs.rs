//! Laurent coefficients on annuli and extension of functions of `(xi, w)`
//! across the puncture `(0, 0)`.

use num_complex::Complex64 as C;
use std::f64::consts::PI;
use std::ops::RangeInclusive;

use super::CrError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaurentOptions {
    pub r_in: f64,
    pub r_out: f64,
    /// Trapezoid nodes on the middle circle.
    pub n_points: usize,
    /// Relative `dbar` tolerance of the holomorphy check.
    pub holo_tol: f64,
}

impl Default for LaurentOptions {
    fn default() -> Self {
        LaurentOptions { r_in: 0.25, r_out: 0.75, n_points: 256, holo_tol: 1e-6 }
    }
}

/// Fourth-order central-difference `dbar h` at `xi`.
fn fd_dbar(h: &dyn Fn(C) -> C, xi: C, eps: f64) -> C {
    let d = |dir: C| {
        let f = |t: f64| h(xi + dir * t);
        (8.0 * (f(eps) - f(-eps)) - (f(2.0 * eps) - f(-2.0 * eps))) / (12.0 * eps)
    };
    0.5 * (d(C::new(1.0, 0.0)) + C::new(0.0, 1.0) * d(C::new(0.0, 1.0)))
}

/// Sampled `sup |dbar h| / max(1, sup |h|)` over three circles of the
/// annulus, with the worst point.
pub fn holomorphy_residual(h: &dyn Fn(C) -> C, r_in: f64, r_out: f64) -> (f64, C) {
    let eps = 1e-3 * r_in;
    let mut worst = (0.0, C::new(0.0, 0.0));
    let mut sup: f64 = 1.0;
    for q in 1..=3 {
        let r = r_in + (r_out - r_in) * q as f64 / 4.0;
        for l in 0..32 {
            let xi = C::from_polar(r, 2.0 * PI * (l as f64 + 0.25 * q as f64) / 32.0);
            sup = sup.max(h(xi).norm());
            let d = fd_dbar(h, xi, eps).norm();
            if d > worst.0 {
                worst = (d, xi);
            }
        }
    }
    (worst.0 / sup, worst.1)
}

fn trapezoid(h: &dyn Fn(C) -> C, radius: f64, n: usize, j_range: &RangeInclusive<i32>) -> Vec<C> {
    let samples: Vec<(C, C)> = (0..n)
        .map(|l| {
            let xi = C::from_polar(radius, 2.0 * PI * l as f64 / n as f64);
            (xi, h(xi))
        })
        .collect();
    // a_j = (1 / 2 pi i) oint h xi^{-j-1} dxi = mean over the circle of h xi^{-j}.
    j_range
        .clone()
        .map(|j| samples.iter().map(|&(xi, v)| v * xi.powi(-j)).sum::<C>() / n as f64)
        .collect()
}

/// `a_j = (1 / 2 pi i) oint h(xi) xi^{-j-1} dxi` on `|xi| = (r_in + r_out) / 2`
/// for `j` in `j_range`, after checking holomorphy on the annulus.
pub fn laurent_coefficients(h: &dyn Fn(C) -> C, j_range: RangeInclusive<i32>, opts: &LaurentOptions) -> Result<Vec<C>, CrError> {
    let (residual, xi) = holomorphy_residual(h, opts.r_in, opts.r_out);
    if residual > opts.holo_tol {
        return Err(CrError::NotHolomorphic { residual, xi, w: C::new(0.0, 0.0) });
    }
    Ok(trapezoid(h, 0.5 * (opts.r_in + opts.r_out), opts.n_points, &j_range))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HartogsOptions {
    pub laurent: LaurentOptions,
    /// The `w` samples fill `|w| <= w_radius` on an `n_w x n_w` lattice.
    pub w_radius: f64,
    pub n_w: usize,
    pub j_min: i32,
    pub j_max: i32,
    pub negative_tol: f64,
    pub dbar_w_tol: f64,
    pub fd_step: f64,
}

impl Default for HartogsOptions {
    fn default() -> Self {
        HartogsOptions {
            laurent: LaurentOptions::default(),
            w_radius: 0.5,
            n_w: 9,
            j_min: -3,
            j_max: 3,
            negative_tol: 1e-8,
            dbar_w_tol: 1e-6,
            fd_step: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HartogsReport {
    /// `a_0(0)`, the value at the puncture.
    pub value: C,
    /// Coefficients `a_{j_min..=j_max}(w)` per sampled `w`.
    pub coefficients: Vec<(C, Vec<C>)>,
    pub max_negative: f64,
    pub max_dbar_w_a0: f64,
    pub max_holomorphy_residual: f64,
}

/// Extends `gamma`, holomorphic in `xi` for each fixed `w` off the puncture,
/// to `(0, 0)` after checking that negative Laurent coefficients vanish and
/// `a_0` is holomorphic in `w`.
pub fn hartogs_extend(gamma: &dyn Fn(C, C) -> C, opts: &HartogsOptions) -> Result<HartogsReport, CrError> {
    let lo = &opts.laurent;
    let j_range = opts.j_min..=opts.j_max;
    let zero_idx = (0 - opts.j_min) as usize;
    let half = (opts.n_w / 2) as i64;
    let step = opts.w_radius / half.max(1) as f64;
    let mut ws = Vec::new();
    for a in -half..=half {
        for b in -half..=half {
            let w = C::new(a as f64 * step, b as f64 * step);
            if w.norm() <= opts.w_radius + 1e-12 {
                ws.push(w);
            }
        }
    }
    let a0 = |w: C| trapezoid(&|xi| gamma(xi, w), 0.5 * (lo.r_in + lo.r_out), lo.n_points, &(0..=0))[0];
    let mut report = HartogsReport {
        value: C::new(0.0, 0.0),
        coefficients: Vec::new(),
        max_negative: 0.0,
        max_dbar_w_a0: 0.0,
        max_holomorphy_residual: 0.0,
    };
    for &w in &ws {
        let slice = |xi: C| gamma(xi, w);
        let (residual, xi) = holomorphy_residual(&slice, lo.r_in, lo.r_out);
        report.max_holomorphy_residual = report.max_holomorphy_residual.max(residual);
        if residual > lo.holo_tol {
            return Err(CrError::NotHolomorphic { residual, xi, w });
        }
        let coeffs = trapezoid(&slice, 0.5 * (lo.r_in + lo.r_out), lo.n_points, &j_range);
        for (j, c) in j_range.clone().zip(&coeffs) {
            if j < 0 {
                report.max_negative = report.max_negative.max(c.norm());
                if c.norm() > opts.negative_tol {
                    return Err(CrError::NonRemovable { j, magnitude: c.norm(), w });
                }
            }
        }
        let h = opts.fd_step;
        let dx = (a0(w + h) - a0(w - h)) / (2.0 * h);
        let dy = (a0(w + C::new(0.0, h)) - a0(w - C::new(0.0, h))) / (2.0 * h);
        let dbar = (0.5 * (dx + C::new(0.0, 1.0) * dy)).norm();
        report.max_dbar_w_a0 = report.max_dbar_w_a0.max(dbar);
        if dbar > opts.dbar_w_tol {
            return Err(CrError::NotHolomorphicInW { residual: dbar, w });
        }
        if w == C::new(0.0, 0.0) {
            report.value = coeffs[zero_idx];
        }
        report.coefficients.push((w, coeffs));
    }
    Ok(report)
}
