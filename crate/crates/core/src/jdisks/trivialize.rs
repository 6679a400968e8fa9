//! Holomorphic trivialization of a closed anti-invariant form along a
//! J-holomorphic disk.
//!
//! With the frame `phi` = anti-invariant part of a constant seed form and
//! `psi = J phi`, write `alpha = f phi + g psi`. Closedness evaluated on
//! `(V, u_s, u_t)` and `(J V, u_s, u_t)` gives two real equations for
//! `X = f_t + g_s` and `Y = g_t - f_s` along the disk, hence a CR system
//! `dbar F + C1 F + C2 conj(F) = 0` for `F = f o u + i g o u`.

use num_complex::Complex64 as C;

use super::{dot4, norm4, DiskFrame, JDiskError, NormalizedChart, V4};
use crate::cr_solver::{carleman_factor, cr_residual, Carleman, CRSystem, PlanarField};
use crate::degree::{signed_zeros, winding_degree, DegreeError, Disk2, FnMap};
use crate::forms::{
    anti_frame, closedness_residual, exterior_derivative_at, frame_coefficients, AlmostComplexStructure, Jet, Sampling, TwoForm, TRIPLES,
};
use crate::linalg::{self, Mat4};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrivializeOptions {
    pub closed_tol: f64,
    pub cr_tol: f64,
    pub reconstruction_tol: f64,
    /// `F` counts as identically zero below this sup norm.
    pub vanish_tol: f64,
    /// Constant 2-form whose anti-invariant part is the frame `phi`.
    pub seed: [f64; 6],
    /// Zeros are located on `|zeta| <= zero_radius_fraction * chart radius`.
    pub zero_radius_fraction: f64,
    pub closed_sampling: Sampling,
}

impl Default for TrivializeOptions {
    fn default() -> Self {
        TrivializeOptions {
            closed_tol: 1e-9,
            cr_tol: 1e-3,
            reconstruction_tol: 1e-8,
            vanish_tol: 1e-8,
            seed: [0.0, 1.0, 0.0, 0.0, -1.0, 0.0],
            zero_radius_fraction: 0.8,
            closed_sampling: Sampling { grid: 4, n_random: 64, seed: 0 },
        }
    }
}

/// A zero of a holomorphic function with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroCluster {
    pub location: C,
    pub multiplicity: i64,
}

#[derive(Debug, Clone)]
pub struct TrivializedSection {
    pub frame: DiskFrame,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// `f o u + i g o u` on the frame grid.
    pub big_f: PlanarField,
    pub system: CRSystem,
    /// Largest residual of the two real CR equations relative to their scale.
    pub theorem_residual: f64,
    /// `cr_residual(F, system)` with grid derivatives.
    pub grid_residual: f64,
    pub reconstruction: f64,
    pub min_gram: f64,
    pub vanishes_identically: bool,
    /// `F = Phi sigma` on `B_delta`; absent when `F` vanishes identically.
    pub carleman: Option<Carleman>,
    pub zeros: Vec<ZeroCluster>,
    pub zero_radius: f64,
    alpha: TwoForm,
    j: AlmostComplexStructure,
    seed: Mat4,
}

/// `(f, g, phi, psi)` at `x` as jets.
fn coefficients_at(alpha: &TwoForm, j: &AlmostComplexStructure, seed: &Mat4, x: &V4) -> (Jet, Jet, [Jet; 6], [Jet; 6]) {
    let (phi, psi) = anti_frame(&j.jet_at(x), seed);
    let (f, g) = frame_coefficients(&alpha.jet_at(x), &phi, &psi);
    (f, g, phi, psi)
}

fn form2(c: &[Jet; 6], a: &V4, b: &V4) -> f64 {
    let m = linalg::skew_from_coeffs(&c.map(|j| j.v));
    dot4(a, &linalg::mul_vec(&m, b))
}

fn form3(c: &[f64; 4], a: &V4, b: &V4, d: &V4) -> f64 {
    TRIPLES
        .iter()
        .zip(c)
        .map(|(&(i, j, k), w)| {
            let det = a[i] * (b[j] * d[k] - b[k] * d[j]) - a[j] * (b[i] * d[k] - b[k] * d[i]) + a[k] * (b[i] * d[j] - b[j] * d[i]);
            w * det
        })
        .sum()
}

fn grad(j: &Jet, v: &V4) -> f64 {
    dot4(&j.d, v)
}

impl TrivializedSection {
    /// `f + i g` at `u(zeta)` by direct evaluation.
    pub fn eval_f(&self, zeta: C) -> C {
        let x = self.frame.disk.eval(zeta);
        let (f, g, _, _) = coefficients_at(&self.alpha, &self.j, &self.seed, &x);
        C::new(f.v, g.v)
    }

    /// Coefficients `(Re Phi, Im Phi)` of the holomorphic frame
    /// `Re Phi phi + Im Phi psi` at `zeta`, inside `B_delta`.
    pub fn holomorphic_frame(&self, zeta: C) -> Option<(f64, f64)> {
        let c = self.carleman.as_ref()?;
        (zeta.norm() <= c.delta).then(|| {
            let p = c.phi.eval(zeta);
            (p.re, p.im)
        })
    }

    /// Relative `dbar` residual of the holomorphic factor.
    pub fn holomorphic_residual(&self) -> Option<f64> {
        self.carleman.as_ref().map(|c| c.sigma_residual)
    }
}

/// Zeros of `f` in `|zeta| <= radius` with multiplicities, certified by
/// winding numbers on small circles and on the boundary.
pub fn zeros_with_multiplicity(f: &dyn Fn(C) -> C, radius: f64) -> Result<Vec<ZeroCluster>, DegreeError> {
    let map = FnMap::new(|p: [f64; 2]| {
        let v = f(C::new(p[0], p[1]));
        [v.re, v.im]
    });
    let total = winding_degree(&map, &Disk2::new([0.0, 0.0], radius))?.degree;
    let candidates = signed_zeros(&map, &Disk2::new([0.0, 0.0], radius), 64)?;
    // A zero of order m is only resolved to about eps^(1/m), so Newton
    // candidates scatter around it; single-linkage clustering gathers them.
    let merge = 1e-2 * radius;
    let mut clusters: Vec<Vec<C>> = Vec::new();
    for z in candidates {
        let c = C::new(z.location[0], z.location[1]);
        let (near, mut far): (Vec<_>, Vec<_>) = clusters.into_iter().partition(|cl| cl.iter().any(|p| (p - c).norm() < merge));
        let mut joined: Vec<C> = near.into_iter().flatten().collect();
        joined.push(c);
        far.push(joined);
        clusters = far;
    }
    let mut centres: Vec<C> = clusters.iter().map(|cl| cl.iter().sum::<C>() / cl.len() as f64).collect();
    centres.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    let mut out = Vec::new();
    for (k, &c) in centres.iter().enumerate() {
        let mut rc = (0.05 * radius).min(0.9 * (radius - c.norm()));
        for (m, &o) in centres.iter().enumerate() {
            if m != k {
                rc = rc.min(0.5 * (o - c).norm());
            }
        }
        let m = winding_degree(&map, &Disk2::new([c.re, c.im], rc))?.degree;
        if m == 0 {
            continue;
        }
        // Mean of the zeros inside the circle from the argument principle.
        let n = 256;
        let h = 1e-4 * rc;
        let mut acc = C::new(0.0, 0.0);
        for l in 0..n {
            let e = C::from_polar(1.0, std::f64::consts::TAU * l as f64 / n as f64);
            let z = c + rc * e;
            let df = (f(z + h) - f(z - h)) / (2.0 * h);
            // dz = i rc e dtheta.
            acc += z * df / f(z) * C::new(0.0, rc) * e;
        }
        let location = acc * (std::f64::consts::TAU / n as f64) / (C::new(0.0, std::f64::consts::TAU) * m as f64);
        out.push(ZeroCluster { location, multiplicity: m });
    }
    let count: i64 = out.iter().map(|z| z.multiplicity).sum();
    if count != total {
        return Err(DegreeError::Inconsistent { winding: total, count });
    }
    out.sort_by(|a, b| (a.location.re, a.location.im).partial_cmp(&(b.location.re, b.location.im)).unwrap());
    Ok(out)
}

/// Trivialize `alpha` along the disk of `frame`.
pub fn trivialize_along(
    alpha: &TwoForm,
    j: &AlmostComplexStructure,
    frame: &DiskFrame,
    opts: &TrivializeOptions,
) -> Result<TrivializedSection, JDiskError> {
    let closed = closedness_residual(alpha, &opts.closed_sampling);
    if !(closed <= opts.closed_tol) {
        return Err(JDiskError::NotClosed { residual: closed });
    }
    let seed = linalg::skew_from_coeffs(&opts.seed);
    let grid = frame.grid;
    let n = grid.len();
    let mut f = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let mut c1 = Vec::with_capacity(n);
    let mut c2 = Vec::with_capacity(n);
    let mut eqs = Vec::with_capacity(n);
    let mut scale: f64 = 0.0;
    let mut reconstruction: f64 = 0.0;
    let mut min_gram = f64::INFINITY;
    let offset = 0.1 * grid.rho;
    for i in 0..n {
        let (p, us, ut, v, jv) = (&frame.points[i], &frame.us[i], &frame.ut[i], &frame.v[i], &frame.jv[i]);
        let (fj, gj, phi, psi) = coefficients_at(alpha, j, &seed, p);
        let (dphi, dpsi) = (exterior_derivative_at(&phi), exterior_derivative_at(&psi));
        let (a_s, a_t) = (form2(&phi, v, us), form2(&phi, v, ut));
        let (beta, gamma) = (form3(&dphi, v, us, ut), form3(&dpsi, v, us, ut));
        let (beta_p, gamma_p) = (form3(&dphi, jv, us, ut), form3(&dpsi, jv, us, ut));
        let (f_s, f_t, g_s, g_t) = (grad(&fj, us), grad(&fj, ut), grad(&gj, us), grad(&gj, ut));
        let (x, y) = (f_t + g_s, g_t - f_s);
        let eq1 = a_s * x + a_t * y + fj.v * beta + gj.v * gamma;
        let eq2 = a_t * x - a_s * y + fj.v * beta_p + gj.v * gamma_p;
        eqs.push((eq1.abs().max(eq2.abs()), grid.point(i / grid.n_theta, i % grid.n_theta)));
        scale = scale
            .max((a_s.abs() + a_t.abs()) * (f_s.abs() + f_t.abs() + g_s.abs() + g_t.abs()))
            .max((fj.v.abs() + gj.v.abs()) * (beta.abs() + gamma.abs() + beta_p.abs() + gamma_p.abs()));

        let a2 = a_s * a_s + a_t * a_t;
        if !(a2 > 1e-24 * (dot4(v, v) * dot4(us, us)).max(f64::MIN_POSITIVE)) {
            return Err(JDiskError::Frame { det: a2 });
        }
        let x_f = -(a_s * beta + a_t * beta_p) / a2;
        let x_g = -(a_s * gamma + a_t * gamma_p) / a2;
        let y_f = -(a_t * beta - a_s * beta_p) / a2;
        let y_g = -(a_t * gamma - a_s * gamma_p) / a2;
        let k = [[-0.5 * y_f, -0.5 * y_g], [0.5 * x_f, 0.5 * x_g]];
        let pc = C::new(0.5 * (k[0][0] + k[1][1]), 0.5 * (k[1][0] - k[0][1]));
        let qc = C::new(0.5 * (k[0][0] - k[1][1]), 0.5 * (k[1][0] + k[0][1]));
        c1.push(-pc);
        c2.push(-qc);
        f.push(fj.v);
        g.push(gj.v);

        let (vn, jvn) = (v.map(|c| c / norm4(v)), jv.map(|c| c / norm4(jv)));
        for dir in [vn, jvn] {
            for s in [-1.0, 1.0] {
                let q: V4 = std::array::from_fn(|k| p[k] + s * offset * dir[k]);
                let (fq, gq, phq, psq) = coefficients_at(alpha, j, &seed, &q);
                let a = alpha.at(&q);
                for kk in 0..6 {
                    reconstruction = reconstruction.max((a[kk] - fq.v * phq[kk].v - gq.v * psq[kk].v).abs());
                }
                let dot = |x: &[Jet; 6], y: &[Jet; 6]| (0..6).map(|m| x[m].v * y[m].v).sum::<f64>();
                min_gram = min_gram.min(dot(&phq, &phq) * dot(&psq, &psq) - dot(&phq, &psq).powi(2));
            }
        }
    }
    if !(min_gram > 0.0) {
        return Err(JDiskError::Frame { det: min_gram });
    }
    if !(reconstruction <= opts.reconstruction_tol) {
        return Err(JDiskError::Normalization { what: "reconstruction", deviation: reconstruction });
    }
    let (worst, at) = eqs.iter().fold((0.0, C::new(0.0, 0.0)), |acc, &(e, z)| if e > acc.0 { (e, z) } else { acc });
    let theorem_residual = if scale > 0.0 { worst / scale } else { 0.0 };
    if !(theorem_residual <= opts.cr_tol) {
        return Err(JDiskError::CrCheck { residual: theorem_residual, zeta: at });
    }

    let big_f = PlanarField::new(grid, f.iter().zip(&g).map(|(&a, &b)| C::new(a, b)).collect());
    let system = CRSystem::new(PlanarField::new(grid, c1), PlanarField::new(grid, c2));
    let vanishes_identically = big_f.sup_norm() <= opts.vanish_tol;
    let grid_residual = if vanishes_identically { 0.0 } else { cr_residual(&big_f, &system) };
    let mut section = TrivializedSection {
        frame: frame.clone(),
        f,
        g,
        big_f,
        system,
        theorem_residual,
        grid_residual,
        reconstruction,
        min_gram,
        vanishes_identically,
        carleman: None,
        zeros: Vec::new(),
        zero_radius: opts.zero_radius_fraction * grid.rho,
        alpha: alpha.clone(),
        j: j.clone(),
        seed,
    };
    if vanishes_identically {
        return Ok(section);
    }
    section.carleman = Some(carleman_factor(&section.big_f, &section.system)?);
    let mut radius = section.zero_radius;
    let mut last = None;
    for _ in 0..4 {
        match zeros_with_multiplicity(&|z| section.eval_f(z), radius) {
            Ok(z) => {
                section.zeros = z;
                section.zero_radius = radius;
                last = None;
                break;
            }
            Err(e) => {
                last = Some(e);
                radius *= 0.93;
            }
        }
    }
    if let Some(e) = last {
        return Err(JDiskError::Zeros(e));
    }
    Ok(section)
}

/// Trivialize `alpha` along the central disk of a normalized chart, with the
/// chart's fibre direction as the transverse field.
pub fn trivialize_alpha(
    alpha: &TwoForm,
    j: &AlmostComplexStructure,
    chart: &NormalizedChart,
    opts: &TrivializeOptions,
) -> Result<TrivializedSection, JDiskError> {
    trivialize_along(alpha, j, &chart.frame, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cr_solver::PolarGrid;
    use crate::fixtures::re_holo;
    use crate::forms::Domain;
    use crate::jdisks::{solve_disk, DiskOptions};

    fn flat_frame(center: V4) -> (AlmostComplexStructure, DiskFrame) {
        let j = AlmostComplexStructure::standard(Domain::cube(2.0));
        let disk = solve_disk(&j, &center, [C::new(1.0, 0.0), C::new(0.0, 0.0)], 0.5, &DiskOptions::coarse()).unwrap();
        let frame = DiskFrame::constant_on(&j, &disk, PolarGrid::new(0.4, 32, 64), [0.0, 0.0, 1.0, 0.0]);
        (j, frame)
    }

    #[test]
    fn constant_form_gives_constant_section() {
        let (j, frame) = flat_frame([0.1, 0.2, 0.3, -0.1]);
        let s = trivialize_along(&re_holo("1", Domain::cube(2.0)), &j, &frame, &TrivializeOptions::default()).unwrap();
        let f0 = s.big_f.values()[0];
        assert!(s.big_f.values().iter().all(|v| (v - f0).norm() < 1e-12));
        assert!(s.zeros.is_empty());
        assert!(s.theorem_residual < 1e-12);
    }

    #[test]
    fn linear_coefficient_has_simple_zero() {
        // Disk {w1 = 0.3} through w0 = 0.1 + 0.05i: F(zeta) = zeta + 0.1 + 0.05i.
        let (j, frame) = flat_frame([0.1, 0.05, 0.3, 0.0]);
        let s = trivialize_along(&re_holo("w0", Domain::cube(2.0)), &j, &frame, &TrivializeOptions::default()).unwrap();
        for (i, v) in s.big_f.values().iter().enumerate() {
            let z = frame.grid.point(i / frame.grid.n_theta, i % frame.grid.n_theta);
            assert!((v - (z + C::new(0.1, 0.05))).norm() < 1e-12);
        }
        assert_eq!(s.zeros.len(), 1);
        assert_eq!(s.zeros[0].multiplicity, 1);
        assert!((s.zeros[0].location - C::new(-0.1, -0.05)).norm() < 1e-9);
        assert!(s.holomorphic_residual().unwrap() < 1e-6);
    }

    #[test]
    fn double_zero_is_counted_twice() {
        let (j, frame) = flat_frame([0.0, 0.0, 0.2, 0.0]);
        let s = trivialize_along(&re_holo("w0^2", Domain::cube(2.0)), &j, &frame, &TrivializeOptions::default()).unwrap();
        assert_eq!(s.zeros.len(), 1);
        assert_eq!(s.zeros[0].multiplicity, 2);
        assert!(s.zeros[0].location.norm() < 1e-9);
    }

    #[test]
    fn high_order_zero_is_one_cluster() {
        for m in [4, 6] {
            let z = zeros_with_multiplicity(&|z: C| 0.49 * z.powi(m) * (z - 0.3), 0.4).unwrap();
            assert_eq!(z.len(), 2, "order {m}");
            assert_eq!(z[0].multiplicity, m as i64);
            assert!(z[0].location.norm() < 1e-6);
            assert_eq!(z[1].multiplicity, 1);
        }
    }

    #[test]
    fn zero_form_vanishes_identically() {
        let (j, frame) = flat_frame([0.0; 4]);
        let s = trivialize_along(&re_holo("w1", Domain::cube(2.0)), &j, &frame, &TrivializeOptions::default()).unwrap();
        assert!(s.vanishes_identically);
        assert!(s.carleman.is_none());
    }

    #[test]
    fn rotated_structure_through_chart() {
        use crate::expr::{parse_complex, FieldExpr, W_COORDS};
        use crate::fixtures::rotated_structure;
        use crate::jdisks::{fibre_family, normalize_along_disk, ChartOptions, FamilyOptions};
        let d = Domain::cube(1.0);
        let h = parse_complex("w0 + 0.2*w0*w1", &W_COORDS).unwrap();
        let j = rotated_structure(&h, &FieldExpr::parse("0.5 + 0.3*x3").unwrap(), d.clone());
        let alpha = TwoForm::re_holo(&h, d);
        let x = [0.0, 0.0, 0.1, 0.0];
        let e = |k: usize| {
            let mut v = [C::new(0.0, 0.0); 2];
            v[k] = C::new(1.0, 0.0);
            v
        };
        let disk = solve_disk(&j, &x, e(0), 0.1, &DiskOptions::coarse()).unwrap();
        let fam = fibre_family(&j, &x, e(1), 0.1, &FamilyOptions { n_w: 9, ..Default::default() }).unwrap();
        let chart = normalize_along_disk(&j, &disk, &fam, &ChartOptions::default()).unwrap();
        let s = trivialize_alpha(&alpha, &j, &chart, &TrivializeOptions::default()).unwrap();
        // The frame is not parallel here, so the system has nonzero coefficients.
        let (c1, c2) = s.system.sup_norms();
        assert!(c1 + c2 > 1e-3);
        assert!(s.theorem_residual <= 1e-3);
        assert!(s.holomorphic_residual().unwrap() <= 1e-3);
        assert_eq!(s.zeros.len(), 1);
        assert_eq!(s.zeros[0].multiplicity, 1);
    }
}
