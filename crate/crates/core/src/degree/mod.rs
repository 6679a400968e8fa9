//! Multiplicity of admissible maps `u: D -> R^2` (and `B^3 -> R^3`).
//!
//! Two independent routes are provided and cross-checked by the tests:
//! the boundary winding number with a sampled-Lipschitz certificate, and the
//! signed count of nondegenerate zeros of a small random affine perturbation.
//!
//! Certification is heuristic in one place: the Lipschitz constant on the
//! boundary comes from sampled difference quotients times a safety factor 2.
//! Merely continuous maps without an estimable modulus are not supported.

pub mod axioms;
mod ball;
mod maps;

pub use ball::{degree_ball_n, BallMap};
pub use maps::{ExprMap, FnMap, PlanarMap, ZZbarPoly};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

/// Boundary samples used for the admissibility margin.
pub const BOUNDARY_SAMPLES: usize = 1024;
/// Safety factor on sampled Lipschitz quotients.
pub const LIPSCHITZ_SAFETY: f64 = 2.0;
/// Sample cap for adaptive winding refinement.
pub const SAMPLE_CAP: usize = 1 << 22;
/// Perturbation magnitude relative to the certified margin.
pub const PERTURBATION_FRACTION: f64 = 0.1;
/// Default grid resolution of the zero scan.
pub const SCAN_GRID: usize = 256;
/// Newton solutions closer than this are merged.
pub const MERGE_TOL: f64 = 1e-6;
/// A zero must satisfy `|u| <= ZERO_TOL` after polishing.
pub const ZERO_TOL: f64 = 1e-9;
/// Jacobian determinants at or below this are degenerate.
pub const DET_TOL: f64 = 1e-12;
/// Seeds tried before giving up on a nondegenerate perturbation.
pub const MAX_SEEDS: u64 = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DegreeError {
    #[error("map is not admissible: boundary margin {margin:.3e} (min |u| {min_abs:.3e}, Lipschitz {lipschitz:.3e})")]
    NotAdmissible { margin: f64, min_abs: f64, lipschitz: f64 },
    #[error("winding refinement exceeded {samples} samples; worst interval at t = {worst_t:.6}")]
    SampleCap { samples: usize, worst_t: f64 },
    #[error("perturbed map had a degenerate zero for {attempts} seeds")]
    Degenerate { attempts: u64 },
    #[error("Newton iteration failed to converge near {near:?}")]
    NewtonFailure { near: Vec<f64> },
    #[error("winding degree {winding} disagrees with signed count {count}")]
    Inconsistent { winding: i64, count: i64 },
    #[error("unsupported dimension {0}")]
    Dimension(usize),
}

/// Closed disk in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk2 {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Disk2 {
    pub const UNIT: Disk2 = Disk2 { center: [0.0, 0.0], radius: 1.0 };

    pub fn new(center: [f64; 2], radius: f64) -> Self {
        Disk2 { center, radius }
    }

    pub fn boundary_point(&self, t: f64) -> [f64; 2] {
        [self.center[0] + self.radius * t.cos(), self.center[1] + self.radius * t.sin()]
    }

    pub fn contains(&self, p: &[f64; 2]) -> bool {
        (p[0] - self.center[0]).hypot(p[1] - self.center[1]) < self.radius
    }
}

/// Admissibility report for a map on a disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    /// Certified lower bound for `|u|` on the boundary (may be negative).
    pub margin: f64,
    pub min_abs: f64,
    pub lipschitz: f64,
}

/// A nondegenerate zero with the sign of its Jacobian determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedZero {
    pub location: [f64; 2],
    pub sign: i32,
    pub jacobian_det: f64,
}

/// Winding number with the data certifying it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    pub degree: i64,
    pub samples: usize,
    pub margin: f64,
    pub lipschitz: f64,
    pub max_increment: f64,
}

/// Signed zero count of a perturbed map.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedCount {
    pub total: i64,
    pub zeros: Vec<SignedZero>,
    pub delta: f64,
    pub seed: u64,
    pub attempts: u64,
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Sampled boundary margin `min |u| - L * (2 pi r / n)`.
pub fn is_admissible(u: &dyn PlanarMap, disk: &Disk2, n: usize) -> Admissibility {
    let vals: Vec<[f64; 2]> = (0..n).map(|k| u.value(disk.boundary_point(2.0 * PI * k as f64 / n as f64))).collect();
    let ds = 2.0 * PI * disk.radius / n as f64;
    let mut min_abs = f64::INFINITY;
    let mut quot: f64 = 0.0;
    for k in 0..n {
        let (a, b) = (vals[k], vals[(k + 1) % n]);
        min_abs = min_abs.min(norm2(a));
        quot = quot.max(norm2([b[0] - a[0], b[1] - a[1]]) / ds);
    }
    let lipschitz = LIPSCHITZ_SAFETY * quot;
    let margin = min_abs - lipschitz * ds;
    Admissibility { admissible: margin > 0.0 && margin.is_finite(), margin, min_abs, lipschitz }
}

fn require_admissible(u: &dyn PlanarMap, disk: &Disk2) -> Result<Admissibility, DegreeError> {
    let adm = is_admissible(u, disk, BOUNDARY_SAMPLES);
    if !adm.admissible {
        return Err(DegreeError::NotAdmissible { margin: adm.margin, min_abs: adm.min_abs, lipschitz: adm.lipschitz });
    }
    Ok(adm)
}

fn angle_between(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1])
}

/// Boundary winding number of `u` around 0.
pub fn winding_degree(u: &dyn PlanarMap, disk: &Disk2) -> Result<Winding, DegreeError> {
    winding_degree_with(u, disk, 64)
}

/// Winding number starting from `n0` uniform intervals; every interval is
/// bisected until its angular increment is below pi/2 and `L * ds` is below
/// the certified margin.
pub fn winding_degree_with(u: &dyn PlanarMap, disk: &Disk2, n0: usize) -> Result<Winding, DegreeError> {
    let adm = require_admissible(u, disk)?;
    let eps = adm.margin;
    let l = adm.lipschitz;
    let mut total = 0.0;
    let mut samples = n0;
    let mut max_increment: f64 = 0.0;
    for k in 0..n0 {
        let t0 = 2.0 * PI * k as f64 / n0 as f64;
        let t1 = 2.0 * PI * (k + 1) as f64 / n0 as f64;
        let mut stack = vec![(t0, u.value(disk.boundary_point(t0)), t1, u.value(disk.boundary_point(t1)))];
        while let Some((ta, ua, tb, ub)) = stack.pop() {
            let inc = angle_between(ua, ub);
            let chord = l * disk.radius * (tb - ta);
            if inc.abs() < FRAC_PI_2 && chord < eps {
                total += inc;
                max_increment = max_increment.max(inc.abs());
                continue;
            }
            samples += 1;
            if samples > SAMPLE_CAP {
                return Err(DegreeError::SampleCap { samples, worst_t: ta });
            }
            let tm = 0.5 * (ta + tb);
            let um = u.value(disk.boundary_point(tm));
            stack.push((tm, um, tb, ub));
            stack.push((ta, ua, tm, um));
        }
    }
    Ok(Winding { degree: (total / (2.0 * PI)).round() as i64, samples, margin: eps, lipschitz: l, max_increment })
}

/// Nondegenerate zeros of `u` inside `disk` by grid scan and Newton polish.
///
/// Returns zeros sorted by coordinates; `Err(Degenerate)` is not raised here,
/// degenerate zeros are reported with `sign = 0`.
pub fn signed_zeros(u: &dyn PlanarMap, disk: &Disk2, grid: usize) -> Result<Vec<SignedZero>, DegreeError> {
    let (cx, cy, r) = (disk.center[0], disk.center[1], disk.radius);
    let h = 2.0 * r / grid as f64;
    let node = |i: usize, j: usize| [cx - r + i as f64 * h, cy - r + j as f64 * h];
    let vals: Vec<Vec<[f64; 2]>> = (0..=grid).map(|i| (0..=grid).map(|j| u.value(node(i, j))).collect()).collect();
    let mut found: Vec<[f64; 2]> = Vec::new();
    for i in 0..grid {
        for j in 0..grid {
            let corners = [vals[i][j], vals[i + 1][j], vals[i][j + 1], vals[i + 1][j + 1]];
            let straddles = (0..2).all(|c| {
                let lo = corners.iter().map(|v| v[c]).fold(f64::INFINITY, f64::min);
                let hi = corners.iter().map(|v| v[c]).fold(f64::NEG_INFINITY, f64::max);
                lo <= 0.0 && hi >= 0.0
            });
            if !straddles {
                continue;
            }
            let start = [cx - r + (i as f64 + 0.5) * h, cy - r + (j as f64 + 0.5) * h];
            if (start[0] - cx).hypot(start[1] - cy) > r + h {
                continue;
            }
            if let Some(z) = newton2(u, start) {
                if disk.contains(&z) && !found.iter().any(|f| norm2([f[0] - z[0], f[1] - z[1]]) < MERGE_TOL) {
                    found.push(z);
                }
            }
        }
    }
    found.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(found
        .into_iter()
        .map(|z| {
            let jm = u.jacobian(z);
            let det = jm[0][0] * jm[1][1] - jm[0][1] * jm[1][0];
            let sign = if det > DET_TOL {
                1
            } else if det < -DET_TOL {
                -1
            } else {
                0
            };
            SignedZero { location: z, sign, jacobian_det: det }
        })
        .collect())
}

fn newton2(u: &dyn PlanarMap, start: [f64; 2]) -> Option<[f64; 2]> {
    let mut p = start;
    let mut v = u.value(p);
    for _ in 0..60 {
        let f = norm2(v);
        if f <= 1e-14 {
            break;
        }
        let j = u.jacobian(p);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = [(j[1][1] * v[0] - j[0][1] * v[1]) / det, (-j[1][0] * v[0] + j[0][0] * v[1]) / det];
        let mut step = 1.0;
        loop {
            let q = [p[0] - step * dx[0], p[1] - step * dx[1]];
            let w = u.value(q);
            if norm2(w) < f || step < 1e-4 {
                p = q;
                v = w;
                break;
            }
            step *= 0.5;
        }
        if norm2(dx) * step < 1e-15 * (1.0 + norm2(p)) {
            break;
        }
    }
    (norm2(v) <= ZERO_TOL).then_some(p)
}

/// Signed zero count of `u + delta (a + B p)` with `delta` a tenth of the
/// certified boundary margin and `(a, B)` drawn from `seed`.
pub fn perturb_sign_count(u: &dyn PlanarMap, disk: &Disk2, seed: u64) -> Result<PerturbedCount, DegreeError> {
    perturb_sign_count_with(u, disk, seed, SCAN_GRID)
}

pub fn perturb_sign_count_with(u: &dyn PlanarMap, disk: &Disk2, seed: u64, grid: usize) -> Result<PerturbedCount, DegreeError> {
    let adm = require_admissible(u, disk)?;
    let delta = PERTURBATION_FRACTION * adm.margin;
    for attempt in 0..MAX_SEEDS {
        let s = seed.wrapping_add(attempt);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let a = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let b = [[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)], [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]];
        let bnorm = b.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        let scale = delta / (norm2(a) + bnorm);
        let perturbed = Perturbed { u, disk: *disk, a, b, scale };
        let zeros = signed_zeros(&perturbed, disk, grid)?;
        if zeros.iter().any(|z| z.sign == 0) {
            continue;
        }
        let total = zeros.iter().map(|z| z.sign as i64).sum();
        return Ok(PerturbedCount { total, zeros, delta, seed: s, attempts: attempt + 1 });
    }
    Err(DegreeError::Degenerate { attempts: MAX_SEEDS })
}

struct Perturbed<'a> {
    u: &'a dyn PlanarMap,
    disk: Disk2,
    a: [f64; 2],
    b: [[f64; 2]; 2],
    scale: f64,
}

impl PlanarMap for Perturbed<'_> {
    fn value(&self, p: [f64; 2]) -> [f64; 2] {
        let q = [(p[0] - self.disk.center[0]) / self.disk.radius, (p[1] - self.disk.center[1]) / self.disk.radius];
        let v = self.u.value(p);
        [
            v[0] + self.scale * (self.a[0] + self.b[0][0] * q[0] + self.b[0][1] * q[1]),
            v[1] + self.scale * (self.a[1] + self.b[1][0] * q[0] + self.b[1][1] * q[1]),
        ]
    }

    fn jacobian(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let j = self.u.jacobian(p);
        let s = self.scale / self.disk.radius;
        std::array::from_fn(|r| std::array::from_fn(|c| j[r][c] + s * self.b[r][c]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    fn holo(f: impl Fn(C) -> C + Sync + 'static) -> FnMap<impl Fn([f64; 2]) -> [f64; 2] + Sync> {
        FnMap::new(move |p: [f64; 2]| {
            let w = f(C::new(p[0], p[1]));
            [w.re, w.im]
        })
    }

    #[test]
    fn admissibility_examples() {
        assert!(is_admissible(&holo(|z| z), &Disk2::UNIT, 1024).admissible);
        let x_only = FnMap::new(|p: [f64; 2]| [p[0], 0.0]);
        assert!(!is_admissible(&x_only, &Disk2::UNIT, 1024).admissible);
        let x_only_odd = FnMap::new(|p: [f64; 2]| [p[0], 0.0]);
        assert!(!is_admissible(&x_only_odd, &Disk2::UNIT, 1001).admissible);
        assert!(is_admissible(&holo(|z| z * z.conj()), &Disk2::UNIT, 1024).admissible);
    }

    #[test]
    fn winding_examples() {
        for k in 1..=5 {
            assert_eq!(winding_degree(&holo(move |z| z.powi(k)), &Disk2::UNIT).unwrap().degree, k as i64);
        }
        assert_eq!(winding_degree(&holo(|z| z * z.conj()), &Disk2::UNIT).unwrap().degree, 0);
        assert_eq!(winding_degree(&holo(|z| z.conj()), &Disk2::UNIT).unwrap().degree, -1);
        assert_eq!(winding_degree(&holo(|z| z.conj().powi(2)), &Disk2::UNIT).unwrap().degree, -2);
        let inadmissible = FnMap::new(|p: [f64; 2]| [p[0], 0.0]);
        assert!(matches!(winding_degree(&inadmissible, &Disk2::UNIT), Err(DegreeError::NotAdmissible { .. })));
    }

    #[test]
    fn quoted_perturbation_of_modulus_squared() {
        let eps = C::new(0.1, 0.05);
        let u = holo(move |z| z * z.conj() + eps * z);
        let zeros = signed_zeros(&u, &Disk2::UNIT, 256).unwrap();
        assert_eq!(zeros.len(), 2);
        let at = |w: C| zeros.iter().find(|z| (C::new(z.location[0], z.location[1]) - w).norm() < 1e-9).unwrap();
        assert_eq!(at(C::new(0.0, 0.0)).sign, 1);
        assert_eq!(at(-eps.conj()).sign, -1);
        assert!((at(C::new(0.0, 0.0)).jacobian_det - eps.norm_sqr()).abs() < 1e-6);
    }

    #[test]
    fn perturbed_counts() {
        let one = perturb_sign_count(&holo(|z| z), &Disk2::UNIT, 0).unwrap();
        assert_eq!((one.total, one.zeros.len(), one.zeros[0].sign), (1, 1, 1));
        let two = perturb_sign_count(&holo(|z| z * z), &Disk2::UNIT, 0).unwrap();
        assert_eq!(two.zeros.len(), 2);
        assert!(two.zeros.iter().all(|z| z.sign == 1));
        assert_eq!(perturb_sign_count(&holo(|z| z * z.conj()), &Disk2::UNIT, 3).unwrap().total, 0);
    }

    #[test]
    fn subdisk_windings() {
        let u = holo(|z| z * (z - 0.5));
        assert_eq!(winding_degree(&u, &Disk2::new([0.0, 0.0], 0.2)).unwrap().degree, 1);
        assert_eq!(winding_degree(&u, &Disk2::new([0.5, 0.0], 0.2)).unwrap().degree, 1);
        assert_eq!(winding_degree(&u, &Disk2::UNIT).unwrap().degree, 2);
    }

    #[test]
    fn certificate_stable_under_refinement() {
        let u = holo(|z| z.powi(3) - 0.3 * z.conj() + C::new(0.1, 0.2));
        let a = winding_degree_with(&u, &Disk2::UNIT, 64).unwrap();
        let b = winding_degree_with(&u, &Disk2::UNIT, 128).unwrap();
        assert_eq!(a.degree, b.degree);
        assert!(a.max_increment < FRAC_PI_2);
    }
}
