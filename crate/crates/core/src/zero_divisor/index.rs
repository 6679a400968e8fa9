//! Intersection index of a disk with `Z` and the axiom checks.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C;

use super::{section_jets, seed_matrix, ZeroDivisorError, DEFAULT_SEED, GRAM_TOL, V4};
use crate::degree::axioms::{check_additivity, check_composition, check_vanishing, AxiomCheck, AxiomReport, Outcome};
use crate::degree::{
    is_admissible, signed_zeros, winding_degree, DegreeError, Disk2, PlanarMap, SignedZero, BOUNDARY_SAMPLES, LIPSCHITZ_SAFETY,
};
use crate::forms::{AlmostComplexStructure, TwoForm};
use crate::jdisks::{zeros_with_multiplicity, Disk};
use crate::linalg::Mat4;

/// A smooth map `sigma` from the disk `|zeta| <= radius` into `R^4`.
#[derive(Clone)]
pub struct TestDisk {
    map: Arc<dyn Fn(C) -> V4 + Send + Sync>,
    pub radius: f64,
    pub label: String,
    /// Set when `sigma` is J-holomorphic for the structure it is used with.
    pub holomorphic: bool,
}

impl fmt::Debug for TestDisk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestDisk")
            .field("label", &self.label)
            .field("radius", &self.radius)
            .field("holomorphic", &self.holomorphic)
            .finish_non_exhaustive()
    }
}

impl TestDisk {
    pub fn new(label: impl Into<String>, radius: f64, holomorphic: bool, map: impl Fn(C) -> V4 + Send + Sync + 'static) -> Self {
        TestDisk { map: Arc::new(map), radius, label: label.into(), holomorphic }
    }

    /// `zeta -> center + Re/Im of zeta * dir`; holomorphic for `J0`.
    pub fn flat(center: V4, dir: [C; 2], radius: f64) -> Self {
        let map = move |z: C| {
            let (a, b) = (z * dir[0], z * dir[1]);
            [center[0] + a.re, center[1] + a.im, center[2] + b.re, center[3] + b.im]
        };
        TestDisk::new(format!("flat at {center:?}"), radius, false, map)
    }

    /// A solved J-holomorphic disk.
    pub fn from_disk(disk: &Disk) -> Self {
        let d = disk.clone();
        TestDisk::new(format!("J-disk at {:?}", disk.center), disk.rho, true, move |z| d.eval(z))
    }

    pub fn with_holomorphic(mut self, holomorphic: bool) -> Self {
        self.holomorphic = holomorphic;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn eval(&self, zeta: C) -> V4 {
        (self.map)(zeta)
    }

    /// `sigma o theta` with `theta(zeta) = r (zeta / r)^k`, a degree-`k`
    /// self-map of the disk of radius `r`.
    pub fn precompose_power(&self, k: u32) -> Self {
        let (inner, r) = (self.map.clone(), self.radius);
        TestDisk::new(format!("{} o z^{k}", self.label), r, self.holomorphic, move |z| inner(r * (z / r).powu(k)))
    }

    pub fn translated(&self, v: V4) -> Self {
        let inner = self.map.clone();
        TestDisk::new(format!("{} + {v:?}", self.label), self.radius, false, move |z| {
            let x = inner(z);
            std::array::from_fn(|k| x[k] + v[k])
        })
    }

    /// The subdisk `zeta -> sigma(center + zeta)`, `|zeta| <= radius`.
    pub fn restricted(&self, center: C, radius: f64) -> Self {
        let inner = self.map.clone();
        TestDisk::new(format!("{} on D({center}, {radius})", self.label), radius, self.holomorphic, move |z| inner(center + z))
    }

    /// `(1 - t) sigma0 + t sigma1` on the disk of `sigma0`.
    pub fn interpolate(a: &TestDisk, b: &TestDisk, t: f64) -> Self {
        let (ma, mb) = (a.map.clone(), b.map.clone());
        TestDisk::new(format!("{} ~ {} at t = {t}", a.label, b.label), a.radius, false, move |z| {
            let (x, y) = (ma(z), mb(z));
            std::array::from_fn(|k| (1.0 - t) * x[k] + t * y[k])
        })
    }
}

/// `p -> (f, g)(sigma(radius p))` on the unit disk: the section `alpha`
/// along `sigma` in the seed frame.
pub struct SectionMap<'a> {
    alpha: &'a TwoForm,
    j: &'a AlmostComplexStructure,
    disk: &'a TestDisk,
    seed: Mat4,
}

impl<'a> SectionMap<'a> {
    pub fn new(alpha: &'a TwoForm, j: &'a AlmostComplexStructure, disk: &'a TestDisk) -> Self {
        SectionMap { alpha, j, disk, seed: seed_matrix(&DEFAULT_SEED) }
    }

    /// `f + i g` at `sigma(zeta)`.
    pub fn at_zeta(&self, zeta: C) -> C {
        let (f, g, _) = section_jets(self.alpha, self.j, &self.seed, &self.disk.eval(zeta));
        C::new(f.v, g.v)
    }

    /// Smallest Gram determinant of the seed frame on a polar sample of the
    /// closed disk.
    pub fn min_gram(&self) -> f64 {
        let mut worst = f64::INFINITY;
        for ring in 0..=8 {
            let r = self.disk.radius * ring as f64 / 8.0;
            let n = if ring == 0 { 1 } else { 32 };
            for k in 0..n {
                let z = C::from_polar(r, std::f64::consts::TAU * k as f64 / n as f64);
                let (_, _, gram) = section_jets(self.alpha, self.j, &self.seed, &self.disk.eval(z));
                worst = worst.min(gram);
            }
        }
        worst
    }
}

impl PlanarMap for SectionMap<'_> {
    fn value(&self, p: [f64; 2]) -> [f64; 2] {
        let v = self.at_zeta(self.disk.radius * C::new(p[0], p[1]));
        [v.re, v.im]
    }
}

/// One point of `sigma^{-1}(Z)` with its local index `sign * multiplicity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalIndex {
    pub location: C,
    pub sign: i32,
    pub multiplicity: u32,
}

impl LocalIndex {
    pub fn index(&self) -> i64 {
        self.sign as i64 * self.multiplicity as i64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionReport {
    pub disk: String,
    /// Nondegenerate zeros found by the grid scan, in `zeta` coordinates.
    pub zeros: Vec<SignedZero>,
    pub local: Vec<LocalIndex>,
    /// Winding number of `(f, g)` on the boundary circle.
    pub total: i64,
    pub margin: f64,
    pub min_gram: f64,
}

impl IntersectionReport {
    pub fn local_sum(&self) -> i64 {
        self.local.iter().map(LocalIndex::index).sum()
    }
}

/// Local indices from grid candidates and windings on small circles, in
/// unit-disk coordinates.
fn local_indices(u: &dyn PlanarMap, total: i64) -> Result<Vec<LocalIndex>, DegreeError> {
    let candidates = signed_zeros(u, &Disk2::UNIT, 64)?;
    let mut centres: Vec<[f64; 2]> = Vec::new();
    for z in candidates {
        if !centres.iter().any(|c| (c[0] - z.location[0]).hypot(c[1] - z.location[1]) < 1e-3) {
            centres.push(z.location);
        }
    }
    let mut out = Vec::new();
    for (k, c) in centres.iter().enumerate() {
        let mut rc = 0.05f64.min(0.9 * (1.0 - c[0].hypot(c[1])));
        for (m, o) in centres.iter().enumerate() {
            if m != k {
                rc = rc.min(0.5 * (o[0] - c[0]).hypot(o[1] - c[1]));
            }
        }
        let m = winding_degree(u, &Disk2::new(*c, rc))?.degree;
        if m != 0 {
            out.push(LocalIndex { location: C::new(c[0], c[1]), sign: m.signum() as i32, multiplicity: m.unsigned_abs() as u32 });
        }
    }
    let count: i64 = out.iter().map(LocalIndex::index).sum();
    if count != total {
        return Err(DegreeError::Inconsistent { winding: total, count });
    }
    Ok(out)
}

/// `I_alpha(sigma)`: winding number of `alpha o sigma` written in the seed
/// frame of the anti-invariant bundle, with its decomposition into local
/// indices.
///
/// For a J-holomorphic `sigma` the section is a similarity transform of a
/// holomorphic function, so local indices are positive multiplicities
/// located by the argument principle.
pub fn intersection_index(alpha: &TwoForm, j: &AlmostComplexStructure, sigma: &TestDisk) -> Result<IntersectionReport, ZeroDivisorError> {
    let u = SectionMap::new(alpha, j, sigma);
    let min_gram = u.min_gram();
    if !(min_gram > GRAM_TOL) {
        return Err(ZeroDivisorError::Frame { det: min_gram });
    }
    let adm = is_admissible(&u, &Disk2::UNIT, BOUNDARY_SAMPLES);
    if !adm.admissible {
        return Err(ZeroDivisorError::Admissibility(DegreeError::NotAdmissible {
            margin: adm.margin,
            min_abs: adm.min_abs,
            lipschitz: adm.lipschitz,
        }));
    }
    let total = winding_degree(&u, &Disk2::UNIT)?.degree;
    let r = sigma.radius;
    let zeros = signed_zeros(&u, &Disk2::UNIT, 64)
        .map_err(ZeroDivisorError::Local)?
        .into_iter()
        .map(|z| SignedZero { location: [r * z.location[0], r * z.location[1]], ..z })
        .collect();
    let local = if sigma.holomorphic {
        zeros_with_multiplicity(&|z| u.at_zeta(z), r)
            .map_err(ZeroDivisorError::Local)?
            .into_iter()
            .map(|c| LocalIndex { location: c.location, sign: c.multiplicity.signum() as i32, multiplicity: c.multiplicity.unsigned_abs() as u32 })
            .collect()
    } else {
        local_indices(&u, total)
            .map_err(ZeroDivisorError::Local)?
            .into_iter()
            .map(|l| LocalIndex { location: l.location * r, ..l })
            .collect()
    };
    Ok(IntersectionReport { disk: sigma.label.clone(), zeros, local, total, margin: adm.margin, min_gram })
}

/// Disks for the five checks. Additivity subdisks are given in unit-disk
/// coordinates of their parent.
#[derive(Debug, Clone, Default)]
pub struct PcaInputs {
    pub off_z: Vec<TestDisk>,
    /// Endpoints of straight-line homotopies `(1 - t) sigma0 + t sigma1`.
    pub homotopies: Vec<(TestDisk, TestDisk)>,
    pub compositions: Vec<(TestDisk, u32)>,
    pub additivity: Vec<(TestDisk, Vec<Disk2>)>,
    pub holomorphic: Vec<TestDisk>,
}

/// Samples of the homotopy parameter.
const HOMOTOPY_STEPS: usize = 32;

fn skip(reason: impl fmt::Display) -> Outcome {
    Outcome::Skip { reason: reason.to_string() }
}

fn boundary_values(u: &dyn PlanarMap) -> Vec<[f64; 2]> {
    (0..BOUNDARY_SAMPLES).map(|k| u.value(Disk2::UNIT.boundary_point(std::f64::consts::TAU * k as f64 / BOUNDARY_SAMPLES as f64))).collect()
}

/// Homotopy invariance along `(1 - t) sigma0 + t sigma1`: every sampled
/// member is admissible, consecutive members are joined by certified
/// straight-line homotopies of the sections, and all indices agree.
fn check_disk_homotopy(alpha: &TwoForm, j: &AlmostComplexStructure, a: &TestDisk, b: &TestDisk) -> Outcome {
    if (a.radius - b.radius).abs() > 1e-12 * a.radius {
        return skip("endpoint disks have different radii");
    }
    let mut margins = Vec::with_capacity(HOMOTOPY_STEPS + 1);
    let mut degrees = Vec::with_capacity(HOMOTOPY_STEPS + 1);
    let mut prev: Option<Vec<[f64; 2]>> = None;
    for k in 0..=HOMOTOPY_STEPS {
        let sigma = TestDisk::interpolate(a, b, k as f64 / HOMOTOPY_STEPS as f64);
        let u = SectionMap::new(alpha, j, &sigma);
        let adm = is_admissible(&u, &Disk2::UNIT, BOUNDARY_SAMPLES);
        if !adm.admissible {
            return skip(format!("member t = {:.3} not admissible (margin {:.3e})", k as f64 / HOMOTOPY_STEPS as f64, adm.margin));
        }
        let vals = boundary_values(&u);
        if let Some(p) = &prev {
            let sup = p.iter().zip(&vals).map(|(x, y)| (x[0] - y[0]).hypot(x[1] - y[1])).fold(0.0, f64::max);
            if margins.last().copied().unwrap_or(0.0) + adm.margin <= LIPSCHITZ_SAFETY * sup {
                return skip(format!("link to t = {:.3} not certified", k as f64 / HOMOTOPY_STEPS as f64));
            }
        }
        match winding_degree(&u, &Disk2::UNIT) {
            Ok(w) => degrees.push(w.degree),
            Err(e) => return skip(e),
        }
        margins.push(adm.margin);
        prev = Some(vals);
    }
    match degrees.iter().find(|&&d| d != degrees[0]) {
        Some(&d) => Outcome::Fail { expected: degrees[0], got: d },
        None => Outcome::Pass,
    }
}

/// Positivity on a J-holomorphic disk meeting `Z`: every local index is
/// positive and they add up to the total.
fn check_positivity(alpha: &TwoForm, j: &AlmostComplexStructure, sigma: &TestDisk) -> Outcome {
    if !sigma.holomorphic {
        return skip("disk is not marked J-holomorphic");
    }
    let report = match intersection_index(alpha, j, sigma) {
        Ok(r) => r,
        Err(e) => return skip(e),
    };
    if report.local.is_empty() && report.total == 0 {
        return skip("disk does not meet Z");
    }
    let expected: i64 = report.local.iter().map(|l| l.multiplicity as i64).sum();
    if report.total > 0 && report.local.iter().all(|l| l.sign > 0) && report.total == expected {
        Outcome::Pass
    } else {
        Outcome::Fail { expected, got: report.total }
    }
}

/// The five properties of a positive cohomology assignment, checked on the
/// supplied disks. Violated hypotheses are reported as skips.
pub fn pca_axiom_suite(alpha: &TwoForm, j: &AlmostComplexStructure, inputs: &PcaInputs) -> AxiomReport {
    let mut report = AxiomReport::default();
    let mut push = |axiom: u8, label: String, outcome: Outcome| report.checks.push(AxiomCheck { axiom, label, outcome });
    for s in &inputs.off_z {
        push(1, format!("{} off Z", s.label), check_vanishing(&SectionMap::new(alpha, j, s), &Disk2::UNIT));
    }
    for (a, b) in &inputs.homotopies {
        push(2, format!("{} ~ {}", a.label, b.label), check_disk_homotopy(alpha, j, a, b));
    }
    for (s, k) in &inputs.compositions {
        push(3, format!("{} o z^{k}", s.label), check_composition(&SectionMap::new(alpha, j, s), *k, 0.0));
    }
    for (s, subs) in &inputs.additivity {
        push(4, format!("{} over {} subdisks", s.label, subs.len()), check_additivity(&SectionMap::new(alpha, j, s), &Disk2::UNIT, subs));
    }
    for s in &inputs.holomorphic {
        push(5, format!("{} positivity", s.label), check_positivity(alpha, j, s));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::re_holo;
    use crate::forms::Domain;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn j0() -> AlmostComplexStructure {
        AlmostComplexStructure::standard(Domain::cube(1.0))
    }

    /// The flat disk `{w1 = 0}` of radius 1/2, holomorphic for `J0`.
    fn w0_line(radius: f64) -> TestDisk {
        TestDisk::flat([0.0; 4], [c(1.0, 0.0), c(0.0, 0.0)], radius).with_holomorphic(true)
    }

    #[test]
    fn nowhere_zero_gives_zero() {
        let alpha = TwoForm::phi0(Domain::cube(1.0));
        let r = intersection_index(&alpha, &j0(), &w0_line(0.5)).unwrap();
        assert_eq!(r.total, 0);
        assert!(r.local.is_empty());
    }

    #[test]
    fn simple_zero_and_composition() {
        let alpha = re_holo("w0", Domain::cube(1.0));
        let s = w0_line(0.5);
        let r = intersection_index(&alpha, &j0(), &s).unwrap();
        assert_eq!(r.total, 1);
        assert_eq!(r.local.len(), 1);
        assert!(r.local[0].location.norm() < 1e-8);
        let r2 = intersection_index(&alpha, &j0(), &s.precompose_power(2)).unwrap();
        assert_eq!(r2.total, 2);
        assert_eq!(r2.local_sum(), 2);
        assert_eq!(r2.local[0].multiplicity, 2);
    }

    #[test]
    fn anti_holomorphic_disk_has_negative_index() {
        // zeta -> (conj zeta, 0) reverses orientation of the w0 line.
        let s = TestDisk::new("conjugate line", 0.5, false, |z: C| [z.re, -z.im, 0.0, 0.0]);
        let r = intersection_index(&re_holo("w0", Domain::cube(1.0)), &j0(), &s).unwrap();
        assert_eq!(r.total, -1);
        assert_eq!(r.local[0].sign, -1);
    }

    #[test]
    fn nonadmissible_disk_is_rejected() {
        // The zero of w0 sits on the boundary circle.
        let s = TestDisk::flat([-0.5, 0.0, 0.0, 0.0], [c(1.0, 0.0), c(0.0, 0.0)], 0.5);
        let e = intersection_index(&re_holo("w0", Domain::cube(1.0)), &j0(), &s).unwrap_err();
        assert!(matches!(e, ZeroDivisorError::Admissibility(_)), "{e}");
    }

    #[test]
    fn axiom_suite_on_standard_fixture() {
        let j = j0();
        let d = Domain::cube(1.0);
        let alpha = re_holo("w0", d.clone());
        let base = TestDisk::flat([0.0, 0.0, 0.2, 0.0], [c(1.0, 0.0), c(0.0, 0.0)], 0.5);
        let moved = base.translated([0.1, 0.05, 0.3, -0.2]);
        let off = TestDisk::flat([0.7, 0.0, 0.0, 0.0], [c(0.0, 0.0), c(1.0, 0.0)], 0.5);
        let inputs = PcaInputs {
            off_z: vec![off],
            homotopies: vec![(base.clone(), moved)],
            compositions: vec![(base.clone(), 3)],
            additivity: vec![],
            holomorphic: vec![base.clone().with_holomorphic(true)],
        };
        let r = pca_axiom_suite(&alpha, &j, &inputs);
        assert_eq!(r.failures(), 0, "{r:?}");
        for a in 1..=5 {
            if a != 4 {
                assert_eq!(r.tally(a).pass, 1, "axiom {a}: {r:?}");
            }
        }
    }

    #[test]
    fn positivity_through_smooth_point_of_product() {
        // Z = {w0 w1 = 0}; the line {w1 = 0.3} meets it transversally at w0 = 0.
        let alpha = re_holo("w0*w1", Domain::cube(1.0));
        let s = TestDisk::flat([0.0, 0.0, 0.3, 0.0], [c(1.0, 0.0), c(0.0, 0.0)], 0.5).with_holomorphic(true);
        let r = intersection_index(&alpha, &j0(), &s).unwrap();
        assert_eq!(r.total, 1);
        let suite = pca_axiom_suite(&alpha, &j0(), &PcaInputs { holomorphic: vec![s], ..Default::default() });
        assert_eq!(suite.tally(5).pass, 1);
    }

    #[test]
    fn additivity_over_two_intersections() {
        // h = w0^2 - 0.09 on {w1 = 0}: simple zeros at zeta = +-0.3.
        let alpha = re_holo("w0^2 - 0.09", Domain::cube(1.0));
        let s = w0_line(0.6);
        let subs = vec![Disk2::new([0.5, 0.0], 0.3), Disk2::new([-0.5, 0.0], 0.3)];
        let r = intersection_index(&alpha, &j0(), &s).unwrap();
        assert_eq!(r.total, 2);
        let suite = pca_axiom_suite(&alpha, &j0(), &PcaInputs { additivity: vec![(s, subs)], ..Default::default() });
        assert_eq!(suite.tally(4).pass, 1, "{suite:?}");
    }
}
