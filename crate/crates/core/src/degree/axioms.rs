//! Numerical checks of the five defining properties of the multiplicity:
//! vanishing, homotopy invariance, composition with `z^k`, additivity over
//! subdisks and normalization on holomorphic maps.
//!
//! Every check first verifies its hypothesis; a violated hypothesis yields
//! [`Outcome::Skip`] rather than a failure.

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

use super::{is_admissible, winding_degree, Disk2, PlanarMap, ZZbarPoly, BOUNDARY_SAMPLES, LIPSCHITZ_SAFETY};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail { expected: i64, got: i64 },
    Skip { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    /// 1 vanishing, 2 homotopy, 3 composition, 4 additivity, 5 normalization.
    pub axiom: u8,
    pub label: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct AxiomTally {
    pub pass: usize,
    pub fail: usize,
    pub skip: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn tally(&self, axiom: u8) -> AxiomTally {
        let mut t = AxiomTally::default();
        for c in self.checks.iter().filter(|c| c.axiom == axiom) {
            match c.outcome {
                Outcome::Pass => t.pass += 1,
                Outcome::Fail { .. } => t.fail += 1,
                Outcome::Skip { .. } => t.skip += 1,
            }
        }
        t
    }

    pub fn failures(&self) -> usize {
        (1..=5).map(|a| self.tally(a).fail).sum()
    }

    fn push(&mut self, axiom: u8, label: impl Into<String>, outcome: Outcome) {
        self.checks.push(AxiomCheck { axiom, label: label.into(), outcome });
    }
}

fn compare(expected: i64, got: i64) -> Outcome {
    if expected == got {
        Outcome::Pass
    } else {
        Outcome::Fail { expected, got }
    }
}

fn skip(reason: impl std::fmt::Display) -> Outcome {
    Outcome::Skip { reason: reason.to_string() }
}

/// Degree or a skip outcome when `u` is not admissible on `disk`.
fn degree_on(u: &dyn PlanarMap, disk: &Disk2) -> Result<i64, Outcome> {
    winding_degree(u, disk).map(|w| w.degree).map_err(skip)
}

/// Heuristic proof that `u` has no zero in `disk` outside the `excluded`
/// open subdisks: quadtree cells are accepted when `|u(center)|` exceeds the
/// sampled local Lipschitz bound times the half diagonal.
pub fn zero_free_outside(u: &dyn PlanarMap, disk: &Disk2, excluded: &[Disk2]) -> bool {
    const ROOT: usize = 16;
    const MAX_DEPTH: u32 = 8;
    let r = disk.radius;
    let h = 2.0 * r / ROOT as f64;
    let mut stack: Vec<([f64; 2], f64, u32)> = Vec::new();
    for i in 0..ROOT {
        for j in 0..ROOT {
            let c = [disk.center[0] - r + (i as f64 + 0.5) * h, disk.center[1] - r + (j as f64 + 0.5) * h];
            stack.push((c, h, 0));
        }
    }
    let norm = |v: [f64; 2]| v[0].hypot(v[1]);
    while let Some((c, side, depth)) = stack.pop() {
        let half_diag = side * std::f64::consts::FRAC_1_SQRT_2;
        let dc = (c[0] - disk.center[0]).hypot(c[1] - disk.center[1]);
        if dc - half_diag > r {
            continue;
        }
        if excluded.iter().any(|e| (c[0] - e.center[0]).hypot(c[1] - e.center[1]) + half_diag < e.radius) {
            continue;
        }
        let uc = u.value(c);
        let mut quot: f64 = 0.0;
        for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
            let p = [c[0] + 0.5 * side * sx, c[1] + 0.5 * side * sy];
            let up = u.value(p);
            quot = quot.max(norm([up[0] - uc[0], up[1] - uc[1]]) / half_diag);
        }
        if norm(uc) > LIPSCHITZ_SAFETY * quot * half_diag {
            continue;
        }
        if depth == MAX_DEPTH {
            return false;
        }
        let q = 0.25 * side;
        for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
            stack.push(([c[0] + q * sx, c[1] + q * sy], 0.5 * side, depth + 1));
        }
    }
    true
}

/// Axiom 1: a map without zeros on the closed disk has multiplicity 0.
pub fn check_vanishing(u: &dyn PlanarMap, disk: &Disk2) -> Outcome {
    if !zero_free_outside(u, disk, &[]) {
        return skip("could not certify u nowhere zero");
    }
    match degree_on(u, disk) {
        Ok(d) => compare(0, d),
        Err(o) => o,
    }
}

struct Straight<'a> {
    u0: &'a dyn PlanarMap,
    u1: &'a dyn PlanarMap,
    t: f64,
}

impl PlanarMap for Straight<'_> {
    fn value(&self, p: [f64; 2]) -> [f64; 2] {
        let (a, b) = (self.u0.value(p), self.u1.value(p));
        [(1.0 - self.t) * a[0] + self.t * b[0], (1.0 - self.t) * a[1] + self.t * b[1]]
    }
}

/// Whether `t u1 + (1 - t) u0` stays admissible for all `t` in `[0, 1]`.
///
/// Margins are certified at `t_k = k / 32`; between samples `u_t` moves by
/// at most `|t - t_k| max |u1 - u0|` on the boundary.
pub fn straight_homotopy_admissible(u0: &dyn PlanarMap, u1: &dyn PlanarMap, disk: &Disk2) -> bool {
    const STEPS: usize = 32;
    let mut sup_diff: f64 = 0.0;
    for k in 0..BOUNDARY_SAMPLES {
        let p = disk.boundary_point(2.0 * PI * k as f64 / BOUNDARY_SAMPLES as f64);
        let (a, b) = (u0.value(p), u1.value(p));
        sup_diff = sup_diff.max((b[0] - a[0]).hypot(b[1] - a[1]));
    }
    let slack = LIPSCHITZ_SAFETY * sup_diff * 0.5 / STEPS as f64;
    (0..=STEPS).all(|k| {
        let ut = Straight { u0, u1, t: k as f64 / STEPS as f64 };
        is_admissible(&ut, disk, BOUNDARY_SAMPLES).margin > slack
    })
}

/// Axiom 2: maps joined by an admissible straight-line homotopy agree.
pub fn check_homotopy(u0: &dyn PlanarMap, u1: &dyn PlanarMap, disk: &Disk2) -> Outcome {
    if !straight_homotopy_admissible(u0, u1, disk) {
        return skip("straight-line homotopy not certified admissible");
    }
    match (degree_on(u0, disk), degree_on(u1, disk)) {
        (Ok(a), Ok(b)) => compare(a, b),
        (Err(o), _) | (_, Err(o)) => o,
    }
}

/// `u o theta` for `theta(z) = e^{i phi} z^k`, a proper map of degree `k`
/// of the unit disk.
pub struct Composed<'a> {
    pub u: &'a dyn PlanarMap,
    pub k: u32,
    pub phi: f64,
}

impl PlanarMap for Composed<'_> {
    fn value(&self, p: [f64; 2]) -> [f64; 2] {
        let w = C::from_polar(1.0, self.phi) * C::new(p[0], p[1]).powu(self.k);
        self.u.value([w.re, w.im])
    }
}

/// Axiom 3: `I(u o theta) = k I(u)` for `theta = e^{i phi} z^k` on the unit disk.
pub fn check_composition(u: &dyn PlanarMap, k: u32, phi: f64) -> Outcome {
    let base = match degree_on(u, &Disk2::UNIT) {
        Ok(d) => d,
        Err(o) => return o,
    };
    match degree_on(&Composed { u, k, phi }, &Disk2::UNIT) {
        Ok(d) => compare(k as i64 * base, d),
        Err(o) => o,
    }
}

/// Axiom 4: with pairwise disjoint subdisks of `disk` containing every zero,
/// the multiplicity is the sum over the subdisks.
pub fn check_additivity(u: &dyn PlanarMap, disk: &Disk2, subdisks: &[Disk2]) -> Outcome {
    for (i, a) in subdisks.iter().enumerate() {
        let inside = (a.center[0] - disk.center[0]).hypot(a.center[1] - disk.center[1]) + a.radius < disk.radius;
        if !inside {
            return skip(format!("subdisk {i} not inside the disk"));
        }
        for b in &subdisks[i + 1..] {
            if (a.center[0] - b.center[0]).hypot(a.center[1] - b.center[1]) <= a.radius + b.radius {
                return skip(format!("subdisk {i} overlaps another"));
            }
        }
    }
    if !zero_free_outside(u, disk, subdisks) {
        return skip("zeros not certified inside the subdisks");
    }
    let whole = match degree_on(u, disk) {
        Ok(d) => d,
        Err(o) => return o,
    };
    let mut sum = 0;
    for s in subdisks {
        match degree_on(u, s) {
            Ok(d) => sum += d,
            Err(o) => return o,
        }
    }
    compare(whole, sum)
}

/// Axiom 5: for a holomorphic polynomial `c prod (z - a_i)` the multiplicity
/// is the number of roots inside the unit disk.
pub fn check_normalization(roots: &[C], lead: C) -> Outcome {
    if roots.iter().any(|a| (a.norm() - 1.0).abs() < 1e-3) {
        return skip("root too close to the boundary");
    }
    let u = ZZbarPoly::from_roots(roots, lead);
    let expected = roots.iter().filter(|a| a.norm() < 1.0).count() as i64;
    match degree_on(&u, &Disk2::UNIT) {
        Ok(d) => compare(expected, d),
        Err(o) => o,
    }
}

/// Inputs of one run of the five checks.
pub struct AxiomInputs<'a> {
    pub u0: &'a dyn PlanarMap,
    pub u1: &'a dyn PlanarMap,
    pub theta_k: u32,
    pub subdisks: Vec<Disk2>,
    /// Roots of the holomorphic normalization polynomial.
    pub roots: Vec<C>,
}

/// Runs all five checks on the unit disk. Axiom 1 is evaluated on `u0`.
pub fn axiom_suite(inputs: &AxiomInputs) -> AxiomReport {
    let d = Disk2::UNIT;
    let mut r = AxiomReport::default();
    r.push(1, "u0 nowhere zero", check_vanishing(inputs.u0, &d));
    r.push(2, "u0 ~ u1", check_homotopy(inputs.u0, inputs.u1, &d));
    r.push(3, format!("u0 o z^{}", inputs.theta_k), check_composition(inputs.u0, inputs.theta_k, 0.0));
    r.push(4, "u0 over subdisks", check_additivity(inputs.u0, &d, &inputs.subdisks));
    r.push(5, "holomorphic normalization", check_normalization(&inputs.roots, C::new(1.0, 0.0)));
    r
}

fn random_c(rng: &mut ChaCha8Rng, radius: f64) -> C {
    C::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI))
}

fn random_zzbar(rng: &mut ChaCha8Rng, max_degree: u32, scale: f64) -> ZZbarPoly {
    let mut terms = Vec::new();
    for a in 0..=max_degree {
        for b in 0..=(max_degree - a) {
            terms.push((a, b, random_c(rng, scale)));
        }
    }
    ZZbarPoly::new(terms)
}

/// `z - a` or `conj(z - a)` factors, with well separated roots inside the disk.
fn separated_roots(rng: &mut ChaCha8Rng, n: usize, min_sep: f64) -> Vec<C> {
    let mut roots: Vec<C> = Vec::new();
    while roots.len() < n {
        let a = random_c(rng, 0.7);
        if roots.iter().all(|b| (a - *b).norm() > min_sep) {
            roots.push(a);
        }
    }
    roots
}

fn mixed_product(roots: &[C], anti: &[bool]) -> ZZbarPoly {
    let mut p = ZZbarPoly::new(vec![(0, 0, C::new(1.0, 0.0))]);
    for (a, &bar) in roots.iter().zip(anti) {
        let f = if bar {
            ZZbarPoly::new(vec![(0, 1, C::new(1.0, 0.0)), (0, 0, -a.conj())])
        } else {
            ZZbarPoly::new(vec![(1, 0, C::new(1.0, 0.0)), (0, 0, -*a)])
        };
        p = p.mul(&f);
    }
    p
}

/// Push draws until `per_axiom` checks of `axiom` are decided (pass or
/// fail). Skipped draws stay in the report; gives up after `4 * per_axiom`.
fn fill(r: &mut AxiomReport, axiom: u8, per_axiom: usize, rng: &mut ChaCha8Rng, mut draw: impl FnMut(usize, &mut ChaCha8Rng) -> (String, Outcome)) {
    let mut i = r.checks.iter().filter(|c| c.axiom == axiom).count();
    while {
        let t = r.tally(axiom);
        t.pass + t.fail < per_axiom && i < 4 * per_axiom
    } {
        let (label, outcome) = draw(i, rng);
        r.push(axiom, label, outcome);
        i += 1;
    }
}

/// The documented fixture battery: at least `per_axiom` decided instances of
/// each axiom with maps drawn from `seed`.
pub fn fixture_battery(per_axiom: usize, seed: u64) -> AxiomReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = AxiomReport::default();
    let unit = Disk2::UNIT;

    r.push(1, "z + 5", check_vanishing(&ZZbarPoly::from_roots(&[C::new(-5.0, 0.0)], C::new(1.0, 0.0)), &unit));
    fill(&mut r, 1, per_axiom, &mut rng, |i, rng| {
        let c = random_c(rng, 1.0) + C::from_polar(2.0, rng.gen_range(0.0..2.0 * PI));
        let mut p = random_zzbar(rng, 3, 1.0);
        let total: f64 = p.terms.iter().map(|t| t.2.norm()).sum();
        let s = 0.5 * c.norm() / total;
        for t in &mut p.terms {
            t.2 *= s;
        }
        p.terms.push((0, 0, c));
        (format!("nowhere-zero #{i}"), check_vanishing(&p, &unit))
    });

    fill(&mut r, 2, per_axiom, &mut rng, |i, rng| {
        let k = 1 + (i % 4) as u32;
        let sign_bar = i % 3 == 2;
        let u0 = if sign_bar {
            ZZbarPoly::new(vec![(0, k, C::new(1.0, 0.0))])
        } else {
            ZZbarPoly::new(vec![(k, 0, C::new(1.0, 0.0))])
        };
        let mut u1 = random_zzbar(rng, 3, 0.25 / 10.0);
        u1.terms.extend(u0.terms.iter().copied());
        (format!("monomial degree {k} to perturbation #{i}"), check_homotopy(&u0, &u1, &unit))
    });

    r.push(3, "z + 0.2 o z^2", check_composition(&ZZbarPoly::from_roots(&[C::new(-0.2, 0.0)], C::new(1.0, 0.0)), 2, 0.0));
    fill(&mut r, 3, per_axiom, &mut rng, |i, rng| {
        let n = 1 + i % 3;
        let roots = separated_roots(rng, n, 0.3);
        let anti: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        let u = mixed_product(&roots, &anti);
        let k = 1 + (i % 3) as u32;
        let phi = rng.gen_range(0.0..2.0 * PI);
        (format!("mixed product #{i} o z^{k}"), check_composition(&u, k, phi))
    });

    let pair = [C::new(0.0, 0.0), C::new(0.5, 0.0)];
    r.push(
        4,
        "z(z - 0.5)",
        check_additivity(
            &ZZbarPoly::from_roots(&pair, C::new(1.0, 0.0)),
            &unit,
            &[Disk2::new([0.0, 0.0], 0.2), Disk2::new([0.5, 0.0], 0.2)],
        ),
    );
    fill(&mut r, 4, per_axiom, &mut rng, |i, rng| {
        let n = 1 + i % 3;
        let roots = separated_roots(rng, n, 0.35);
        let anti: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        let u = mixed_product(&roots, &anti);
        let radius = 0.15;
        let subdisks: Vec<Disk2> = roots
            .iter()
            .map(|a| Disk2::new([a.re + rng.gen_range(-0.05..0.05), a.im + rng.gen_range(-0.05..0.05)], radius))
            .collect();
        (format!("mixed product #{i}"), check_additivity(&u, &unit, &subdisks))
    });

    for k in 1..=5usize {
        r.push(5, format!("z^{k}"), check_normalization(&vec![C::new(0.0, 0.0); k], C::new(1.0, 0.0)));
    }
    fill(&mut r, 5, per_axiom, &mut rng, |i, rng| {
        let n = 1 + i % 4;
        let mut roots: Vec<C> = Vec::new();
        while roots.len() < n {
            let a = random_c(rng, 1.6);
            if (a.norm() - 1.0).abs() > 0.15 {
                roots.push(a);
            }
        }
        let lead = C::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..2.0 * PI));
        (format!("random roots #{i}"), check_normalization(&roots, lead))
    });
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(roots: &[C]) -> ZZbarPoly {
        ZZbarPoly::from_roots(roots, C::new(1.0, 0.0))
    }

    #[test]
    fn documented_examples() {
        assert_eq!(check_vanishing(&poly(&[C::new(-5.0, 0.0)]), &Disk2::UNIT), Outcome::Pass);
        assert_eq!(check_composition(&poly(&[C::new(-0.2, 0.0)]), 2, 0.0), Outcome::Pass);
        let u = poly(&[C::new(0.0, 0.0), C::new(0.5, 0.0)]);
        let subs = [Disk2::new([0.0, 0.0], 0.2), Disk2::new([0.5, 0.0], 0.2)];
        assert_eq!(check_additivity(&u, &Disk2::UNIT, &subs), Outcome::Pass);
    }

    #[test]
    fn violated_hypotheses_are_skipped() {
        assert!(matches!(check_vanishing(&poly(&[C::new(0.3, 0.0)]), &Disk2::UNIT), Outcome::Skip { .. }));
        let u = poly(&[C::new(0.0, 0.0), C::new(0.5, 0.0)]);
        let only_one = [Disk2::new([0.0, 0.0], 0.2)];
        assert!(matches!(check_additivity(&u, &Disk2::UNIT, &only_one), Outcome::Skip { .. }));
        let z = poly(&[C::new(0.0, 0.0)]);
        let far = poly(&[C::new(3.0, 0.0)]);
        assert!(matches!(check_homotopy(&z, &far, &Disk2::UNIT), Outcome::Skip { .. }));
    }

    #[test]
    fn suite_on_explicit_inputs() {
        let u0 = poly(&[C::new(0.1, 0.2), C::new(-0.4, 0.1)]);
        let u1 = poly(&[C::new(0.0, 0.0), C::new(-0.3, 0.0)]);
        let report = axiom_suite(&AxiomInputs {
            u0: &u0,
            u1: &u1,
            theta_k: 3,
            subdisks: vec![Disk2::new([0.1, 0.2], 0.15), Disk2::new([-0.4, 0.1], 0.15)],
            roots: vec![C::new(0.2, 0.0), C::new(1.5, 0.0)],
        });
        // u0 has zeros, so the vanishing axiom is skipped.
        assert_eq!(report.tally(1).skip, 1);
        assert_eq!(report.failures(), 0);
        assert_eq!((2..=5).map(|a| report.tally(a).pass).sum::<usize>(), 4);
    }

    #[test]
    fn battery_has_no_failures() {
        let report = fixture_battery(20, 11);
        for a in 1..=5 {
            let t = report.tally(a);
            assert_eq!(t.fail, 0, "axiom {a}: {:?}", report.checks.iter().filter(|c| c.axiom == a).collect::<Vec<_>>());
            assert_eq!(t.pass, 20, "axiom {a}: {t:?}");
        }
    }
}
