//! Property tests for the module invariants.

use jcurve::cr_solver::{carleman_factor, cauchy_transform, transform_residual, CRSystem, PlanarField, PolarGrid};
use jcurve::degree::{signed_zeros, winding_degree, winding_degree_with, DegreeError, Disk2, FnMap, PlanarMap, ZZbarPoly};
use jcurve::expr::FieldExpr;
use jcurve::fixtures::{re_holo, shear_structure};
use jcurve::forms::{
    apply_j_anti_unchecked, compatible_metric, hodge_star_at, pullback_by_j, split_form, wedge_square, AlmostComplexStructure, Domain, Sampling,
    TwoForm,
};
use jcurve::jdisks::{solve_disk, trivialize_along, zeros_with_multiplicity, DiskFrame, DiskOptions, TrivializeOptions};
use jcurve::zero_divisor::{intersection_index, SectionMap, TestDisk};
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn cube() -> Domain {
    Domain::cube(1.0)
}

fn point() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-0.95f64..0.95)
}

fn cplx(r: f64) -> impl Strategy<Value = C> {
    (-r..r, -r..r).prop_map(|(a, b)| C::new(a, b))
}

/// Random expression over `x1..x4` from a small grammar, kept bounded on
/// the unit cube.
fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (1usize..=4).prop_map(|k| format!("x{k}")),
        (-2.0f64..2.0).prop_map(|c| format!("({c:.3})")),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(0.5 * {a})")),
            inner.prop_map(|a| format!("({a})^2")),
        ]
    })
}

fn form_from(texts: &[String]) -> TwoForm {
    let e: Vec<FieldExpr> = texts.iter().map(|t| FieldExpr::parse(t).unwrap()).collect();
    TwoForm::new(std::array::from_fn(|k| e[k].clone()), cube())
}

fn max_entry(m: &[[f64; 4]; 4]) -> f64 {
    m.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
}

/// Random `(z, zbar)` polynomial of total degree at most 3.
fn zzbar_poly() -> impl Strategy<Value = ZZbarPoly> {
    let monomials: Vec<(u32, u32)> = (0..=3u32).flat_map(|a| (0..=3 - a).map(move |b| (a, b))).collect();
    prop::collection::vec(cplx(1.0), monomials.len())
        .prop_map(move |c| ZZbarPoly::new(monomials.iter().zip(c).map(|(&(a, b), v)| (a, b, v)).collect()))
}

/// Roots of `c0 + c1 z + c2 z^2` (trailing zero coefficients dropped).
fn poly_roots(c: [C; 3]) -> Vec<C> {
    let scale = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if c[2].norm() > 1e-12 * scale {
        let d = (c[1] * c[1] - 4.0 * c[2] * c[0]).sqrt();
        vec![(-c[1] + d) / (2.0 * c[2]), (-c[1] - d) / (2.0 * c[2])]
    } else if c[1].norm() > 1e-12 * scale {
        vec![-c[0] / c[1]]
    } else {
        vec![]
    }
}

/// Coefficients in `zeta` of `h(c + zeta d)` for the integrable fixtures
/// `h = w0 - a`, `w0 w1 - a`, `w0^2 - w1 - a`.
fn restricted(kind: usize, a: C, c: [C; 2], d: [C; 2]) -> [C; 3] {
    match kind {
        0 => [c[0] - a, d[0], C::new(0.0, 0.0)],
        1 => [c[0] * c[1] - a, c[0] * d[1] + c[1] * d[0], d[0] * d[1]],
        _ => [c[0] * c[0] - c[1] - a, 2.0 * c[0] * d[0] - d[1], d[0] * d[0]],
    }
}

fn fixture_text(kind: usize, a: C) -> String {
    let a = format!("({} + {}*i)", a.re, a.im);
    match kind {
        0 => format!("w0 - {a}"),
        1 => format!("w0*w1 - {a}"),
        _ => format!("w0^2 - w1 - {a}"),
    }
}

fn real4(c: [C; 2]) -> [f64; 4] {
    [c[0].re, c[0].im, c[1].re, c[1].im]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn derivatives_match_central_differences(text in expr_text(), x in point(), axis in 0usize..4) {
        let e = FieldExpr::parse(&text).unwrap();
        let d = e.derivative(axis).eval(&x);
        let h = 1e-5;
        let (mut a, mut b) = (x, x);
        a[axis] += h;
        b[axis] -= h;
        let fd = (e.eval(&a) - e.eval(&b)) / (2.0 * h);
        let scale = 1.0 + d.abs() + e.eval(&x).abs();
        prop_assert!((d - fd).abs() <= 1e-6 * scale, "{text}: {d} vs {fd}");
        prop_assert_eq!(e.eval(&x).to_bits(), e.eval(&x).to_bits());
    }

    #[test]
    fn splitting_identities(texts in prop::collection::vec(expr_text(), 6), eps in 0.0f64..0.1, x in point()) {
        let j = shear_structure(eps, cube());
        let alpha = form_from(&texts);
        let (plus, minus) = split_form(&alpha, &j);
        let (a, p, m) = (alpha.at(&x), plus.at(&x), minus.at(&x));
        let scale = 1.0 + a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for k in 0..6 {
            prop_assert!((p[k] + m[k] - a[k]).abs() <= 1e-12 * scale);
        }
        // split o split = split
        let (pp, pm) = split_form(&plus, &j);
        let (mp, mm) = split_form(&minus, &j);
        for k in 0..6 {
            prop_assert!((pp.at(&x)[k] - p[k]).abs() <= 1e-9 * scale && pm.at(&x)[k].abs() <= 1e-9 * scale);
            prop_assert!((mm.at(&x)[k] - m[k]).abs() <= 1e-9 * scale && mp.at(&x)[k].abs() <= 1e-9 * scale);
        }
        let inv = pullback_by_j(&plus, &j, &x).unwrap();
        let anti = pullback_by_j(&minus, &j, &x).unwrap();
        let (pm_, mm_) = (plus.matrix_at(&x), minus.matrix_at(&x));
        for r in 0..4 {
            for c in 0..4 {
                prop_assert!((inv[r][c] - pm_[r][c]).abs() <= 1e-9 * scale);
                prop_assert!((anti[r][c] + mm_[r][c]).abs() <= 1e-9 * scale);
            }
        }
        let jj = apply_j_anti_unchecked(&apply_j_anti_unchecked(&minus, &j), &j);
        for k in 0..6 {
            prop_assert!((jj.at(&x)[k] + m[k]).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn anti_invariant_forms_are_self_dual(entries in prop::array::uniform16(-0.4f64..0.4), texts in prop::collection::vec(expr_text(), 6), x in point()) {
        // J = A J0 A^-1 with A = I + E, det A > 0; Omega = A^-T Omega0 A^-1.
        let mut a = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                a[r][c] = entries[4 * r + c] * 0.5 + if r == c { 1.0 } else { 0.0 };
            }
        }
        let ainv = jcurve::linalg::inverse(&a).unwrap();
        prop_assume!(jcurve::linalg::det(&a) > 0.1);
        let j = AlmostComplexStructure::conjugated(&a, cube()).unwrap();
        let om0 = TwoForm::omega0(cube()).matrix_at(&[0.0; 4]);
        let om = jcurve::linalg::mul(&jcurve::linalg::transpose(&ainv), &jcurve::linalg::mul(&om0, &ainv));
        let omega = TwoForm::constant(std::array::from_fn(|k| { let (p, q) = jcurve::forms::PAIRS[k]; om[p][q] }), cube());
        let g = compatible_metric(&j, &omega, &Sampling { grid: 2, n_random: 4, seed: 0 }).unwrap();
        let minus = split_form(&form_from(&texts), &j).1;
        let star = hodge_star_at(&minus, &g, &x).unwrap();
        let m = minus.matrix_at(&x);
        let scale = 1.0 + max_entry(&m);
        for r in 0..4 {
            for c in 0..4 {
                prop_assert!((star[r][c] - m[r][c]).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn anti_invariant_zero_tests_agree(kind in 0usize..3, a in cplx(0.3)) {
        let alpha = re_holo(&fixture_text(kind, a), cube());
        // Grid through the coordinate axes plus the exact zero of h on the w0-axis.
        let mut pts = cube().grid_points(5);
        if kind == 0 {
            pts.push([a.re, a.im, 0.2, -0.1]);
        }
        for x in pts {
            let c = alpha.at(&x);
            let zero = c.iter().all(|v| v.abs() <= 1e-9);
            let wedge_zero = wedge_square(&c).abs() <= 1e-9;
            prop_assert_eq!(zero, wedge_zero, "at {:?}: {:?}", x, c);
        }
    }

    #[test]
    fn winding_agrees_with_perturbed_count(u in zzbar_poly(), seed in 0u64..1000) {
        let disk = Disk2::UNIT;
        let Ok(w) = winding_degree(&u, &disk) else { return Ok(()); };
        let p = jcurve::degree::perturb_sign_count(&u, &disk, seed).unwrap();
        prop_assert_eq!(w.degree, p.total);
        // Certification soundness: double resolution gives the same integer.
        let w2 = winding_degree_with(&u, &disk, 2 * w.samples).unwrap();
        prop_assert_eq!(w.degree, w2.degree);
    }

    #[test]
    fn conjugation_negates_and_rotation_preserves(u in zzbar_poly(), theta in 0.0f64..std::f64::consts::TAU) {
        let disk = Disk2::UNIT;
        let Ok(w) = winding_degree(&u, &disk) else { return Ok(()); };
        prop_assert_eq!(winding_degree(&u.conj(), &disk).unwrap().degree, -w.degree);
        let rot = C::from_polar(1.0, theta);
        let r = FnMap::new(|p: [f64; 2]| { let z = rot * C::new(p[0], p[1]); u.value([z.re, z.im]) });
        prop_assert_eq!(winding_degree(&r, &disk).unwrap().degree, w.degree);
    }

    #[test]
    fn holomorphic_zeros_are_positive(roots in prop::collection::vec(cplx(0.6), 1..4), lead in cplx(2.0)) {
        prop_assume!(lead.norm() > 0.2);
        for (k, a) in roots.iter().enumerate() {
            for b in &roots[k + 1..] {
                prop_assume!((a - b).norm() > 0.05);
            }
        }
        let u = ZZbarPoly::from_roots(&roots, lead);
        let w = winding_degree(&u, &Disk2::UNIT);
        prop_assume!(!matches!(w, Err(DegreeError::NotAdmissible { .. })));
        let zs = signed_zeros(&u, &Disk2::UNIT, 64).unwrap();
        prop_assert!(zs.iter().all(|z| z.sign == 1));
        prop_assert_eq!(w.unwrap().degree, roots.len() as i64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn cauchy_transform_inverts_dbar(k in 0usize..5) {
        let grid = PolarGrid::new(1.0, 48, 96);
        let f: fn(C) -> C = [|_| C::new(1.0, 0.0), |z| z, |z: C| z.conj(), |z: C| z * z.conj(), |z: C| z.exp()][k];
        let field = PlanarField::from_fn(grid, f);
        let tf = cauchy_transform(&field);
        let (r, _) = transform_residual(&tf, &field);
        prop_assert!(r <= 1e-3, "residual {r}");
    }

    #[test]
    fn carleman_preserves_zeros(roots in prop::collection::vec(cplx(0.2), 1..3), e1 in cplx(0.5), e2 in cplx(0.5), c2 in cplx(0.3)) {
        let grid = PolarGrid::new(1.0, 48, 64);
        let sigma = ZZbarPoly::from_roots(&roots, C::new(1.0, 0.0));
        // E = e1 conj(z) + e2 |z|^2, so dbar E = e1 + e2 z.
        let v = |z: C| (e1 * z.conj() + e2 * z * z.conj()).exp() * sigma.eval(z);
        let c1 = |z: C| {
            let vv = v(z);
            let ratio = if vv.norm() > 0.0 { vv.conj() / vv } else { C::new(0.0, 0.0) };
            -(e1 + e2 * z) - c2 * ratio
        };
        let vf = PlanarField::from_fn(grid, v);
        let c = carleman_factor(&vf, &CRSystem::from_fns(grid, c1, |_| c2)).unwrap();
        prop_assert!(c.min_abs_phi > 0.0);
        // Common circle |z| = r avoiding the roots.
        let r = 0.7 * c.delta;
        prop_assume!(roots.iter().all(|a| (a.norm() - r).abs() > 0.05 * c.delta));
        let disk = Disk2::new([0.0, 0.0], r);
        let wv = winding_degree(&FnMap::new(|p: [f64; 2]| { let w = v(C::new(p[0], p[1])); [w.re, w.im] }), &disk).unwrap().degree;
        let ws = winding_degree(&FnMap::new(|p: [f64; 2]| { let w = c.sigma.eval(C::new(p[0], p[1])); [w.re, w.im] }), &disk).unwrap().degree;
        let inside = roots.iter().filter(|a| a.norm() < r).count() as i64;
        prop_assert_eq!(wv, inside);
        prop_assert_eq!(ws, inside);
    }

    #[test]
    fn flat_disk_zeros_match_restricted_polynomial(kind in 0usize..3, a in cplx(0.2), c in prop::array::uniform2(cplx(0.3)), d0 in 0.0f64..std::f64::consts::TAU) {
        let d = [C::from_polar(1.0, d0) * 0.8, C::from_polar(0.6, 2.0 * d0)];
        let j = AlmostComplexStructure::standard(Domain::cube(2.0));
        let rho = 0.5;
        let roots = poly_roots(restricted(kind, a, c, d));
        let r_check = 0.4;
        prop_assume!(roots.iter().all(|z| (z.norm() - r_check).abs() > 0.02));
        for (k, p) in roots.iter().enumerate() {
            for q in &roots[k + 1..] {
                prop_assume!((p - q).norm() > 0.02);
            }
        }
        let disk = solve_disk(&j, &real4(c), d, rho, &DiskOptions::coarse()).unwrap();
        let frame = DiskFrame::constant_on(&j, &disk, PolarGrid::new(r_check / 0.8, 32, 64), real4(jcurve_complement(d)));
        let alpha = re_holo(&fixture_text(kind, a), Domain::cube(2.0));
        let s = trivialize_along(&alpha, &j, &frame, &TrivializeOptions::default()).unwrap();
        prop_assert!(s.theorem_residual <= 1e-3);
        let mut want: Vec<C> = roots.into_iter().filter(|z| z.norm() < s.zero_radius).collect();
        want.sort_by(|p, q| (p.re, p.im).partial_cmp(&(q.re, q.im)).unwrap());
        prop_assert_eq!(s.zeros.len(), want.len());
        for (z, w) in s.zeros.iter().zip(&want) {
            prop_assert!((z.location - w).norm() <= 1e-6, "{} vs {}", z.location, w);
            prop_assert_eq!(z.multiplicity, 1);
        }
    }

    #[test]
    fn index_matches_divisor_and_is_stable(kind in 0usize..3, a in cplx(0.2), c in prop::array::uniform2(cplx(0.3)), d0 in 0.0f64..std::f64::consts::TAU, t in 0.0f64..std::f64::consts::TAU) {
        let d = [C::from_polar(1.0, d0) * 0.8, C::from_polar(0.6, 2.0 * d0)];
        let j = AlmostComplexStructure::standard(Domain::cube(2.0));
        let radius = 0.5;
        let roots = poly_roots(restricted(kind, a, c, d));
        prop_assume!(roots.iter().all(|z| (z.norm() - radius).abs() > 0.03));
        let alpha = re_holo(&fixture_text(kind, a), Domain::cube(2.0));
        let disk = TestDisk::flat(real4(c), d, radius).with_holomorphic(true);
        let r = intersection_index(&alpha, &j, &disk).unwrap();
        let inside = roots.iter().filter(|z| z.norm() < radius).count() as i64;
        prop_assert_eq!(r.total, inside);
        if inside > 0 {
            prop_assert!(r.total > 0);
        }
        // A constant anti-invariant eta below half the margin keeps the index.
        let unit = TwoForm::re_holo(&jcurve::expr::parse_complex(&format!("({} + {}*i)", t.cos(), t.sin()), &jcurve::expr::W_COORDS).unwrap(), Domain::cube(2.0));
        let sup = {
            let s = SectionMap::new(&unit, &j, &disk);
            (0..256).map(|k| s.at_zeta(C::from_polar(radius, k as f64 * std::f64::consts::TAU / 256.0)).norm()).fold(0.0, f64::max)
        };
        let eta = unit.scale(&FieldExpr::constant(0.45 * r.margin / sup));
        let perturbed = alpha.add(&eta);
        prop_assert_eq!(intersection_index(&perturbed, &j, &disk).unwrap().total, r.total);
    }

    #[test]
    fn zero_count_equals_boundary_winding(kind in 0usize..3, a in cplx(0.2), c in prop::array::uniform2(cplx(0.3))) {
        let d = [C::new(0.8, 0.0), C::new(0.3, 0.2)];
        let j = AlmostComplexStructure::standard(Domain::cube(2.0));
        let alpha = re_holo(&fixture_text(kind, a), Domain::cube(2.0));
        let roots = poly_roots(restricted(kind, a, c, d));
        prop_assume!(roots.iter().all(|z| (z.norm() - 0.4).abs() > 0.04));
        let disk = TestDisk::flat(real4(c), d, 0.4).with_holomorphic(true);
        let s = SectionMap::new(&alpha, &j, &disk);
        let boundary = winding_degree(&FnMap::new(|p: [f64; 2]| { let w = s.at_zeta(C::new(0.4 * p[0], 0.4 * p[1])); [w.re, w.im] }), &Disk2::UNIT);
        prop_assume!(!matches!(boundary, Err(DegreeError::NotAdmissible { .. })));
        let boundary = boundary.unwrap();
        let zs = zeros_with_multiplicity(&|z| s.at_zeta(z), 0.4).unwrap();
        prop_assert_eq!(zs.iter().map(|z| z.multiplicity).sum::<i64>(), boundary.degree);
    }
}

/// Hermitian complement of `d`, a transverse constant direction.
fn jcurve_complement(d: [C; 2]) -> [C; 2] {
    [-d[1].conj(), d[0].conj()]
}
