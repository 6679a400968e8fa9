//! One function per subcommand. Each fills a result map; an error after
//! partial results still leaves those results in `report.json`.

use num_complex::Complex64 as C;
use serde_json::{json, Map, Value};

use super::report::{complex, exact, num, RunDir};
use super::scene::{complex_in, Scene, TestDiskSpec};
use super::{CliError, Command, Overrides};
use crate::cr_solver::{carleman_factor, hartogs_extend, CRSystem, CrError, HartogsOptions, PlanarField, PolarGrid};
use crate::degree::{axioms::fixture_battery, perturb_sign_count_with, winding_degree, Disk2, DegreeError, ExprMap, PlanarMap};
use crate::forms::{anti_invariance_residual, closedness_residual, pullback_by_j, split_form, AlmostComplexStructure, FormsError, TwoForm};
use crate::jdisks::{
    fibre_family, normalize_along_disk, solve_disk, trivialize_alpha, zeros_with_multiplicity, ChartOptions, Disk, DiskOptions, FamilyOptions,
    JDiskError, TrivializeOptions, ZeroCluster,
};
use crate::zero_divisor::{
    box_dimension, interior_emptiness_check, intersection_index, trace_zero_set, write_box_counts_csv, write_points_csv, TestDisk, TraceOptions,
    ZeroDivisorError,
};

type Results = Map<String, Value>;

pub(super) fn dispatch(command: Command, scene: &Scene, ov: &Overrides, dir: &mut RunDir, out: &mut Results) -> Result<(), CliError> {
    match command {
        Command::Validate => validate(scene, ov, dir, out),
        Command::Split => split(scene, ov, dir, out),
        Command::Degree => degree(scene, ov, dir, out),
        Command::Axioms => axioms(scene, ov, dir, out),
        Command::Disk => disk(scene, ov, dir, out),
        Command::Foliate => foliate(scene, ov, dir, out),
        Command::Trivialize => trivialize(scene, ov, dir, out),
        Command::Carleman => carleman(scene, ov, dir, out),
        Command::Zeroset => zeroset(scene, ov, dir, out),
        Command::Index => index(scene, ov, dir, out),
        Command::Hartogs => hartogs(scene, ov, dir, out),
    }
}

fn degree_error(e: DegreeError) -> CliError {
    match e {
        DegreeError::NotAdmissible { .. } => CliError::Validation(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn jdisk_error(e: JDiskError) -> CliError {
    match e {
        JDiskError::NotClosed { .. } => CliError::Validation(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn cr_error(e: CrError) -> CliError {
    CliError::Numerical(e.to_string())
}

fn zd_error(e: ZeroDivisorError) -> CliError {
    match e {
        ZeroDivisorError::Admissibility(_)
        | ZeroDivisorError::NotClosed { .. }
        | ZeroDivisorError::NotAntiInvariant { .. }
        | ZeroDivisorError::Trivial { .. }
        | ZeroDivisorError::Forms(_) => CliError::Validation(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

fn polar(scene_n_r: usize, scene_n_theta: usize, ov: &Overrides) -> (usize, usize) {
    match ov.grid {
        Some(n) => (n, 2 * n),
        None => (scene_n_r, scene_n_theta),
    }
}

fn disk_options(scene: &Scene, ov: &Overrides) -> DiskOptions {
    let (n_r, n_theta) = polar(scene.grids.disk_n_r, scene.grids.disk_n_theta, ov);
    let accept = ov.tol.unwrap_or(scene.tolerances.disk);
    DiskOptions { n_r, n_theta, tol: accept.min(1e-8), accept, ..DiskOptions::default() }
}

/// Scene with the validation grid overridden by `--grid`.
fn with_validation_grid(scene: &Scene, ov: &Overrides) -> Scene {
    let mut s = scene.clone();
    if let Some(n) = ov.grid {
        s.grids.validation = n;
    }
    if let Some(t) = ov.tol {
        s.tolerances.validation = t;
    }
    s
}

fn structure(scene: &Scene, out: &mut Results, dir: &mut RunDir) -> Result<AlmostComplexStructure, CliError> {
    let (j, r) = scene.validated_structure()?;
    out.insert("j_square_residual".into(), num(r, scene.tolerances.validation));
    dir.log(format!("J^2 + I residual {r:.3e}"));
    Ok(j)
}

fn anti_form(scene: &Scene, j: &AlmostComplexStructure, out: &mut Results, dir: &mut RunDir) -> Result<TwoForm, CliError> {
    let (alpha, r) = scene.anti_invariant_form(j)?;
    out.insert("anti_invariance_residual".into(), num(r, scene.tolerances.validation));
    out.insert("projected".into(), json!(scene.project));
    dir.log(format!("alpha anti-invariance residual {r:.3e} (projected: {})", scene.project));
    Ok(alpha)
}

fn validate(scene: &Scene, ov: &Overrides, dir: &mut RunDir, out: &mut Results) -> Result<(), CliError> {
    let scene = with_validation_grid(scene, ov);
    let tol = scene.tolerances.validation;
    out.insert("domain".into(), json!(scene.domain()?.lo.iter().zip(scene.domain()?.hi.iter()).map(|(a, b)| [*a, *b]).collect::<Vec<_>>()));
    out.insert("sample_points".into(), exact(scene.sampling().points(&scene.domain()?).len() as i64));
    let j = scene.structure()?;
    match j.validate(&scene.sampling()) {
        Ok(r) => {
            out.insert("j_square_residual".into(), num(r, tol));
            dir.log(format!("J^2 + I residual {r:.3e}"));
        }
        Err(FormsError::NotComplexStructure { residual, at }) => {
            out.insert("j_square_residual".into(), num(residual, tol));
            out.insert("j_square_location".into(), json!(at));
            dir.log(format!("J^2 + I residual {residual:.3e} at {at:?}"));
            return Err(CliError::Validation(format!("J^2 + I has max entry {residual:.3e} at {at:?}")));
        }
        Err(e) => return Err(CliError::Validation(e.to_string())),
    }
    if scene.alpha.is_some() {
        let alpha = scene.form()?;
        let sampling = scene.sampling();
        let (anti, at) = anti_invariance_residual(&alpha, &j, &sampling);
        let closed = closedness_residual(&alpha, &sampling);
        out.insert("anti_invariance_residual".into(), num(anti, tol));
        out.insert("anti_invariance_location".into(), json!(at));
        out.insert("anti_invariant".into(), json!(anti <= tol));
        out.insert("closedness_residual".into(), num(closed, tol));
        out.insert("closed".into(), json!(closed <= tol));
        dir.log(format!("alpha: anti-invariance {anti:.3e} at {at:?}, |d alpha| {closed:.3e}"));
    }
    Ok(())
}

fn split(scene: &Scene, ov: &Overrides, dir: &mut RunDir, out: &mut Results) -> Result<(), CliError> {
    let scene = with_validation_grid(scene, ov);
    let tol = scene.tolerances.validation;
    let j = structure(&scene, out, dir)?;
    let alpha = scene.form()?;
    let (plus, minus) = split_form(&alpha, &j);
    let sampling = scene.sampling();
    let points = sampling.points(&scene.domain()?);
    let (mut recon, mut inv, mut scale) = (0.0f64, 0.0f64, 0.0f64);
    let mut rows = Vec::with_capacity(points.len());
    for x in &points {
        let (a, p, m) = (alpha.at(x), plus.at(x), minus.at(x));
        scale = scale.max(a.iter().fold(0.0, |s, v| s.max(v.abs())));
        for k in 0..6 {
            recon = recon.max((p[k] + m[k] - a[k]).abs());
        }
        let pulled = pullback_by_j(&plus, &j, x).map_err(|e| CliError::Validation(e.to_string()))?;
        let pm = plus.matrix_at(x);
        for r in 0..4 {
            for c in 0..4 {
                inv = inv.max((pulled[r][c] - pm[r][c]).abs());
            }
        }
        rows.push(x.iter().chain(p.iter()).chain(m.iter()).map(|v| fmt(*v)).collect());
    }
    let (anti, _) = anti_invariance_residual(&minus, &j, &sampling);
    out.insert("alpha_sup".into(), num(scale, 0.0));
    out.insert("reconstruction_residual".into(), num(recon, crate::forms::STRUCTURAL_TOL * scale.max(1.0)));
    out.insert("invariance_residual_plus".into(), num(inv, tol));
    out.insert("anti_invariance_residual_minus".into(), num(anti, tol));
    dir.log(format!("split on {} points: reconstruction {recon:.3e}, alpha+ invariance {inv:.3e}, alpha- anti-invariance {anti:.3e}", points.len()));
    let header = ["x1", "x2", "x3", "x4", "p12", "p13", "p14", "p23", "p24", "p34", "m12", "m13", "m14", "m23", "m24", "m34"];
    dir.csv("split.csv", &header, rows)?;
    if recon > crate::forms::STRUCTURAL_TOL * scale.max(1.0) || inv > tol || anti > tol {
        return Err(CliError::Numerical("splitting identities exceed their tolerances".into()));
    }
    Ok(())
}

fn degree(scene: &Scene, ov: &Overrides, dir: &mut RunDir, out: &mut Results) -> Result<(), CliError> {
    let spec = &scene.degree;
    let map = match (&spec.z, &spec.u, &spec.v) {
        (Some(z), None, None) => {
            let e = complex_in(z, &[("z", 0, 1)])?;
            ExprMap::new(&e.re, &e.im)
        }
        (None, Some(u), v) => ExprMap::parse(u, v.as_deref().unwrap_or("0")).map_err(|e| CliError::Parse(format!("degree map: {e}")))?,
        _ => return Err(CliError::Parse("degree needs either `z` or `u` (and optionally `v`)".into())),
    };
    if !(spec.radius > 0.0) {
        return Err(CliError::Validation(format!("degree radius must be positive, got {}", spec.radius)));
    }
    let disk = Disk2::new(spec.center, spec.radius);
    let scan = ov.grid.unwrap_or(scene.grids.degree_scan);
    let w = winding_degree(&map, &disk).map_err(degree_error)?;
    out.insert("I".into(), exact(w.degree));
    out.insert("boundary_margin".into(), num(w.margin, 0.0));
    out.insert("boundary_samples".into(), exact(w.samples as i64));
    out.insert("max_increment".into(), num(w.max_increment, std::f64::consts::FRAC_PI_2));
    dir.log(format!("winding degree {} ({} samples, margin {:.3e})", w.degree, w.samples, w.margin));
    let p = perturb_sign_count_with(&map, &disk, scene.seed, scan).map_err(degree_error)?;
    out.insert("perturbed_count".into(), exact(p.total));
    out.insert("perturbation".into(), num(p.delta, w.margin));
    out.insert("perturbation_attempts".into(), exact(p.attempts as i64));
    dir.log(format!("perturbed sign count {} ({} zeros, delta {:.3e}, {} attempts)", p.total, p.zeros.len(), p.delta, p.attempts));
    let rows = p.zeros.iter().map(|z| vec![fmt(z.location[0]), fmt(z.location[1]), z.sign.to_string(), fmt(z.jacobian_det)]);
    dir.csv("degree_zeros.csv", &["x", "y", "sign", "jacobian_det"], rows)?;
    let v = map.value(spec.center);
    out.insert("value_at_center".into(), json!([v[0], v[1]]));
    if p.total != w.degree {
        return Err(CliError::Numerical(format!("winding degree {} disagrees with perturbed count {}", w.degree, p.total)));
    }
    Ok(())
}

fn axioms(scene: &Scene, ov: &Overrides, dir: &mut RunDir, out: &mut Results) -> Result<(), CliError> {
    let per = ov.grid.unwrap_or(scene.axioms.per_axiom);
    let report = fixture_battery(per, scene.seed);
    let names = ["vanishing", "homotopy", "composition", "additivity", "normalization"];
    for (k, name) in names.iter().enumerate() {
        let t = report.tally(k as u8 + 1);
        out.insert((*name).into(), json!({ "pass": exact(t.pass as i64), "fail": exact(t.fail as i64), "skip": exact(t.skip as i64) }));
        dir.log(format!("axiom {} {name}: {} pass, {} fail, {} skip", k + 1, t.pass, t.fail, t.skip));
    }
    out.insert("failures".into(), exact(report.failures() as i64));
    let rows = report.checks.iter().map(|c| {
        let (status, detail) = match &c.outcome {
            crate::degree::axioms::Outcome::Pass => ("pass", String::new()),
            crate::degree::axioms::Outcome::Fail { expected, got } => ("fail", format!("expected {expected}, got {got}")),
            crate::degree::axioms::Outcome::Skip { reason } => ("skip", reason.clone()),
        };
        vec![c.axiom.to_string(), c.label.clone(), status.to_string(), detail]
    });
    dir.csv("axioms.csv", &["axiom", "label", "status", "detail"], rows)?;
    if report.failures() > 0 {
        return Err(CliError::Numerical(format!("{} axiom checks failed", report.failures())));
    }
    Ok(())
}

fn disk_csv(dir: &mut RunDir, name: &str, disk: &Disk) -> Result<(), CliError> {
    let g = *disk.grid();
    let pts = disk.points();
    let mut rows = Vec::with_capacity(g.len());
    for jr in 0..g.n_r {
        for l in 0..g.n_theta {
            let z = g.point(jr, l);
            let p = pts[g.index(jr, l)];
            rows.push([z.re, z.im, p[0], p[1], p[2], p[3]].iter().map(|v| fmt(*v)).collect());
        }
    }
    dir.csv(name, &["s", "t", "x1", "x2", "x3", "x4"], rows)
}

fn disk_results(disk: &Disk, accept: f64, out: &mut Results) {
    out.insert("residual".into(), num(disk.residual, accept));
    out.insert("rho".into(), num(disk.rho, 0.0));
    out.insert("iterations".into(), exact(disk.iterations as i64));
    out.insert("halvings".into(), exact(disk.halvings as i64));
    out.insert("separation".into(), num(disk.separation, 0.0));
    out.insert("flat_deviation".into(), num(disk.flat_deviation(), accept));
}

fn disk(scene: &Scene, ov: &Overrides, dir: &mut RunDir, out: &mut Results) -> Result<(), CliError> {
    let j = structure(scene, out, dir)?;
    let opts = disk_options(scene, ov);
    let spec = &scene.disk;
    let d = solve_disk(&j, &spec.center, spec.kappa(), spec.rho, &opts).map_err(jdisk_error)?;
    disk_results(&d, opts.accept, out);
    dir.log(format!(
        "disk at {:?}: residual {:.3e} after {} iterations, rho {:.4} ({} halvings)",
        spec.center, d.residual, d.iterations, d.rho, d.halvings
    ));
    disk_csv(dir, "disk.csv", &d)
}

/// Hermitian complement of `kappa` in `C^2`.
fn complement(kappa: [C; 2]) -> [C; 2] {
    [-kappa[1].conj(), kappa[0].conj()]
}

fn foliate(scene: &Scene, ov: &Overrides, dir: &mut RunDir, out: &mut Results) -> Result<(), CliError> {
    let j = structure(scene, out, dir)?;
    let disk = DiskOptions { ..disk_options(scene, &Overrides { grid: None, ..*ov }) };
    let n_w = ov.grid.unwrap_or(scene.grids.family_n_w);
    if n_w < 4 {
        return Err(CliError::Validation(format!("family needs at least 4 nodes per axis, got {n_w}")));
    }
    let spec = &scene.disk;
    let opts = FamilyOptions { n_w, w_radius: scene.foliate.w_radius, disk, ..FamilyOptions::default() };
    let fam = fibre_family(&j, &spec.center, spec.kappa(), spec.rho, &opts).map_err(jdisk_error)?;
    out.insert("n_w".into(), exact(n_w as i64));
    out.insert("rho".into(), num(fam.rho, 0.0));
    out.insert("w_radius".into(), num(fam.w_radius, 0.0));
    out.insert("z".into(), num(fam.z, 0.0));
    out.insert("z_m".into(), num(fam.z_m, 0.0));
    out.insert("min_jacobian".into(), num(fam.min_jacobian, opts.min_jacobian));
    out.insert("max_residual".into(), num(fam.max_residual, disk.accept));
    // Re-check |L - Q| <= z rho |xi| at every node and grid point.
    let mut worst = 0.0f64;
    let mut rows = Vec::with_capacity(n_w * n_w);
    for a in 0..n_w {
        for b in 0..n_w {
            let w = fam.node(a, b);
            let m = fam.member(a, b);
            let g = *m.grid();
            for jr in 0..g.n_r {
                for l in 0..g.n_theta {
                    let xi = g.point(jr, l);
                    let lin = fam.linear(xi, w);
                    let p = m.point(g.index(jr, l));
                    let d = (0..4).map(|k| (lin[k] - p[k]).powi(2)).sum::<f64>().sqrt();
                    worst = worst.max(d - fam.z * fam.rho * xi.norm());
                }
            }
            rows.push(vec![fmt(w.re), fmt(w.im), fmt(m.residual), fmt(m.separation)]);
        }
    }
    out.insert("closeness_excess".into(), num(worst, 1e-12));
    dir.log(format!(
        "family {n_w}x{n_w}: z {:.4e}, z_m {:.4e}, min jacobian {:.4}, max residual {:.3e}, closeness excess {worst:.3e}",
        fam.z, fam.z_m, fam.min_jacobian, fam.max_residual
    ));
    dir.csv("family.csv", &["w_re", "w_im", "residual", "separation"], rows)?;
    if worst > 1e-12 {
        return Err(CliError::Numerical(format!("closeness bound exceeded by {worst:.3e}")));
    }
    Ok(())
}

fn cluster_json(zs: &[ZeroCluster], tol: f64) -> Value {
    Value::Array(zs.iter().map(|z| json!({ "location": complex(z.location, tol), "multiplicity": exact(z.multiplicity) })).collect())
}

fn trivialize(scene: &Scene, ov: &Overrides, dir: &mut RunDir, out: &mut Results) -> Result<(), CliError> {
    let j = structure(scene, out, dir)?;
    let alpha = anti_form(scene, &j, out, dir)?;
    let dopts = disk_options(scene, ov);
    let spec = &scene.disk;
    let d = solve_disk(&j, &spec.center, spec.kappa(), spec.rho, &dopts).map_err(jdisk_error)?;
    let fopts = FamilyOptions { n_w: scene.grids.family_n_w, disk: dopts, ..FamilyOptions::default() };
    let fam = fibre_family(&j, &spec.center, complement(spec.kappa()), d.rho, &fopts).map_err(jdisk_error)?;
    let chart = normalize_along_disk(&j, &d, &fam, &ChartOptions::default()).map_err(jdisk_error)?;
    let cr_tol = ov.tol.unwrap_or(scene.tolerances.cr);
    let topts = TrivializeOptions { cr_tol, closed_tol: scene.tolerances.validation, closed_sampling: scene.sampling(), ..TrivializeOptions::default() };
    let s = trivialize_alpha(&alpha, &j, &chart, &topts).map_err(jdisk_error)?;
    out.insert("disk_residual".into(), num(d.residual, dopts.accept));
    out.insert("chart_block_deviation".into(), num(chart.blocks.max(), ChartOptions::default().block_tol));
    out.insert("transversality_degrees".into(), num(chart.transversality_degrees, ChartOptions::default().min_angle_degrees));
    out.insert("theorem_residual".into(), num(s.theorem_residual, cr_tol));
    out.insert("grid_residual".into(), num(s.grid_residual, cr_tol));
    out.insert("reconstruction".into(), num(s.reconstruction, topts.reconstruction_tol));
    out.insert("min_gram".into(), num(s.min_gram, crate::zero_divisor::GRAM_TOL));
    out.insert("vanishes_identically".into(), json!(s.vanishes_identically));
    out.insert("zero_radius".into(), num(s.zero_radius, 0.0));
    out.insert("zeros".into(), cluster_json(&s.zeros, 1e-6));
    out.insert("total_multiplicity".into(), exact(s.zeros.iter().map(|z| z.multiplicity).sum()));
    if let Some(c) = &s.carleman {
        let sig = c.sigma.sup_norm();
        out.insert(
            "carleman".into(),
            json!({
                "delta": num(c.delta, 0.0),
                "sigma_residual": num(c.sigma_residual, cr_tol * sig),
                "min_abs_phi": num(c.min_abs_phi, 1e-8),
            }),
        );
    }
    dir.log(format!(
        "trivialized along disk at {:?}: theorem residual {:.3e}, {} zero cluster(s), total multiplicity {}",
        spec.center,
        s.theorem_residual,
        s.zeros.len(),
        s.zeros.iter().map(|z| z.multiplicity).sum::<i64>()
    ));
    let g = s.frame.grid;
    let mut rows = Vec::with_capacity(g.len());
    for jr in 0..g.n_r {
        for l in 0..g.n_theta {
            let z = g.point(jr, l);
            let f = s.big_f.at(jr, l);
            rows.push([z.re, z.im, f.re, f.im].iter().map(|v| fmt(*v)).collect());
        }
    }
    dir.csv("section.csv", &["s", "t", "f", "g"], rows)?;
    let zrows = s.zeros.iter().map(|z| vec![fmt(z.location.re), fmt(z.location.im), z.multiplicity.to_string()]);
    dir.csv("zeros.csv", &["s", "t", "multiplicity"], zrows)?;
    if s.theorem_residual > cr_tol {
        return Err(CliError::Numerical(format!("CR residual {:.3e} exceeds {cr_tol:.1e}", s.theorem_residual)));
    }
    Ok(())
}

fn total_multiplicity(f: &dyn Fn(C) -> C, radius: f64) -> Result<(i64, Vec<ZeroCluster>), CliError> {
    let zs = zeros_with_multiplicity(f, radius).map_err(degree_error)?;
    Ok((zs.iter().map(|z| z.multiplicity).sum(), zs))
}

fn carleman(scene: &Scene, ov: &Overrides, dir: &mut RunDir, out: &mut Results) -> Result<(), CliError> {
    let spec = &scene.carleman;
    if !(spec.radius > 0.0) {
        return Err(CliError::Validation(format!("carleman radius must be positive, got {}", spec.radius)));
    }
    let z_var = [("z", 0, 1)];
    let sigma = complex_in(&spec.sigma, &z_var)?;
    let e = complex_in(&spec.exponent, &z_var)?;
    let c2 = complex_in(&spec.c2, &z_var)?;
    // dbar E = (E_x + i E_y) / 2 from exact derivatives.
    let (ex_re, ex_im, ey_re, ey_im) = (e.re.derivative(0), e.im.derivative(0), e.re.derivative(1), e.im.derivative(1));
    let at = |z: C| [z.re, z.im];
    let v_of = |z: C| e.eval(&at(z)).exp() * sigma.eval(&at(z));
    let dbar_e = |z: C| {
        let p = at(z);
        0.5 * (C::new(ex_re.eval(&p), ex_im.eval(&p)) + C::i() * C::new(ey_re.eval(&p), ey_im.eval(&p)))
    };
    let c1 = |z: C| {
        let v = v_of(z);
        let ratio = if v.norm() > 0.0 { v.conj() / v } else { C::new(0.0, 0.0) };
        -dbar_e(z) - c2.eval(&at(z)) * ratio
    };
    let (n_r, n_theta) = polar(scene.grids.carleman_n_r, scene.grids.carleman_n_theta, ov);
    if n_r < 4 || n_theta < 8 || n_theta % 2 != 0 {
        return Err(CliError::Validation(format!("invalid polar grid {n_r} x {n_theta}")));
    }
    let grid = PolarGrid::new(spec.radius, n_r, n_theta);
    let v = PlanarField::from_fn(grid, v_of);
    let sys = CRSystem::from_fns(grid, c1, |z| c2.eval(&at(z)));
    let cr_tol = ov.tol.unwrap_or(scene.tolerances.cr);
    let c = carleman_factor(&v, &sys).map_err(cr_error)?;
    let sig_sup = c.sigma.sup_norm();
    out.insert("input_residual".into(), num(c.input_residual, crate::cr_solver::CR_RESIDUAL_PRECONDITION));
    out.insert("delta".into(), num(c.delta, 0.0));
    out.insert("sigma_residual".into(), num(c.sigma_residual, cr_tol * sig_sup));
    out.insert("min_abs_phi".into(), num(c.min_abs_phi, 1e-8));
    let r_check = 0.8 * c.delta;
    let (want, want_z) = total_multiplicity(&|z| sigma.eval(&at(z)), r_check)?;
    let (got, got_z) = total_multiplicity(&|z| c.sigma.eval(z), r_check)?;
    out.insert("zero_radius".into(), num(r_check, 0.0));
    out.insert("manufactured_zeros".into(), cluster_json(&want_z, 1e-6));
    out.insert("recovered_zeros".into(), cluster_json(&got_z, 1e-6));
    out.insert("manufactured_multiplicity".into(), exact(want));
    out.insert("recovered_multiplicity".into(), exact(got));
    dir.log(format!(
        "carleman on radius {}: delta {:.4}, dbar sigma {:.3e} (sup sigma {:.3e}), min |Phi| {:.3e}, multiplicity {got} vs {want}",
        spec.radius, c.delta, c.sigma_residual, sig_sup, c.min_abs_phi
    ));
    let g = *c.sigma.grid();
    let mut rows = Vec::with_capacity(g.len());
    for jr in 0..g.n_r {
        for l in 0..g.n_theta {
            let z = g.point(jr, l);
            let (p, s) = (c.phi.at(jr, l), c.sigma.at(jr, l));
            rows.push([z.re, z.im, p.re, p.im, s.re, s.im].iter().map(|v| fmt(*v)).collect());
        }
    }
    dir.csv("carleman.csv", &["s", "t", "phi_re", "phi_im", "sigma_re", "sigma_im"], rows)?;
    if c.sigma_residual > cr_tol * sig_sup || c.min_abs_phi < 1e-8 || got != want {
        return Err(CliError::Numerical("recovered factorization fails its checks".into()));
    }
    Ok(())
}

fn zeroset(scene: &Scene, ov: &Overrides, dir: &mut RunDir, out: &mut Results) -> Result<(), CliError> {
    let j = structure(scene, out, dir)?;
    let alpha = anti_form(scene, &j, out, dir)?;
    let domain = scene.domain()?;
    let zero_tol = ov.tol.unwrap_or(scene.tolerances.zero);
    let [k0, k1] = scene.zeroset.ladder;
    if !(k0 < k1) {
        return Err(CliError::Validation(format!("ladder must be increasing, got [{k0}, {k1}]")));
    }
    let opts = TraceOptions {
        resolution: ov.grid.unwrap_or(scene.grids.zeroset_scan),
        ladder: (k0, k1),
        zero_tol,
        validation: scene.sampling(),
        ..TraceOptions::default()
    };
    let sample = trace_zero_set(&alpha, &j, &domain, &opts).map_err(zd_error)?;
    out.insert("points".into(), exact(sample.points.len() as i64));
    out.insert("segments".into(), exact(sample.segments.len() as i64));
    out.insert("flagged".into(), exact(sample.flagged as i64));
    out.insert("capped".into(), json!(sample.capped));
    out.insert("singular_points".into(), exact(sample.singular_points().count() as i64));
    out.insert("step".into(), num(sample.step, 0.0));
    let max_abs = sample.points.iter().map(|p| p.abs_alpha).fold(0.0, f64::max);
    out.insert("max_abs_alpha".into(), num(max_abs, zero_tol));
    out.insert(
        "box_counts".into(),
        Value::Array(sample.box_counts.iter().map(|b| json!({ "epsilon": num(b.epsilon, 0.0), "count": exact(b.count as i64) })).collect()),
    );
    dir.log(format!("traced {} points in {} segments ({} flagged)", sample.points.len(), sample.segments.len(), sample.flagged));
    write_points_csv(&sample, dir.create_file("zeroset_points.csv")?).map_err(|e| CliError::Io(e.to_string()))?;
    write_box_counts_csv(&sample, dir.create_file("box_counts.csv")?).map_err(|e| CliError::Io(e.to_string()))?;
    let em = interior_emptiness_check(&alpha, &domain, scene.grids.emptiness).map_err(zd_error)?;
    out.insert("interior_empty".into(), json!(em.empty));
    out.insert("emptiness_offending_cells".into(), exact(em.offending.len() as i64));
    out.insert("emptiness_cells".into(), exact(em.cells as i64));
    dir.log(format!("interior emptiness: {} ({} of {} cells offending)", em.empty, em.offending.len(), em.cells));
    if sample.is_empty() {
        out.insert("empty".into(), json!(true));
        dir.log("zero set is empty on the box");
        return Ok(());
    }
    out.insert("empty".into(), json!(false));
    let dim = box_dimension(&sample).map_err(zd_error)?;
    out.insert("box_slope".into(), num(dim.slope, 0.2));
    out.insert("measure_proxy".into(), num(dim.measure_proxy, 0.0));
    out.insert("ladder_levels".into(), exact(dim.levels as i64));
    dir.log(format!("box-count slope {:.4}, sup N eps^2 {:.4}", dim.slope, dim.measure_proxy));
    Ok(())
}

fn test_disk(j: &AlmostComplexStructure, spec: &TestDiskSpec, label: String, dopts: &DiskOptions) -> Result<TestDisk, CliError> {
    let dir = spec.dir.map(|p| C::new(p[0], p[1]));
    let base = if spec.solve {
        let d = solve_disk(j, &spec.center, dir, spec.radius, dopts).map_err(jdisk_error)?;
        TestDisk::from_disk(&d)
    } else {
        TestDisk::flat(spec.center, dir, spec.radius).with_holomorphic(spec.holomorphic)
    };
    let d = if spec.power > 1 { base.precompose_power(spec.power) } else { base };
    Ok(d.with_label(label))
}

fn index(scene: &Scene, ov: &Overrides, dir: &mut RunDir, out: &mut Results) -> Result<(), CliError> {
    let j = structure(scene, out, dir)?;
    let alpha = anti_form(scene, &j, out, dir)?;
    let dopts = disk_options(scene, &Overrides { tol: None, ..*ov });
    let specs = if scene.index.disks.is_empty() { vec![TestDiskSpec::default()] } else { scene.index.disks.clone() };
    let mut disks = Map::new();
    let mut rows = Vec::new();
    for (k, spec) in specs.iter().enumerate() {
        let label = spec.label.clone().unwrap_or_else(|| format!("disk{k}"));
        if disks.contains_key(&label) {
            return Err(CliError::Validation(format!("duplicate disk label '{label}'")));
        }
        let d = test_disk(&j, spec, label.clone(), &dopts)?;
        let r = intersection_index(&alpha, &j, &d).map_err(zd_error)?;
        let local: Vec<Value> = r
            .local
            .iter()
            .map(|z| json!({ "location": complex(z.location, 1e-6), "sign": exact(z.sign as i64), "multiplicity": exact(z.multiplicity as i64) }))
            .collect();
        for z in &r.local {
            rows.push(vec![label.clone(), fmt(z.location.re), fmt(z.location.im), z.sign.to_string(), z.multiplicity.to_string()]);
        }
        dir.log(format!("{label}: index {} (margin {:.3e}, {} local zero(s))", r.total, r.margin, r.local.len()));
        disks.insert(
            label,
            json!({
                "index": exact(r.total),
                "local_sum": exact(r.local_sum()),
                "margin": num(r.margin, 0.0),
                "min_gram": num(r.min_gram, crate::zero_divisor::GRAM_TOL),
                "holomorphic": d.holomorphic,
                "local": local,
            }),
        );
    }
    out.insert("disks".into(), Value::Object(disks));
    dir.csv("index_zeros.csv", &["disk", "s", "t", "sign", "multiplicity"], rows)
}

fn hartogs(scene: &Scene, ov: &Overrides, dir: &mut RunDir, out: &mut Results) -> Result<(), CliError> {
    let spec = &scene.hartogs;
    let gamma = complex_in(&spec.gamma, &[("xi", 0, 1), ("w", 2, 3)])?;
    let f = |xi: C, w: C| gamma.eval(&[xi.re, xi.im, w.re, w.im]);
    let tol = ov.tol.unwrap_or(scene.tolerances.hartogs);
    let opts = HartogsOptions { w_radius: spec.w_radius, n_w: ov.grid.unwrap_or(scene.grids.hartogs_n_w), negative_tol: tol, ..HartogsOptions::default() };
    let r = hartogs_extend(&f, &opts).map_err(cr_error)?;
    out.insert("value".into(), complex(r.value, 1e-6));
    out.insert("max_negative".into(), num(r.max_negative, tol));
    out.insert("max_dbar_w_a0".into(), num(r.max_dbar_w_a0, opts.dbar_w_tol));
    out.insert("max_holomorphy_residual".into(), num(r.max_holomorphy_residual, 0.0));
    dir.log(format!("extension value {} (max negative coefficient {:.3e})", r.value, r.max_negative));
    let mut rows = Vec::new();
    for (w, coeffs) in &r.coefficients {
        for (k, a) in coeffs.iter().enumerate() {
            rows.push(vec![fmt(w.re), fmt(w.im), (opts.j_min + k as i32).to_string(), fmt(a.re), fmt(a.im)]);
        }
    }
    dir.csv("laurent.csv", &["w_re", "w_im", "j", "re", "im"], rows)?;
    if let Some(e) = spec.expected {
        let err = (r.value - C::new(e[0], e[1])).norm();
        out.insert("expected_error".into(), num(err, 1e-6));
        if err > 1e-6 {
            return Err(CliError::Numerical(format!("extension value {} differs from the expected value by {err:.3e}", r.value)));
        }
    }
    Ok(())
}
