use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn jcurve(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_jcurve")).args(args).output().expect("binary runs");
    out.status.code().expect("exit code")
}

fn scene(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn value<'a>(r: &'a Value, key: &str) -> &'a Value {
    &r["results"][key]["value"]
}

#[test]
fn degree_of_modulus_squared_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scene(tmp.path(), "s.toml", "[degree]\nu = \"x*x+y*y\"\n");
    let out = tmp.path().join("run");
    assert_eq!(jcurve(&["degree", "--scene", &s, "--out", out.to_str().unwrap()]), 0);
    let r = report(&out);
    assert_eq!(r["schema"], "v1");
    assert_eq!(value(&r, "I"), 0);
    assert_eq!(r["results"]["I"]["tol"], 0);
    assert!(out.join("run.log").exists() && out.join("run.json").exists() && out.join("degree_zeros.csv").exists());
}

#[test]
fn degree_of_z_cubed_from_complex_expression() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scene(tmp.path(), "s.toml", "[degree]\nz = \"z^3 - 0.1\"\n");
    let out = tmp.path().join("run");
    assert_eq!(jcurve(&["degree", "--scene", &s, "--out", out.to_str().unwrap()]), 0);
    let r = report(&out);
    assert_eq!(value(&r, "I"), 3);
    assert_eq!(value(&r, "perturbed_count"), 3);
}

#[test]
fn invalid_structure_exits_with_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    let j = r#"j = ["1","0","0","0", "0","0","-1","0", "0","1","0","0", "0","0","0","1"]"#;
    let s = scene(tmp.path(), "s.toml", j);
    let out = tmp.path().join("run");
    assert_eq!(jcurve(&["validate", "--scene", &s, "--out", out.to_str().unwrap()]), 3);
    let r = report(&out);
    assert_eq!(r["status"], "error");
    assert!(value(&r, "j_square_residual").as_f64().unwrap() > 1.0);
    assert_eq!(r["results"]["j_square_location"].as_array().unwrap().len(), 4);
}

#[test]
fn exit_codes_by_failure_class() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = out.to_str().unwrap();
    assert_eq!(jcurve(&["frobnicate"]), 2);
    let bad_toml = scene(tmp.path(), "a.toml", "seed = [");
    assert_eq!(jcurve(&["validate", "--scene", &bad_toml, "--out", o]), 2);
    let bad_expr = scene(tmp.path(), "b.toml", "alpha = \"re_holo(w0 +)\"");
    assert_eq!(jcurve(&["zeroset", "--scene", &bad_expr, "--out", o]), 2);
    // Omega0 is J-invariant, so it cannot be used where anti-invariance is required.
    let invariant = scene(tmp.path(), "c.toml", "alpha = \"omega0\"");
    assert_eq!(jcurve(&["index", "--scene", &invariant, "--out", o]), 3);
    let pole = scene(tmp.path(), "d.toml", "[hartogs]\ngamma = \"1 / xi\"\n");
    assert_eq!(jcurve(&["hartogs", "--scene", &pole, "--out", o]), 4);
    assert_eq!(report(&out)["status"], "error");
}

#[test]
fn zeroset_of_nodal_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scene(tmp.path(), "s.toml", "alpha = \"re_holo(w0*w1)\"\n");
    let out = tmp.path().join("run");
    assert_eq!(jcurve(&["zeroset", "--scene", &s, "--out", out.to_str().unwrap()]), 0);
    let r = report(&out);
    let slope = value(&r, "box_slope").as_f64().unwrap();
    assert!((1.8..=2.2).contains(&slope), "slope {slope}");
    assert_eq!(r["results"]["interior_empty"], true);
    let pts = fs::read_to_string(out.join("zeroset_points.csv")).unwrap();
    let mut lines = pts.lines();
    assert_eq!(lines.next().unwrap(), "x1,x2,x3,x4,abs_alpha,segment");
    // Both sheets {w0 = 0} and {w1 = 0} are sampled away from the node.
    let (mut a, mut b) = (false, false);
    for l in lines {
        let v: Vec<f64> = l.split(',').take(4).map(|t| t.parse().unwrap()).collect();
        a |= v[0].hypot(v[1]) < 1e-6 && v[2].hypot(v[3]) > 0.5;
        b |= v[2].hypot(v[3]) < 1e-6 && v[0].hypot(v[1]) > 0.5;
    }
    assert!(a && b);
}

#[test]
fn report_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
seed = 7
j = { builtin = "perturbed", eps = 0.05 }
alpha = "re_holo(w0 - 0.1)"
project = true
[index]
disks = [ { center = [0.0, 0.0, 0.2, 0.0], solve = true, radius = 0.3 } ]
"#;
    let s = scene(tmp.path(), "s.toml", text);
    for cmd in ["index", "axioms", "split"] {
        let (a, b) = (tmp.path().join(format!("{cmd}1")), tmp.path().join(format!("{cmd}2")));
        assert_eq!(jcurve(&[cmd, "--scene", &s, "--out", a.to_str().unwrap()]), 0, "{cmd}");
        assert_eq!(jcurve(&[cmd, "--scene", &s, "--out", b.to_str().unwrap()]), 0, "{cmd}");
        assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap(), "{cmd}");
    }
}

#[test]
fn index_reports_per_disk_and_precomposition() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
alpha = "re_holo(w0*w1)"
[index]
disks = [
  { label = "plain", center = [0.0, 0.0, 0.3, 0.0], holomorphic = true },
  { label = "cubed", center = [0.0, 0.0, 0.3, 0.0], holomorphic = true, power = 3 },
  { label = "unmarked", center = [0.0, 0.0, 0.3, 0.0], dir = [[1.0, 0.0], [0.0, 0.0]] },
]
"#;
    let s = scene(tmp.path(), "s.toml", text);
    let out = tmp.path().join("run");
    assert_eq!(jcurve(&["index", "--scene", &s, "--out", out.to_str().unwrap()]), 0);
    let r = report(&out);
    let d = &r["results"]["disks"];
    assert_eq!(d["plain"]["index"]["value"], 1);
    assert_eq!(d["cubed"]["index"]["value"], 3);
    assert_eq!(d["unmarked"]["index"]["value"], 1);
    assert_eq!(d["plain"]["holomorphic"], true);
}

#[test]
fn flags_override_the_scene() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    assert_eq!(jcurve(&["axioms", "--grid", "6", "--seed", "3", "--out", out.to_str().unwrap()]), 0);
    let r = report(&out);
    assert_eq!(r["seed"], 3);
    assert_eq!(r["results"]["homotopy"]["pass"]["value"], 6);
    let csv = fs::read_to_string(out.join("axioms.csv")).unwrap();
    assert!(csv.starts_with("axiom,label,status,detail"));
}

#[test]
fn remaining_subcommands_run() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
j = { builtin = "rotated", h = "w0 + 0.2*w0*w1", lambda = "0.5 + 0.3*x3" }
alpha = "re_holo(w0 + 0.2*w0*w1)"
[grids]
family_n_w = 5
[disk]
center = [0.0, 0.0, 0.1, 0.0]
rho = 0.1
[hartogs]
gamma = "(exp(xi * w) - 1) / xi"
expected = [0.0, 0.0]
"#;
    let s = scene(tmp.path(), "s.toml", text);
    for cmd in ["validate", "disk", "foliate", "trivialize", "carleman", "hartogs"] {
        let out = tmp.path().join(cmd);
        assert_eq!(jcurve(&[cmd, "--scene", &s, "--out", out.to_str().unwrap()]), 0, "{cmd}");
        let r = report(&out);
        assert_eq!(r["status"], "ok", "{cmd}");
        assert_eq!(r["command"], cmd);
    }
    let r = report(&tmp.path().join("disk"));
    assert!(value(&r, "residual").as_f64().unwrap() <= 1e-6);
    let r = report(&tmp.path().join("foliate"));
    assert!(value(&r, "closeness_excess").as_f64().unwrap() <= 1e-12);
    let r = report(&tmp.path().join("trivialize"));
    assert_eq!(value(&r, "total_multiplicity"), 1);
    let r = report(&tmp.path().join("carleman"));
    assert_eq!(value(&r, "recovered_multiplicity"), value(&r, "manufactured_multiplicity"));
}
