//! Scene files: TOML input describing the box, `J`, `alpha` and per-command
//! parameters. Every field is optional; defaults follow the library.

use num_complex::Complex64 as C;
use serde::Deserialize;

use super::CliError;
use crate::expr::{parse_complex, ComplexExpr, FieldExpr, W_COORDS};
use crate::fixtures::{rotated_structure, shear_structure_from_blocks};
use crate::forms::{anti_invariance_residual, split_form, AlmostComplexStructure, Domain, Sampling, TwoForm, VALIDATION_TOL};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    #[serde(default)]
    pub seed: u64,
    /// Four intervals `[lo, hi]`; defaults to `[-1, 1]^4`.
    pub domain: Option<[[f64; 2]; 4]>,
    pub j: Option<JSpec>,
    pub alpha: Option<AlphaSpec>,
    /// Replace `alpha` by its anti-invariant part before use.
    #[serde(default)]
    pub project: bool,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub degree: DegreeSpec,
    #[serde(default)]
    pub axioms: AxiomsSpec,
    #[serde(default)]
    pub disk: DiskSpec,
    #[serde(default)]
    pub foliate: FoliateSpec,
    #[serde(default)]
    pub index: IndexSpec,
    #[serde(default)]
    pub carleman: CarlemanSpec,
    #[serde(default)]
    pub hartogs: HartogsSpec,
    #[serde(default)]
    pub zeroset: ZerosetSpec,
}

/// `J` as 16 row-major expressions, a builtin name (`"standard"`,
/// `"perturbed(eps)"`), or a table with a `builtin` key.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum JSpec {
    Entries(Vec<String>),
    Name(String),
    Builtin(JBuiltin),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "builtin", rename_all = "lowercase", deny_unknown_fields)]
pub enum JBuiltin {
    Standard,
    /// `A J0 A^-1` for a constant invertible `A`.
    Conjugated { matrix: [[f64; 4]; 4] },
    /// `A J0 A^-1` with `A = (I + eps Nu)(I + eps Nl)`; `upper`/`lower` are the
    /// 2x2 shear blocks, row-major.
    Perturbed { eps: f64, upper: Option<[String; 4]>, lower: Option<[String; 4]> },
    /// Structure making `Re[h dw0 ^ dw1]` anti-invariant, rotated by `lambda`.
    Rotated { h: String, lambda: String },
}

/// `alpha` as 6 coefficient expressions on `dx12, dx13, dx14, dx23, dx24,
/// dx34`, or a name: `"re_holo(h)"`, `"phi0"`, `"omega0"`, `"zero"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Coeffs(Vec<String>),
    Name(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    /// Grid points per axis of the validation sampling.
    pub validation: usize,
    /// Random points added to the validation sampling.
    pub validation_random: usize,
    pub disk_n_r: usize,
    pub disk_n_theta: usize,
    pub family_n_w: usize,
    /// Seed scan of `zeroset`, points per axis.
    pub zeroset_scan: usize,
    /// Cells per axis of the interior-emptiness check.
    pub emptiness: usize,
    /// Scan grid of the signed-zero search in `degree`.
    pub degree_scan: usize,
    pub carleman_n_r: usize,
    pub carleman_n_theta: usize,
    pub hartogs_n_w: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            validation: 4,
            validation_random: 64,
            disk_n_r: 32,
            disk_n_theta: 64,
            family_n_w: 17,
            zeroset_scan: 9,
            emptiness: 8,
            degree_scan: 64,
            carleman_n_r: 48,
            carleman_n_theta: 64,
            hartogs_n_w: 9,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub validation: f64,
    pub disk: f64,
    pub cr: f64,
    pub zero: f64,
    pub hartogs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { validation: VALIDATION_TOL, disk: 1e-6, cr: 1e-3, zero: crate::zero_divisor::ZERO_TOL, hartogs: 1e-8 }
    }
}

/// A planar map: `u`, `v` over `x, y`, or a complex expression `z` in `z`.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegreeSpec {
    pub u: Option<String>,
    pub v: Option<String>,
    pub z: Option<String>,
    pub center: [f64; 2],
    pub radius: f64,
}

impl Default for DegreeSpec {
    fn default() -> Self {
        DegreeSpec { u: None, v: None, z: None, center: [0.0, 0.0], radius: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxiomsSpec {
    pub per_axiom: usize,
}

impl Default for AxiomsSpec {
    fn default() -> Self {
        AxiomsSpec { per_axiom: 20 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiskSpec {
    pub center: [f64; 4],
    /// Complex tangent direction as `[[re, im], [re, im]]`.
    pub kappa: [[f64; 2]; 2],
    pub rho: f64,
}

impl Default for DiskSpec {
    fn default() -> Self {
        DiskSpec { center: [0.0; 4], kappa: [[1.0, 0.0], [0.0, 0.0]], rho: 0.1 }
    }
}

impl DiskSpec {
    pub fn kappa(&self) -> [C; 2] {
        self.kappa.map(|p| C::new(p[0], p[1]))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoliateSpec {
    /// Half-width of the `w` lattice; defaults to the disk radius.
    pub w_radius: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexSpec {
    pub disks: Vec<TestDiskSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestDiskSpec {
    pub label: Option<String>,
    pub center: [f64; 4],
    pub dir: [[f64; 2]; 2],
    pub radius: f64,
    /// Mark the flat disk as J-holomorphic (true for `J0`).
    pub holomorphic: bool,
    /// Replace the flat disk by the solved J-holomorphic disk through
    /// `center` tangent to `dir`.
    pub solve: bool,
    /// Precompose with `zeta -> r (zeta / r)^power`.
    pub power: u32,
}

impl Default for TestDiskSpec {
    fn default() -> Self {
        TestDiskSpec { label: None, center: [0.0; 4], dir: [[1.0, 0.0], [0.0, 0.0]], radius: 0.5, holomorphic: false, solve: false, power: 1 }
    }
}

/// Manufactured `v = exp(E) sigma` with `C1 = -dbar E - C2 conj(v) / v`.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarlemanSpec {
    /// Holomorphic factor, an expression in `z`.
    pub sigma: String,
    /// Exponent `E(z)` of the nonvanishing factor (may use `conj`).
    pub exponent: String,
    pub c2: String,
    pub radius: f64,
}

impl Default for CarlemanSpec {
    fn default() -> Self {
        CarlemanSpec { sigma: "z^2".into(), exponent: "conj(z)^2 / 2".into(), c2: "0".into(), radius: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HartogsSpec {
    /// Expression in `xi` and `w`.
    pub gamma: String,
    pub w_radius: f64,
    /// Known value at the puncture as `[re, im]`, if any.
    pub expected: Option<[f64; 2]>,
}

impl Default for HartogsSpec {
    fn default() -> Self {
        HartogsSpec { gamma: "exp(xi * w)".into(), w_radius: 0.5, expected: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZerosetSpec {
    /// Box sizes `2^-k * size` for `k` in `ladder[0]..=ladder[1]`.
    pub ladder: [i32; 2],
}

impl Default for ZerosetSpec {
    fn default() -> Self {
        ZerosetSpec { ladder: [3, 7] }
    }
}

impl Scene {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(format!("scene: {e}")))
    }

    pub fn domain(&self) -> Result<Domain, CliError> {
        let b = self.domain.unwrap_or([[-1.0, 1.0]; 4]);
        if b.iter().any(|iv| !(iv[0] < iv[1])) {
            return Err(CliError::Validation(format!("domain intervals must satisfy lo < hi: {b:?}")));
        }
        Ok(Domain::new(b.map(|iv| iv[0]), b.map(|iv| iv[1])))
    }

    pub fn sampling(&self) -> Sampling {
        Sampling { grid: self.grids.validation, n_random: self.grids.validation_random, seed: self.seed }
    }

    /// `J` as written, without validation.
    pub fn structure(&self) -> Result<AlmostComplexStructure, CliError> {
        let d = self.domain()?;
        let expr = |s: &str| FieldExpr::parse(s).map_err(|e| CliError::Parse(format!("expression '{s}': {e}")));
        match &self.j {
            None => Ok(AlmostComplexStructure::standard(d)),
            Some(JSpec::Entries(v)) => {
                if v.len() != 16 {
                    return Err(CliError::Parse(format!("j needs 16 entries, got {}", v.len())));
                }
                let e: Vec<FieldExpr> = v.iter().map(|s| expr(s)).collect::<Result<_, _>>()?;
                Ok(AlmostComplexStructure::new(std::array::from_fn(|i| std::array::from_fn(|k| e[4 * i + k].clone())), d))
            }
            Some(JSpec::Name(name)) => {
                let name = name.trim();
                if name == "standard" {
                    return Ok(AlmostComplexStructure::standard(d));
                }
                if let Some(arg) = name.strip_prefix("perturbed(").and_then(|r| r.strip_suffix(')')) {
                    let eps: f64 = arg.trim().parse().map_err(|_| CliError::Parse(format!("bad eps in '{name}'")))?;
                    return Ok(crate::fixtures::shear_structure(eps, d));
                }
                Err(CliError::Parse(format!("unknown J builtin '{name}'")))
            }
            Some(JSpec::Builtin(b)) => match b {
                JBuiltin::Standard => Ok(AlmostComplexStructure::standard(d)),
                JBuiltin::Conjugated { matrix } => {
                    AlmostComplexStructure::conjugated(matrix, d).map_err(|e| CliError::Validation(format!("conjugated J: {e}")))
                }
                JBuiltin::Perturbed { eps, upper, lower } => {
                    let block = |b: &Option<[String; 4]>, default: fn() -> [[FieldExpr; 2]; 2]| -> Result<[[FieldExpr; 2]; 2], CliError> {
                        match b {
                            None => Ok(default()),
                            Some(s) => {
                                let e = [expr(&s[0])?, expr(&s[1])?, expr(&s[2])?, expr(&s[3])?];
                                let [a, b, c, dd] = e;
                                Ok([[a, b], [c, dd]])
                            }
                        }
                    };
                    let up = block(upper, crate::fixtures::default_upper_block)?;
                    let lo = block(lower, crate::fixtures::default_lower_block)?;
                    Ok(shear_structure_from_blocks(*eps, &up, &lo, d))
                }
                JBuiltin::Rotated { h, lambda } => Ok(rotated_structure(&complex_w(h)?, &expr(lambda)?, d)),
            },
        }
    }

    /// `J`, checked for `J^2 = -I` on the validation sampling.
    pub fn validated_structure(&self) -> Result<(AlmostComplexStructure, f64), CliError> {
        let j = self.structure()?;
        let r = j.validate(&self.sampling()).map_err(|e| CliError::Validation(e.to_string()))?;
        Ok((j, r))
    }

    /// `alpha` as written; errors when the scene has none.
    pub fn form(&self) -> Result<TwoForm, CliError> {
        let d = self.domain()?;
        match &self.alpha {
            None => Err(CliError::Parse("scene has no alpha".into())),
            Some(AlphaSpec::Coeffs(v)) => {
                if v.len() != 6 {
                    return Err(CliError::Parse(format!("alpha needs 6 coefficients, got {}", v.len())));
                }
                let e: Vec<FieldExpr> =
                    v.iter().map(|s| FieldExpr::parse(s).map_err(|e| CliError::Parse(format!("expression '{s}': {e}")))).collect::<Result<_, _>>()?;
                Ok(TwoForm::new(std::array::from_fn(|k| e[k].clone()), d))
            }
            Some(AlphaSpec::Name(name)) => {
                let name = name.trim();
                match name {
                    "phi0" => Ok(TwoForm::phi0(d)),
                    "omega0" => Ok(TwoForm::omega0(d)),
                    "zero" => Ok(TwoForm::zero(d)),
                    _ => match name.strip_prefix("re_holo(").and_then(|r| r.strip_suffix(')')) {
                        Some(h) => Ok(TwoForm::re_holo(&complex_w(h)?, d)),
                        None => Err(CliError::Parse(format!("unknown alpha builtin '{name}'"))),
                    },
                }
            }
        }
    }

    /// `alpha` where an anti-invariant form is required: projected when
    /// `project = true`, otherwise checked to the validation tolerance.
    /// Returns the form and its anti-invariance residual before projection.
    pub fn anti_invariant_form(&self, j: &AlmostComplexStructure) -> Result<(TwoForm, f64), CliError> {
        let alpha = self.form()?;
        let (residual, at) = anti_invariance_residual(&alpha, j, &self.sampling());
        if self.project {
            return Ok((split_form(&alpha, j).1, residual));
        }
        if !(residual <= self.tolerances.validation) {
            return Err(CliError::Validation(format!(
                "alpha is not J-anti-invariant: residual {residual:.3e} at {at:?} (set project = true to use its anti-invariant part)"
            )));
        }
        Ok((alpha, residual))
    }
}

pub fn complex_w(text: &str) -> Result<ComplexExpr, CliError> {
    parse_complex(text, &W_COORDS).map_err(|e| CliError::Parse(format!("expression '{text}': {e}")))
}

pub fn complex_in(text: &str, vars: &[(&str, usize, usize)]) -> Result<ComplexExpr, CliError> {
    parse_complex(text, vars).map_err(|e| CliError::Parse(format!("expression '{text}': {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let s = Scene::parse("").unwrap();
        assert_eq!(s.seed, 0);
        assert_eq!(s.domain().unwrap(), Domain::cube(1.0));
        let (_, r) = s.validated_structure().unwrap();
        assert_eq!(r, 0.0);
        assert!(matches!(s.form(), Err(CliError::Parse(_))));
    }

    #[test]
    fn builtins_parse() {
        let s = Scene::parse(
            r#"
            j = { builtin = "perturbed", eps = 0.05 }
            alpha = "re_holo(w0*w1)"
            project = true
            "#,
        )
        .unwrap();
        let (j, _) = s.validated_structure().unwrap();
        let (alpha, _) = s.anti_invariant_form(&j).unwrap();
        assert!(anti_invariance_residual(&alpha, &j, &s.sampling()).0 < 1e-12);
        let s = Scene::parse("j = \"perturbed(0.1)\"\nalpha = [\"0\", \"1\", \"0\", \"0\", \"-1\", \"0\"]").unwrap();
        assert!(s.validated_structure().is_ok());
        assert!(s.form().is_ok());
    }

    #[test]
    fn invalid_structure_is_a_validation_error() {
        let mut entries = vec!["0"; 16];
        entries[0] = "1 + x1";
        let text = format!("j = {:?}", entries);
        let s = Scene::parse(&text).unwrap();
        assert!(matches!(s.validated_structure(), Err(CliError::Validation(_))));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Scene::parse("seed = \"a\""), Err(CliError::Parse(_))));
        assert!(matches!(Scene::parse("colour = 1"), Err(CliError::Parse(_))));
        let s = Scene::parse("alpha = \"re_holo(w0 +)\"").unwrap();
        assert!(matches!(s.form(), Err(CliError::Parse(_))));
        let s = Scene::parse("j = \"fancy\"").unwrap();
        assert!(matches!(s.structure(), Err(CliError::Parse(_))));
    }
}
