//! Almost complex structures, metrics, and 2-forms on a coordinate box in R^4.
//!
//! A 2-form is stored by its six coefficients on `dx^i ^ dx^j`, `i < j`, in the
//! order 12, 13, 14, 23, 24, 34; its matrix is `A[i][j] = alpha(e_i, e_j)`.
//! The standard structure `J0` is block-diag(rot90, rot90), `J0 e1 = e2`,
//! so `w0 = x1 + i x2` and `w1 = x3 + i x4` are holomorphic coordinates.
//!
//! On anti-invariant forms the complex structure acts by
//! `(J beta)(X, Y) = beta(J X, Y)`, matrix `J^T beta`. With this convention
//! `Re[h dw0 ^ dw1] = Re(h) phi0 + Im(h) J phi0` for `phi0 = dx13 - dx24`.

mod jet;

pub use jet::{Jet, JetMat};

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{ComplexExpr, FieldExpr, Program};
use crate::linalg::{self, Mat4};

/// Index pairs of the stored 2-form coefficients.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Index triples of the stored 3-form coefficients (123, 124, 134, 234).
pub const TRIPLES: [(usize, usize, usize); 4] = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];

/// Tolerance for structural identities evaluated pointwise.
pub const STRUCTURAL_TOL: f64 = 1e-12;
/// Tolerance for validation identities (J^2 = -I, anti-invariance, closedness).
pub const VALIDATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormsError {
    #[error("point {x:?} lies outside the domain box")]
    OutsideDomain { x: [f64; 4] },
    #[error("J^2 + I has max entry {residual:.3e} at {at:?}")]
    NotComplexStructure { residual: f64, at: [f64; 4] },
    #[error("form is not J-anti-invariant: residual {residual:.3e} at {at:?}")]
    NotAntiInvariant { residual: f64, at: [f64; 4] },
    #[error("J and Omega are not compatible at {at:?}: {reason}")]
    Incompatible { reason: String, at: [f64; 4] },
    #[error("matrix is singular")]
    Singular,
}

/// Axis-aligned box in R^4.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

impl Domain {
    pub fn new(lo: [f64; 4], hi: [f64; 4]) -> Self {
        Domain { lo, hi }
    }

    /// The cube `[-h, h]^4`.
    pub fn cube(h: f64) -> Self {
        Domain { lo: [-h; 4], hi: [h; 4] }
    }

    pub fn contains(&self, x: &[f64; 4]) -> bool {
        (0..4).all(|k| {
            let slack = 1e-12 * (self.hi[k] - self.lo[k]).abs().max(1.0);
            x[k] >= self.lo[k] - slack && x[k] <= self.hi[k] + slack
        })
    }

    pub fn check(&self, x: &[f64; 4]) -> Result<(), FormsError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(FormsError::OutsideDomain { x: *x })
        }
    }

    pub fn center(&self) -> [f64; 4] {
        std::array::from_fn(|k| 0.5 * (self.lo[k] + self.hi[k]))
    }

    /// Largest side length.
    pub fn size(&self) -> f64 {
        (0..4).map(|k| self.hi[k] - self.lo[k]).fold(0.0, f64::max)
    }

    /// Uniform grid with `n` points per axis (endpoints included).
    pub fn grid_points(&self, n: usize) -> Vec<[f64; 4]> {
        let axis = |k: usize, i: usize| {
            if n == 1 {
                0.5 * (self.lo[k] + self.hi[k])
            } else {
                self.lo[k] + (self.hi[k] - self.lo[k]) * i as f64 / (n - 1) as f64
            }
        };
        let mut pts = Vec::with_capacity(n.pow(4));
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        pts.push([axis(0, a), axis(1, b), axis(2, c), axis(3, d)]);
                    }
                }
            }
        }
        pts
    }

    pub fn random_points(&self, n: usize, seed: u64) -> Vec<[f64; 4]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| std::array::from_fn(|k| rng.gen_range(self.lo[k]..=self.hi[k])))
            .collect()
    }
}

/// Sampling used for pointwise validation: a uniform grid plus random points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub grid: usize,
    pub n_random: usize,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { grid: 17, n_random: 1000, seed: 0 }
    }
}

impl Sampling {
    pub fn points(&self, domain: &Domain) -> Vec<[f64; 4]> {
        let mut pts = domain.grid_points(self.grid);
        pts.extend(domain.random_points(self.n_random, self.seed));
        pts
    }
}

/// Expression list with lazily compiled value and jet programs.
#[derive(Clone)]
struct Compiled {
    exprs: Vec<FieldExpr>,
    values: OnceLock<Program>,
    jets: OnceLock<Program>,
}

impl Compiled {
    fn new(exprs: Vec<FieldExpr>) -> Self {
        Compiled { exprs, values: OnceLock::new(), jets: OnceLock::new() }
    }

    fn values(&self, x: &[f64; 4], out: &mut [f64]) {
        let p = self.values.get_or_init(|| Program::new(&self.exprs));
        p.eval(x, &mut Vec::new(), out);
    }

    fn jets(&self, x: &[f64; 4]) -> Vec<Jet> {
        let n = self.exprs.len();
        let p = self.jets.get_or_init(|| {
            let mut all = self.exprs.clone();
            for k in 0..4 {
                all.extend(self.exprs.iter().map(|e| e.derivative(k)));
            }
            Program::new(&all)
        });
        let raw = p.eval_vec(x);
        (0..n)
            .map(|i| Jet { v: raw[i], d: std::array::from_fn(|k| raw[(k + 1) * n + i]) })
            .collect()
    }
}

/// A smooth field of 4x4 matrices `J(x)` with `J^2 = -I`.
#[derive(Clone)]
pub struct AlmostComplexStructure {
    compiled: Compiled,
    domain: Domain,
}

impl std::fmt::Debug for AlmostComplexStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AlmostComplexStructure").field("domain", &self.domain).finish_non_exhaustive()
    }
}

impl AlmostComplexStructure {
    /// Build from entries; no validation is performed here (see [`validate`](Self::validate)).
    pub fn new(entries: [[FieldExpr; 4]; 4], domain: Domain) -> Self {
        let exprs = entries.into_iter().flatten().collect();
        AlmostComplexStructure { compiled: Compiled::new(exprs), domain }
    }

    pub fn constant(m: &Mat4, domain: Domain) -> Self {
        Self::new(std::array::from_fn(|i| std::array::from_fn(|j| FieldExpr::constant(m[i][j]))), domain)
    }

    pub fn standard(domain: Domain) -> Self {
        Self::constant(&linalg::J0, domain)
    }

    /// Constant structure `A J0 A^{-1}`.
    pub fn conjugated(a: &Mat4, domain: Domain) -> Result<Self, FormsError> {
        let inv = linalg::inverse(a).ok_or(FormsError::Singular)?;
        Ok(Self::constant(&linalg::mul(&linalg::mul(a, &linalg::J0), &inv), domain))
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn entry(&self, i: usize, j: usize) -> &FieldExpr {
        &self.compiled.exprs[4 * i + j]
    }

    pub fn entries(&self) -> [[FieldExpr; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.entry(i, j).clone()))
    }

    /// Matrix at `x` without a domain check.
    pub fn at(&self, x: &[f64; 4]) -> Mat4 {
        let mut flat = [0.0; 16];
        self.compiled.values(x, &mut flat);
        std::array::from_fn(|i| std::array::from_fn(|j| flat[4 * i + j]))
    }

    /// Matrix at `x` together with its exact first derivatives.
    pub fn jet_at(&self, x: &[f64; 4]) -> JetMat {
        let flat = self.compiled.jets(x);
        std::array::from_fn(|i| std::array::from_fn(|j| flat[4 * i + j]))
    }

    /// `max |J(x)^2 + I|` entrywise.
    pub fn square_residual(&self, x: &[f64; 4]) -> f64 {
        let j = self.at(x);
        let sq = linalg::mul(&j, &j);
        let mut r: f64 = 0.0;
        for (i, row) in sq.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                r = r.max((v + if i == k { 1.0 } else { 0.0 }).abs());
            }
        }
        r
    }

    /// Check `J^2 = -I` to [`VALIDATION_TOL`] on the sampling; returns the max residual.
    pub fn validate(&self, sampling: &Sampling) -> Result<f64, FormsError> {
        let mut worst = (0.0, [0.0; 4]);
        for x in sampling.points(&self.domain) {
            let r = self.square_residual(&x);
            if !(r <= worst.0) {
                worst = (r, x);
            }
        }
        if worst.0 > VALIDATION_TOL || worst.0.is_nan() {
            return Err(FormsError::NotComplexStructure { residual: worst.0, at: worst.1 });
        }
        Ok(worst.0)
    }
}

/// A 2-form with expression-backed coefficients.
#[derive(Clone)]
pub struct TwoForm {
    compiled: Compiled,
    domain: Domain,
}

impl std::fmt::Debug for TwoForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c: Vec<String> = self.compiled.exprs.iter().map(|e| e.to_string()).collect();
        f.debug_struct("TwoForm").field("coeffs", &c).finish_non_exhaustive()
    }
}

impl TwoForm {
    pub fn new(coeffs: [FieldExpr; 6], domain: Domain) -> Self {
        TwoForm { compiled: Compiled::new(coeffs.to_vec()), domain }
    }

    pub fn constant(c: [f64; 6], domain: Domain) -> Self {
        Self::new(c.map(FieldExpr::constant), domain)
    }

    pub fn zero(domain: Domain) -> Self {
        Self::constant([0.0; 6], domain)
    }

    /// `omega0 = dx12 + dx34`.
    pub fn omega0(domain: Domain) -> Self {
        Self::constant([1.0, 0.0, 0.0, 0.0, 0.0, 1.0], domain)
    }

    /// `phi0 = dx13 - dx24`.
    pub fn phi0(domain: Domain) -> Self {
        Self::constant([0.0, 1.0, 0.0, 0.0, -1.0, 0.0], domain)
    }

    /// `Re[h dw0 ^ dw1]` for a complex coefficient `h(w0, w1)`.
    pub fn re_holo(h: &ComplexExpr, domain: Domain) -> Self {
        let (re, im) = (h.re.clone(), h.im.clone());
        Self::new([FieldExpr::zero(), re.clone(), -&im, -&im, -re, FieldExpr::zero()], domain)
    }

    /// Build from a skew matrix of expressions (upper triangle is read).
    pub fn from_matrix(m: &[[FieldExpr; 4]; 4], domain: Domain) -> Self {
        Self::new(PAIRS.map(|(i, j)| m[i][j].clone()), domain)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn coeff(&self, k: usize) -> &FieldExpr {
        &self.compiled.exprs[k]
    }

    pub fn coeffs(&self) -> [FieldExpr; 6] {
        std::array::from_fn(|k| self.coeff(k).clone())
    }

    /// Skew matrix of expressions.
    pub fn matrix(&self) -> [[FieldExpr; 4]; 4] {
        let mut m: [[FieldExpr; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| FieldExpr::zero()));
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            m[i][j] = self.coeff(k).clone();
            m[j][i] = -self.coeff(k);
        }
        m
    }

    pub fn at(&self, x: &[f64; 4]) -> [f64; 6] {
        let mut c = [0.0; 6];
        self.compiled.values(x, &mut c);
        c
    }

    pub fn matrix_at(&self, x: &[f64; 4]) -> Mat4 {
        linalg::skew_from_coeffs(&self.at(x))
    }

    pub fn jet_at(&self, x: &[f64; 4]) -> [Jet; 6] {
        let v = self.compiled.jets(x);
        std::array::from_fn(|k| v[k])
    }

    pub fn add(&self, other: &TwoForm) -> TwoForm {
        TwoForm::new(std::array::from_fn(|k| self.coeff(k) + other.coeff(k)), self.domain.clone())
    }

    pub fn sub(&self, other: &TwoForm) -> TwoForm {
        TwoForm::new(std::array::from_fn(|k| self.coeff(k) - other.coeff(k)), self.domain.clone())
    }

    pub fn scale(&self, s: &FieldExpr) -> TwoForm {
        TwoForm::new(std::array::from_fn(|k| s * self.coeff(k)), self.domain.clone())
    }
}

/// Symmetric metric field; symmetry is structural (upper triangle stored).
#[derive(Clone)]
pub struct Metric {
    compiled: Compiled,
}

const SYM: [(usize, usize); 10] = [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)];

impl Metric {
    /// Build from the upper triangle of `m`.
    pub fn from_matrix(m: &[[FieldExpr; 4]; 4]) -> Self {
        Metric { compiled: Compiled::new(SYM.iter().map(|&(i, j)| m[i][j].clone()).collect()) }
    }

    pub fn euclidean() -> Self {
        Self::from_matrix(&std::array::from_fn(|i| {
            std::array::from_fn(|j| FieldExpr::constant(if i == j { 1.0 } else { 0.0 }))
        }))
    }

    pub fn at(&self, x: &[f64; 4]) -> Mat4 {
        let mut v = [0.0; 10];
        self.compiled.values(x, &mut v);
        let mut m = [[0.0; 4]; 4];
        for (k, &(i, j)) in SYM.iter().enumerate() {
            m[i][j] = v[k];
            m[j][i] = v[k];
        }
        m
    }
}

/// Coefficients of a 3-form on dx123, dx124, dx134, dx234.
#[derive(Clone, Debug)]
pub struct ThreeForm {
    pub coeffs: [FieldExpr; 4],
}

impl ThreeForm {
    pub fn at(&self, x: &[f64; 4]) -> [f64; 4] {
        let p = Program::new(&self.coeffs);
        let v = p.eval_vec(x);
        [v[0], v[1], v[2], v[3]]
    }
}

/// Matrix of `(u, v) -> alpha(J u, J v)` at `x`, i.e. `J^T alpha J`.
pub fn pullback_by_j(alpha: &TwoForm, j: &AlmostComplexStructure, x: &[f64; 4]) -> Result<Mat4, FormsError> {
    alpha.domain.check(x)?;
    j.domain.check(x)?;
    Ok(linalg::pullback(&alpha.matrix_at(x), &j.at(x)))
}

fn pullback_exprs(a: &[[FieldExpr; 4]; 4], j: &[[FieldExpr; 4]; 4]) -> [[FieldExpr; 4]; 4] {
    let aj: [[FieldExpr; 4]; 4] =
        std::array::from_fn(|k| std::array::from_fn(|c| (0..4).map(|l| &a[k][l] * &j[l][c]).sum()));
    std::array::from_fn(|r| std::array::from_fn(|c| (0..4).map(|k| &j[k][r] * &aj[k][c]).sum()))
}

/// Invariant and anti-invariant parts `alpha = alpha+ + alpha-`.
pub fn split_form(alpha: &TwoForm, j: &AlmostComplexStructure) -> (TwoForm, TwoForm) {
    let pb = pullback_exprs(&alpha.matrix(), &j.entries());
    let plus = PAIRS.map(|(r, c)| (alpha.matrix()[r][c].clone() + pb[r][c].clone()) * 0.5);
    let minus = PAIRS.map(|(r, c)| (alpha.matrix()[r][c].clone() - pb[r][c].clone()) * 0.5);
    (TwoForm::new(plus, alpha.domain.clone()), TwoForm::new(minus, alpha.domain.clone()))
}

/// Max entry of `J^T beta J + beta` over the sampling, with its location.
pub fn anti_invariance_residual(beta: &TwoForm, j: &AlmostComplexStructure, sampling: &Sampling) -> (f64, [f64; 4]) {
    let mut worst = (0.0, [0.0; 4]);
    for x in sampling.points(&beta.domain) {
        let b = beta.matrix_at(&x);
        let pb = linalg::pullback(&b, &j.at(&x));
        let r = linalg::max_abs(&linalg::add(&pb, &b));
        if !(r <= worst.0) {
            worst = (r, x);
        }
    }
    worst
}

/// The complex structure of the anti-invariant bundle applied to `beta`.
pub fn apply_j_anti(beta: &TwoForm, j: &AlmostComplexStructure, sampling: &Sampling) -> Result<TwoForm, FormsError> {
    let (residual, at) = anti_invariance_residual(beta, j, sampling);
    if residual > VALIDATION_TOL || residual.is_nan() {
        return Err(FormsError::NotAntiInvariant { residual, at });
    }
    Ok(apply_j_anti_unchecked(beta, j))
}

/// `J^T beta` without the anti-invariance check.
pub fn apply_j_anti_unchecked(beta: &TwoForm, j: &AlmostComplexStructure) -> TwoForm {
    let b = beta.matrix();
    let je = j.entries();
    let m: [[FieldExpr; 4]; 4] =
        std::array::from_fn(|r| std::array::from_fn(|c| (0..4).map(|k| &je[k][r] * &b[k][c]).sum()));
    TwoForm::from_matrix(&m, beta.domain.clone())
}

/// `g(u, v) = Omega(u, J v)`, checked symmetric and positive definite.
pub fn compatible_metric(j: &AlmostComplexStructure, omega: &TwoForm, sampling: &Sampling) -> Result<Metric, FormsError> {
    for x in sampling.points(&omega.domain) {
        let g = linalg::mul(&omega.matrix_at(&x), &j.at(&x));
        let asym = linalg::max_abs(&linalg::sub(&g, &linalg::transpose(&g)));
        if asym > VALIDATION_TOL {
            return Err(FormsError::Incompatible { reason: format!("asymmetric part {asym:.3e}"), at: x });
        }
        let lam = linalg::min_sym_eigenvalue(&g);
        if !(lam > VALIDATION_TOL) {
            return Err(FormsError::Incompatible { reason: format!("smallest eigenvalue {lam:.3e}"), at: x });
        }
    }
    let om = omega.matrix();
    let je = j.entries();
    let g: [[FieldExpr; 4]; 4] =
        std::array::from_fn(|r| std::array::from_fn(|c| (0..4).map(|k| &om[r][k] * &je[k][c]).sum()));
    let sym: [[FieldExpr; 4]; 4] = std::array::from_fn(|r| std::array::from_fn(|c| (&g[r][c] + &g[c][r]) * 0.5));
    Ok(Metric::from_matrix(&sym))
}

/// Hodge star of the skew matrix `a` for the metric matrix `g` (orientation dx1234).
///
/// The star needs `sqrt(det g)`, which is outside the expression grammar, so it
/// is evaluated pointwise.
pub fn hodge_star(a: &Mat4, g: &Mat4) -> Mat4 {
    let ginv = linalg::inverse(g).expect("metric must be invertible");
    let vol = linalg::det(g).sqrt();
    let raised: Mat4 = std::array::from_fn(|p| {
        std::array::from_fn(|q| {
            let mut s = 0.0;
            for r in 0..4 {
                for t in 0..4 {
                    s += ginv[p][r] * ginv[q][t] * a[r][t];
                }
            }
            s
        })
    });
    let mut out = [[0.0; 4]; 4];
    for c in 0..4 {
        for d in 0..4 {
            let mut s = 0.0;
            for p in 0..4 {
                for q in 0..4 {
                    s += raised[p][q] * linalg::levi_civita([p, q, c, d]);
                }
            }
            out[c][d] = 0.5 * vol * s;
        }
    }
    out
}

/// Hodge star of a form field at `x`.
pub fn hodge_star_at(alpha: &TwoForm, g: &Metric, x: &[f64; 4]) -> Result<Mat4, FormsError> {
    alpha.domain.check(x)?;
    Ok(hodge_star(&alpha.matrix_at(x), &g.at(x)))
}

/// `d alpha` by exact differentiation.
pub fn exterior_derivative(alpha: &TwoForm) -> ThreeForm {
    let m = alpha.matrix();
    ThreeForm {
        coeffs: TRIPLES.map(|(i, j, k)| m[j][k].derivative(i) - m[i][k].derivative(j) + m[i][j].derivative(k)),
    }
}

/// `d alpha` at `x` from the jet of the coefficients.
pub fn exterior_derivative_at(jet: &[Jet; 6]) -> [f64; 4] {
    let m = skew_jet(jet);
    TRIPLES.map(|(i, j, k)| m[j][k].d[i] - m[i][k].d[j] + m[i][j].d[k])
}

/// Max of `|d alpha|` over the sampling.
pub fn closedness_residual(alpha: &TwoForm, sampling: &Sampling) -> f64 {
    let d = exterior_derivative(alpha);
    let p = Program::new(&d.coeffs);
    let mut scratch = Vec::new();
    let mut out = [0.0; 4];
    let mut worst: f64 = 0.0;
    for x in sampling.points(&alpha.domain) {
        p.eval(&x, &mut scratch, &mut out);
        for v in out {
            worst = if v.abs() > worst || v.is_nan() { v.abs() } else { worst };
        }
    }
    worst
}

/// Coefficient of `alpha ^ alpha` on dx1234 (twice the Pfaffian).
pub fn wedge_square(c: &[f64; 6]) -> f64 {
    2.0 * (c[0] * c[5] - c[1] * c[4] + c[2] * c[3])
}

/// Whether `alpha ^ alpha` vanishes at `x` (to [`VALIDATION_TOL`]).
pub fn degeneracy_check(alpha: &TwoForm, x: &[f64; 4]) -> Result<bool, FormsError> {
    alpha.domain.check(x)?;
    Ok(wedge_square(&alpha.at(x)).abs() <= VALIDATION_TOL)
}

pub fn skew_jet(c: &[Jet; 6]) -> JetMat {
    let mut m = [[Jet::ZERO; 4]; 4];
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        m[i][j] = c[k];
        m[j][i] = -c[k];
    }
    m
}

pub fn coeffs_of_jet(m: &JetMat) -> [Jet; 6] {
    PAIRS.map(|(i, j)| m[i][j])
}

/// Local frame `(phi, J phi)` of the anti-invariant bundle at a point:
/// `phi` is the anti-invariant part of the constant form `seed`.
pub fn anti_frame(j: &JetMat, seed: &Mat4) -> ([Jet; 6], [Jet; 6]) {
    let s = jet::constant_mat(seed);
    let jt = jet::transpose(j);
    let pb = jet::matmul(&jt, &jet::matmul(&s, j));
    let phi: JetMat = std::array::from_fn(|r| std::array::from_fn(|c| (s[r][c] - pb[r][c]).scale(0.5)));
    let psi = jet::matmul(&jt, &phi);
    (coeffs_of_jet(&phi), coeffs_of_jet(&psi))
}

/// Coefficients `(f, g)` with `alpha = f phi + g psi` in the least-squares
/// sense over the six coefficients (exact for anti-invariant `alpha`).
pub fn frame_coefficients(alpha: &[Jet; 6], phi: &[Jet; 6], psi: &[Jet; 6]) -> (Jet, Jet) {
    let dot = |a: &[Jet; 6], b: &[Jet; 6]| -> Jet { (0..6).map(|k| a[k] * b[k]).sum() };
    let (pp, pq, qq) = (dot(phi, phi), dot(phi, psi), dot(psi, psi));
    let (ap, aq) = (dot(alpha, phi), dot(alpha, psi));
    let det = pp * qq - pq * pq;
    ((ap * qq - aq * pq) / det, (aq * pp - ap * pq) / det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_complex;

    fn dom() -> Domain {
        Domain::cube(1.0)
    }

    fn basis(i: usize, j: usize) -> [f64; 6] {
        let mut c = [0.0; 6];
        c[PAIRS.iter().position(|&p| p == (i, j)).unwrap()] = 1.0;
        c
    }

    fn close(a: &[f64; 6], b: &[f64; 6], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn pullback_examples() {
        let j = AlmostComplexStructure::standard(dom());
        let x = [0.1, 0.2, 0.3, 0.4];
        let w = pullback_by_j(&TwoForm::omega0(dom()), &j, &x).unwrap();
        assert!(close(&linalg::coeffs_from_skew(&w), &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0], 0.0));
        let p = pullback_by_j(&TwoForm::phi0(dom()), &j, &x).unwrap();
        assert!(close(&linalg::coeffs_from_skew(&p), &[0.0, -1.0, 0.0, 0.0, 1.0, 0.0], 0.0));
        let q = pullback_by_j(&TwoForm::constant(basis(0, 2), dom()), &j, &x).unwrap();
        assert!(close(&linalg::coeffs_from_skew(&q), &basis(1, 3), 0.0));
        assert!(pullback_by_j(&TwoForm::phi0(dom()), &j, &[2.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn split_examples() {
        let j = AlmostComplexStructure::standard(dom());
        let x = [0.0; 4];
        let (p, m) = split_form(&TwoForm::omega0(dom()), &j);
        assert!(close(&p.at(&x), &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0], 0.0) && close(&m.at(&x), &[0.0; 6], 0.0));
        let (p, m) = split_form(&TwoForm::phi0(dom()), &j);
        assert!(close(&p.at(&x), &[0.0; 6], 0.0) && close(&m.at(&x), &TwoForm::phi0(dom()).at(&x), 0.0));
        let (p, m) = split_form(&TwoForm::constant(basis(0, 2), dom()), &j);
        assert!(close(&p.at(&x), &[0.0, 0.5, 0.0, 0.0, 0.5, 0.0], 0.0));
        assert!(close(&m.at(&x), &[0.0, 0.5, 0.0, 0.0, -0.5, 0.0], 0.0));
    }

    #[test]
    fn j_action_on_phi0() {
        let j = AlmostComplexStructure::standard(dom());
        let s = Sampling { grid: 3, n_random: 10, seed: 1 };
        let jp = apply_j_anti(&TwoForm::phi0(dom()), &j, &s).unwrap();
        assert!(close(&jp.at(&[0.0; 4]), &[0.0, 0.0, -1.0, -1.0, 0.0, 0.0], 0.0));
        let jjp = apply_j_anti(&jp, &j, &s).unwrap();
        assert!(close(&jjp.at(&[0.0; 4]), &[0.0, -1.0, 0.0, 0.0, 1.0, 0.0], 0.0));
        let z = apply_j_anti(&TwoForm::zero(dom()), &j, &s).unwrap();
        assert!(close(&z.at(&[0.0; 4]), &[0.0; 6], 0.0));
        let err = apply_j_anti(&TwoForm::omega0(dom()), &j, &s).unwrap_err();
        assert!(matches!(err, FormsError::NotAntiInvariant { .. }));
    }

    #[test]
    fn re_holo_decomposes_into_phi0_frame() {
        let w = [("w0", 0, 1), ("w1", 2, 3)];
        let h = parse_complex("w0*w1 + 2*i", &w).unwrap();
        let a = TwoForm::re_holo(&h, dom());
        let j = AlmostComplexStructure::standard(dom());
        let x = [0.3, -0.4, 0.7, 0.2];
        let (phi, psi) = anti_frame(&j.jet_at(&x), &linalg::skew_from_coeffs(&TwoForm::phi0(dom()).at(&x)));
        let (f, g) = frame_coefficients(&a.jet_at(&x), &phi, &psi);
        let hv = h.eval(&x);
        assert!((f.v - hv.re).abs() < 1e-14 && (g.v - hv.im).abs() < 1e-14);
    }

    #[test]
    fn compatible_metric_examples() {
        let j = AlmostComplexStructure::standard(dom());
        let s = Sampling { grid: 3, n_random: 10, seed: 0 };
        let g = compatible_metric(&j, &TwoForm::constant([2.0, 0.0, 0.0, 0.0, 0.0, 2.0], dom()), &s).unwrap();
        let m = g.at(&[0.1; 4]);
        for (i, row) in m.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                assert_eq!(*v, if i == k { 2.0 } else { 0.0 });
            }
        }
        assert!(compatible_metric(&j, &TwoForm::phi0(dom()), &s).is_err());
        let neg = TwoForm::constant([-1.0, 0.0, 0.0, 0.0, 0.0, -1.0], dom());
        assert!(compatible_metric(&j, &neg, &s).is_err());
    }

    #[test]
    fn hodge_star_examples() {
        let id = linalg::identity();
        let star = |c: [f64; 6]| linalg::coeffs_from_skew(&hodge_star(&linalg::skew_from_coeffs(&c), &id));
        assert!(close(&star(basis(0, 1)), &basis(2, 3), 1e-15));
        assert!(close(&star([1.0, 0.0, 0.0, 0.0, 0.0, 1.0]), &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0], 1e-15));
        assert!(close(&star([0.0, 1.0, 0.0, 0.0, -1.0, 0.0]), &[0.0, 1.0, 0.0, 0.0, -1.0, 0.0], 1e-15));
        assert!(close(&star([1.0, 0.0, 0.0, 0.0, 0.0, -1.0]), &[-1.0, 0.0, 0.0, 0.0, 0.0, 1.0], 1e-15));
        let mut g = id;
        g[0][0] = 4.0;
        let s = linalg::coeffs_from_skew(&hodge_star(&linalg::skew_from_coeffs(&basis(0, 1)), &g));
        assert!(close(&s, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.5], 1e-15));
    }

    #[test]
    fn exterior_derivative_examples() {
        let d = exterior_derivative(&TwoForm::phi0(dom()));
        assert!(d.coeffs.iter().all(|c| c.is_zero()));
        let a = TwoForm::new(
            std::array::from_fn(|k| if k == 3 { FieldExpr::var(0) } else { FieldExpr::zero() }),
            dom(),
        );
        assert_eq!(exterior_derivative(&a).at(&[0.5; 4]), [1.0, 0.0, 0.0, 0.0]);
        let w = [("w0", 0, 1), ("w1", 2, 3)];
        let sq = TwoForm::re_holo(&parse_complex("w0^2", &w).unwrap(), dom());
        assert!(closedness_residual(&sq, &Sampling { grid: 5, n_random: 100, seed: 3 }) < 1e-12);
        let not_closed = TwoForm::re_holo(&parse_complex("conj(w1)", &w).unwrap(), dom());
        assert!(closedness_residual(&not_closed, &Sampling { grid: 3, n_random: 0, seed: 0 }) > 0.5);
    }

    #[test]
    fn degeneracy_examples() {
        assert!(!degeneracy_check(&TwoForm::phi0(dom()), &[0.2; 4]).unwrap());
        assert!(degeneracy_check(&TwoForm::zero(dom()), &[0.2; 4]).unwrap());
        let w = [("w0", 0, 1), ("w1", 2, 3)];
        let a = TwoForm::re_holo(&parse_complex("w0", &w).unwrap(), dom());
        assert!(degeneracy_check(&a, &[0.0; 4]).unwrap());
        assert!(!degeneracy_check(&a, &[1.0, 0.0, 0.0, 0.0]).unwrap());
    }

    #[test]
    fn metric_from_perturbed_structure_at_origin() {
        let j = crate::fixtures::shear_structure(0.05, dom());
        let g = compatible_metric(
            &AlmostComplexStructure::constant(&j.at(&[0.0; 4]), dom()),
            &TwoForm::omega0(dom()),
            &Sampling { grid: 2, n_random: 0, seed: 0 },
        )
        .unwrap();
        let m = g.at(&[0.0; 4]);
        assert!(linalg::max_abs(&linalg::sub(&m, &linalg::identity())) < 1e-15);
    }

    #[test]
    fn conjugated_structure_squares_to_minus_identity() {
        let a = [[1.0, 0.5, 0.0, 0.2], [0.0, 1.0, 0.3, 0.0], [0.1, 0.0, 2.0, 0.0], [0.0, 0.0, 0.4, 1.0]];
        let j = AlmostComplexStructure::conjugated(&a, dom()).unwrap();
        assert!(j.validate(&Sampling { grid: 2, n_random: 5, seed: 0 }).unwrap() < 1e-14);
        let bad = AlmostComplexStructure::constant(&linalg::identity(), dom());
        assert!(matches!(bad.validate(&Sampling::default()), Err(FormsError::NotComplexStructure { .. })));
    }
}
