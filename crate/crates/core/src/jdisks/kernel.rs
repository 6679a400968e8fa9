//! Closed anti-invariant forms in a finite-dimensional family: anti-invariant
//! projections `(beta - J^T beta J) / 2` of forms with polynomial
//! coefficients, restricted to the kernel of `d` by least squares.

use nalgebra::{DMatrix, DVector};

use crate::expr::FieldExpr;
use crate::forms::{
    anti_invariance_residual, anti_frame, closedness_residual, exterior_derivative_at, AlmostComplexStructure, Jet, Sampling, TwoForm, PAIRS,
};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    /// Total degree of the polynomial coefficients.
    pub degree: u32,
    pub n_samples: usize,
    pub seed: u64,
    /// Largest accepted RMS of `d alpha` for an `alpha` of unit RMS.
    pub threshold: f64,
    /// Relative singular-value cutoff for the values matrix.
    pub rank_tol: f64,
    pub verify: Sampling,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            degree: 2,
            n_samples: 200,
            seed: 0,
            threshold: 1e-9,
            rank_tol: 1e-10,
            verify: Sampling { grid: 4, n_random: 200, seed: 1 },
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelReport {
    /// Number of polynomial forms before projection.
    pub basis_size: usize,
    /// Dimension of the space of projected forms seen on the samples.
    pub rank: usize,
    /// Normalized `d` residuals of the family, ascending.
    pub residuals: Vec<f64>,
    pub forms: Vec<TwoForm>,
    /// `(closedness, anti-invariance)` residuals of each returned form on
    /// independent points.
    pub verified: Vec<(f64, f64)>,
}

impl KernelReport {
    pub fn dimension(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }
}

fn monomials(degree: u32) -> Vec<[u32; 4]> {
    let mut out = Vec::new();
    for total in 0..=degree {
        for a in (0..=total).rev() {
            for b in (0..=total - a).rev() {
                for c in (0..=total - a - b).rev() {
                    out.push([a, b, c, total - a - b - c]);
                }
            }
        }
    }
    out
}

fn monomial_jet(e: &[u32; 4], x: &[f64; 4]) -> Jet {
    let v: f64 = (0..4).map(|k| x[k].powi(e[k] as i32)).product();
    let d = std::array::from_fn(|k| {
        if e[k] == 0 {
            return 0.0;
        }
        (0..4).map(|m| if m == k { e[m] as f64 * x[m].powi(e[m] as i32 - 1) } else { x[m].powi(e[m] as i32) }).product()
    });
    Jet { v, d }
}

fn monomial_expr(e: &[u32; 4]) -> FieldExpr {
    let mut out = FieldExpr::one();
    for (k, &p) in e.iter().enumerate() {
        if p > 0 {
            out = out * FieldExpr::var(k).powi(p as i32);
        }
    }
    out
}

fn slot_matrix(s: usize) -> linalg::Mat4 {
    let mut c = [0.0; 6];
    c[s] = 1.0;
    linalg::skew_from_coeffs(&c)
}

/// Anti-invariant form with polynomial pre-image `sum c_(m, s) x^m E_s`.
fn build_form(j: &AlmostComplexStructure, mons: &[[u32; 4]], c: &[f64]) -> TwoForm {
    let scale = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let polys: Vec<FieldExpr> = (0..6)
        .map(|s| {
            mons.iter()
                .enumerate()
                .filter(|&(m, _)| c[m * 6 + s].abs() > 1e-13 * scale)
                .map(|(m, e)| c[m * 6 + s] * monomial_expr(e))
                .sum()
        })
        .collect();
    let mut b: [[FieldExpr; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| FieldExpr::zero()));
    for (s, &(p, q)) in PAIRS.iter().enumerate() {
        b[p][q] = polys[s].clone();
        b[q][p] = -&polys[s];
    }
    let je = j.entries();
    let bj: [[FieldExpr; 4]; 4] =
        std::array::from_fn(|r| std::array::from_fn(|col| (0..4).map(|k| &b[r][k] * &je[k][col]).sum()));
    let coeffs = PAIRS.map(|(p, q)| {
        let jtbj: FieldExpr = (0..4).map(|k| &je[k][p] * &bj[k][q]).sum();
        0.5 * (&b[p][q] - &jtbj)
    });
    TwoForm::new(coeffs, j.domain().clone())
}

/// Closed forms among the anti-invariant projections of polynomial forms.
pub fn closed_kernel(j: &AlmostComplexStructure, opts: &KernelOptions) -> KernelReport {
    let mons = monomials(opts.degree);
    let n_basis = mons.len() * 6;
    let points = j.domain().random_points(opts.n_samples, opts.seed);
    let (na, nd) = (6 * points.len(), 4 * points.len());
    let mut a = DMatrix::<f64>::zeros(na, n_basis);
    let mut d = DMatrix::<f64>::zeros(nd, n_basis);
    let slots: Vec<linalg::Mat4> = (0..6).map(slot_matrix).collect();
    for (pi, x) in points.iter().enumerate() {
        let jj = j.jet_at(x);
        let proj: Vec<[Jet; 6]> = slots.iter().map(|s| anti_frame(&jj, s).0).collect();
        for (m, e) in mons.iter().enumerate() {
            let mj = monomial_jet(e, x);
            for (s, p) in proj.iter().enumerate() {
                let coeffs = p.map(|c| mj * c);
                let col = m * 6 + s;
                for k in 0..6 {
                    a[(6 * pi + k, col)] = coeffs[k].v;
                }
                let dd = exterior_derivative_at(&coeffs);
                for k in 0..4 {
                    d[(4 * pi + k, col)] = dd[k];
                }
            }
        }
    }

    // Whitened coordinates on the row space of the values matrix.
    let svd_a = a.svd(false, true);
    let vt = svd_a.v_t.expect("right singular vectors");
    let smax = svd_a.singular_values.max();
    let keep: Vec<usize> = (0..svd_a.singular_values.len()).filter(|&i| svd_a.singular_values[i] > opts.rank_tol * smax).collect();
    let rank = keep.len();
    let mut w = DMatrix::<f64>::zeros(n_basis, rank);
    for (col, &i) in keep.iter().enumerate() {
        let s = svd_a.singular_values[i];
        for r in 0..n_basis {
            w[(r, col)] = vt[(i, r)] / s;
        }
    }
    let m = &d * &w;
    let svd_m = m.svd(false, true);
    let vt_m = svd_m.v_t.expect("right singular vectors");
    // A unit vector y gives |A c| = 1, so the RMS ratio is sigma * sqrt(na / nd).
    let ratio = (na as f64 / nd as f64).sqrt();
    let mut order: Vec<usize> = (0..svd_m.singular_values.len()).collect();
    order.sort_by(|&p, &q| svd_m.singular_values[p].total_cmp(&svd_m.singular_values[q]));
    let residuals: Vec<f64> = order.iter().map(|&i| svd_m.singular_values[i] * ratio).collect();
    let mut forms = Vec::new();
    let mut verified = Vec::new();
    for (&i, &res) in order.iter().zip(&residuals) {
        if res > opts.threshold {
            break;
        }
        let y = DVector::from_iterator(rank, (0..rank).map(|k| vt_m[(i, k)]));
        let c = &w * y;
        let form = build_form(j, &mons, c.as_slice());
        let closed = closedness_residual(&form, &opts.verify);
        let anti = anti_invariance_residual(&form, j, &opts.verify).0;
        verified.push((closed, anti));
        forms.push(form);
    }
    KernelReport { basis_size: n_basis, rank, residuals, forms, verified }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_complex, W_COORDS};
    use crate::fixtures::{rotated_structure, shear_structure};
    use crate::forms::Domain;

    fn quick() -> KernelOptions {
        KernelOptions { n_samples: 60, verify: Sampling { grid: 3, n_random: 40, seed: 1 }, ..Default::default() }
    }

    #[test]
    fn monomial_count() {
        assert_eq!(monomials(2).len(), 15);
        assert_eq!(monomials(0), vec![[0, 0, 0, 0]]);
    }

    #[test]
    fn standard_structure_kernel_is_holomorphic_quadratics() {
        // Re and Im of h dw0 ^ dw1 for h in {1, w0, w1, w0^2, w0 w1, w1^2}.
        let j = AlmostComplexStructure::standard(Domain::cube(1.0));
        let r = closed_kernel(&j, &quick());
        assert_eq!(r.dimension(), 12, "{:?}", &r.residuals[..14]);
        assert!(r.verified.iter().all(|&(c, a)| c < 1e-9 && a < 1e-9));
    }

    #[test]
    fn rotated_fixture_has_closed_forms() {
        let d = Domain::cube(1.0);
        let h = parse_complex("w0", &W_COORDS).unwrap();
        let j = rotated_structure(&h, &FieldExpr::parse("0.5 + 0.3*x3").unwrap(), d);
        let r = closed_kernel(&j, &quick());
        assert!(r.dimension() >= 1);
        assert!(r.verified.iter().all(|&(c, a)| c < 1e-9 && a < 1e-9), "{:?}", r.verified);
    }

    #[test]
    fn shear_fixture_kernel_is_reported() {
        let j = shear_structure(0.05, Domain::cube(1.0));
        let r = closed_kernel(&j, &quick());
        // No closed form among quadratic pre-images: the smallest residual
        // stays far above the threshold.
        assert!(r.is_empty());
        assert!(r.residuals[0] > 1e-4, "{}", r.residuals[0]);
    }
}
