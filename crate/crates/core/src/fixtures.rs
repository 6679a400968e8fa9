//! Standard test structures and forms.
//!
//! * [`shear_structure`]: a non-integrable perturbation `J = A J0 A^{-1}` of
//!   `J0` with `A = (I + eps Nu)(I + eps Nl)`, where `Nu`, `Nl` are nilpotent
//!   block shears vanishing at the origin. `A^{-1} = (I - eps Nl)(I - eps Nu)`,
//!   so `J` has polynomial-in-expression entries and `J^2 = -I` exactly.
//! * [`rotated_structure`]: for `alpha = Re[h dw0 ^ dw1]`, a structure whose
//!   fundamental form is a unit self-dual form orthogonal to `alpha`, so that
//!   `alpha` is closed and anti-invariant for a non-integrable `J`.

use crate::expr::{parse_complex, ComplexExpr, FieldExpr, W_COORDS};
use crate::forms::{AlmostComplexStructure, Domain, TwoForm};
use crate::linalg::J0;

type Block = [[FieldExpr; 2]; 2];

fn block(exprs: [&str; 4]) -> Block {
    let e = exprs.map(|s| FieldExpr::parse(s).expect("fixture expression"));
    let [a, b, c, d] = e;
    [[a, b], [c, d]]
}

/// Default upper shear block (rows 1-2, columns 3-4); vanishes at the origin.
pub fn default_upper_block() -> Block {
    block(["sin(x1) + x3", "x2*x4 + x1", "x1*x2 - x4", "sin(x3 + x2)"])
}

/// Default lower shear block (rows 3-4, columns 1-2); vanishes at the origin.
pub fn default_lower_block() -> Block {
    block(["x2 + x3^2", "sin(x4)", "x1*x3 - x2", "x1 - x2 + x4"])
}

/// The `eps`-perturbed fixture with the default shear blocks.
pub fn shear_structure(eps: f64, domain: Domain) -> AlmostComplexStructure {
    shear_structure_from_blocks(eps, &default_upper_block(), &default_lower_block(), domain)
}

/// `J = A J0 A^{-1}` with `A = (I + eps Nu)(I + eps Nl)`.
pub fn shear_structure_from_blocks(eps: f64, upper: &Block, lower: &Block, domain: Domain) -> AlmostComplexStructure {
    let id = |s: f64| -> [[FieldExpr; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| FieldExpr::constant(if i == j { s } else { 0.0 })))
    };
    let shear = |b: &Block, up: bool, s: f64| -> [[FieldExpr; 4]; 4] {
        let mut m = id(1.0);
        for r in 0..2 {
            for c in 0..2 {
                let (i, j) = if up { (r, c + 2) } else { (r + 2, c) };
                m[i][j] = &b[r][c] * s;
            }
        }
        m
    };
    let mm = |a: &[[FieldExpr; 4]; 4], b: &[[FieldExpr; 4]; 4]| -> [[FieldExpr; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| &a[i][k] * &b[k][j]).sum()))
    };
    let j0: [[FieldExpr; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| FieldExpr::constant(J0[i][j])));
    let a = mm(&shear(upper, true, eps), &shear(lower, false, eps));
    let a_inv = mm(&shear(lower, false, -eps), &shear(upper, true, -eps));
    AlmostComplexStructure::new(mm(&mm(&a, &j0), &a_inv), domain)
}

/// `Re[h dw0 ^ dw1]` from a complex expression in `w0, w1`.
pub fn re_holo(h: &str, domain: Domain) -> TwoForm {
    let h = parse_complex(h, &W_COORDS).expect("fixture expression");
    TwoForm::re_holo(&h, domain)
}

/// Structure making `Re[h dw0 ^ dw1]` anti-invariant, rotated away from `J0`
/// by the smooth weight `lambda`.
///
/// With `(a, b) = lambda (-Im h, Re h)` the fundamental form is
/// `((1 - a^2 - b^2) omega0 + 2a phi0 + 2b psi0) / (1 + a^2 + b^2)`, where
/// `psi0 = J0 phi0`; it is a unit self-dual form orthogonal to
/// `Re h phi0 + Im h psi0`, and `J = -W` for its matrix `W`.
pub fn rotated_structure(h: &ComplexExpr, lambda: &FieldExpr, domain: Domain) -> AlmostComplexStructure {
    let a = -(lambda * &h.im);
    let b = lambda * &h.re;
    let s = &a * &a + &b * &b;
    let den = 1.0 + s.clone();
    let c0 = (1.0 - s) / den.clone();
    let c1 = (2.0 * a) / den.clone();
    let c2 = (2.0 * b) / den;
    // Coefficients on dx12, dx13, dx14, dx23, dx24, dx34 of
    // c0 (dx12 + dx34) + c1 (dx13 - dx24) - c2 (dx14 + dx23).
    let coeffs = [c0.clone(), c1.clone(), -&c2, -&c2, -&c1, c0];
    let w = TwoForm::new(coeffs, domain.clone()).matrix();
    AlmostComplexStructure::new(std::array::from_fn(|i| std::array::from_fn(|j| -&w[i][j])), domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{anti_invariance_residual, closedness_residual, Sampling};
    use crate::linalg;

    #[test]
    fn shear_structure_is_a_complex_structure() {
        let d = Domain::cube(1.0);
        let j = shear_structure(0.05, d.clone());
        let s = Sampling { grid: 5, n_random: 200, seed: 7 };
        assert!(j.validate(&s).unwrap() < 1e-13);
        assert_eq!(j.at(&[0.0; 4]), J0);
        let off = j.at(&[0.3, -0.2, 0.1, 0.4]);
        assert!(linalg::max_abs(&linalg::sub(&off, &J0)) > 1e-3);
    }

    #[test]
    fn rotated_structure_keeps_alpha_anti_invariant() {
        let d = Domain::cube(1.0);
        let h = parse_complex("w0*w1 + 0.5", &W_COORDS).unwrap();
        let lambda = FieldExpr::parse("0.3 + 0.2*x3").unwrap();
        let j = rotated_structure(&h, &lambda, d.clone());
        let s = Sampling { grid: 5, n_random: 200, seed: 3 };
        assert!(j.validate(&s).unwrap() < 1e-13);
        let alpha = TwoForm::re_holo(&h, d);
        assert!(anti_invariance_residual(&alpha, &j, &s).0 < 1e-13);
        assert!(closedness_residual(&alpha, &s) < 1e-13);
    }
}
