//! Planar map representations.

use num_complex::Complex64 as C;

use crate::expr::{FieldExpr, Program};

/// A map `R^2 -> R^2` with a Jacobian.
pub trait PlanarMap {
    fn value(&self, p: [f64; 2]) -> [f64; 2];

    /// Jacobian `J[r][c] = d u_r / d x_c`; central differences by default.
    fn jacobian(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let h = 1e-6 * (1.0 + p[0].abs().max(p[1].abs()));
        let mut j = [[0.0; 2]; 2];
        for c in 0..2 {
            let mut a = p;
            let mut b = p;
            a[c] += h;
            b[c] -= h;
            let (fa, fb) = (self.value(a), self.value(b));
            for r in 0..2 {
                j[r][c] = (fa[r] - fb[r]) / (2.0 * h);
            }
        }
        j
    }
}

/// Closure-backed map with finite-difference Jacobian.
pub struct FnMap<F>(F);

impl<F: Fn([f64; 2]) -> [f64; 2]> FnMap<F> {
    pub fn new(f: F) -> Self {
        FnMap(f)
    }
}

impl<F: Fn([f64; 2]) -> [f64; 2]> PlanarMap for FnMap<F> {
    fn value(&self, p: [f64; 2]) -> [f64; 2] {
        (self.0)(p)
    }
}

/// Pair of expressions in two variables with exact Jacobian.
pub struct ExprMap {
    program: Program,
}

impl ExprMap {
    /// `u` and `v` are expressions in variables 0 and 1.
    pub fn new(u: &FieldExpr, v: &FieldExpr) -> Self {
        let exprs = [u.clone(), v.clone(), u.derivative(0), u.derivative(1), v.derivative(0), v.derivative(1)];
        ExprMap { program: Program::new(&exprs) }
    }

    /// Parse two expressions over `x, y`.
    pub fn parse(u: &str, v: &str) -> Result<Self, crate::expr::ExprError> {
        let vars = ["x", "y"];
        Ok(Self::new(&FieldExpr::parse_with(u, &vars)?, &FieldExpr::parse_with(v, &vars)?))
    }

    fn all(&self, p: [f64; 2]) -> [f64; 6] {
        let mut out = [0.0; 6];
        let x = [p[0], p[1]];
        self.program.eval(&x, &mut Vec::new(), &mut out);
        out
    }
}

impl PlanarMap for ExprMap {
    fn value(&self, p: [f64; 2]) -> [f64; 2] {
        let a = self.all(p);
        [a[0], a[1]]
    }

    fn jacobian(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let a = self.all(p);
        [[a[2], a[3]], [a[4], a[5]]]
    }
}

/// Polynomial `sum c_ab z^a conj(z)^b` with exact Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct ZZbarPoly {
    pub terms: Vec<(u32, u32, C)>,
}

impl ZZbarPoly {
    pub fn new(terms: Vec<(u32, u32, C)>) -> Self {
        ZZbarPoly { terms }
    }

    /// `lead * prod (z - a)`.
    pub fn from_roots(roots: &[C], lead: C) -> Self {
        let mut p = ZZbarPoly::new(vec![(0, 0, lead)]);
        for a in roots {
            p = p.mul(&ZZbarPoly::new(vec![(1, 0, C::new(1.0, 0.0)), (0, 0, -*a)]));
        }
        p
    }

    /// Product with like terms collected.
    pub fn mul(&self, other: &Self) -> Self {
        let mut terms: Vec<(u32, u32, C)> = Vec::new();
        for &(a, b, c) in &self.terms {
            for &(d, e, f) in &other.terms {
                match terms.iter_mut().find(|t| t.0 == a + d && t.1 == b + e) {
                    Some(t) => t.2 += c * f,
                    None => terms.push((a + d, b + e, c * f)),
                }
            }
        }
        ZZbarPoly { terms }
    }

    pub fn eval(&self, z: C) -> C {
        self.terms.iter().map(|&(a, b, c)| c * z.powu(a) * z.conj().powu(b)).sum()
    }

    /// `(du/dz, du/dzbar)`.
    pub fn wirtinger(&self, z: C) -> (C, C) {
        let mut dz = C::new(0.0, 0.0);
        let mut dzb = C::new(0.0, 0.0);
        for &(a, b, c) in &self.terms {
            if a > 0 {
                dz += c * a as f64 * z.powu(a - 1) * z.conj().powu(b);
            }
            if b > 0 {
                dzb += c * b as f64 * z.powu(a) * z.conj().powu(b - 1);
            }
        }
        (dz, dzb)
    }

    /// The polynomial with conjugated values.
    pub fn conj(&self) -> Self {
        ZZbarPoly { terms: self.terms.iter().map(|&(a, b, c)| (b, a, c.conj())).collect() }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|&(a, b, _)| a + b).max().unwrap_or(0)
    }
}

impl PlanarMap for ZZbarPoly {
    fn value(&self, p: [f64; 2]) -> [f64; 2] {
        let w = self.eval(C::new(p[0], p[1]));
        [w.re, w.im]
    }

    fn jacobian(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let (dz, dzb) = self.wirtinger(C::new(p[0], p[1]));
        let dx = dz + dzb;
        let dy = C::i() * (dz - dzb);
        [[dx.re, dy.re], [dx.im, dy.im]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zzbar_jacobian_matches_finite_differences() {
        let p = ZZbarPoly::new(vec![(2, 1, C::new(0.3, -1.0)), (0, 2, C::new(1.0, 0.5)), (1, 0, C::new(0.0, 2.0))]);
        let fd = FnMap::new(|q| p.value(q));
        let x = [0.3, -0.6];
        let (a, b) = (p.jacobian(x), fd.jacobian(x));
        for r in 0..2 {
            for c in 0..2 {
                assert!((a[r][c] - b[r][c]).abs() < 1e-8);
            }
        }
        let (dz, dzb) = p.wirtinger(C::new(x[0], x[1]));
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        assert!((det - (dz.norm_sqr() - dzb.norm_sqr())).abs() < 1e-12);
    }

    #[test]
    fn expr_map_from_text() {
        let m = ExprMap::parse("x*x+y*y", "0").unwrap();
        assert_eq!(m.value([3.0, 4.0]), [25.0, 0.0]);
        assert_eq!(m.jacobian([3.0, 4.0]), [[6.0, 8.0], [0.0, 0.0]]);
    }
}
