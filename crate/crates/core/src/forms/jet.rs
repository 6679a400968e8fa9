//! First-order jets in four variables: a value together with its gradient.
//!
//! Pointwise linear algebra on forms and structures (projections, frame
//! coefficients) is run in jet arithmetic, so exact derivatives of composite
//! quantities come from the exact derivatives of the underlying expressions.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; 4],
}

impl Jet {
    pub const ZERO: Jet = Jet { v: 0.0, d: [0.0; 4] };

    pub fn constant(v: f64) -> Self {
        Jet { v, d: [0.0; 4] }
    }

    pub fn scale(self, s: f64) -> Self {
        Jet { v: self.v * s, d: self.d.map(|x| x * s) }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, d: std::array::from_fn(|k| self.d[k] + o.d[k]) }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet { v: self.v - o.v, d: std::array::from_fn(|k| self.d[k] - o.d[k]) }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet { v: self.v * o.v, d: std::array::from_fn(|k| self.d[k] * o.v + self.v * o.d[k]) }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        Jet { v: q, d: std::array::from_fn(|k| (self.d[k] - q * o.d[k]) * inv) }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl std::iter::Sum for Jet {
    fn sum<I: Iterator<Item = Jet>>(iter: I) -> Jet {
        iter.fold(Jet::ZERO, |a, b| a + b)
    }
}

pub type JetMat = [[Jet; 4]; 4];

pub fn constant_mat(m: &[[f64; 4]; 4]) -> JetMat {
    std::array::from_fn(|i| std::array::from_fn(|j| Jet::constant(m[i][j])))
}

pub fn matmul(a: &JetMat, b: &JetMat) -> JetMat {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
}

pub fn transpose(a: &JetMat) -> JetMat {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotient_rule() {
        let x = Jet { v: 2.0, d: [1.0, 0.0, 0.0, 0.0] };
        let y = Jet { v: 3.0, d: [0.0, 1.0, 0.0, 0.0] };
        let q = (x * x) / y;
        assert!((q.v - 4.0 / 3.0).abs() < 1e-15);
        assert!((q.d[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((q.d[1] + 4.0 / 9.0).abs() < 1e-15);
    }
}
