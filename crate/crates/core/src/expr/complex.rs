//! Complex expressions lowered to pairs of real fields.
//!
//! A complex variable named in the symbol table maps to two real coordinates,
//! e.g. `w0 -> x1 + i x2`. The result carries real and imaginary parts as
//! ordinary [`FieldExpr`]s, so everything downstream stays real.

use super::parse::{Ast, BinOp, Func, Parser, Symbols};
use super::{ExprError, FieldExpr};

#[derive(Debug, Clone)]
pub struct ComplexExpr {
    pub re: FieldExpr,
    pub im: FieldExpr,
}

/// Parse `text` where `vars[k] = (name, re_index, im_index)`.
///
/// Besides the real grammar this accepts the imaginary unit `i` and `conj`.
pub fn parse_complex(text: &str, vars: &[(&str, usize, usize)]) -> Result<ComplexExpr, ExprError> {
    let names: Vec<&str> = vars.iter().map(|v| v.0).collect();
    let syms = Symbols { vars: &names, allow_imag: true };
    let ast = Parser::parse(text, &syms)?;
    Ok(lower(&ast, vars))
}

impl ComplexExpr {
    pub fn new(re: FieldExpr, im: FieldExpr) -> Self {
        ComplexExpr { re, im }
    }

    pub fn real(re: FieldExpr) -> Self {
        ComplexExpr { re, im: FieldExpr::zero() }
    }

    pub fn conj(&self) -> Self {
        ComplexExpr::new(self.re.clone(), -&self.im)
    }

    pub fn add(&self, o: &Self) -> Self {
        ComplexExpr::new(&self.re + &o.re, &self.im + &o.im)
    }

    pub fn sub(&self, o: &Self) -> Self {
        ComplexExpr::new(&self.re - &o.re, &self.im - &o.im)
    }

    pub fn mul(&self, o: &Self) -> Self {
        ComplexExpr::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }

    pub fn div(&self, o: &Self) -> Self {
        let den = &o.re * &o.re + &o.im * &o.im;
        let num = self.mul(&o.conj());
        ComplexExpr::new(&num.re / &den, &num.im / &den)
    }

    pub fn exp(&self) -> Self {
        let m = self.re.exp();
        ComplexExpr::new(&m * &self.im.cos(), &m * &self.im.sin())
    }

    pub fn sin(&self) -> Self {
        let (ch, sh) = cosh_sinh(&self.im);
        ComplexExpr::new(&self.re.sin() * &ch, &self.re.cos() * &sh)
    }

    pub fn cos(&self) -> Self {
        let (ch, sh) = cosh_sinh(&self.im);
        ComplexExpr::new(&self.re.cos() * &ch, -(&self.re.sin() * &sh))
    }

    pub fn powi(&self, n: i32) -> Self {
        if n < 0 {
            let one = ComplexExpr::real(FieldExpr::one());
            return one.div(&self.powi(-n));
        }
        let mut acc = ComplexExpr::real(FieldExpr::one());
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn eval(&self, x: &[f64]) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.eval(x), self.im.eval(x))
    }
}

fn cosh_sinh(b: &FieldExpr) -> (FieldExpr, FieldExpr) {
    let (p, m) = (b.exp(), (-b).exp());
    ((&p + &m) * 0.5, (&p - &m) * 0.5)
}

fn lower(ast: &Ast, vars: &[(&str, usize, usize)]) -> ComplexExpr {
    match ast {
        Ast::Num(v) => ComplexExpr::real(FieldExpr::constant(*v)),
        Ast::Var(k) => ComplexExpr::new(FieldExpr::var(vars[*k].1), FieldExpr::var(vars[*k].2)),
        Ast::Imag => ComplexExpr::new(FieldExpr::zero(), FieldExpr::one()),
        Ast::Neg(a) => {
            let a = lower(a, vars);
            ComplexExpr::new(-a.re, -a.im)
        }
        Ast::Bin(op, a, b) => {
            let (a, b) = (lower(a, vars), lower(b, vars));
            match op {
                BinOp::Add => a.add(&b),
                BinOp::Sub => a.sub(&b),
                BinOp::Mul => a.mul(&b),
                BinOp::Div => a.div(&b),
            }
        }
        Ast::Call(f, a) => {
            let a = lower(a, vars);
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
                Func::Conj => a.conj(),
            }
        }
        Ast::Pow(a, n) => lower(a, vars).powi(*n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    const W: [(&str, usize, usize); 2] = [("w0", 0, 1), ("w1", 2, 3)];

    #[test]
    fn matches_complex_arithmetic() {
        let e = parse_complex("(w0^2 - i*w1)/(1 + w0*conj(w1)) + exp(w0)*sin(w1) - cos(2*i)", &W).unwrap();
        let x = [0.3, -0.2, 0.5, 0.7];
        let (w0, w1) = (C::new(x[0], x[1]), C::new(x[2], x[3]));
        let want = (w0 * w0 - C::i() * w1) / (1.0 + w0 * w1.conj()) + w0.exp() * w1.sin() - (2.0 * C::i()).cos();
        assert!((e.eval(&x) - want).norm() < 1e-13);
    }

    #[test]
    fn negative_powers() {
        let e = parse_complex("w0^(-3)", &W).unwrap();
        let x = [0.4, 0.9, 0.0, 0.0];
        let want = C::new(0.4, 0.9).powi(-3);
        assert!((e.eval(&x) - want).norm() < 1e-12);
    }

    #[test]
    fn real_parser_rejects_imaginary_unit() {
        assert!(FieldExpr::parse("i*x1").is_err());
        assert!(FieldExpr::parse("conj(x1)").is_err());
    }
}
