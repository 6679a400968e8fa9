//! Scalar field expressions over `x1..x4`.
//!
//! Expressions are immutable DAGs with shared subtrees (`Arc` nodes). Symbolic
//! derivatives reuse the operand subtrees of the original expression, and
//! evaluation goes through a compiled register tape that evaluates every
//! shared node once, so repeated differentiation does not blow up.

mod complex;
mod parse;

pub use complex::{parse_complex, ComplexExpr};

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use parse::{Ast, BinOp, Func, Parser, Symbols};

/// Default variable names.
pub const COORDS: [&str; 4] = ["x1", "x2", "x3", "x4"];

/// Complex coordinates `w0 = x1 + i x2`, `w1 = x3 + i x4` for [`parse_complex`].
pub const W_COORDS: [(&str, usize, usize); 2] = [("w0", 0, 1), ("w1", 2, 3)];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ExprError {
    pub fn offset(&self) -> usize {
        match self {
            ExprError::Syntax { offset, .. } | ExprError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Arc<Node>),
    Add(Arc<Node>, Arc<Node>),
    Sub(Arc<Node>, Arc<Node>),
    Mul(Arc<Node>, Arc<Node>),
    Div(Arc<Node>, Arc<Node>),
    Sin(Arc<Node>),
    Cos(Arc<Node>),
    Exp(Arc<Node>),
    Pow(Arc<Node>, i32),
}

/// An immutable scalar field expression.
#[derive(Clone)]
pub struct FieldExpr {
    root: Arc<Node>,
    program: OnceLock<Arc<Program>>,
}

impl fmt::Debug for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldExpr({self})")
    }
}

impl FieldExpr {
    fn from_node(root: Arc<Node>) -> Self {
        FieldExpr { root, program: OnceLock::new() }
    }

    /// Parse an expression over `x1..x4`.
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        Self::parse_with(text, &COORDS)
    }

    /// Parse with a custom variable list; `vars[k]` becomes variable index `k`.
    pub fn parse_with(text: &str, vars: &[&str]) -> Result<Self, ExprError> {
        let syms = Symbols { vars, allow_imag: false };
        let ast = Parser::parse(text, &syms)?;
        Ok(Self::from_ast(&ast))
    }

    fn from_ast(ast: &Ast) -> Self {
        match ast {
            Ast::Num(v) => Self::constant(*v),
            Ast::Var(i) => Self::var(*i),
            Ast::Imag => unreachable!("imaginary unit rejected by the real parser"),
            Ast::Neg(a) => -Self::from_ast(a),
            Ast::Bin(op, a, b) => {
                let (a, b) = (Self::from_ast(a), Self::from_ast(b));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Ast::Call(f, a) => {
                let a = Self::from_ast(a);
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Conj => unreachable!("conj rejected by the real parser"),
                }
            }
            Ast::Pow(a, n) => Self::from_ast(a).powi(*n),
        }
    }

    pub fn constant(v: f64) -> Self {
        Self::from_node(Arc::new(Node::Const(v)))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// Variable with 0-based index (`var(0)` is `x1`).
    pub fn var(index: usize) -> Self {
        Self::from_node(Arc::new(Node::Var(index)))
    }

    /// The constant value, if this expression is a literal.
    pub fn as_constant(&self) -> Option<f64> {
        match *self.root {
            Node::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    pub fn sin(&self) -> Self {
        match self.as_constant() {
            Some(c) => Self::constant(c.sin()),
            None => Self::from_node(Arc::new(Node::Sin(self.root.clone()))),
        }
    }

    pub fn cos(&self) -> Self {
        match self.as_constant() {
            Some(c) => Self::constant(c.cos()),
            None => Self::from_node(Arc::new(Node::Cos(self.root.clone()))),
        }
    }

    pub fn exp(&self) -> Self {
        match self.as_constant() {
            Some(c) => Self::constant(c.exp()),
            None => Self::from_node(Arc::new(Node::Exp(self.root.clone()))),
        }
    }

    pub fn powi(&self, n: i32) -> Self {
        match (n, self.as_constant()) {
            (0, _) => Self::one(),
            (1, _) => self.clone(),
            (_, Some(c)) => Self::constant(c.powi(n)),
            _ => Self::from_node(Arc::new(Node::Pow(self.root.clone(), n))),
        }
    }

    /// Largest variable index referenced plus one.
    pub fn arity(&self) -> usize {
        fn walk(n: &Arc<Node>, seen: &mut HashMap<*const Node, ()>, acc: &mut usize) {
            if seen.insert(Arc::as_ptr(n), ()).is_some() {
                return;
            }
            match &**n {
                Node::Const(_) => {}
                Node::Var(i) => *acc = (*acc).max(i + 1),
                Node::Neg(a) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) | Node::Pow(a, _) => walk(a, seen, acc),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    walk(a, seen, acc);
                    walk(b, seen, acc);
                }
            }
        }
        let mut acc = 0;
        walk(&self.root, &mut HashMap::new(), &mut acc);
        acc
    }

    /// Exact partial derivative with respect to variable `axis` (0-based).
    pub fn derivative(&self, axis: usize) -> Self {
        let mut memo = HashMap::new();
        Self::from_node(diff(&self.root, axis, &mut memo))
    }

    /// Evaluate at `x`. Panics if `x` is shorter than [`arity`](Self::arity).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let prog = self.program.get_or_init(|| Arc::new(Program::new(std::slice::from_ref(self))));
        let mut out = [0.0];
        prog.eval(x, &mut Vec::new(), &mut out);
        out[0]
    }
}

fn diff(n: &Arc<Node>, axis: usize, memo: &mut HashMap<*const Node, Arc<Node>>) -> Arc<Node> {
    if let Some(d) = memo.get(&Arc::as_ptr(n)) {
        return d.clone();
    }
    let wrap = |a: &Arc<Node>| FieldExpr::from_node(a.clone());
    let mut d = |a: &Arc<Node>| FieldExpr::from_node(diff(a, axis, memo));
    let out = match &**n {
        Node::Const(_) => FieldExpr::zero(),
        Node::Var(i) => FieldExpr::constant(if *i == axis { 1.0 } else { 0.0 }),
        Node::Neg(a) => -d(a),
        Node::Add(a, b) => d(a) + d(b),
        Node::Sub(a, b) => d(a) - d(b),
        Node::Mul(a, b) => {
            let (da, db) = (d(a), d(b));
            da * wrap(b) + wrap(a) * db
        }
        Node::Div(a, b) => {
            let (da, db) = (d(a), d(b));
            let (a, b) = (wrap(a), wrap(b));
            (da * b.clone() - a * db) / b.powi(2)
        }
        Node::Sin(a) => wrap(a).cos() * d(a),
        Node::Cos(a) => -(wrap(a).sin() * d(a)),
        Node::Exp(a) => FieldExpr::from_node(n.clone()) * d(a),
        Node::Pow(a, k) => FieldExpr::constant(*k as f64) * wrap(a).powi(k - 1) * d(a),
    };
    memo.insert(Arc::as_ptr(n), out.root.clone());
    out.root
}

macro_rules! binop {
    ($trait:ident, $method:ident, $fold:expr) => {
        impl std::ops::$trait<FieldExpr> for FieldExpr {
            type Output = FieldExpr;
            fn $method(self, rhs: FieldExpr) -> FieldExpr {
                let f: fn(FieldExpr, FieldExpr) -> FieldExpr = $fold;
                f(self, rhs)
            }
        }
        impl std::ops::$trait<&FieldExpr> for &FieldExpr {
            type Output = FieldExpr;
            fn $method(self, rhs: &FieldExpr) -> FieldExpr {
                std::ops::$trait::$method(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$trait<f64> for FieldExpr {
            type Output = FieldExpr;
            fn $method(self, rhs: f64) -> FieldExpr {
                std::ops::$trait::$method(self, FieldExpr::constant(rhs))
            }
        }
        impl std::ops::$trait<f64> for &FieldExpr {
            type Output = FieldExpr;
            fn $method(self, rhs: f64) -> FieldExpr {
                std::ops::$trait::$method(self.clone(), FieldExpr::constant(rhs))
            }
        }
        impl std::ops::$trait<FieldExpr> for f64 {
            type Output = FieldExpr;
            fn $method(self, rhs: FieldExpr) -> FieldExpr {
                std::ops::$trait::$method(FieldExpr::constant(self), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| match (a.as_constant(), b.as_constant()) {
    (Some(x), Some(y)) => FieldExpr::constant(x + y),
    (Some(x), _) if x == 0.0 => b,
    (_, Some(y)) if y == 0.0 => a,
    _ => FieldExpr::from_node(Arc::new(Node::Add(a.root, b.root))),
});

binop!(Sub, sub, |a, b| match (a.as_constant(), b.as_constant()) {
    (Some(x), Some(y)) => FieldExpr::constant(x - y),
    (Some(x), _) if x == 0.0 => -b,
    (_, Some(y)) if y == 0.0 => a,
    _ => FieldExpr::from_node(Arc::new(Node::Sub(a.root, b.root))),
});

binop!(Mul, mul, |a, b| match (a.as_constant(), b.as_constant()) {
    (Some(x), Some(y)) => FieldExpr::constant(x * y),
    (Some(x), _) | (_, Some(x)) if x == 0.0 => FieldExpr::zero(),
    (Some(x), _) if x == 1.0 => b,
    (_, Some(y)) if y == 1.0 => a,
    (Some(x), _) if x == -1.0 => -b,
    (_, Some(y)) if y == -1.0 => -a,
    _ => FieldExpr::from_node(Arc::new(Node::Mul(a.root, b.root))),
});

binop!(Div, div, |a, b| match (a.as_constant(), b.as_constant()) {
    (Some(x), Some(y)) => FieldExpr::constant(x / y),
    (Some(x), _) if x == 0.0 => FieldExpr::zero(),
    (_, Some(y)) if y == 1.0 => a,
    _ => FieldExpr::from_node(Arc::new(Node::Div(a.root, b.root))),
});

impl std::ops::Neg for FieldExpr {
    type Output = FieldExpr;
    fn neg(self) -> FieldExpr {
        match &*self.root {
            Node::Const(c) => FieldExpr::constant(-c),
            Node::Neg(a) => FieldExpr::from_node(a.clone()),
            _ => FieldExpr::from_node(Arc::new(Node::Neg(self.root))),
        }
    }
}

impl std::ops::Neg for &FieldExpr {
    type Output = FieldExpr;
    fn neg(self) -> FieldExpr {
        -self.clone()
    }
}

impl std::iter::Sum for FieldExpr {
    fn sum<I: Iterator<Item = FieldExpr>>(iter: I) -> FieldExpr {
        iter.fold(FieldExpr::zero(), |a, b| a + b)
    }
}

/// Fully parenthesized output that re-parses to an equivalent tree.
impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match n {
                Node::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => write!(f, "(-{:?})", -c),
                Node::Const(c) => write!(f, "{c:?}"),
                Node::Var(i) => write!(f, "x{}", i + 1),
                Node::Neg(a) => {
                    write!(f, "(-")?;
                    go(a, f)?;
                    write!(f, ")")
                }
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    let op = match n {
                        Node::Add(..) => " + ",
                        Node::Sub(..) => " - ",
                        Node::Mul(..) => "*",
                        _ => "/",
                    };
                    write!(f, "(")?;
                    go(a, f)?;
                    write!(f, "{op}")?;
                    go(b, f)?;
                    write!(f, ")")
                }
                Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => {
                    let name = match n {
                        Node::Sin(_) => "sin",
                        Node::Cos(_) => "cos",
                        _ => "exp",
                    };
                    write!(f, "{name}(")?;
                    go(a, f)?;
                    write!(f, ")")
                }
                Node::Pow(a, k) => {
                    write!(f, "pow(")?;
                    go(a, f)?;
                    write!(f, ", {k})")
                }
            }
        }
        go(&self.root, f)
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var(usize),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Sin(usize),
    Cos(usize),
    Exp(usize),
    Pow(usize, i32),
}

/// Several expressions compiled into one register tape; nodes shared between
/// (or within) the expressions are evaluated once per call.
#[derive(Debug, Clone)]
pub struct Program {
    ops: Vec<Op>,
    outputs: Vec<usize>,
    arity: usize,
}

impl Program {
    pub fn new(exprs: &[FieldExpr]) -> Self {
        let mut ops = Vec::new();
        let mut slots: HashMap<*const Node, usize> = HashMap::new();
        let mut arity = 0;
        let outputs = exprs
            .iter()
            .map(|e| compile(&e.root, &mut ops, &mut slots, &mut arity))
            .collect();
        Program { ops, outputs, arity }
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Evaluate all outputs at `x` into `out`; `scratch` is reused between calls.
    pub fn eval(&self, x: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) {
        assert!(x.len() >= self.arity, "point has {} coordinates, expression needs {}", x.len(), self.arity);
        scratch.clear();
        scratch.reserve(self.ops.len());
        for op in &self.ops {
            let r = &*scratch;
            let v = match *op {
                Op::Const(c) => c,
                Op::Var(i) => x[i],
                Op::Neg(a) => -r[a],
                Op::Add(a, b) => r[a] + r[b],
                Op::Sub(a, b) => r[a] - r[b],
                Op::Mul(a, b) => r[a] * r[b],
                Op::Div(a, b) => r[a] / r[b],
                Op::Sin(a) => r[a].sin(),
                Op::Cos(a) => r[a].cos(),
                Op::Exp(a) => r[a].exp(),
                Op::Pow(a, k) => r[a].powi(k),
            };
            scratch.push(v);
        }
        for (o, &s) in out.iter_mut().zip(&self.outputs) {
            *o = scratch[s];
        }
    }

    pub fn eval_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs.len()];
        self.eval(x, &mut Vec::new(), &mut out);
        out
    }
}

fn compile(n: &Arc<Node>, ops: &mut Vec<Op>, slots: &mut HashMap<*const Node, usize>, arity: &mut usize) -> usize {
    if let Some(&s) = slots.get(&Arc::as_ptr(n)) {
        return s;
    }
    let mut c = |a: &Arc<Node>, ops: &mut Vec<Op>| compile(a, ops, slots, arity);
    let op = match &**n {
        Node::Const(v) => Op::Const(*v),
        Node::Var(i) => {
            *arity = (*arity).max(i + 1);
            Op::Var(*i)
        }
        Node::Neg(a) => Op::Neg(c(a, ops)),
        Node::Sin(a) => Op::Sin(c(a, ops)),
        Node::Cos(a) => Op::Cos(c(a, ops)),
        Node::Exp(a) => Op::Exp(c(a, ops)),
        Node::Pow(a, k) => Op::Pow(c(a, ops), *k),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            let (sa, sb) = (c(a, ops), c(b, ops));
            match &**n {
                Node::Add(..) => Op::Add(sa, sb),
                Node::Sub(..) => Op::Sub(sa, sb),
                Node::Mul(..) => Op::Mul(sa, sb),
                _ => Op::Div(sa, sb),
            }
        }
    };
    ops.push(op);
    let s = ops.len() - 1;
    slots.insert(Arc::as_ptr(n), s);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_evaluates_products() {
        let e = FieldExpr::parse("x1*x3 - x2*x4").unwrap();
        assert_eq!(e.eval(&[1.0, 2.0, 3.0, 4.0]), 3.0 - 8.0);
    }

    #[test]
    fn sin_plus_two_at_half_pi() {
        let e = FieldExpr::parse("sin(x1)+2").unwrap();
        let v = e.eval(&[std::f64::consts::FRAC_PI_2, 0.0, 0.0, 0.0]);
        assert!((v - 3.0).abs() < 1e-15);
    }

    #[test]
    fn truncated_input_reports_offset() {
        let err = FieldExpr::parse("x1*(").unwrap_err();
        assert!(matches!(err, ExprError::Syntax { offset: 4, .. }), "{err}");
    }

    #[test]
    fn unknown_identifier_is_rejected() {
        let err = FieldExpr::parse("x1 + q7").unwrap_err();
        assert_eq!(err, ExprError::UnknownIdentifier { offset: 5, name: "q7".into() });
        assert!(FieldExpr::parse("tan(x1)").is_err());
    }

    #[test]
    fn precedence_and_unary_minus() {
        let e = FieldExpr::parse("-x1^2 + 2*x2/4 - -1").unwrap();
        assert_eq!(e.eval(&[3.0, 2.0, 0.0, 0.0]), -9.0 + 1.0 + 1.0);
        let p = FieldExpr::parse("pow(x1 + 1, -2)").unwrap();
        assert_eq!(p.eval(&[1.0, 0.0, 0.0, 0.0]), 0.25);
        assert_eq!(FieldExpr::parse("2^(-1)").unwrap().eval(&[]), 0.5);
        assert_eq!(FieldExpr::parse("1.5e2").unwrap().eval(&[]), 150.0);
    }

    #[test]
    fn derivative_examples() {
        let e = FieldExpr::parse("x1*x3").unwrap();
        let d = e.derivative(0);
        assert_eq!(d.eval(&[0.3, 0.0, 7.0, 0.0]), 7.0);
        let s = FieldExpr::parse("sin(x2)").unwrap().derivative(1);
        assert_eq!(s.eval(&[0.0; 4]), 1.0);
        let q = FieldExpr::parse("x1*x1*x3").unwrap().derivative(0);
        assert_eq!(q.eval(&[2.0, 0.0, 5.0, 0.0]), 20.0);
        assert!(FieldExpr::parse("3.5").unwrap().derivative(2).is_zero());
    }

    #[test]
    fn custom_variable_names() {
        let e = FieldExpr::parse_with("x*x+y*y", &["x", "y"]).unwrap();
        assert_eq!(e.eval(&[3.0, 4.0]), 25.0);
        assert_eq!(e.arity(), 2);
    }

    #[test]
    fn shared_subtrees_compile_once() {
        let base = FieldExpr::parse("sin(x1)*exp(x2) + x3").unwrap();
        let mut e = base.clone();
        for _ in 0..20 {
            e = &e * &e;
        }
        let prog = Program::new(&[e.clone()]);
        assert!(prog.ops.len() < 40, "tape has {} ops", prog.ops.len());
        let d = e.derivative(0);
        assert!(Program::new(&[d]).ops.len() < 200);
    }

    #[test]
    fn program_evaluates_several_outputs() {
        let a = FieldExpr::parse("x1 + x2").unwrap();
        let b = &a * &a;
        let prog = Program::new(&[a, b]);
        assert_eq!(prog.eval_vec(&[1.0, 2.0]), vec![3.0, 9.0]);
    }

    #[test]
    fn display_round_trips() {
        let e = FieldExpr::parse("-(x1 - 2.5e-3)*cos(x2)/pow(x3 + 2, 3) + exp(-x4)").unwrap();
        let again = FieldExpr::parse(&e.to_string()).unwrap();
        let x = [0.3, -0.7, 0.1, 0.9];
        assert_eq!(e.eval(&x), again.eval(&x));
    }
}
