//! Recursive-descent parser producing an untyped syntax tree.
//!
//! Identifiers are resolved by the caller-supplied [`Symbols`] table so the
//! same grammar serves real fields over `x1..x4`, planar maps over `x, y`,
//! and complex expressions over `w0, w1` (with `i` and `conj`).

use super::ExprError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Ast {
    Num(f64),
    /// Index into the symbol table's variable list.
    Var(usize),
    Imag,
    Neg(Box<Ast>),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    Call(Func, Box<Ast>),
    Pow(Box<Ast>, i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Func {
    Sin,
    Cos,
    Exp,
    Conj,
}

/// Identifier resolution for one parse.
pub(crate) struct Symbols<'a> {
    pub vars: &'a [&'a str],
    pub allow_imag: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Ident(usize, usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if start >= bytes.len() {
            return Ok((Tok::End, start));
        }
        let c = bytes[start];
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number '{text}'"),
            })?;
            self.pos = end;
            return Ok((Tok::Num(v), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(start, end), start));
        }
        Err(ExprError::Syntax {
            offset: start,
            message: format!("unexpected character '{}'", self.src[start..].chars().next().unwrap()),
        })
    }
}

pub(crate) struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
    syms: &'a Symbols<'a>,
}

impl<'a> Parser<'a> {
    pub fn parse(src: &'a str, syms: &'a Symbols<'a>) -> Result<Ast, ExprError> {
        let mut lex = Lexer { src, pos: 0 };
        let (tok, at) = lex.next()?;
        let mut p = Parser { lex, tok, at, syms };
        let ast = p.expr()?;
        if p.tok != Tok::End {
            return Err(p.unexpected());
        }
        Ok(ast)
    }

    fn bump(&mut self) -> Result<(), ExprError> {
        let (tok, at) = self.lex.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn unexpected(&self) -> ExprError {
        let message = match self.tok {
            Tok::End => "unexpected end of input".to_string(),
            Tok::Ident(s, e) => format!("unexpected identifier '{}'", &self.lex.src[s..e]),
            t => format!("unexpected token {t:?}"),
        };
        ExprError::Syntax { offset: self.at, message }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ExprError> {
        if self.tok == want {
            self.bump()
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<Ast, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Ast, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Ast, ExprError> {
        match self.tok {
            Tok::Minus => {
                self.bump()?;
                Ok(Ast::Neg(Box::new(self.unary()?)))
            }
            Tok::Plus => {
                self.bump()?;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Ast, ExprError> {
        let base = self.primary()?;
        if self.tok == Tok::Caret {
            self.bump()?;
            let n = self.int_literal()?;
            return Ok(Ast::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    /// Integer exponent: `3`, `-2`, or `(-2)`.
    fn int_literal(&mut self) -> Result<i32, ExprError> {
        let paren = self.tok == Tok::LParen;
        if paren {
            self.bump()?;
        }
        let neg = self.tok == Tok::Minus;
        if neg {
            self.bump()?;
        }
        let v = match self.tok {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => v as i32,
            Tok::Num(_) => {
                return Err(ExprError::Syntax {
                    offset: self.at,
                    message: "exponent must be an integer".into(),
                })
            }
            _ => return Err(self.unexpected()),
        };
        self.bump()?;
        if paren {
            self.expect(Tok::RParen)?;
        }
        Ok(if neg { -v } else { v })
    }

    fn primary(&mut self) -> Result<Ast, ExprError> {
        match self.tok {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Ast::Num(v))
            }
            Tok::LParen => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(s, e) => {
                let at = self.at;
                let name = &self.lex.src[s..e];
                self.bump()?;
                if self.tok == Tok::LParen {
                    return self.call(name, at);
                }
                if let Some(i) = self.syms.vars.iter().position(|v| *v == name) {
                    return Ok(Ast::Var(i));
                }
                if name == "i" && self.syms.allow_imag {
                    return Ok(Ast::Imag);
                }
                if name == "pi" {
                    return Ok(Ast::Num(std::f64::consts::PI));
                }
                Err(ExprError::UnknownIdentifier { offset: at, name: name.to_string() })
            }
            _ => Err(self.unexpected()),
        }
    }

    fn call(&mut self, name: &str, at: usize) -> Result<Ast, ExprError> {
        let func = match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "conj" if self.syms.allow_imag => Some(Func::Conj),
            "pow" => None,
            _ => return Err(ExprError::UnknownIdentifier { offset: at, name: name.to_string() }),
        };
        self.expect(Tok::LParen)?;
        let arg = self.expr()?;
        let ast = match func {
            Some(f) => Ast::Call(f, Box::new(arg)),
            None => {
                self.expect(Tok::Comma)?;
                let n = self.int_literal()?;
                Ast::Pow(Box::new(arg), n)
            }
        };
        self.expect(Tok::RParen)?;
        Ok(ast)
    }
}
