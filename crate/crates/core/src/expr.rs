//! A small arithmetic expression grammar for coefficient fields supplied in
//! problem documents.
//!
//! Supported: `+ - * / ^`, the unary minus, parentheses, the functions
//! `sin cos cosh sinh exp`, the constants `pi` and `e`, and the variables
//! `t`, `x`, `l`. Evaluation is in binary64.
//!
//! Grammar (recursive descent; `^` is right associative and binds the
//! exponent as a unary expression so `2^-1` parses):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | name | name '(' expr ')' | '(' expr ')'
//! ```

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// The three evaluation variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    T,
    X,
    L,
}

/// Built-in unary functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Cosh,
    Sinh,
    Exp,
}

impl Func {
    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Cosh => v.cosh(),
            Func::Sinh => v.sinh(),
            Func::Exp => v.exp(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Cosh => "cosh",
            Func::Sinh => "sinh",
            Func::Exp => "exp",
        }
    }
}

/// Parsed expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Parse `src` into an expression tree.
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Evaluate at `(t, x, l)`.
    pub fn eval(&self, t: f64, x: f64, l: f64) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Var(Var::T) => t,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::L) => l,
            Expr::Neg(e) => -e.eval(t, x, l),
            Expr::Add(a, b) => a.eval(t, x, l) + b.eval(t, x, l),
            Expr::Sub(a, b) => a.eval(t, x, l) - b.eval(t, x, l),
            Expr::Mul(a, b) => a.eval(t, x, l) * b.eval(t, x, l),
            Expr::Div(a, b) => a.eval(t, x, l) / b.eval(t, x, l),
            Expr::Pow(a, b) => a.eval(t, x, l).powf(b.eval(t, x, l)),
            Expr::Call(f, e) => f.apply(e.eval(t, x, l)),
        }
    }

    /// Wrap into a shared evaluator closure.
    pub fn into_evaluator(self) -> Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync> {
        Arc::new(move |t, x, l| self.eval(t, x, l))
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized rendering; `Expr::parse` of the output yields an
    /// equivalent tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // A bare negative literal would rebind under `^` (which takes
            // precedence over unary minus), so print it parenthesized.
            Expr::Const(v) if v.is_sign_negative() => write!(f, "({v})"),
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::L) => write!(f, "l"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> Error {
        Error::Expression {
            position: self.pos,
            message: message.to_string(),
            source_text: self.src.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.name(),
            Some(_) => Err(self.error("expected a number, name, or `(`")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit() || *b == b'.')
        {
            self.pos += 1;
        }
        // Optional exponent part `e[+/-]digits`; only consumed when digits
        // follow, so `2e` parses as `2 * e`... it does not: `2e` is a parse
        // error upstream (no operator), which is the stricter, safer read.
        if self
            .bytes
            .get(self.pos)
            .is_some_and(|b| *b == b'e' || *b == b'E')
        {
            let mut probe = self.pos + 1;
            if self
                .bytes
                .get(probe)
                .is_some_and(|b| *b == b'+' || *b == b'-')
            {
                probe += 1;
            }
            if self.bytes.get(probe).is_some_and(|b| b.is_ascii_digit()) {
                self.pos = probe;
                while self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| self.error(&format!("malformed number `{text}`")))
    }

    fn name(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        match name {
            "t" => Ok(Expr::Var(Var::T)),
            "x" => Ok(Expr::Var(Var::X)),
            "l" => Ok(Expr::Var(Var::L)),
            "pi" => Ok(Expr::Const(std::f64::consts::PI)),
            "e" => Ok(Expr::Const(std::f64::consts::E)),
            "sin" | "cos" | "cosh" | "sinh" | "exp" => {
                let func = match name {
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "cosh" => Func::Cosh,
                    "sinh" => Func::Sinh,
                    _ => Func::Exp,
                };
                if !self.eat(b'(') {
                    return Err(self.error(&format!("function `{name}` needs `(`")));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(Expr::Call(func, Box::new(arg)))
            }
            _ => Err(self.error(&format!("unknown name `{name}`"))),
        }
    }
}
