//! A small expression language for smooth fields.
//!
//! Grammar: numbers, declared variables, `+ - * / ^`, unary minus, parentheses,
//! `sin cos exp log sqrt abs` and `pow(e, k)`. `^` binds tightest and is right
//! associative; `-a^2` parses as `-(a^2)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{check_arity, Field, ScalarField};
use crate::jets::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn lookup(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var { index: usize, name: String },
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Arithmetic shared by reals and jets.
pub trait Scalar: Clone {
    fn lift_from(&self, c: f64) -> Self;
    fn value_of(&self) -> f64;
    fn add_s(&self, o: &Self) -> Self;
    fn sub_s(&self, o: &Self) -> Self;
    fn mul_s(&self, o: &Self) -> Self;
    fn div_s(&self, o: &Self) -> Result<Self>;
    fn neg_s(&self) -> Self;
    fn powi_s(&self, n: i64) -> Result<Self>;
    fn powf_s(&self, r: f64) -> Result<Self>;
    fn func(&self, f: Func) -> Result<Self>;
}

impl Scalar for f64 {
    fn lift_from(&self, c: f64) -> Self {
        c
    }
    fn value_of(&self) -> f64 {
        *self
    }
    fn add_s(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_s(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_s(&self, o: &Self) -> Self {
        self * o
    }
    fn div_s(&self, o: &Self) -> Result<Self> {
        if *o == 0.0 {
            return Err(Error::domain("/", "division by zero"));
        }
        Ok(self / o)
    }
    fn neg_s(&self) -> Self {
        -self
    }
    fn powi_s(&self, n: i64) -> Result<Self> {
        if n < 0 && *self == 0.0 {
            return Err(Error::domain("^", "negative power of zero"));
        }
        Ok(self.powi(n as i32))
    }
    fn powf_s(&self, r: f64) -> Result<Self> {
        if r.fract() == 0.0 && r.abs() < 1e9 {
            return self.powi_s(r as i64);
        }
        if *self < 0.0 || (*self == 0.0 && r < 0.0) {
            return Err(Error::domain("^", format!("non-integer power {r} of {self}")));
        }
        Ok(self.powf(r))
    }
    fn func(&self, f: Func) -> Result<Self> {
        let x = *self;
        Ok(match f {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Log => {
                if !(x > 0.0) {
                    return Err(Error::domain("log", format!("logarithm of nonpositive value {x}")));
                }
                x.ln()
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(Error::domain("sqrt", format!("square root of negative value {x}")));
                }
                x.sqrt()
            }
            Func::Abs => x.abs(),
        })
    }
}

impl Scalar for Jet {
    fn lift_from(&self, c: f64) -> Self {
        self.lift(c)
    }
    fn value_of(&self) -> f64 {
        self.value()
    }
    fn add_s(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_s(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_s(&self, o: &Self) -> Self {
        self * o
    }
    fn div_s(&self, o: &Self) -> Result<Self> {
        self.div_jet(o)
    }
    fn neg_s(&self) -> Self {
        -self
    }
    fn powi_s(&self, n: i64) -> Result<Self> {
        self.powi(n)
    }
    fn powf_s(&self, r: f64) -> Result<Self> {
        self.powf(r)
    }
    fn func(&self, f: Func) -> Result<Self> {
        match f {
            Func::Sin => Ok(self.sin()),
            Func::Cos => Ok(self.cos()),
            Func::Exp => Ok(self.exp()),
            Func::Log => self.ln(),
            Func::Sqrt => self.sqrt(),
            Func::Abs => self.abs(),
        }
    }
}

impl Expr {
    fn constant_value(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Neg(e) => e.constant_value().map(|v| -v),
            _ if self.variables().is_empty() => self.eval_inner::<f64>(&[], &0.0).ok(),
            _ => None,
        }
    }

    /// Evaluates with `template` supplying the shape of constants.
    pub fn eval<S: Scalar>(&self, vars: &[S], template: &S) -> Result<S> {
        self.eval_inner(vars, template).map_err(|e| e.at_expr(|| self.to_string()))
    }

    fn eval_inner<S: Scalar>(&self, vars: &[S], t: &S) -> Result<S> {
        let located = |e: Error, node: &Expr| e.at_expr(|| node.to_string());
        match self {
            Expr::Num(v) => Ok(t.lift_from(*v)),
            Expr::Var { index, .. } => Ok(vars[*index].clone()),
            Expr::Neg(e) => Ok(e.eval_inner(vars, t)?.neg_s()),
            Expr::Call(f, e) => {
                let a = e.eval_inner(vars, t)?;
                a.func(*f).map_err(|err| located(err, self))
            }
            Expr::Bin(op, l, r) => {
                let a = l.eval_inner(vars, t)?;
                if *op == BinOp::Pow {
                    if let Some(k) = r.constant_value() {
                        return a.powf_s(k).map_err(|err| located(err, self));
                    }
                    let b = r.eval_inner(vars, t)?;
                    let la = a.func(Func::Log).map_err(|err| located(err, self))?;
                    return b.mul_s(&la).func(Func::Exp);
                }
                let b = r.eval_inner(vars, t)?;
                match op {
                    BinOp::Add => Ok(a.add_s(&b)),
                    BinOp::Sub => Ok(a.sub_s(&b)),
                    BinOp::Mul => Ok(a.mul_s(&b)),
                    BinOp::Div => a.div_s(&b).map_err(|err| located(err, self)),
                    BinOp::Pow => unreachable!(),
                }
            }
        }
    }

    /// Indices of the variables that occur in the expression.
    pub fn variables(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<usize>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var { index, .. } => out.push(*index),
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var { name, .. } => write!(f, "{name}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Bin(op, l, r) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({l} {s} {r})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let s = &text[start..i];
            let v: f64 = s.parse().map_err(|_| Error::Parse { offset: start, msg: format!("malformed number `{s}`") })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if b"+-*/^(),".contains(&c) {
            out.push((Tok::Op(c as char), i));
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(Error::Parse { offset: i, msg: format!("unexpected character `{ch}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    vars: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { offset: self.offset(), msg: msg.into() })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn starts_operand(&self) -> bool {
        matches!(self.peek(), Some(Tok::Num(_)) | Some(Tok::Ident(_)) | Some(Tok::Op('(')) | Some(Tok::Op('-')) | Some(Tok::Op('+')))
    }

    /// Parses the right operand of the operator just consumed at `op_at`.
    fn operand<F>(&mut self, op_at: usize, op: char, f: F) -> Result<Expr>
    where
        F: FnOnce(&mut Self) -> Result<Expr>,
    {
        if !self.starts_operand() {
            return Err(Error::Parse { offset: op_at, msg: format!("operator `{op}` is missing its right operand") });
        }
        f(self)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let at = self.offset();
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let c = if op == BinOp::Add { '+' } else { '-' };
            let rhs = self.operand(at, c, |p| p.term())?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let at = self.offset();
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let c = if op == BinOp::Mul { '*' } else { '/' };
            let rhs = self.operand(at, c, |p| p.unary())?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        let at = self.offset();
        if self.eat('-') {
            let e = self.operand(at, '-', |p| p.unary())?;
            return Ok(Expr::Neg(Box::new(e)));
        }
        if self.eat('+') {
            return self.operand(at, '+', |p| p.unary());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        let at = self.offset();
        if self.eat('^') {
            let exp = self.operand(at, '^', |p| p.unary())?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected `)`");
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::Op('(')) {
                    self.pos += 1;
                    let mut args = Vec::new();
                    if !self.eat(')') {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(')') {
                                break;
                            }
                            if !self.eat(',') {
                                return self.err("expected `,` or `)`");
                            }
                        }
                    }
                    return self.call(&name, args, at);
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(index) => Ok(Expr::Var { index, name }),
                    None => Err(Error::Parse { offset: at, msg: format!("unknown identifier `{name}`") }),
                }
            }
            Some(Tok::Op(c)) => self.err(format!("unexpected `{c}`")),
            None => self.err("unexpected end of input"),
        }
    }

    fn call(&self, name: &str, mut args: Vec<Expr>, at: usize) -> Result<Expr> {
        let arity_err = |want: usize, got: usize| Error::Parse { offset: at, msg: format!("`{name}` takes {want} argument(s), got {got}") };
        if name == "pow" {
            if args.len() != 2 {
                return Err(arity_err(2, args.len()));
            }
            let k = args.pop().unwrap();
            let b = args.pop().unwrap();
            return Ok(Expr::Bin(BinOp::Pow, Box::new(b), Box::new(k)));
        }
        match Func::lookup(name) {
            Some(f) => {
                if args.len() != 1 {
                    return Err(arity_err(1, args.len()));
                }
                Ok(Expr::Call(f, Box::new(args.pop().unwrap())))
            }
            None => Err(Error::Parse { offset: at, msg: format!("unknown function `{name}`") }),
        }
    }
}

/// Parses `text` with the given variable names (their order fixes argument positions).
pub fn parse_expression(text: &str, vars: &[&str]) -> Result<Expr> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len(), vars };
    if p.peek().is_none() {
        return p.err("empty expression");
    }
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(e)
}

/// An expression bound to an argument list.
pub struct ExprField {
    pub expr: Expr,
    pub arity: usize,
    pub source: String,
}

impl ExprField {
    pub fn parse(text: &str, vars: &[&str]) -> Result<ExprField> {
        Ok(ExprField { expr: parse_expression(text, vars)?, arity: vars.len(), source: text.to_string() })
    }
}

impl Field for ExprField {
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval_jet(&self, args: &[Jet]) -> Result<Jet> {
        check_arity(self.arity, args.len())?;
        let t = match args.first() {
            Some(a) => a.lift(0.0),
            None => Jet::constant(1, 0, 0.0),
        };
        self.expr.eval(args, &t)
    }

    fn eval(&self, args: &[f64]) -> Result<f64> {
        check_arity(self.arity, args.len())?;
        self.expr.eval(args, &0.0)
    }

    fn describe(&self) -> String {
        self.source.clone()
    }
}

pub fn expr_field(text: &str, vars: &[&str]) -> Result<ScalarField> {
    Ok(Arc::new(ExprField::parse(text, vars)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const V: &[&str] = &["x1", "u1", "u2"];

    #[test]
    fn precedence_and_value() {
        let e = parse_expression("u1^2*u2 + sin(x1)", V).unwrap();
        assert_eq!(e.eval(&[0.0, 2.0, 3.0], &0.0).unwrap(), 12.0);
        let e = parse_expression("2^3^2", V).unwrap();
        assert_eq!(e.eval(&[0.0; 3], &0.0).unwrap(), 512.0);
        let e = parse_expression("-u1^2", V).unwrap();
        assert_eq!(e.eval(&[0.0, 3.0, 0.0], &0.0).unwrap(), -9.0);
        let e = parse_expression("pow(u1, 3) - 8/2/2", V).unwrap();
        assert_eq!(e.eval(&[0.0, 2.0, 0.0], &0.0).unwrap(), 6.0);
    }

    #[test]
    fn error_offsets() {
        match parse_expression("u1 +* u2", V) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("{other:?}"),
        }
        match parse_expression("u1 + w", V) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("{other:?}"),
        }
        match parse_expression("sin(u1, u2)", V) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expression("(u1", V), Err(Error::Parse { offset: 3, .. })));
        assert!(matches!(parse_expression("u1 $ 2", V), Err(Error::Parse { offset: 3, .. })));
    }

    #[test]
    fn display_round_trip() {
        for s in ["u1^2*u2 + sin(x1)", "1/(1+u1^2+u2^2)^2", "-x1^-2 + exp(-u1)*log(2.5e-3+u2)"] {
            let e = parse_expression(s, V).unwrap();
            let again = parse_expression(&e.to_string(), V).unwrap();
            assert_eq!(e, again);
        }
    }

    #[test]
    fn domain_error_names_subexpression() {
        let f = ExprField::parse("u2 + log(u1 - 1)", V).unwrap();
        match f.eval(&[0.0, 0.5, 0.0]) {
            Err(Error::Domain { expr: Some(expr), .. }) => assert!(expr.contains("log"), "{expr}"),
            other => panic!("{other:?}"),
        }
        let f = ExprField::parse("1/(u1-u2)", V).unwrap();
        assert!(matches!(f.eval(&[0.0, 1.0, 1.0]), Err(Error::Domain { .. })));
    }
}
