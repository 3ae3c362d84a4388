//! Real-valued expressions and predicates used for flows, resets, guards,
//! invariants and observations of hybrid systems.
//!
//! Precedence, loosest first: `or`, `and`, `not`, comparisons, `+ -`, `* /`,
//! unary `-`. Functions: `exp`, `sin`, `cos`, `min`, `max`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Min,
    Max,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Exp | Func::Sin | Func::Cos => 1,
            Func::Min | Func::Max => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Le,
    Lt,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Pred {
    True,
    False,
    Cmp(CmpOp, Expr, Expr),
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("column {column}: {message}")]
pub struct ExprParseError {
    /// 1-based character column within the source text.
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("non-finite value in `{0}`")]
    NonFinite(String),
}

/// Variable lookup for evaluation.
pub trait Env {
    fn get(&self, name: &str) -> Option<f64>;
}

impl<F: Fn(&str) -> Option<f64>> Env for F {
    fn get(&self, name: &str) -> Option<f64> {
        self(name)
    }
}

impl Env for BTreeMap<String, f64> {
    fn get(&self, name: &str) -> Option<f64> {
        BTreeMap::get(self, name).copied()
    }
}

/// Parallel slices of names and values.
pub struct Bindings<'a> {
    pub names: &'a [String],
    pub values: &'a [f64],
    pub time: Option<f64>,
}

impl Env for Bindings<'_> {
    fn get(&self, name: &str) -> Option<f64> {
        if name == TIME_VAR {
            if let Some(t) = self.time {
                return Some(t);
            }
        }
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Name of the time variable in flow expressions.
pub const TIME_VAR: &str = "t";

impl Expr {
    pub fn num(x: f64) -> Expr {
        Expr::Num(x)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn eval(&self, env: &dyn Env) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(x) => *x,
            Expr::Var(n) => env.get(n).ok_or_else(|| EvalError::UnknownVariable(n.clone()))?,
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(env)?, b.eval(env)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(EvalError::DivisionByZero(self.to_string()));
                        }
                        x / y
                    }
                }
            }
            Expr::Call(f, args) => {
                let xs = args.iter().map(|a| a.eval(env)).collect::<Result<Vec<f64>, _>>()?;
                match f {
                    Func::Exp => xs[0].exp(),
                    Func::Sin => xs[0].sin(),
                    Func::Cos => xs[0].cos(),
                    Func::Min => xs[0].min(xs[1]),
                    Func::Max => xs[0].max(xs[1]),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite(self.to_string()))
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(n) => {
                out.insert(n.clone());
            }
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Replaces variables by expressions; unmapped variables stay.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Var(n) => map.get(n).cloned().unwrap_or_else(|| self.clone()),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(map))),
            Expr::Bin(op, a, b) => Expr::Bin(*op, Box::new(a.substitute(map)), Box::new(b.substitute(map))),
            Expr::Call(f, args) => Expr::Call(*f, args.iter().map(|a| a.substitute(map)).collect()),
        }
    }

    /// Whether division occurs anywhere in the expression.
    pub fn has_division(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Var(_) => false,
            Expr::Neg(e) => e.has_division(),
            Expr::Bin(op, a, b) => *op == BinOp::Div || a.has_division() || b.has_division(),
            Expr::Call(_, args) => args.iter().any(Expr::has_division),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Num(x) if *x < 0.0 || (*x == 0.0 && x.is_sign_negative()) => 3,
            Expr::Neg(_) => 3,
            _ => 4,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.prec() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Expr::Num(x) => write!(f, "{x}")?,
            Expr::Var(n) => f.write_str(n)?,
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.fmt_at(f, 3)?;
            }
            Expr::Bin(op, a, b) => {
                let (p, sym) = match op {
                    BinOp::Add => (1, "+"),
                    BinOp::Sub => (1, "-"),
                    BinOp::Mul => (2, "*"),
                    BinOp::Div => (2, "/"),
                };
                a.fmt_at(f, p)?;
                write!(f, " {sym} ")?;
                b.fmt_at(f, p + 1)?;
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    a.fmt_at(f, 0)?;
                }
                f.write_str(")")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl Pred {
    /// Evaluates with every comparison relaxed by `tol` towards truth, after
    /// pushing negations down to the comparisons. `not (a = b)` is `a != b`
    /// without slack.
    pub fn holds(&self, env: &dyn Env, tol: f64) -> Result<bool, EvalError> {
        self.eval_polar(env, tol, true)
    }

    fn eval_polar(&self, env: &dyn Env, tol: f64, positive: bool) -> Result<bool, EvalError> {
        Ok(match self {
            Pred::True => positive,
            Pred::False => !positive,
            Pred::Not(p) => p.eval_polar(env, tol, !positive)?,
            Pred::And(a, b) | Pred::Or(a, b) => {
                let conj = matches!(self, Pred::And(..)) == positive;
                let x = a.eval_polar(env, tol, positive)?;
                if conj && !x {
                    return Ok(false);
                }
                if !conj && x {
                    return Ok(true);
                }
                b.eval_polar(env, tol, positive)?
            }
            Pred::Cmp(op, a, b) => {
                let d = a.eval(env)? - b.eval(env)?;
                let op = if positive {
                    Some(*op)
                } else {
                    match op {
                        CmpOp::Le => Some(CmpOp::Gt),
                        CmpOp::Lt => Some(CmpOp::Ge),
                        CmpOp::Ge => Some(CmpOp::Lt),
                        CmpOp::Gt => Some(CmpOp::Le),
                        CmpOp::Eq => None,
                    }
                };
                match op {
                    Some(CmpOp::Le) => d <= tol,
                    Some(CmpOp::Lt) => d < tol,
                    Some(CmpOp::Eq) => d.abs() <= tol,
                    Some(CmpOp::Ge) => d >= -tol,
                    Some(CmpOp::Gt) => d > -tol,
                    None => d != 0.0,
                }
            }
        })
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Pred::True | Pred::False => {}
            Pred::Cmp(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Pred::Not(p) => p.collect_vars(out),
            Pred::And(a, b) | Pred::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Pred {
        match self {
            Pred::True | Pred::False => self.clone(),
            Pred::Cmp(op, a, b) => Pred::Cmp(*op, a.substitute(map), b.substitute(map)),
            Pred::Not(p) => Pred::Not(Box::new(p.substitute(map))),
            Pred::And(a, b) => Pred::And(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
            Pred::Or(a, b) => Pred::Or(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Pred::Or(..) => 1,
            Pred::And(..) => 2,
            Pred::Not(_) => 3,
            _ => 4,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.prec() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Pred::True => f.write_str("true")?,
            Pred::False => f.write_str("false")?,
            Pred::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol())?,
            Pred::Not(p) => {
                f.write_str("not ")?;
                p.fmt_at(f, 3)?;
            }
            Pred::And(a, b) => {
                a.fmt_at(f, 2)?;
                f.write_str(" and ")?;
                b.fmt_at(f, 3)?;
            }
            Pred::Or(a, b) => {
                a.fmt_at(f, 1)?;
                f.write_str(" or ")?;
                b.fmt_at(f, 2)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
}

const KEYWORDS: [&str; 5] = ["and", "or", "not", "true", "false"];

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ExprParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |i: usize, m: String| ExprParseError { column: i + 1, message: m };
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| err(start, format!("malformed number `{text}`")))?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
            continue;
        }
        let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let op: Option<(&'static str, usize)> = match two.as_str() {
            "<=" => Some(("<=", 2)),
            ">=" => Some((">=", 2)),
            "==" => Some(("=", 2)),
            "&&" => Some(("and", 2)),
            "||" => Some(("or", 2)),
            _ => match c {
                '≤' => Some(("<=", 1)),
                '≥' => Some((">=", 1)),
                '<' => Some(("<", 1)),
                '>' => Some((">", 1)),
                '=' => Some(("=", 1)),
                '+' => Some(("+", 1)),
                '-' | '−' => Some(("-", 1)),
                '*' | '×' => Some(("*", 1)),
                '/' | '÷' => Some(("/", 1)),
                '!' => Some(("not", 1)),
                _ => None,
            },
        };
        match (op, c) {
            (Some((o, n)), _) => {
                out.push((Tok::Op(o), start));
                i += n;
            }
            (None, '(') => {
                out.push((Tok::LParen, start));
                i += 1;
            }
            (None, ')') => {
                out.push((Tok::RParen, start));
                i += 1;
            }
            (None, ',') => {
                out.push((Tok::Comma, start));
                i += 1;
            }
            _ => return Err(err(start, format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ExprParseError> {
        Ok(Parser { toks: tokenize(src)?, pos: 0, end: src.chars().count() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map(|(_, c)| *c).unwrap_or(self.end) + 1
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ExprParseError> {
        Err(ExprParseError { column: self.column(), message: message.into() })
    }

    fn is_word(&self, w: &str) -> bool {
        match self.peek() {
            Some(Tok::Ident(s)) => s == w,
            Some(Tok::Op(o)) => *o == w,
            _ => false,
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ExprParseError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(format!("expected {what}"))
        }
    }

    fn finish(&self) -> Result<(), ExprParseError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => self.fail("unexpected trailing input"),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op("+")) => BinOp::Add,
                Some(Tok::Op("-")) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op("*")) => BinOp::Mul,
                Some(Tok::Op("/")) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprParseError> {
        if self.peek() == Some(&Tok::Op("-")) {
            self.pos += 1;
            return Ok(match self.unary()? {
                Expr::Num(x) => Expr::Num(-x),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ExprParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(x)) => {
                self.pos += 1;
                Ok(Expr::Num(x))
            }
            Some(Tok::Ident(name)) => {
                if KEYWORDS.contains(&name.as_str()) {
                    return self.fail(format!("`{name}` is not an expression"));
                }
                self.pos += 1;
                if self.peek() != Some(&Tok::LParen) {
                    if Func::from_name(&name).is_some() {
                        self.pos -= 1;
                        return self.fail(format!("function `{name}` needs arguments"));
                    }
                    return Ok(Expr::Var(name));
                }
                let Some(func) = Func::from_name(&name) else {
                    self.pos -= 1;
                    return self.fail(format!("unknown function `{name}`"));
                };
                self.pos += 1;
                let mut args = vec![self.expr()?];
                while self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    args.push(self.expr()?);
                }
                self.expect(Tok::RParen, "`)`")?;
                if args.len() != func.arity() {
                    return self.fail(format!("`{name}` takes {} argument(s), got {}", func.arity(), args.len()));
                }
                Ok(Expr::Call(func, args))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(_) => self.fail("expected an expression"),
            None => self.fail("unexpected end of input"),
        }
    }

    fn pred(&mut self) -> Result<Pred, ExprParseError> {
        let mut lhs = self.conj()?;
        while self.is_word("or") {
            self.pos += 1;
            lhs = Pred::Or(Box::new(lhs), Box::new(self.conj()?));
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<Pred, ExprParseError> {
        let mut lhs = self.neg()?;
        while self.is_word("and") {
            self.pos += 1;
            lhs = Pred::And(Box::new(lhs), Box::new(self.neg()?));
        }
        Ok(lhs)
    }

    fn neg(&mut self) -> Result<Pred, ExprParseError> {
        if self.is_word("not") {
            self.pos += 1;
            return Ok(Pred::Not(Box::new(self.neg()?)));
        }
        self.atom_pred()
    }

    fn atom_pred(&mut self) -> Result<Pred, ExprParseError> {
        if self.is_word("true") {
            self.pos += 1;
            return Ok(Pred::True);
        }
        if self.is_word("false") {
            self.pos += 1;
            return Ok(Pred::False);
        }
        let save = self.pos;
        let first = self.comparison();
        if first.is_ok() || self.toks.get(save).map(|(t, _)| t) != Some(&Tok::LParen) {
            return first;
        }
        self.pos = save + 1;
        let p = self.pred()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(p)
    }

    fn comparison(&mut self) -> Result<Pred, ExprParseError> {
        let a = self.expr()?;
        let op = match self.peek() {
            Some(Tok::Op("<=")) => CmpOp::Le,
            Some(Tok::Op("<")) => CmpOp::Lt,
            Some(Tok::Op("=")) => CmpOp::Eq,
            Some(Tok::Op(">=")) => CmpOp::Ge,
            Some(Tok::Op(">")) => CmpOp::Gt,
            _ => return self.fail("expected a comparison"),
        };
        self.pos += 1;
        Ok(Pred::Cmp(op, a, self.expr()?))
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, ExprParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

pub fn parse_pred(src: &str) -> Result<Pred, ExprParseError> {
    let mut p = Parser::new(src)?;
    let e = p.pred()?;
    p.finish()?;
    Ok(e)
}

/// Parses `src` and rejects identifiers outside `vars` (the time variable is always allowed).
pub fn parse_expr_in(src: &str, vars: &BTreeSet<String>) -> Result<Expr, ExprParseError> {
    let e = parse_expr(src)?;
    match e.vars().into_iter().find(|v| v != TIME_VAR && !vars.contains(v)) {
        Some(v) => {
            let column = src.find(v.as_str()).map_or(1, |k| src[..k].chars().count() + 1);
            Err(ExprParseError { column, message: format!("unknown identifier `{v}`") })
        }
        None => Ok(e),
    }
}

/// Whether `name` can be used as a variable.
pub fn is_identifier(name: &str) -> bool {
    let mut cs = name.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name)
        && Func::from_name(name).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn precedence() {
        let e = parse_expr("1 + 2 * 3 - -4 / 2").unwrap();
        assert_eq!(e.eval(&env(&[])).unwrap(), 9.0);
        let e = parse_expr("-(1 - 2) * 3").unwrap();
        assert_eq!(e.eval(&env(&[])).unwrap(), 3.0);
        assert_eq!(parse_expr("3/2").unwrap().eval(&env(&[])).unwrap(), 1.5);
        assert_eq!(parse_expr("8 - 2 - 1").unwrap().eval(&env(&[])).unwrap(), 5.0);
    }

    #[test]
    fn functions_and_variables() {
        let e = parse_expr("max(x, 2) + min(exp(0), cos(0)) + sin(0)").unwrap();
        assert_eq!(e.eval(&env(&[("x", 5.0)])).unwrap(), 6.0);
        assert_eq!(e.vars(), BTreeSet::from(["x".to_string()]));
        assert!(matches!(e.eval(&env(&[])), Err(EvalError::UnknownVariable(_))));
        assert!(parse_expr("max(1)").is_err());
        assert!(parse_expr("foo(1)").is_err());
        let declared = BTreeSet::from(["x".to_string(), "y".to_string()]);
        assert!(parse_expr_in("y - x + t", &declared).is_ok());
        let err = parse_expr_in("y - z", &declared).unwrap_err();
        assert_eq!(err.column, 5);
    }

    #[test]
    fn division_by_zero_is_reported() {
        let e = parse_expr("1 / (x - x)").unwrap();
        assert!(matches!(e.eval(&env(&[("x", 1.0)])), Err(EvalError::DivisionByZero(_))));
        assert!(e.has_division());
    }

    #[test]
    fn predicates() {
        let p = parse_pred("not (x < 1 or y >= 2) and x = x").unwrap();
        assert!(p.holds(&env(&[("x", 1.0), ("y", 0.0)]), 0.0).unwrap());
        assert!(!p.holds(&env(&[("x", 0.5), ("y", 0.0)]), 0.0).unwrap());
        let g = parse_pred("y <= x").unwrap();
        assert!(g.holds(&env(&[("x", 7.5), ("y", 7.5 + 1e-9)]), 1e-6).unwrap());
        assert!(!g.holds(&env(&[("x", 7.0), ("y", 8.0)]), 1e-6).unwrap());
        // slack also applies under negation
        let n = parse_pred("not (y > x)").unwrap();
        assert!(n.holds(&env(&[("x", 7.5), ("y", 7.5 + 1e-9)]), 1e-6).unwrap());
        assert!(parse_pred("(x + 1) * 2 <= 4").unwrap().holds(&env(&[("x", 1.0)]), 0.0).unwrap());
        assert!(parse_pred("x <").is_err());
    }

    #[test]
    fn round_trip() {
        for src in [
            "y - x",
            "-x * (y - 1) / (2 - z)",
            "a - (b - c) - -1.5",
            "exp(-t) + max(x, -2e-3)",
            "-(-x)",
            "x / (y * z)",
        ] {
            let e = parse_expr(src).unwrap();
            assert_eq!(parse_expr(&e.to_string()).unwrap(), e, "{src} printed as {e}");
        }
        for src in ["not not x < 1 or y = 2 and true", "(x < 1 or y < 2) and not (z > 0 and false)"] {
            let p = parse_pred(src).unwrap();
            assert_eq!(parse_pred(&p.to_string()).unwrap(), p, "{src} printed as {p}");
        }
    }

    #[test]
    fn errors_carry_columns() {
        let e = parse_expr("x + $").unwrap_err();
        assert_eq!(e.column, 5);
        let e = parse_expr("x + ").unwrap_err();
        assert_eq!(e.column, 5);
    }
}
