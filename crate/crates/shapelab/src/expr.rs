//! Expression DSL: parse, evaluate and symbolically differentiate
//! closed-form scalar functions of the coordinates `R1..Rn` and named
//! parameters.
//!
//! The grammar is a minimal infix grammar with precedence
//! `^` > unary `-` > `*`,`/` > `+`,`-`. Supported functions:
//! sin, cos, tan, sinh, cosh, tanh, exp, ln, sqrt, arcsin, arccos, arctan.
//!
//! ASTs are immutable after construction; evaluation is pure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Ln,
    Sqrt,
    Arcsin,
    Arccos,
    Arctan,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Arcsin => "arcsin",
            Func::Arccos => "arccos",
            Func::Arctan => "arctan",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "arcsin" | "asin" => Func::Arcsin,
            "arccos" | "acos" => Func::Arccos,
            "arctan" | "atan" => Func::Arctan,
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
pub enum Ast {
    Num(f64),
    Var(String),
    Neg(Box<Ast>),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    Call(Func, Box<Ast>),
}

#[derive(Debug, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { offset: usize, name: String },
    #[error("unbound name `{0}`")]
    Unbound(String),
    #[error("domain violation in `{subexpr}`: {msg}")]
    Domain { subexpr: String, msg: String },
}

/// A parsed closed-form scalar expression.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExpr {
    ast: Ast,
}

pub trait Bindings {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl Bindings for BTreeMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for &[(&str, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

/// Binds `R1..Rn` to the entries of a coordinate slice.
pub struct CoordBindings<'a>(pub &'a [f64]);

impl Bindings for CoordBindings<'_> {
    fn lookup(&self, name: &str) -> Option<f64> {
        let rest = name.strip_prefix('R')?;
        let i: usize = rest.parse().ok()?;
        if i >= 1 && i <= self.0.len() {
            Some(self.0[i - 1])
        } else {
            None
        }
    }
}

impl ScalarExpr {
    pub fn parse(src: &str) -> Result<ScalarExpr, ExprError> {
        let mut p = Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        };
        p.skip_ws();
        let ast = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(ExprError::Syntax {
                offset: p.pos,
                msg: "unexpected trailing input".into(),
            });
        }
        Ok(ScalarExpr { ast })
    }

    pub fn number(v: f64) -> ScalarExpr {
        ScalarExpr { ast: Ast::Num(v) }
    }

    pub fn var(name: &str) -> ScalarExpr {
        ScalarExpr {
            ast: Ast::Var(name.to_string()),
        }
    }

    pub fn ast(&self) -> &Ast {
        &self.ast
    }

    pub fn eval(&self, bindings: &dyn Bindings) -> Result<f64, ExprError> {
        eval_ast(&self.ast, bindings)
    }

    /// Evaluates with `R1..Rn` bound to `coords`.
    pub fn eval_coords(&self, coords: &[f64]) -> Result<f64, ExprError> {
        self.eval(&CoordBindings(coords))
    }

    /// Exact symbolic derivative with respect to `var`.
    pub fn differentiate(&self, var: &str) -> ScalarExpr {
        ScalarExpr {
            ast: diff_ast(&self.ast, var),
        }
    }

    /// Replaces every occurrence of the named variables by the given
    /// subexpressions.
    pub fn substitute(&self, map: &BTreeMap<String, ScalarExpr>) -> ScalarExpr {
        ScalarExpr {
            ast: subst_ast(&self.ast, map),
        }
    }

    /// Replaces named constants by numeric literals.
    pub fn bind_params(&self, params: &BTreeMap<String, f64>) -> ScalarExpr {
        let map: BTreeMap<String, ScalarExpr> = params
            .iter()
            .map(|(k, v)| (k.clone(), ScalarExpr::number(*v)))
            .collect();
        self.substitute(&map)
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_vars(&self.ast, &mut out);
        out
    }

    /// True when the tree is literally the constant zero.
    pub fn is_zero(&self) -> bool {
        matches!(self.ast, Ast::Num(v) if v == 0.0)
    }

    // Combinators for building expressions programmatically. The smart
    // constructors fold constants so derivative trees stay small.

    pub fn add_expr(&self, o: &ScalarExpr) -> ScalarExpr {
        ScalarExpr {
            ast: add(self.ast.clone(), o.ast.clone()),
        }
    }

    pub fn sub_expr(&self, o: &ScalarExpr) -> ScalarExpr {
        ScalarExpr {
            ast: sub(self.ast.clone(), o.ast.clone()),
        }
    }

    pub fn mul_expr(&self, o: &ScalarExpr) -> ScalarExpr {
        ScalarExpr {
            ast: mul(self.ast.clone(), o.ast.clone()),
        }
    }

    pub fn div_expr(&self, o: &ScalarExpr) -> ScalarExpr {
        ScalarExpr {
            ast: div(self.ast.clone(), o.ast.clone()),
        }
    }

    pub fn neg_expr(&self) -> ScalarExpr {
        ScalarExpr {
            ast: neg(self.ast.clone()),
        }
    }

    pub fn pow_const(&self, e: f64) -> ScalarExpr {
        ScalarExpr {
            ast: pow(self.ast.clone(), num(e)),
        }
    }

    pub fn scale(&self, c: f64) -> ScalarExpr {
        ScalarExpr {
            ast: mul(num(c), self.ast.clone()),
        }
    }

    pub fn sqrt_expr(&self) -> ScalarExpr {
        ScalarExpr {
            ast: call(Func::Sqrt, self.ast.clone()),
        }
    }

    pub fn sum(terms: impl IntoIterator<Item = ScalarExpr>) -> ScalarExpr {
        terms
            .into_iter()
            .fold(ScalarExpr::number(0.0), |acc, t| acc.add_expr(&t))
    }
}

impl std::str::FromStr for ScalarExpr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScalarExpr::parse(s)
    }
}

fn collect_vars(ast: &Ast, out: &mut BTreeSet<String>) {
    match ast {
        Ast::Num(_) => {}
        Ast::Var(name) => {
            out.insert(name.clone());
        }
        Ast::Neg(a) | Ast::Call(_, a) => collect_vars(a, out),
        Ast::Bin(_, a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
    }
}

fn eval_ast(ast: &Ast, bindings: &dyn Bindings) -> Result<f64, ExprError> {
    match ast {
        Ast::Num(v) => Ok(*v),
        Ast::Var(name) => bindings
            .lookup(name)
            .ok_or_else(|| ExprError::Unbound(name.clone())),
        Ast::Neg(a) => Ok(-eval_ast(a, bindings)?),
        Ast::Bin(op, a, b) => {
            let x = eval_ast(a, bindings)?;
            let y = eval_ast(b, bindings)?;
            match op {
                BinOp::Add => Ok(x + y),
                BinOp::Sub => Ok(x - y),
                BinOp::Mul => Ok(x * y),
                BinOp::Div => {
                    if y == 0.0 {
                        Err(ExprError::Domain {
                            subexpr: format_ast(ast, 0),
                            msg: "division by zero".into(),
                        })
                    } else {
                        Ok(x / y)
                    }
                }
                BinOp::Pow => {
                    let v = x.powf(y);
                    if v.is_nan() {
                        Err(ExprError::Domain {
                            subexpr: format_ast(ast, 0),
                            msg: format!("{x}^{y} is undefined"),
                        })
                    } else {
                        Ok(v)
                    }
                }
            }
        }
        Ast::Call(f, a) => {
            let x = eval_ast(a, bindings)?;
            let bad = |msg: &str| ExprError::Domain {
                subexpr: format_ast(ast, 0),
                msg: msg.into(),
            };
            match f {
                Func::Sin => Ok(x.sin()),
                Func::Cos => Ok(x.cos()),
                Func::Tan => Ok(x.tan()),
                Func::Sinh => Ok(x.sinh()),
                Func::Cosh => Ok(x.cosh()),
                Func::Tanh => Ok(x.tanh()),
                Func::Exp => Ok(x.exp()),
                Func::Ln => {
                    if x <= 0.0 {
                        Err(bad("ln of a non-positive value"))
                    } else {
                        Ok(x.ln())
                    }
                }
                Func::Sqrt => {
                    if x < 0.0 {
                        Err(bad("sqrt of a negative value"))
                    } else {
                        Ok(x.sqrt())
                    }
                }
                Func::Arcsin => {
                    if !(-1.0..=1.0).contains(&x) {
                        Err(bad("arcsin argument outside [-1, 1]"))
                    } else {
                        Ok(x.asin())
                    }
                }
                Func::Arccos => {
                    if !(-1.0..=1.0).contains(&x) {
                        Err(bad("arccos argument outside [-1, 1]"))
                    } else {
                        Ok(x.acos())
                    }
                }
                Func::Arctan => Ok(x.atan()),
            }
        }
    }
}

// Smart constructors. Light constant folding keeps derivative trees small
// without turning into a simplification engine.

pub(crate) fn num(v: f64) -> Ast {
    Ast::Num(v)
}

pub(crate) fn add(a: Ast, b: Ast) -> Ast {
    match (&a, &b) {
        (Ast::Num(x), Ast::Num(y)) => return num(x + y),
        (Ast::Num(x), _) if *x == 0.0 => return b,
        (_, Ast::Num(y)) if *y == 0.0 => return a,
        _ => {}
    }
    Ast::Bin(BinOp::Add, Box::new(a), Box::new(b))
}

pub(crate) fn sub(a: Ast, b: Ast) -> Ast {
    match (&a, &b) {
        (Ast::Num(x), Ast::Num(y)) => return num(x - y),
        (_, Ast::Num(y)) if *y == 0.0 => return a,
        (Ast::Num(x), _) if *x == 0.0 => return neg(b),
        _ => {}
    }
    Ast::Bin(BinOp::Sub, Box::new(a), Box::new(b))
}

pub(crate) fn mul(a: Ast, b: Ast) -> Ast {
    match (&a, &b) {
        (Ast::Num(x), Ast::Num(y)) => return num(x * y),
        (Ast::Num(x), _) if *x == 0.0 => return num(0.0),
        (_, Ast::Num(y)) if *y == 0.0 => return num(0.0),
        (Ast::Num(x), _) if *x == 1.0 => return b,
        (_, Ast::Num(y)) if *y == 1.0 => return a,
        _ => {}
    }
    Ast::Bin(BinOp::Mul, Box::new(a), Box::new(b))
}

pub(crate) fn div(a: Ast, b: Ast) -> Ast {
    match (&a, &b) {
        (Ast::Num(x), _) if *x == 0.0 => return num(0.0),
        (_, Ast::Num(y)) if *y == 1.0 => return a,
        _ => {}
    }
    Ast::Bin(BinOp::Div, Box::new(a), Box::new(b))
}

pub(crate) fn pow(a: Ast, b: Ast) -> Ast {
    match (&a, &b) {
        (_, Ast::Num(y)) if *y == 1.0 => return a,
        (_, Ast::Num(y)) if *y == 0.0 => return num(1.0),
        _ => {}
    }
    Ast::Bin(BinOp::Pow, Box::new(a), Box::new(b))
}

pub(crate) fn neg(a: Ast) -> Ast {
    match a {
        Ast::Num(x) => num(-x),
        Ast::Neg(inner) => *inner,
        _ => Ast::Neg(Box::new(a)),
    }
}

fn call(f: Func, a: Ast) -> Ast {
    Ast::Call(f, Box::new(a))
}

fn diff_ast(ast: &Ast, var: &str) -> Ast {
    match ast {
        Ast::Num(_) => num(0.0),
        Ast::Var(name) => {
            if name == var {
                num(1.0)
            } else {
                num(0.0)
            }
        }
        Ast::Neg(a) => neg(diff_ast(a, var)),
        Ast::Bin(op, a, b) => {
            let da = diff_ast(a, var);
            let db = diff_ast(b, var);
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, (**b).clone()), mul((**a).clone(), db)),
                BinOp::Div => {
                    // (a/b)' = a'/b - a b'/b^2
                    sub(
                        div(da, (**b).clone()),
                        div(
                            mul((**a).clone(), db),
                            pow((**b).clone(), num(2.0)),
                        ),
                    )
                }
                BinOp::Pow => {
                    let base = (**a).clone();
                    let expo = (**b).clone();
                    if matches!(db, Ast::Num(v) if v == 0.0) {
                        // d(u^c) = c * u^(c-1) * u'
                        mul(
                            mul(expo.clone(), pow(base, sub(expo, num(1.0)))),
                            da,
                        )
                    } else if matches!(da, Ast::Num(v) if v == 0.0) {
                        // d(c^v) = c^v * ln(c) * v'
                        mul(
                            mul(
                                pow(base.clone(), expo),
                                call(Func::Ln, base),
                            ),
                            db,
                        )
                    } else {
                        // u^v * (v' ln u + v u'/u)
                        mul(
                            pow(base.clone(), expo.clone()),
                            add(
                                mul(db, call(Func::Ln, base.clone())),
                                div(mul(expo, da), base),
                            ),
                        )
                    }
                }
            }
        }
        Ast::Call(f, a) => {
            let da = diff_ast(a, var);
            if matches!(da, Ast::Num(v) if v == 0.0) {
                return num(0.0);
            }
            let u = (**a).clone();
            let outer = match f {
                Func::Sin => call(Func::Cos, u),
                Func::Cos => neg(call(Func::Sin, u)),
                Func::Tan => div(num(1.0), pow(call(Func::Cos, u), num(2.0))),
                Func::Sinh => call(Func::Cosh, u),
                Func::Cosh => call(Func::Sinh, u),
                Func::Tanh => div(num(1.0), pow(call(Func::Cosh, u), num(2.0))),
                Func::Exp => call(Func::Exp, u),
                Func::Ln => div(num(1.0), u),
                Func::Sqrt => div(num(1.0), mul(num(2.0), call(Func::Sqrt, u))),
                Func::Arcsin => div(
                    num(1.0),
                    call(Func::Sqrt, sub(num(1.0), pow(u, num(2.0)))),
                ),
                Func::Arccos => neg(div(
                    num(1.0),
                    call(Func::Sqrt, sub(num(1.0), pow(u, num(2.0)))),
                )),
                Func::Arctan => div(num(1.0), add(num(1.0), pow(u, num(2.0)))),
            };
            mul(outer, da)
        }
    }
}

fn subst_ast(ast: &Ast, map: &BTreeMap<String, ScalarExpr>) -> Ast {
    match ast {
        Ast::Num(v) => Ast::Num(*v),
        Ast::Var(name) => match map.get(name) {
            Some(e) => e.ast.clone(),
            None => Ast::Var(name.clone()),
        },
        Ast::Neg(a) => neg(subst_ast(a, map)),
        Ast::Bin(op, a, b) => {
            let a = subst_ast(a, map);
            let b = subst_ast(b, map);
            match op {
                BinOp::Add => add(a, b),
                BinOp::Sub => sub(a, b),
                BinOp::Mul => mul(a, b),
                BinOp::Div => div(a, b),
                BinOp::Pow => pow(a, b),
            }
        }
        Ast::Call(f, a) => call(*f, subst_ast(a, map)),
    }
}

// Printing with minimal parentheses; `parse(print(e))` reproduces the tree.
// Levels: Add/Sub 1, Mul/Div 2, unary minus 3, Pow 4, atoms 5.

fn format_ast(ast: &Ast, parent_level: u8) -> String {
    let (level, s) = match ast {
        Ast::Num(v) => {
            if *v < 0.0 || (v == &0.0 && v.is_sign_negative()) {
                (3, format!("-{}", fmt_num(-v)))
            } else {
                (5, fmt_num(*v))
            }
        }
        Ast::Var(name) => (5, name.clone()),
        Ast::Neg(a) => (3, format!("-{}", format_ast(a, 3))),
        Ast::Bin(op, a, b) => match op {
            BinOp::Add => (1, format!("{} + {}", format_ast(a, 1), format_ast(b, 2))),
            BinOp::Sub => (1, format!("{} - {}", format_ast(a, 1), format_ast(b, 2))),
            BinOp::Mul => (2, format!("{}*{}", format_ast(a, 2), format_ast(b, 3))),
            BinOp::Div => (2, format!("{}/{}", format_ast(a, 2), format_ast(b, 3))),
            BinOp::Pow => (4, format!("{}^{}", format_ast(a, 5), format_ast(b, 5))),
        },
        Ast::Call(f, a) => (5, format!("{}({})", f.name(), format_ast(a, 0))),
    };
    if level < parent_level {
        format!("({s})")
    } else {
        s
    }
}

fn fmt_num(v: f64) -> String {
    // Round-trippable literal without an exponent for the common cases.
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        let s = format!("{v}");
        if s.contains('e') || s.contains('E') {
            format!("{v:.17}")
        } else {
            s
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_ast(&self.ast, 0))
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    /// Consumes a '-' in either ASCII or U+2212 form.
    fn eat_minus(&mut self) -> bool {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return true;
        }
        if self.src[self.pos..].starts_with('\u{2212}') {
            self.pos += '\u{2212}'.len_utf8();
            return true;
        }
        false
    }

    fn expr(&mut self) -> Result<Ast, ExprError> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            if self.peek() == Some(b'+') {
                self.pos += 1;
                self.skip_ws();
                let rhs = self.term()?;
                lhs = Ast::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs));
            } else if self.peek() == Some(b'-') || self.src[self.pos..].starts_with('\u{2212}') {
                self.eat_minus();
                self.skip_ws();
                let rhs = self.term()?;
                lhs = Ast::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Ast, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.unary()?;
                    lhs = Ast::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.unary()?;
                    lhs = Ast::Bin(BinOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // Unary minus binds looser than `^`, so -x^2 parses as -(x^2).
    fn unary(&mut self) -> Result<Ast, ExprError> {
        self.skip_ws();
        if self.peek() == Some(b'-') || self.src[self.pos..].starts_with('\u{2212}') {
            self.eat_minus();
            let inner = self.unary()?;
            return Ok(Ast::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast, ExprError> {
        let base = self.atom()?;
        self.skip_ws();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            // Right-associative; a negative exponent is a negated atom.
            let expo = if self.peek() == Some(b'-') || self.src[self.pos..].starts_with('\u{2212}')
            {
                self.eat_minus();
                Ast::Neg(Box::new(self.power()?))
            } else {
                self.power()?
            };
            return Ok(Ast::Bin(BinOp::Pow, Box::new(base), Box::new(expo)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Ast, ExprError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(ExprError::Syntax {
                        offset: self.pos,
                        msg: "expected `)`".into(),
                    });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(ExprError::Syntax {
                offset: self.pos,
                msg: "expected a number, identifier or `(`".into(),
            }),
        }
    }

    fn number(&mut self) -> Result<Ast, ExprError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E') && self.pos > start {
                // exponent part: e[+-]?digits
                let save = self.pos;
                self.pos += 1;
                if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                    self.pos += 1;
                }
                if matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                    while matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                        self.pos += 1;
                    }
                } else {
                    self.pos = save;
                    break;
                }
            } else {
                break;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>().map(Ast::Num).map_err(|_| ExprError::Syntax {
            offset: start,
            msg: format!("invalid number literal `{text}`"),
        })
    }

    fn ident(&mut self) -> Result<Ast, ExprError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let name = &self.src[start..self.pos];
        self.skip_ws();
        if self.peek() == Some(b'(') {
            let f = Func::from_name(name).ok_or_else(|| ExprError::UnknownFunction {
                offset: start,
                name: name.to_string(),
            })?;
            self.pos += 1;
            let arg = self.expr()?;
            self.skip_ws();
            if self.peek() != Some(b')') {
                return Err(ExprError::Syntax {
                    offset: self.pos,
                    msg: "expected `)` after function argument".into(),
                });
            }
            self.pos += 1;
            Ok(Ast::Call(f, Box::new(arg)))
        } else if name == "pi" {
            Ok(Ast::Num(std::f64::consts::PI))
        } else {
            Ok(Ast::Var(name.to_string()))
        }
    }
}
