//! A small expression language for the registry.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := '-' unary | factor
//! factor := atom ('^' iatom)?
//! atom   := 'x' | 'c' | INT | 'S_' iatom | '(' expr ')'
//! iatom  := INT | NAME | '(' iexpr ')'
//! iexpr  := integer arithmetic with + - * ^, parameter names and q
//! ```
//!
//! The same tree is read four ways: as a function of a point x, as an
//! ordinary polynomial in x, as a q-linearized polynomial, or as a scalar
//! depending only on c. `x^N` is a field power pointwise, a monomial in the
//! ordinary reading and x^(q^k) in the linearized reading (N must be q^k).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{FieldElem, FieldTower};
use crate::linop::{q_log, s_poly, LinPoly};
use crate::poly::OrdPoly;

/// Cap on exponents in the ordinary-polynomial reading.
const MAX_ORD_EXPONENT: i128 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("parse error at byte {pos} in {src:?}: {msg}")]
    Parse { src: String, pos: usize, msg: String },
    #[error("unknown parameter {0:?}")]
    UnknownName(String),
    #[error("integer overflow or negative exponent in {0:?}")]
    BadInteger(String),
    #[error("{what} is not allowed when reading {src:?} as {reading}")]
    NotAllowed { src: String, what: String, reading: &'static str },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IExpr {
    Int(i128),
    Name(String),
    Add(Box<IExpr>, Box<IExpr>),
    Sub(Box<IExpr>, Box<IExpr>),
    Mul(Box<IExpr>, Box<IExpr>),
    Pow(Box<IExpr>, Box<IExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    X,
    C,
    Int(i128),
    S(IExpr),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, IExpr),
}

/// Parameter bindings for integer subexpressions; `q` is bound separately.
pub type Env = BTreeMap<String, i64>;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(i128),
    Name(String),
    Sym(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let err = |pos: usize, msg: &str| ExprError::Parse { src: src.into(), pos, msg: msg.into() };
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        if ch.is_ascii_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let v = src[start..i].parse::<i128>().map_err(|_| err(start, "integer too large"))?;
            out.push((start, Tok::Int(v)));
        } else if ch.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((start, Tok::Name(src[start..i].to_string())));
        } else if "+-*^()_".contains(ch) {
            out.push((i, Tok::Sym(ch)));
            i += 1;
        } else {
            return Err(err(i, "unexpected character"));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: &str) -> Result<T, ExprError> {
        let at = self.toks.get(self.pos).map_or(self.src.len(), |t| t.0);
        Err(ExprError::Parse { src: self.src.into(), pos: at, msg: msg.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(&format!("expected '{c}'"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while self.eat('*') {
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            Ok(Expr::Pow(Box::new(base), self.iatom()?))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(Expr::Int(v))
            }
            Some(Tok::Name(n)) => {
                self.pos += 1;
                match n.as_str() {
                    "x" => Ok(Expr::X),
                    "c" => Ok(Expr::C),
                    "S" => {
                        self.expect('_')?;
                        Ok(Expr::S(self.iatom()?))
                    }
                    _ => {
                        self.pos -= 1;
                        self.err("expected x, c, an integer, S_k or '('")
                    }
                }
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            _ => self.err("expected x, c, an integer, S_k or '('"),
        }
    }

    fn iatom(&mut self) -> Result<IExpr, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(IExpr::Int(v))
            }
            Some(Tok::Name(n)) if n != "x" && n != "c" && n != "S" => {
                self.pos += 1;
                Ok(IExpr::Name(n))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.iexpr()?;
                self.expect(')')?;
                Ok(e)
            }
            _ => self.err("expected an integer, a parameter name or '('"),
        }
    }

    fn iexpr(&mut self) -> Result<IExpr, ExprError> {
        let mut lhs = self.iterm()?;
        loop {
            if self.eat('+') {
                lhs = IExpr::Add(Box::new(lhs), Box::new(self.iterm()?));
            } else if self.eat('-') {
                lhs = IExpr::Sub(Box::new(lhs), Box::new(self.iterm()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn iterm(&mut self) -> Result<IExpr, ExprError> {
        let mut lhs = self.ifactor()?;
        while self.eat('*') {
            lhs = IExpr::Mul(Box::new(lhs), Box::new(self.ifactor()?));
        }
        Ok(lhs)
    }

    fn ifactor(&mut self) -> Result<IExpr, ExprError> {
        let base = self.iatom()?;
        if self.eat('^') {
            Ok(IExpr::Pow(Box::new(base), Box::new(self.ifactor()?)))
        } else {
            Ok(base)
        }
    }
}

/// Integer expression with its source text.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct IntExpression {
    src: String,
    ast: IExpr,
}

impl IntExpression {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let mut p = Parser { src, toks: lex(src)?, pos: 0 };
        let ast = p.iexpr()?;
        if p.pos != p.toks.len() {
            return p.err("trailing input");
        }
        Ok(IntExpression { src: src.to_string(), ast })
    }

    pub fn eval(&self, env: &Env, q: u64) -> Result<i128, ExprError> {
        ieval(&self.ast, env, q, &self.src)
    }

    pub fn source(&self) -> &str {
        &self.src
    }
}

impl TryFrom<String> for IntExpression {
    type Error = ExprError;
    fn try_from(s: String) -> Result<Self, ExprError> {
        Self::parse(&s)
    }
}

impl From<IntExpression> for String {
    fn from(e: IntExpression) -> String {
        e.src
    }
}

impl fmt::Debug for IntExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.src)
    }
}

fn ieval(e: &IExpr, env: &Env, q: u64, src: &str) -> Result<i128, ExprError> {
    let bad = || ExprError::BadInteger(src.to_string());
    let rec = |x: &IExpr| ieval(x, env, q, src);
    Ok(match e {
        IExpr::Int(v) => *v,
        IExpr::Name(n) if n == "q" => q as i128,
        IExpr::Name(n) => *env.get(n).ok_or_else(|| ExprError::UnknownName(n.clone()))? as i128,
        IExpr::Add(a, b) => rec(a)?.checked_add(rec(b)?).ok_or_else(bad)?,
        IExpr::Sub(a, b) => rec(a)?.checked_sub(rec(b)?).ok_or_else(bad)?,
        IExpr::Mul(a, b) => rec(a)?.checked_mul(rec(b)?).ok_or_else(bad)?,
        IExpr::Pow(a, b) => {
            let k = u32::try_from(rec(b)?).map_err(|_| bad())?;
            rec(a)?.checked_pow(k).ok_or_else(bad)?
        }
    })
}

/// Field/polynomial expression with its source text.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Expression {
    src: String,
    ast: Expr,
}

impl TryFrom<String> for Expression {
    type Error = ExprError;
    fn try_from(s: String) -> Result<Self, ExprError> {
        Self::parse(&s)
    }
}

impl From<Expression> for String {
    fn from(e: Expression) -> String {
        e.src
    }
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.src)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

/// Evaluation context shared by all readings.
pub struct Ctx<'a> {
    pub tower: &'a FieldTower,
    pub env: &'a Env,
    pub c: FieldElem,
}

impl Expression {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let mut p = Parser { src, toks: lex(src)?, pos: 0 };
        let ast = p.expr()?;
        if p.pos != p.toks.len() {
            return p.err("trailing input");
        }
        Ok(Expression { src: src.to_string(), ast })
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    fn not_allowed<T>(&self, what: &str, reading: &'static str) -> Result<T, ExprError> {
        Err(ExprError::NotAllowed { src: self.src.clone(), what: what.into(), reading })
    }

    fn int(&self, e: &IExpr, ctx: &Ctx<'_>) -> Result<i128, ExprError> {
        ieval(e, ctx.env, ctx.tower.q(), &self.src)
    }

    fn s_index(&self, e: &IExpr, ctx: &Ctx<'_>) -> Result<usize, ExprError> {
        usize::try_from(self.int(e, ctx)?).map_err(|_| ExprError::BadInteger(self.src.clone()))
    }

    /// Value at the point x.
    pub fn eval_point(&self, ctx: &Ctx<'_>, x: &FieldElem) -> Result<FieldElem, ExprError> {
        self.point(&self.ast, ctx, x)
    }

    fn point(&self, e: &Expr, ctx: &Ctx<'_>, x: &FieldElem) -> Result<FieldElem, ExprError> {
        let t = ctx.tower;
        Ok(match e {
            Expr::X => *x,
            Expr::C => ctx.c,
            Expr::Int(v) => int_elem(t, *v),
            Expr::S(k) => s_poly(self.s_index(k, ctx)?, t).eval_unchecked(x),
            Expr::Neg(a) => t.neg(&self.point(a, ctx, x)?),
            Expr::Add(a, b) => t.add(&self.point(a, ctx, x)?, &self.point(b, ctx, x)?),
            Expr::Sub(a, b) => t.sub(&self.point(a, ctx, x)?, &self.point(b, ctx, x)?),
            Expr::Mul(a, b) => t.mul(&self.point(a, ctx, x)?, &self.point(b, ctx, x)?),
            Expr::Pow(a, n) => {
                let base = self.point(a, ctx, x)?;
                let n = self.int(n, ctx)?;
                if n < 0 {
                    return Err(ExprError::BadInteger(self.src.clone()));
                }
                match t.log_p(n as u128) {
                    Some(k) => t.frob_p(&base, k as u64),
                    None => t.pow(&base, n as u128),
                }
            }
        })
    }

    /// Value when no x or S occurs.
    pub fn eval_scalar(&self, ctx: &Ctx<'_>) -> Result<FieldElem, ExprError> {
        if mentions_x(&self.ast) {
            return self.not_allowed("x or S_k", "a scalar");
        }
        self.point(&self.ast, ctx, &ctx.tower.zero())
    }

    /// Ordinary polynomial in x.
    pub fn to_ord(&self, ctx: &Ctx<'_>) -> Result<OrdPoly, ExprError> {
        self.ord(&self.ast, ctx)
    }

    fn ord(&self, e: &Expr, ctx: &Ctx<'_>) -> Result<OrdPoly, ExprError> {
        let t = ctx.tower;
        Ok(match e {
            Expr::X => OrdPoly::x(t),
            Expr::C => OrdPoly::constant(t, ctx.c),
            Expr::Int(v) => OrdPoly::constant(t, int_elem(t, *v)),
            Expr::S(_) => return self.not_allowed("S_k", "an ordinary polynomial"),
            Expr::Neg(a) => -&self.ord(a, ctx)?,
            Expr::Add(a, b) => &self.ord(a, ctx)? + &self.ord(b, ctx)?,
            Expr::Sub(a, b) => &self.ord(a, ctx)? - &self.ord(b, ctx)?,
            Expr::Mul(a, b) => &self.ord(a, ctx)? * &self.ord(b, ctx)?,
            Expr::Pow(a, n) => {
                let n = self.int(n, ctx)?;
                if !(0..=MAX_ORD_EXPONENT).contains(&n) {
                    return Err(ExprError::BadInteger(self.src.clone()));
                }
                self.ord(a, ctx)?.pow(n as u32)
            }
        })
    }

    /// q-linearized polynomial; products need a scalar factor.
    pub fn to_lin(&self, ctx: &Ctx<'_>) -> Result<LinPoly, ExprError> {
        self.lin(&self.ast, ctx)
    }

    fn lin(&self, e: &Expr, ctx: &Ctx<'_>) -> Result<LinPoly, ExprError> {
        let t = ctx.tower;
        let ql = q_log(t);
        if !mentions_x(e) {
            let v = self.point(e, ctx, &t.zero())?;
            if v.is_zero() {
                return Ok(LinPoly::zero(t, ql));
            }
            return self.not_allowed("a nonzero constant term", "a linearized polynomial");
        }
        let sum = |a: LinPoly, b: LinPoly| a.try_add(&b).expect("same tower");
        Ok(match e {
            Expr::X => LinPoly::x(t, ql),
            Expr::S(k) => s_poly(self.s_index(k, ctx)?, t),
            Expr::Neg(a) => self.lin(a, ctx)?.neg(),
            Expr::Add(a, b) => sum(self.lin(a, ctx)?, self.lin(b, ctx)?),
            Expr::Sub(a, b) => sum(self.lin(a, ctx)?, self.lin(b, ctx)?.neg()),
            Expr::Mul(a, b) => match (mentions_x(a), mentions_x(b)) {
                (false, true) => self.lin(b, ctx)?.scale(&self.point(a, ctx, &t.zero())?),
                (true, false) => self.lin(a, ctx)?.scale(&self.point(b, ctx, &t.zero())?),
                _ => return self.not_allowed("a product of two x-terms", "a linearized polynomial"),
            },
            Expr::Pow(a, n) => {
                let n = self.int(n, ctx)?;
                let k = (n > 0).then(|| t.log_p(n as u128)).flatten().filter(|k| k % ql == 0);
                match (a.as_ref(), k) {
                    (Expr::X, Some(k)) => LinPoly::q_power(t, (k / ql) as usize),
                    _ if n == 1 => self.lin(a, ctx)?,
                    _ => return self.not_allowed("a power other than x^(q^k)", "a linearized polynomial"),
                }
            }
            Expr::C | Expr::Int(_) => unreachable!("handled above"),
        })
    }
}

fn mentions_x(e: &Expr) -> bool {
    match e {
        Expr::X | Expr::S(_) => true,
        Expr::C | Expr::Int(_) => false,
        Expr::Neg(a) | Expr::Pow(a, _) => mentions_x(a),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => mentions_x(a) || mentions_x(b),
    }
}

fn int_elem(t: &FieldTower, v: i128) -> FieldElem {
    t.from_int((v % t.p() as i128) as i64)
}
