//! Marking expressions: `P{ predicate }` for probabilities and
//! `E{ expression }` for expected values.
//!
//! ```text
//! P{#MN_ON >= 1}
//! P{#SRV_ON = 1 AND (#A > 0 OR NOT #B < 2)}
//! E{min(#CT_UP, 8 * #SRV_ON)}
//! ```

use std::fmt;

use super::{Marking, SpnModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Ge,
    Le,
    Gt,
    Lt,
    Eq,
    Ne,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }

    fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Ge => a >= b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Lt => a < b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

/// Expression over token counts. Comparisons and connectives evaluate to 1
/// or 0; any non-zero value is true.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Tokens(String),
    Const(i64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn tokens(place: &str) -> Self {
        Expr::Tokens(place.to_string())
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Self {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    fn resolve(&self, model: &SpnModel) -> Result<Compiled> {
        let bin = |a: &Expr, b: &Expr| -> Result<(Box<Compiled>, Box<Compiled>)> {
            Ok((Box::new(a.resolve(model)?), Box::new(b.resolve(model)?)))
        };
        Ok(match self {
            Expr::Tokens(p) => Compiled::Tokens(model.place_index(p).ok_or_else(|| {
                Error::structural("metric", format!("unknown place {p}"))
            })?),
            Expr::Const(c) => Compiled::Const(*c as f64),
            Expr::Add(a, b) => {
                let (a, b) = bin(a, b)?;
                Compiled::Add(a, b)
            }
            Expr::Sub(a, b) => {
                let (a, b) = bin(a, b)?;
                Compiled::Sub(a, b)
            }
            Expr::Mul(a, b) => {
                let (a, b) = bin(a, b)?;
                Compiled::Mul(a, b)
            }
            Expr::Min(a, b) => {
                let (a, b) = bin(a, b)?;
                Compiled::Min(a, b)
            }
            Expr::Max(a, b) => {
                let (a, b) = bin(a, b)?;
                Compiled::Max(a, b)
            }
            Expr::Cmp(op, a, b) => {
                let (a, b) = bin(a, b)?;
                Compiled::Cmp(*op, a, b)
            }
            Expr::And(a, b) => {
                let (a, b) = bin(a, b)?;
                Compiled::And(a, b)
            }
            Expr::Or(a, b) => {
                let (a, b) = bin(a, b)?;
                Compiled::Or(a, b)
            }
            Expr::Not(a) => Compiled::Not(Box::new(a.resolve(model)?)),
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(..) => 3,
            Expr::Cmp(..) => 4,
            Expr::Add(..) | Expr::Sub(..) => 5,
            Expr::Mul(..) => 6,
            _ => 7,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        let p = self.precedence();
        match self {
            Expr::Tokens(name) => write!(f, "#{name}"),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Min(a, b) => write!(f, "min({a}, {b})"),
            Expr::Max(a, b) => write!(f, "max({a}, {b})"),
            Expr::Not(a) => {
                write!(f, "NOT ")?;
                wrap(f, a, p)
            }
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Cmp(_, a, b)
            | Expr::And(a, b)
            | Expr::Or(a, b) => {
                let op = match self {
                    Expr::Add(..) => "+",
                    Expr::Sub(..) => "-",
                    Expr::Mul(..) => "*",
                    Expr::Cmp(op, ..) => op.symbol(),
                    Expr::And(..) => "AND",
                    _ => "OR",
                };
                wrap(f, a, p)?;
                write!(f, " {op} ")?;
                // left-associative: right operand of equal precedence needs parens
                wrap(f, b, p + 1)
            }
        }
    }
}

/// A metric over the steady-state distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricExpr {
    /// Probability mass of the markings satisfying the predicate.
    Probability(Expr),
    /// Expected value of the expression.
    Expectation(Expr),
}

impl MetricExpr {
    /// `P{#place >= at_least}`.
    pub fn at_least(place: &str, at_least: i64) -> Self {
        MetricExpr::Probability(Expr::cmp(
            CmpOp::Ge,
            Expr::tokens(place),
            Expr::Const(at_least),
        ))
    }

    /// `E{#place}`.
    pub fn mean_tokens(place: &str) -> Self {
        MetricExpr::Expectation(Expr::tokens(place))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).metric()
    }

    /// Resolves place names against a net.
    pub fn compile(&self, model: &SpnModel) -> Result<CompiledMetric> {
        let (probability, expr) = match self {
            MetricExpr::Probability(e) => (true, e),
            MetricExpr::Expectation(e) => (false, e),
        };
        Ok(CompiledMetric {
            probability,
            expr: expr.resolve(model)?,
        })
    }
}

impl fmt::Display for MetricExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricExpr::Probability(e) => write!(f, "P{{{e}}}"),
            MetricExpr::Expectation(e) => write!(f, "E{{{e}}}"),
        }
    }
}

#[derive(Debug, Clone)]
enum Compiled {
    Tokens(usize),
    Const(f64),
    Add(Box<Compiled>, Box<Compiled>),
    Sub(Box<Compiled>, Box<Compiled>),
    Mul(Box<Compiled>, Box<Compiled>),
    Min(Box<Compiled>, Box<Compiled>),
    Max(Box<Compiled>, Box<Compiled>),
    Cmp(CmpOp, Box<Compiled>, Box<Compiled>),
    And(Box<Compiled>, Box<Compiled>),
    Or(Box<Compiled>, Box<Compiled>),
    Not(Box<Compiled>),
}

fn truth(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl Compiled {
    fn eval(&self, m: &Marking) -> f64 {
        match self {
            Compiled::Tokens(p) => m.0[*p] as f64,
            Compiled::Const(c) => *c,
            Compiled::Add(a, b) => a.eval(m) + b.eval(m),
            Compiled::Sub(a, b) => a.eval(m) - b.eval(m),
            Compiled::Mul(a, b) => a.eval(m) * b.eval(m),
            Compiled::Min(a, b) => a.eval(m).min(b.eval(m)),
            Compiled::Max(a, b) => a.eval(m).max(b.eval(m)),
            Compiled::Cmp(op, a, b) => truth(op.apply(a.eval(m), b.eval(m))),
            Compiled::And(a, b) => truth(a.eval(m) != 0.0 && b.eval(m) != 0.0),
            Compiled::Or(a, b) => truth(a.eval(m) != 0.0 || b.eval(m) != 0.0),
            Compiled::Not(a) => truth(a.eval(m) == 0.0),
        }
    }
}

/// A metric bound to a particular net's place order.
#[derive(Debug, Clone)]
pub struct CompiledMetric {
    probability: bool,
    expr: Compiled,
}

impl CompiledMetric {
    /// Per-marking value: an indicator in probability mode, the expression
    /// value otherwise.
    pub fn value(&self, m: &Marking) -> f64 {
        let v = self.expr.eval(m);
        if self.probability {
            truth(v != 0.0)
        } else {
            v
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Place(String),
    Int(i64),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    End,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    lex_error: Option<Error>,
}

fn parse_err(column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line: 1,
        column,
        key: None,
        message: message.into(),
    }
}

impl Parser {
    fn new(text: &str) -> Self {
        let mut toks = Vec::new();
        let mut lex_error = None;
        let chars: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let op2 = [">=", "<=", "==", "!=", "&&", "||"]
                .into_iter()
                .find(|o| *o == two);
            if let Some(op) = op2 {
                let op = match op {
                    "==" => "=",
                    "&&" => "AND",
                    "||" => "OR",
                    o => o,
                };
                toks.push((Tok::Op(op), col));
                i += 2;
                continue;
            }
            let single = match c {
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                '{' => Some(Tok::LBrace),
                '}' => Some(Tok::RBrace),
                ',' => Some(Tok::Comma),
                '>' => Some(Tok::Op(">")),
                '<' => Some(Tok::Op("<")),
                '=' => Some(Tok::Op("=")),
                '+' => Some(Tok::Op("+")),
                '-' => Some(Tok::Op("-")),
                '*' => Some(Tok::Op("*")),
                '!' => Some(Tok::Op("NOT")),
                _ => None,
            };
            if let Some(t) = single {
                toks.push((t, col));
                i += 1;
                continue;
            }
            if c == '#' {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                if j == start {
                    lex_error.get_or_insert(parse_err(col, "expected a place name after '#'"));
                    break;
                }
                toks.push((Tok::Place(chars[start..j].iter().collect()), col));
                i = j;
                continue;
            }
            if c.is_ascii_digit() {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                match s.parse() {
                    Ok(v) => toks.push((Tok::Int(v), col)),
                    Err(_) => {
                        lex_error.get_or_insert(parse_err(col, format!("integer {s} out of range")));
                        break;
                    }
                }
                i = j;
                continue;
            }
            if c.is_alphabetic() {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                let tok = match s.to_ascii_uppercase().as_str() {
                    "AND" => Tok::Op("AND"),
                    "OR" => Tok::Op("OR"),
                    "NOT" => Tok::Op("NOT"),
                    _ => Tok::Ident(s),
                };
                toks.push((tok, col));
                i = j;
                continue;
            }
            lex_error.get_or_insert(parse_err(col, format!("unexpected character '{c}'")));
            break;
        }
        toks.push((Tok::End, chars.len() + 1));
        Parser {
            toks,
            pos: 0,
            lex_error,
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            Err(parse_err(self.col(), format!("expected {what}")))
        }
    }

    fn metric(&mut self) -> Result<MetricExpr> {
        if let Some(e) = self.lex_error.take() {
            return Err(e);
        }
        let mode = match self.next() {
            Tok::Ident(s) if s == "P" || s == "E" => s,
            _ => return Err(parse_err(1, "metric must start with P{ or E{")),
        };
        self.expect(Tok::LBrace, "'{'")?;
        let e = self.or()?;
        self.expect(Tok::RBrace, "'}'")?;
        if *self.peek() != Tok::End {
            return Err(parse_err(self.col(), "trailing input after metric"));
        }
        Ok(if mode == "P" {
            MetricExpr::Probability(e)
        } else {
            MetricExpr::Expectation(e)
        })
    }

    fn or(&mut self) -> Result<Expr> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Op("OR") {
            self.next();
            lhs = Expr::Or(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr> {
        let mut lhs = self.not()?;
        while *self.peek() == Tok::Op("AND") {
            self.next();
            lhs = Expr::And(Box::new(lhs), Box::new(self.not()?));
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Op("NOT") {
            self.next();
            return Ok(Expr::Not(Box::new(self.not()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr> {
        let lhs = self.sum()?;
        let op = match self.peek() {
            Tok::Op(">=") => CmpOp::Ge,
            Tok::Op("<=") => CmpOp::Le,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("=") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::Ne,
            _ => return Ok(lhs),
        };
        self.next();
        Ok(Expr::cmp(op, lhs, self.sum()?))
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Tok::Op("+") => {
                    self.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Tok::Op("-") => {
                    self.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.atom()?;
        while *self.peek() == Tok::Op("*") {
            self.next();
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.atom()?));
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Expr> {
        let col = self.col();
        match self.next() {
            Tok::Place(p) => Ok(Expr::Tokens(p)),
            Tok::Int(v) => Ok(Expr::Const(v)),
            Tok::Op("-") => match self.next() {
                Tok::Int(v) => Ok(Expr::Const(-v)),
                _ => Err(parse_err(col, "expected an integer after '-'")),
            },
            Tok::LParen => {
                let e = self.or()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(f) if f == "min" || f == "max" => {
                self.expect(Tok::LParen, "'('")?;
                let a = self.or()?;
                self.expect(Tok::Comma, "','")?;
                let b = self.or()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(if f == "min" {
                    Expr::Min(Box::new(a), Box::new(b))
                } else {
                    Expr::Max(Box::new(a), Box::new(b))
                })
            }
            _ => Err(parse_err(col, "expected a place, integer, function or '('")),
        }
    }
}
