//! The closed-form function mini-language used by configs and the CLI.
//!
//! Prefix forms with fixed arity, so parentheses are optional:
//!
//! ```text
//! zero
//! chi a b                 indicator of [a, b] on every axis
//! gauss sigma             exp(-|x|^2 / sigma^2)
//! bump centre radius      exp(1 - 1/(1 - |x - c|^2/r^2)) inside the ball, 0 outside
//! pow a eps               |x|^a for |x| >= eps, 0 inside
//! dilate lambda <expr>    x -> expr(lambda x)
//! translate v <expr>      x -> expr(x - v)
//! sum <expr> <expr>
//! ```
//!
//! Points (`centre`, `v`) are either one number, used on every axis, or a
//! bracketed list `[x y]`. The canonical text form is fully parenthesised,
//! e.g. `(sum (chi -1 1) (translate [2 0] (gauss 0.5)))`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{GridFunction, GridSpec, Point};
use crate::error::{LabError, Result};

/// A point argument: one number for every axis, or explicit coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum Coord {
    Uniform(f64),
    Explicit(Vec<f64>),
}

impl Coord {
    fn component(&self, axis: usize) -> f64 {
        match self {
            Coord::Uniform(v) => *v,
            Coord::Explicit(vs) => vs.get(axis).copied().unwrap_or(0.0),
        }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::Uniform(v) => write!(f, "{v}"),
            Coord::Explicit(vs) => {
                write!(f, "[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionExpr {
    Zero,
    Chi { a: f64, b: f64 },
    Gauss { sigma: f64 },
    Bump { centre: Coord, radius: f64 },
    Pow { exponent: f64, eps: f64 },
    Dilate { factor: f64, inner: Box<FunctionExpr> },
    Translate { by: Coord, inner: Box<FunctionExpr> },
    Sum(Box<FunctionExpr>, Box<FunctionExpr>),
}

impl FunctionExpr {
    pub fn chi(a: f64, b: f64) -> Self {
        FunctionExpr::Chi { a, b }
    }

    pub fn gauss(sigma: f64) -> Self {
        FunctionExpr::Gauss { sigma }
    }

    pub fn bump(centre: f64, radius: f64) -> Self {
        FunctionExpr::Bump {
            centre: Coord::Uniform(centre),
            radius,
        }
    }

    pub fn pow(exponent: f64, eps: f64) -> Self {
        FunctionExpr::Pow { exponent, eps }
    }

    pub fn dilate(self, factor: f64) -> Self {
        FunctionExpr::Dilate {
            factor,
            inner: Box::new(self),
        }
    }

    pub fn translate(self, by: f64) -> Self {
        FunctionExpr::Translate {
            by: Coord::Uniform(by),
            inner: Box::new(self),
        }
    }

    pub fn plus(self, other: FunctionExpr) -> Self {
        FunctionExpr::Sum(Box::new(self), Box::new(other))
    }

    /// Value at `p`; only the first `dim` coordinates are read.
    pub fn eval(&self, p: &Point, dim: usize) -> f64 {
        match self {
            FunctionExpr::Zero => 0.0,
            FunctionExpr::Chi { a, b } => {
                if p[..dim].iter().all(|x| *a <= *x && *x <= *b) {
                    1.0
                } else {
                    0.0
                }
            }
            FunctionExpr::Gauss { sigma } => {
                let r2: f64 = p[..dim].iter().map(|x| x * x).sum();
                (-r2 / (sigma * sigma)).exp()
            }
            FunctionExpr::Bump { centre, radius } => {
                let r2: f64 = (0..dim)
                    .map(|k| {
                        let d = p[k] - centre.component(k);
                        d * d
                    })
                    .sum::<f64>()
                    / (radius * radius);
                if r2 < 1.0 {
                    (1.0 - 1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            }
            FunctionExpr::Pow { exponent, eps } => {
                let r = p[..dim].iter().map(|x| x * x).sum::<f64>().sqrt();
                if r < *eps {
                    0.0
                } else {
                    r.powf(*exponent)
                }
            }
            FunctionExpr::Dilate { factor, inner } => {
                let mut q = *p;
                for c in q.iter_mut().take(dim) {
                    *c *= factor;
                }
                inner.eval(&q, dim)
            }
            FunctionExpr::Translate { by, inner } => {
                let mut q = *p;
                for (k, c) in q.iter_mut().enumerate().take(dim) {
                    *c -= by.component(k);
                }
                inner.eval(&q, dim)
            }
            FunctionExpr::Sum(a, b) => a.eval(p, dim) + b.eval(p, dim),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::Parse(msg));
        match self {
            FunctionExpr::Zero => Ok(()),
            FunctionExpr::Chi { a, b } if a > b => bad(format!("chi needs a <= b, got {a} > {b}")),
            FunctionExpr::Gauss { sigma } if !(*sigma > 0.0) => {
                bad(format!("gauss width must be positive, got {sigma}"))
            }
            FunctionExpr::Bump { radius, .. } if !(*radius > 0.0) => {
                bad(format!("bump radius must be positive, got {radius}"))
            }
            FunctionExpr::Pow { eps, .. } if !(*eps >= 0.0) => {
                bad(format!("pow truncation radius must be >= 0, got {eps}"))
            }
            FunctionExpr::Dilate { factor, inner } => {
                if !(*factor > 0.0) {
                    return bad(format!("dilation factor must be positive, got {factor}"));
                }
                inner.validate()
            }
            FunctionExpr::Translate { inner, .. } => inner.validate(),
            FunctionExpr::Sum(a, b) => {
                a.validate()?;
                b.validate()
            }
            _ => Ok(()),
        }
    }
}

/// Evaluates `expr` at every node of `spec`.
pub fn sample(expr: &FunctionExpr, spec: &GridSpec) -> Result<GridFunction> {
    let dim = spec.dim();
    let mut values = Vec::with_capacity(spec.len());
    for (index, p) in spec.nodes().enumerate() {
        let v = expr.eval(&p, dim);
        if !v.is_finite() {
            return Err(LabError::SingularSample {
                index,
                position: p[..dim].to_vec(),
            });
        }
        values.push(Complex64::new(v, 0.0));
    }
    GridFunction::new(*spec, values)
}

impl GridFunction {
    /// Convenience wrapper around [`sample`].
    pub fn sample(expr: &FunctionExpr, spec: &GridSpec) -> Result<Self> {
        sample(expr, spec)
    }
}

impl fmt::Display for FunctionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionExpr::Zero => write!(f, "zero"),
            FunctionExpr::Chi { a, b } => write!(f, "(chi {a} {b})"),
            FunctionExpr::Gauss { sigma } => write!(f, "(gauss {sigma})"),
            FunctionExpr::Bump { centre, radius } => write!(f, "(bump {centre} {radius})"),
            FunctionExpr::Pow { exponent, eps } => write!(f, "(pow {exponent} {eps})"),
            FunctionExpr::Dilate { factor, inner } => write!(f, "(dilate {factor} {inner})"),
            FunctionExpr::Translate { by, inner } => write!(f, "(translate {by} {inner})"),
            FunctionExpr::Sum(a, b) => write!(f, "(sum {a} {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    OpenBracket,
    CloseBracket,
    Word(String),
}

fn tokenize(src: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, tokens: &mut Vec<Token>| {
        if !word.is_empty() {
            tokens.push(Token::Word(std::mem::take(word)));
        }
    };
    for ch in src.chars() {
        match ch {
            '(' | ')' | '[' | ']' => {
                flush(&mut word, &mut tokens);
                tokens.push(match ch {
                    '(' => Token::Open,
                    ')' => Token::Close,
                    '[' => Token::OpenBracket,
                    _ => Token::CloseBracket,
                });
            }
            c if c.is_whitespace() || c == ',' => flush(&mut word, &mut tokens),
            c => word.push(c),
        }
    }
    flush(&mut word, &mut tokens);
    tokens
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn number(&mut self) -> Result<f64> {
        match self.next() {
            Some(Token::Word(w)) => parse_number(&w),
            other => Err(LabError::Parse(format!("expected a number, found {other:?}"))),
        }
    }

    fn coord(&mut self) -> Result<Coord> {
        if self.peek() == Some(&Token::OpenBracket) {
            self.next();
            let mut vs = Vec::new();
            loop {
                match self.peek() {
                    Some(Token::CloseBracket) => {
                        self.next();
                        break;
                    }
                    Some(_) => vs.push(self.number()?),
                    None => return Err(LabError::Parse("unterminated `[`".into())),
                }
            }
            if vs.is_empty() || vs.len() > 2 {
                return Err(LabError::Parse(format!(
                    "point literal needs 1 or 2 coordinates, got {}",
                    vs.len()
                )));
            }
            Ok(Coord::Explicit(vs))
        } else {
            Ok(Coord::Uniform(self.number()?))
        }
    }

    fn expr(&mut self) -> Result<FunctionExpr> {
        if self.peek() == Some(&Token::Open) {
            self.next();
            let e = self.form()?;
            match self.next() {
                Some(Token::Close) => Ok(e),
                other => Err(LabError::Parse(format!("expected `)`, found {other:?}"))),
            }
        } else {
            self.form()
        }
    }

    fn form(&mut self) -> Result<FunctionExpr> {
        let head = match self.next() {
            Some(Token::Word(w)) => w,
            other => return Err(LabError::Parse(format!("expected a form name, found {other:?}"))),
        };
        let e = match head.as_str() {
            "zero" => FunctionExpr::Zero,
            "chi" => FunctionExpr::Chi {
                a: self.number()?,
                b: self.number()?,
            },
            "gauss" => FunctionExpr::Gauss {
                sigma: self.number()?,
            },
            "bump" => FunctionExpr::Bump {
                centre: self.coord()?,
                radius: self.number()?,
            },
            "pow" => FunctionExpr::Pow {
                exponent: self.number()?,
                eps: self.number()?,
            },
            "dilate" => FunctionExpr::Dilate {
                factor: self.number()?,
                inner: Box::new(self.expr()?),
            },
            "translate" => FunctionExpr::Translate {
                by: self.coord()?,
                inner: Box::new(self.expr()?),
            },
            "sum" => {
                let a = self.expr()?;
                let b = self.expr()?;
                FunctionExpr::Sum(Box::new(a), Box::new(b))
            }
            other => return Err(LabError::Parse(format!("unknown form `{other}`"))),
        };
        Ok(e)
    }
}

fn parse_number(w: &str) -> Result<f64> {
    let v = match w {
        "inf" | "+inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        _ => w
            .parse::<f64>()
            .map_err(|_| LabError::Parse(format!("`{w}` is not a number")))?,
    };
    if v.is_nan() {
        return Err(LabError::Parse("NaN is not allowed".into()));
    }
    Ok(v)
}

impl FromStr for FunctionExpr {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let mut parser = Parser {
            tokens: tokenize(s),
            pos: 0,
        };
        if parser.tokens.is_empty() {
            return Err(LabError::Parse("empty expression".into()));
        }
        let e = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(LabError::Parse(format!(
                "trailing input after expression: {:?}",
                &parser.tokens[parser.pos..]
            )));
        }
        e.validate()?;
        Ok(e)
    }
}

impl Serialize for FunctionExpr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FunctionExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_parentheses() {
        let a: FunctionExpr = "dilate 2 chi -1 1".parse().unwrap();
        let b: FunctionExpr = "(dilate 2 (chi -1 1))".parse().unwrap();
        assert_eq!(a, b);
        let c: FunctionExpr = "(sum (gauss 0.5) (translate [1 -2] (bump 0 0.25)))".parse().unwrap();
        assert_eq!(c.to_string(), "(sum (gauss 0.5) (translate [1 -2] (bump 0 0.25)))");
        assert_eq!(c.to_string().parse::<FunctionExpr>().unwrap(), c);
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["", "chi 1", "chi 2 1", "gauss -1", "frob 1", "(chi 0 1", "chi 0 1 2", "bump [1 2 3] 1"] {
            assert!(bad.parse::<FunctionExpr>().is_err(), "{bad}");
        }
    }

    #[test]
    fn zero_samples_to_zero() {
        let spec = GridSpec::new(2, 1.0, 8).unwrap();
        assert!(sample(&FunctionExpr::Zero, &spec).unwrap().is_zero());
    }

    #[test]
    fn indicator_on_coarse_grid() {
        let spec = GridSpec::new(1, 4.0, 8).unwrap();
        let f = sample(&FunctionExpr::chi(-1.0, 1.0), &spec).unwrap();
        for (i, v) in f.values().iter().enumerate() {
            let x = spec.node(i)[0];
            assert_eq!(v.re, if x.abs() <= 1.0 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn gaussian_is_symmetric_and_normalized() {
        let g = FunctionExpr::gauss(1.0);
        assert_eq!(g.eval(&[0.0, 0.0], 1), 1.0);
        let spec = GridSpec::new(1, 3.0, 64).unwrap();
        let f = sample(&g, &spec).unwrap();
        let n = spec.points_per_axis();
        for i in 0..n {
            assert_eq!(f.value(i), f.value(n - 1 - i));
        }
    }

    #[test]
    fn singular_power_needs_truncation() {
        // grid with a node at the origin after translation by half a cell
        let spec = GridSpec::new(1, 1.0, 4).unwrap();
        let e: FunctionExpr = "translate 0.25 (pow -0.5 0)".parse().unwrap();
        assert!(matches!(sample(&e, &spec), Err(LabError::SingularSample { .. })));
        let ok: FunctionExpr = "translate 0.25 (pow -0.5 0.1)".parse().unwrap();
        assert!(sample(&ok, &spec).is_ok());
    }

    #[test]
    fn bump_is_compactly_supported() {
        let b = FunctionExpr::bump(1.0, 0.5);
        assert_eq!(b.eval(&[1.0, 0.0], 1), 1.0);
        assert_eq!(b.eval(&[1.5, 0.0], 1), 0.0);
        assert!(b.eval(&[1.4, 0.0], 1) > 0.0);
    }

    #[test]
    fn serde_round_trip_as_text() {
        let e: FunctionExpr = "sum (chi -1 1) (dilate 4 (gauss 1))".parse().unwrap();
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(json, "\"(sum (chi -1 1) (dilate 4 (gauss 1)))\"");
        let back: FunctionExpr = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
    }
}
