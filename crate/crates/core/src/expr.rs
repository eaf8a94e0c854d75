//! Small expression language used by config-defined plants.
//!
//! The vocabulary is fixed: sums, products, integer powers, `exp`, `sin`,
//! `cos`, `tanh`, `poly(a, c0, c1, ...)` and `gauss(a, center, width)`.
//! Variables are `x0, x1, ...` (state), `th0, th1, ...` (parameters), `t`
//! (time) and the constant `pi`.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    State(usize),
    Param(usize),
    Time,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Tanh(Box<Expr>),
    Poly(Box<Expr>, Vec<f64>),
    Gauss(Box<Expr>, f64, f64),
}

/// Values bound to the free variables of an expression.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<'a> {
    pub x: &'a [f64],
    pub theta: &'a [f64],
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprError {
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.pos + 1, self.msg)
    }
}

impl std::error::Error for ExprError {}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, idx: 0 };
        let e = p.expr()?;
        if let Some(tok) = p.peek() {
            return Err(ExprError {
                pos: tok.pos,
                msg: format!("unexpected `{}`", tok.kind),
            });
        }
        Ok(e)
    }

    pub fn eval(&self, b: &Bindings<'_>) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::State(i) => b.x[*i],
            Expr::Param(i) => b.theta[*i],
            Expr::Time => b.t,
            Expr::Neg(a) => -a.eval(b),
            Expr::Add(l, r) => l.eval(b) + r.eval(b),
            Expr::Sub(l, r) => l.eval(b) - r.eval(b),
            Expr::Mul(l, r) => l.eval(b) * r.eval(b),
            Expr::Pow(a, n) => a.eval(b).powi(*n as i32),
            Expr::Exp(a) => a.eval(b).exp(),
            Expr::Sin(a) => a.eval(b).sin(),
            Expr::Cos(a) => a.eval(b).cos(),
            Expr::Tanh(a) => a.eval(b).tanh(),
            Expr::Poly(a, coeffs) => {
                let v = a.eval(b);
                coeffs.iter().rev().fold(0.0, |acc, c| acc * v + c)
            }
            Expr::Gauss(a, center, width) => {
                let z = (a.eval(b) - center) / width;
                (-z * z).exp()
            }
        }
    }

    /// Largest state and parameter indices referenced, plus whether `t` appears.
    pub fn footprint(&self) -> Footprint {
        let mut fp = Footprint::default();
        self.visit(&mut fp);
        fp
    }

    fn visit(&self, fp: &mut Footprint) {
        match self {
            Expr::Const(_) => {}
            Expr::State(i) => fp.max_state = Some(fp.max_state.map_or(*i, |m| m.max(*i))),
            Expr::Param(i) => fp.max_param = Some(fp.max_param.map_or(*i, |m| m.max(*i))),
            Expr::Time => fp.uses_time = true,
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Exp(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Tanh(a)
            | Expr::Poly(a, _)
            | Expr::Gauss(a, _, _) => a.visit(fp),
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) => {
                l.visit(fp);
                r.visit(fp);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Footprint {
    pub max_state: Option<usize>,
    pub max_param: Option<usize>,
    pub uses_time: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for TokKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokKind::Num(v) => write!(f, "{v}"),
            TokKind::Ident(s) => write!(f, "{s}"),
            TokKind::Plus => f.write_str("+"),
            TokKind::Minus => f.write_str("-"),
            TokKind::Star => f.write_str("*"),
            TokKind::Caret => f.write_str("^"),
            TokKind::LParen => f.write_str("("),
            TokKind::RParen => f.write_str(")"),
            TokKind::Comma => f.write_str(","),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    pos: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = match c {
            '+' => TokKind::Plus,
            '-' => TokKind::Minus,
            '*' => TokKind::Star,
            '^' => TokKind::Caret,
            '(' => TokKind::LParen,
            ')' => TokKind::RParen,
            ',' => TokKind::Comma,
            '0'..='9' | '.' => {
                let mut j = i;
                while j < bytes.len() && ((bytes[j] as char).is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                // decimal exponent, e.g. 1e-6
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && (bytes[k] as char).is_ascii_digit() {
                        while k < bytes.len() && (bytes[k] as char).is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text = &src[i..j];
                let v: f64 = text.parse().map_err(|_| ExprError {
                    pos: start,
                    msg: format!("bad number `{text}`"),
                })?;
                i = j;
                out.push(Token {
                    kind: TokKind::Num(v),
                    pos: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len() && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                let ident = src[i..j].to_string();
                i = j;
                out.push(Token {
                    kind: TokKind::Ident(ident),
                    pos: start,
                });
                continue;
            }
            other => {
                return Err(ExprError {
                    pos: start,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push(Token { kind, pos: start });
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    idx: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx)
    }

    fn end_pos(&self) -> usize {
        self.tokens.last().map_or(0, |t| t.pos + 1)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.idx).cloned();
        self.idx += 1;
        t
    }

    fn expect(&mut self, kind: TokKind) -> Result<(), ExprError> {
        match self.bump() {
            Some(t) if t.kind == kind => Ok(()),
            Some(t) => Err(ExprError {
                pos: t.pos,
                msg: format!("expected `{kind}`, found `{}`", t.kind),
            }),
            None => Err(ExprError {
                pos: self.end_pos(),
                msg: format!("expected `{kind}`, found end of input"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().map(|t| &t.kind) {
                Some(TokKind::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(TokKind::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(TokKind::Star) = self.peek().map(|t| &t.kind) {
            self.bump();
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if let Some(TokKind::Minus) = self.peek().map(|t| &t.kind) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if let Some(TokKind::Caret) = self.peek().map(|t| &t.kind) {
            self.bump();
            match self.bump() {
                Some(Token {
                    kind: TokKind::Num(v),
                    pos,
                }) => {
                    if v < 0.0 || v.fract() != 0.0 || v > 64.0 {
                        return Err(ExprError {
                            pos,
                            msg: "exponent must be a non-negative integer literal".into(),
                        });
                    }
                    return Ok(Expr::Pow(Box::new(base), v as u32));
                }
                Some(t) => {
                    return Err(ExprError {
                        pos: t.pos,
                        msg: "exponent must be a non-negative integer literal".into(),
                    })
                }
                None => {
                    return Err(ExprError {
                        pos: self.end_pos(),
                        msg: "missing exponent".into(),
                    })
                }
            }
        }
        Ok(base)
    }

    fn number_arg(&mut self) -> Result<f64, ExprError> {
        let neg = if let Some(TokKind::Minus) = self.peek().map(|t| &t.kind) {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Some(Token {
                kind: TokKind::Num(v), ..
            }) => Ok(if neg { -v } else { v }),
            Some(t) => Err(ExprError {
                pos: t.pos,
                msg: "expected a numeric literal".into(),
            }),
            None => Err(ExprError {
                pos: self.end_pos(),
                msg: "expected a numeric literal".into(),
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let tok = self.bump().ok_or_else(|| ExprError {
            pos: self.end_pos(),
            msg: "unexpected end of input".into(),
        })?;
        match tok.kind {
            TokKind::Num(v) => Ok(Expr::Const(v)),
            TokKind::LParen => {
                let e = self.expr()?;
                self.expect(TokKind::RParen)?;
                Ok(e)
            }
            TokKind::Ident(name) => {
                if let Some(TokKind::LParen) = self.peek().map(|t| &t.kind) {
                    self.bump();
                    return self.call(&name, tok.pos);
                }
                variable(&name).ok_or(ExprError {
                    pos: tok.pos,
                    msg: format!("unknown variable `{name}`"),
                })
            }
            other => Err(ExprError {
                pos: tok.pos,
                msg: format!("unexpected `{other}`"),
            }),
        }
    }

    fn call(&mut self, name: &str, pos: usize) -> Result<Expr, ExprError> {
        let arg = Box::new(self.expr()?);
        let e = match name {
            "exp" => Expr::Exp(arg),
            "sin" => Expr::Sin(arg),
            "cos" => Expr::Cos(arg),
            "tanh" => Expr::Tanh(arg),
            "gauss" => {
                self.expect(TokKind::Comma)?;
                let center = self.number_arg()?;
                self.expect(TokKind::Comma)?;
                let width = self.number_arg()?;
                if width <= 0.0 {
                    return Err(ExprError {
                        pos,
                        msg: "gauss width must be positive".into(),
                    });
                }
                Expr::Gauss(arg, center, width)
            }
            "poly" => {
                let mut coeffs = Vec::new();
                while let Some(TokKind::Comma) = self.peek().map(|t| &t.kind) {
                    self.bump();
                    coeffs.push(self.number_arg()?);
                }
                if coeffs.is_empty() {
                    return Err(ExprError {
                        pos,
                        msg: "poly needs at least one coefficient".into(),
                    });
                }
                Expr::Poly(arg, coeffs)
            }
            _ => {
                return Err(ExprError {
                    pos,
                    msg: format!("unknown function `{name}`"),
                })
            }
        };
        self.expect(TokKind::RParen)?;
        Ok(e)
    }
}

fn variable(name: &str) -> Option<Expr> {
    match name {
        "t" => return Some(Expr::Time),
        "pi" => return Some(Expr::Const(std::f64::consts::PI)),
        _ => {}
    }
    let index = |prefix: &str| -> Option<usize> {
        let rest = name.strip_prefix(prefix)?;
        if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        rest.parse().ok()
    };
    if let Some(i) = index("th") {
        return Some(Expr::Param(i));
    }
    index("x").map(Expr::State)
}
