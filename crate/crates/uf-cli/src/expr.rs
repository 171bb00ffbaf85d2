//! The expression micro-grammar for initial data, densities, and fluxes.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := unary ('^' factor)?          right-associative power
//! unary   := '-' unary | primary
//! primary := number | var | func '(' expr ')' | '(' expr ')'
//! var     := 't' | 'x' | 'y' | 'z' | 'u'
//! func    := 'abs' | 'sin' | 'cos' | 'exp'
//! ```
//!
//! Numbers are decimal with an optional exponent. `x`, `y`, `z` are the
//! first three spatial coordinates, `t` is time, `u` is the state value
//! (meaningful in flux expressions). Hand-rolled recursive descent; parse
//! errors carry the byte offset.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    X,
    Y,
    Z,
    U,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Sin,
    Cos,
    Exp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Variable(Var),
    Negate(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    /// Byte offset into the source where parsing failed.
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Values bound to the grammar's variables during evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bindings<'a> {
    pub t: f64,
    pub x: &'a [f64],
    pub u: f64,
}

impl Expr {
    pub fn eval(&self, b: &Bindings) -> f64 {
        match self {
            Expr::Number(v) => *v,
            Expr::Variable(Var::T) => b.t,
            Expr::Variable(Var::X) => b.x.first().copied().unwrap_or(0.0),
            Expr::Variable(Var::Y) => b.x.get(1).copied().unwrap_or(0.0),
            Expr::Variable(Var::Z) => b.x.get(2).copied().unwrap_or(0.0),
            Expr::Variable(Var::U) => b.u,
            Expr::Negate(e) => -e.eval(b),
            Expr::Add(l, r) => l.eval(b) + r.eval(b),
            Expr::Sub(l, r) => l.eval(b) - r.eval(b),
            Expr::Mul(l, r) => l.eval(b) * r.eval(b),
            Expr::Div(l, r) => l.eval(b) / r.eval(b),
            Expr::Pow(l, r) => l.eval(b).powf(r.eval(b)),
            Expr::Call(Func::Abs, e) => e.eval(b).abs(),
            Expr::Call(Func::Sin, e) => e.eval(b).sin(),
            Expr::Call(Func::Cos, e) => e.eval(b).cos(),
            Expr::Call(Func::Exp, e) => e.eval(b).exp(),
        }
    }

    pub fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Number(_) => false,
            Expr::Variable(v) => *v == var,
            Expr::Negate(e) | Expr::Call(_, e) => e.uses(var),
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) | Expr::Div(l, r)
            | Expr::Pow(l, r) => l.uses(var) || r.uses(var),
        }
    }

    /// Highest spatial coordinate index mentioned, if any.
    pub fn max_axis(&self) -> Option<usize> {
        [Var::X, Var::Y, Var::Z]
            .iter()
            .enumerate()
            .filter(|(_, &v)| self.uses(v))
            .map(|(k, _)| k)
            .max()
    }
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            position: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ') | Some(b'\t')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
            } else if self.eat(b'-') {
                acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                acc = Expr::Div(Box::new(acc), Box::new(self.factor()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if self.eat(b'^') {
            let exponent = self.factor()?; // right-associative
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::Negate(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.error(format!("unexpected character '{}'", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // not an exponent after all (e.g. "2*exp(x)" sliced oddly)
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let value: f64 = text.parse().map_err(|_| ParseError {
            position: start,
            message: format!("invalid number literal '{text}'"),
        })?;
        self.skip_ws();
        Ok(Expr::Number(value))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii letters");
        self.skip_ws();
        let var = match name {
            "t" => Some(Var::T),
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "z" => Some(Var::Z),
            "u" => Some(Var::U),
            _ => None,
        };
        if let Some(v) = var {
            return Ok(Expr::Variable(v));
        }
        let func = match name {
            "abs" => Some(Func::Abs),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            _ => None,
        };
        match func {
            Some(f) => {
                if !self.eat(b'(') {
                    return Err(self.error(format!("expected '(' after '{name}'")));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(Expr::Call(f, Box::new(arg)))
            }
            None => Err(ParseError {
                position: start,
                message: format!("unknown identifier '{name}'"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, x: &[f64]) -> f64 {
        parse(src).unwrap().eval(&Bindings { t: 0.0, x, u: 0.0 })
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("2+3*4", &[]), 14.0);
        assert_eq!(eval("(2+3)*4", &[]), 20.0);
        assert_eq!(eval("2^3^2", &[]), 512.0); // right-assoc
        assert_eq!(eval("-2^2", &[]), -4.0); // power binds tighter
        assert_eq!(eval("6/3/2", &[]), 1.0); // left-assoc
        assert_eq!(eval("x^-0.5", &[4.0]), 0.5);
    }

    #[test]
    fn variables_and_functions() {
        assert_eq!(eval("x + 2*y - z", &[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(eval("abs(-3)", &[]), 3.0);
        assert!((eval("sin(x)^2 + cos(x)^2", &[0.77]) - 1.0).abs() < 1e-15);
        assert!((eval("exp(1)", &[]) - std::f64::consts::E).abs() < 1e-15);
        let b = Bindings {
            t: 2.0,
            x: &[0.0],
            u: 5.0,
        };
        assert_eq!(parse("t*u").unwrap().eval(&b), 10.0);
    }

    #[test]
    fn scientific_notation() {
        assert_eq!(eval("1.5e2", &[]), 150.0);
        assert_eq!(eval("2e-3", &[]), 0.002);
        // 'e' followed by a non-digit is not an exponent, and there is no
        // implicit multiplication
        assert!(parse("2exp(0)").is_err());
        assert_eq!(eval("2*exp(0)", &[]), 2.0);
    }

    #[test]
    fn error_positions() {
        let e = parse("2*+3").unwrap_err();
        assert_eq!(e.position, 2);
        let e = parse("sin x").unwrap_err();
        assert!(e.message.contains("expected '('"));
        let e = parse("1 + foo").unwrap_err();
        assert_eq!(e.position, 4);
        assert!(parse("").is_err());
        assert!(parse("(1+2").is_err());
    }

    #[test]
    fn axis_usage() {
        let e = parse("x + z").unwrap();
        assert_eq!(e.max_axis(), Some(2));
        assert!(!e.uses(Var::U));
        assert_eq!(parse("42").unwrap().max_axis(), None);
    }
}
