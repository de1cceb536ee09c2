//! Arithmetic in `x[0]`, `x[1]`, `x[2]` for analytic coefficients.
//!
//! Supports numbers, `pi`, `sin`, `cos`, `exp`, `+ - * / ^` and parentheses.
//! `^` binds tighter than unary minus and associates to the right.

use formfem::element::PhysicalFunction;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("column {column}: {message}")]
pub struct ExprError {
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(f64),
    Coordinate(usize),
    Neg(Box<Expr>),
    Binary(char, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Number(v) => *v,
            Expr::Coordinate(i) => x[*i],
            Expr::Neg(e) => -e.eval(x),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => a.powf(b),
                }
            }
            Expr::Call(f, e) => {
                let v = e.eval(x);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                }
            }
        }
    }

    /// Largest coordinate index used, if any.
    pub fn max_coordinate(&self) -> Option<usize> {
        match self {
            Expr::Number(_) => None,
            Expr::Coordinate(i) => Some(*i),
            Expr::Neg(e) | Expr::Call(_, e) => e.max_coordinate(),
            Expr::Binary(_, a, b) => a.max_coordinate().max(b.max_coordinate()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError { column: self.pos + 1, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected '{}'", c as char))
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            lhs = Expr::Binary(c as char, Box::new(lhs), Box::new(self.product()?));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            lhs = Expr::Binary(c as char, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            return Ok(Expr::Binary('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit() || *c == b'.') {
            self.pos += 1;
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        match text.parse() {
            Ok(v) => Ok(Expr::Number(v)),
            Err(_) => {
                self.pos = start;
                self.error(format!("bad number '{text}'"))
            }
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.src.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
                match name {
                    "pi" => Ok(Expr::Number(std::f64::consts::PI)),
                    "x" => {
                        self.expect(b'[')?;
                        let at = self.pos;
                        let Expr::Number(v) = self.number()? else { unreachable!() };
                        if v.fract() != 0.0 || !(0.0..3.0).contains(&v) {
                            self.pos = at;
                            return self.error("coordinate index must be 0, 1 or 2");
                        }
                        self.expect(b']')?;
                        Ok(Expr::Coordinate(v as usize))
                    }
                    "sin" | "cos" | "exp" => {
                        let f = match name {
                            "sin" => Func::Sin,
                            "cos" => Func::Cos,
                            _ => Func::Exp,
                        };
                        self.expect(b'(')?;
                        let e = self.sum()?;
                        self.expect(b')')?;
                        Ok(Expr::Call(f, Box::new(e)))
                    }
                    _ => {
                        self.pos = start;
                        self.error(format!("unknown name '{name}'"))
                    }
                }
            }
            Some(c) => self.error(format!("unexpected '{}'", c as char)),
            None => self.error("unexpected end of expression"),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, ExprError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let e = p.sum()?;
    if p.peek().is_some() {
        return p.error("trailing input");
    }
    Ok(e)
}

/// Component expressions evaluated at physical points.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprFunction(pub Vec<Expr>);

impl PhysicalFunction for ExprFunction {
    fn value_size(&self) -> usize {
        self.0.len()
    }

    fn evaluate(&self, x: &[f64], values: &mut [f64]) {
        for (v, e) in values.iter_mut().zip(&self.0) {
            *v = e.eval(x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, x: &[f64]) -> f64 {
        parse_expr(src).unwrap().eval(x)
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("1 + 2*3", &[]), 7.0);
        assert_eq!(eval("-2^2", &[]), -4.0);
        assert_eq!(eval("2^3^2", &[]), 512.0);
        assert_eq!(eval("(1+2)*3 - 4/2", &[]), 7.0);
        assert_eq!(eval("1e-1 * 10", &[]), 1.0);
    }

    #[test]
    fn coordinates_and_functions() {
        let v = eval("2*pi^2*sin(pi*x[0])*sin(pi*x[1])", &[0.5, 0.5]);
        assert!((v - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
        assert_eq!(eval("exp(0) + cos(0) + x[2]", &[0.0, 0.0, 3.0]), 5.0);
        assert_eq!(parse_expr("x[1] + x[0]").unwrap().max_coordinate(), Some(1));
    }

    #[test]
    fn errors() {
        for bad in ["", "1 +", "tan(x[0])", "x[3]", "x[0", "sin x", "2 3", "y"] {
            assert!(parse_expr(bad).is_err(), "{bad}");
        }
        assert_eq!(parse_expr("1 + y").unwrap_err().column, 5);
    }
}
