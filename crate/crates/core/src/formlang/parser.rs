//! Tokenizer and recursive-descent parser.
//!
//! ```text
//! file      := (statement NEWLINE)*
//! statement := NAME '=' sum
//! sum       := product (('+' | '-') product)*
//! product   := unary (('*' | '/') unary)*
//! unary     := '-' unary | power
//! power     := postfix ('**' unary)?
//! postfix   := primary ('[' sum (',' sum)* ']' | '.dx' '(' sum ')')*
//! primary   := NUMBER | STRING | NAME | NAME '(' args? ')' | '(' sum ')'
//! ```
//!
//! Newlines inside brackets are ignored; `#` starts a comment.

use std::collections::HashMap;

use super::ast::{BinOp, Expr, ExprKind, FormAst, Span, Statement};
use super::FormError;

/// Names usable without a declaration.
pub const BUILTIN_NAMES: &[&str] = &["dx", "ds", "dS", "i", "j", "k", "l"];

/// Callables provided by the language.
pub const BUILTIN_FUNCTIONS: &[&str] = &[
    "FiniteElement",
    "VectorElement",
    "TestFunction",
    "TrialFunction",
    "Function",
    "Coefficient",
    "Index",
    "grad",
    "div",
    "dot",
    "inner",
    "pos",
    "neg",
    "jump",
    "avg",
    "dx",
    "ds",
    "dS",
];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    Number(f64),
    Str(String),
    Punct(&'static str),
    Newline,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Name(n) => format!("'{n}'"),
            Tok::Number(x) => format!("number {x}"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Punct(p) => format!("'{p}'"),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

const PUNCT: &[&str] = &["**", "=", "+", "-", "*", "/", "(", ")", "[", "]", ",", "."];

fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, FormError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let mut depth = 0usize;
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c == '\n' {
            if depth == 0 {
                out.push((Tok::Newline, span));
            }
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            out.push((Tok::Name(word), span));
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
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
            let value = text
                .parse::<f64>()
                .map_err(|_| FormError::Syntax { span, message: format!("malformed number '{text}'") })?;
            col += i - start;
            out.push((Tok::Number(value), span));
            continue;
        }
        if c == '"' || c == '\'' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != c && chars[j] != '\n' {
                j += 1;
            }
            if j >= chars.len() || chars[j] != c {
                return Err(FormError::Syntax { span, message: "unterminated string".into() });
            }
            let s: String = chars[start..j].iter().collect();
            col += j + 1 - i;
            i = j + 1;
            out.push((Tok::Str(s), span));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let Some(p) = PUNCT.iter().find(|p| rest.starts_with(**p)) else {
            return Err(FormError::Syntax { span, message: format!("unexpected character '{c}'") });
        };
        match *p {
            "(" | "[" => depth += 1,
            ")" | "]" => depth = depth.saturating_sub(1),
            _ => {}
        }
        i += p.len();
        col += p.len();
        out.push((Tok::Punct(p), span));
    }
    out.push((Tok::Newline, Span { line, col }));
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Tok::Punct(q) if *q == p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &str) -> FormError {
        FormError::Syntax {
            span: self.span(),
            message: format!("expected {expected}, found {}", self.peek().describe()),
        }
    }

    fn expect(&mut self, p: &str) -> Result<(), FormError> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.error(&format!("'{p}'")))
        }
    }

    fn file(&mut self) -> Result<FormAst, FormError> {
        let mut statements = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Newline => {
                    self.bump();
                }
                Tok::Name(_) => {
                    let (Tok::Name(name), span) = self.bump() else { unreachable!() };
                    self.expect("=")?;
                    let value = self.sum()?;
                    if !matches!(self.peek(), Tok::Newline | Tok::Eof) {
                        return Err(self.error("an operator or end of line"));
                    }
                    statements.push(Statement { name, span, value });
                }
                _ => return Err(self.error("a statement 'name = expression'")),
            }
        }
        Ok(FormAst { statements })
    }

    fn sum(&mut self) -> Result<Expr, FormError> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat("+") {
                BinOp::Add
            } else if self.eat("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.operand(op)?;
            let span = lhs.span;
            lhs = Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span);
        }
    }

    fn product(&mut self) -> Result<Expr, FormError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat("*") {
                BinOp::Mul
            } else if self.eat("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.operand(op)?;
            let span = lhs.span;
            lhs = Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span);
        }
    }

    /// Right operand of a binary operator, with a targeted message when the
    /// line ends early (typically a missing measure after `*`).
    fn operand(&mut self, op: BinOp) -> Result<Expr, FormError> {
        if matches!(self.peek(), Tok::Newline | Tok::Eof) {
            let what = if op == BinOp::Mul {
                "an operand after '*' (an expression or a measure dx, ds, dS)".to_string()
            } else {
                format!("an operand after '{}'", op.symbol())
            };
            return Err(self.error(&what));
        }
        match op {
            BinOp::Add | BinOp::Sub => self.product(),
            _ => self.unary(),
        }
    }

    fn unary(&mut self) -> Result<Expr, FormError> {
        let span = self.span();
        if self.eat("-") {
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Neg(Box::new(e)), span));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, FormError> {
        let base = self.postfix()?;
        if self.eat("**") {
            let exp = self.operand(BinOp::Pow)?;
            let span = base.span;
            return Ok(Expr::new(ExprKind::Binary { op: BinOp::Pow, lhs: Box::new(base), rhs: Box::new(exp) }, span));
        }
        Ok(base)
    }

    fn postfix(&mut self) -> Result<Expr, FormError> {
        let mut e = self.primary()?;
        loop {
            if self.eat("[") {
                let mut indices = vec![self.sum()?];
                while self.eat(",") {
                    indices.push(self.sum()?);
                }
                self.expect("]")?;
                let span = e.span;
                e = Expr::new(ExprKind::Index { base: Box::new(e), indices }, span);
            } else if self.eat(".") {
                let span = self.span();
                match self.bump().0 {
                    Tok::Name(m) if m == "dx" => {}
                    other => {
                        return Err(FormError::Syntax {
                            span,
                            message: format!("expected 'dx' after '.', found {}", other.describe()),
                        })
                    }
                }
                self.expect("(")?;
                let direction = self.sum()?;
                self.expect(")")?;
                let span = e.span;
                e = Expr::new(ExprKind::Derivative { base: Box::new(e), direction: Box::new(direction) }, span);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, FormError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Number(x) => {
                self.bump();
                Ok(Expr::new(ExprKind::Number(x), span))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::new(ExprKind::Str(s), span))
            }
            Tok::Name(n) => {
                self.bump();
                if self.eat("(") {
                    let mut args = Vec::new();
                    if !self.eat(")") {
                        args.push(self.sum()?);
                        while self.eat(",") {
                            args.push(self.sum()?);
                        }
                        self.expect(")")?;
                    }
                    Ok(Expr::new(ExprKind::Call { func: n, args }, span))
                } else {
                    Ok(Expr::new(ExprKind::Name(n), span))
                }
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.sum()?;
                self.expect(")")?;
                Ok(e)
            }
            _ => Err(self.error("an expression")),
        }
    }
}

/// Parses a form file and checks that every name is declared before use and
/// declared only once.
pub fn parse(src: &str) -> Result<FormAst, FormError> {
    let toks = tokenize(src)?;
    let ast = Parser { toks, pos: 0 }.file()?;
    let mut declared: HashMap<&str, Span> = HashMap::new();
    for s in &ast.statements {
        let mut unknown = None;
        s.value.visit_names(&mut |n, span| {
            let known = declared.contains_key(n) || BUILTIN_NAMES.contains(&n) || BUILTIN_FUNCTIONS.contains(&n);
            if !known && unknown.is_none() {
                unknown = Some((n.to_string(), span));
            }
        });
        if let Some((name, span)) = unknown {
            return Err(FormError::UnknownIdentifier { name, span });
        }
        if let Some(&previous) = declared.get(s.name.as_str()) {
            return Err(FormError::Redeclaration { name: s.name.clone(), span: s.span, previous });
        }
        if BUILTIN_FUNCTIONS.contains(&s.name.as_str()) {
            return Err(FormError::Redeclaration { name: s.name.clone(), span: s.span, previous: Span::default() });
        }
        declared.insert(&s.name, s.span);
    }
    Ok(ast)
}
