//! Attribute expressions: arithmetic over relation counts.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor ("*" factor)*
//! factor := NUMBER | "count(" IDENT ")" | "(" expr ")"
//! ```

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Count(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.offset, self.message)
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ExprError> {
        let mut p = Parser { src: text, pos: 0 };
        let expr = p.expr()?;
        p.skip_ws();
        if p.pos < text.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(expr)
    }

    /// Relation labels referenced by `count(...)` terms, in order of appearance.
    pub fn labels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Number(_) => {}
            Expr::Count(label) => out.push(label),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_labels(out);
                b.collect_labels(out);
            }
        }
    }

    pub fn eval(&self, count: &dyn Fn(&str) -> f64) -> f64 {
        match self {
            Expr::Number(n) => *n,
            Expr::Count(label) => count(label),
            Expr::Add(a, b) => a.eval(count) + b.eval(count),
            Expr::Sub(a, b) => a.eval(count) - b.eval(count),
            Expr::Mul(a, b) => a.eval(count) * b.eval(count),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ExprError {
        ExprError {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
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
        let mut lhs = self.factor()?;
        while self.eat('*') {
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => self.number(),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            Some(_) if self.src[self.pos..].starts_with("count") => {
                self.pos += "count".len();
                if !self.eat('(') {
                    return Err(self.error("expected '(' after count"));
                }
                self.skip_ws();
                let ident = self.ident()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')' after relation name"));
                }
                Ok(Expr::Count(ident))
            }
            Some(_) => Err(self.error("expected a number, count(...) or '('")),
            None => Err(self.error("unexpected end of expression")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < bytes.len() && bytes[self.pos] == b'.' {
            self.pos += 1;
            let frac = self.pos;
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == frac {
                return Err(self.error("expected digits after '.'"));
            }
        }
        self.src[start..self.pos]
            .parse()
            .map(Expr::Number)
            .map_err(|_| ExprError {
                offset: start,
                message: "invalid number".to_string(),
            })
    }

    fn ident(&mut self) -> Result<String, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        if !(self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphabetic() || bytes[self.pos] == b'_')) {
            return Err(self.error("expected a relation name"));
        }
        while self.pos < bytes.len()
            && (bytes[self.pos].is_ascii_alphanumeric() || matches!(bytes[self.pos], b'_' | b'-'))
        {
            self.pos += 1;
        }
        Ok(self.src[start..self.pos].to_string())
    }
}
