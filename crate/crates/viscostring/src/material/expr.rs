//! Tiny expression grammar for analytic config inputs.
//!
//! Grammar: constants, one free variable (`t` or `xi`), `pi`, the binary
//! operators `+ - * / ^`, `pow(a,b)`, and the functions `sin cos exp log`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var => x,
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Neg(a) => -a.eval(x),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Log(a) => a.eval(x).ln(),
        }
    }
}

/// Parse `src` with `var` as the only allowed free variable name.
pub fn parse(src: &str, var: &str) -> Result<Expr> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        var: var.to_string(),
        src: src.to_string(),
    };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(Error::Parse(format!(
            "trailing input in expression `{}`",
            src
        )));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1;
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || chars[i] == '.'
                        || chars[i] == 'e'
                        || chars[i] == 'E'
                        || ((chars[i] == '+' || chars[i] == '-')
                            && i > start
                            && (chars[i - 1] == 'e' || chars[i - 1] == 'E')))
                {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let v = s
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number `{}` in `{}`", s, src)))?;
                out.push(Tok::Num(v));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            _ => {
                return Err(Error::Parse(format!(
                    "unexpected character `{}` in expression `{}`",
                    c, src
                )))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
    var: String,
    src: String,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.bump() {
            Some(got) if got == t => Ok(()),
            other => Err(Error::Parse(format!(
                "expected {:?}, got {:?} in `{}`",
                t, other, self.src
            ))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.pos += 1;
            // right associative
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if name == self.var {
                    return Ok(Expr::Var);
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "sin" | "cos" | "exp" | "log" => {
                        self.expect(Tok::LParen)?;
                        let arg = self.expr()?;
                        self.expect(Tok::RParen)?;
                        Ok(match name.as_str() {
                            "sin" => Expr::Sin(Box::new(arg)),
                            "cos" => Expr::Cos(Box::new(arg)),
                            "exp" => Expr::Exp(Box::new(arg)),
                            _ => Expr::Log(Box::new(arg)),
                        })
                    }
                    "pow" => {
                        self.expect(Tok::LParen)?;
                        let a = self.expr()?;
                        self.expect(Tok::Comma)?;
                        let b = self.expr()?;
                        self.expect(Tok::RParen)?;
                        Ok(Expr::Pow(Box::new(a), Box::new(b)))
                    }
                    other => Err(Error::Parse(format!(
                        "unknown identifier `{}` in `{}` (variable here is `{}`)",
                        other, self.src, self.var
                    ))),
                }
            }
            other => Err(Error::Parse(format!(
                "unexpected token {:?} in `{}`",
                other, self.src
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_functions() {
        let e = parse("1 + 0.3*sin(t)", "t").unwrap();
        let v = e.eval(0.7);
        assert!((v - (1.0 + 0.3 * 0.7f64.sin())).abs() < 1e-15);

        let e = parse("pow(1+t, 2)", "t").unwrap();
        assert!((e.eval(2.0) - 9.0).abs() < 1e-15);

        let e = parse("(1+0.2*cos(2*xi))^-2", "xi").unwrap();
        let x = 0.3;
        assert!((e.eval(x) - (1.0 + 0.2 * (2.0 * x).cos()).powi(-2)).abs() < 1e-15);

        let e = parse("exp(-0.5*t)*-0.5", "t").unwrap();
        assert!((e.eval(1.0) + 0.5 * (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_variable() {
        assert!(parse("1 + y", "t").is_err());
        assert!(parse("xi", "t").is_err());
        assert!(parse("sin(", "t").is_err());
        assert!(parse("1 2", "t").is_err());
    }
}
