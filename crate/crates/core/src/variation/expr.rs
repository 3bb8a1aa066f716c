//! Arithmetic expressions over named variables.
//!
//! Grammar (whitespace-insensitive, left-associative):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | identifier | '(' expr ')'
//! ```
//!
//! The identifier `pi` evaluates to π unless a variable of that name is bound.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("syntax error at offset {position} near '{token}': {message}")]
pub struct ParseError {
    /// Byte offset into the source.
    pub position: usize,
    pub token: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable \"{0}\"")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "{v}"),
            Tok::Ident(s) => f.write_str(s),
            Tok::Op(c) => write!(f, "{c}"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn error(&self, position: usize, token: &str, message: &str) -> ParseError {
        ParseError {
            position,
            token: token.to_string(),
            message: message.to_string(),
        }
    }

    /// Returns the next token and its byte offset.
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut exp = end + 1;
                if exp < bytes.len() && (bytes[exp] == b'+' || bytes[exp] == b'-') {
                    exp += 1;
                }
                if exp < bytes.len() && bytes[exp].is_ascii_digit() {
                    while exp < bytes.len() && bytes[exp].is_ascii_digit() {
                        exp += 1;
                    }
                    end = exp;
                }
            }
            let text = &self.src[start..end];
            self.pos = end;
            return text
                .parse::<f64>()
                .map(|v| (Tok::Num(v), start))
                .map_err(|_| self.error(start, text, "malformed number"));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        if matches!(c, b'+' | b'-' | b'*' | b'/' | b'(' | b')') {
            self.pos += 1;
            return Ok((Tok::Op(c as char), start));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(self.error(start, ch.encode_utf8(&mut [0; 4]), "unexpected character"))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (t, at) = self.lexer.next()?;
        self.tok = t;
        self.at = at;
        Ok(())
    }

    fn unexpected(&self, message: &str) -> ParseError {
        ParseError {
            position: self.at,
            token: self.tok.to_string(),
            message: message.to_string(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = self.tok {
            self.bump()?;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = self.tok {
            self.bump()?;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Op('-') {
            self.bump()?;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match core::mem::replace(&mut self.tok, Tok::End) {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                self.bump()?;
                Ok(Expr::Var(name))
            }
            Tok::Op('(') => {
                self.bump()?;
                let inner = self.expr()?;
                if self.tok != Tok::Op(')') {
                    return Err(self.unexpected("expected ')'"));
                }
                self.bump()?;
                Ok(inner)
            }
            other => {
                self.tok = other;
                Err(self.unexpected("expected a number, identifier or '('"))
            }
        }
    }
}

pub fn parse_expression(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        lexer: Lexer { src, pos: 0 },
        tok: Tok::End,
        at: 0,
    };
    p.bump()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected("unexpected trailing input"));
    }
    Ok(e)
}

impl Expr {
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(name) => match lookup(name) {
                Some(v) => v,
                None if name == "pi" => core::f64::consts::PI,
                None => return Err(EvalError::Unbound(name.clone())),
            },
            Expr::Neg(e) => -e.eval(lookup)?,
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(lookup)?, b.eval(lookup)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div if y == 0.0 => return Err(EvalError::DivisionByZero),
                    BinOp::Div => x / y,
                }
            }
        })
    }

    /// Referenced identifiers, excluding the `pi` constant.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out.remove("pi");
        out
    }

    fn collect(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(n) => {
                out.insert(n.clone());
            }
            Expr::Neg(e) => e.collect(out),
            Expr::Bin(_, a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    /// Value of a variable-free expression.
    pub fn constant(&self) -> Result<f64, EvalError> {
        self.eval(&|_| None)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(n) => f.write_str(n),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Bin(op, a, b) => {
                let c = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                };
                write!(f, "({a} {c} {b})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;
    use alloc::string::ToString;

    fn eval_with(src: &str, vars: &[(&str, f64)]) -> f64 {
        let map: BTreeMap<&str, f64> = vars.iter().copied().collect();
        parse_expression(src).unwrap().eval(&|n| map.get(n).copied()).unwrap()
    }

    #[test]
    fn printed_dependency_string() {
        let v = eval_with(
            "kS1/2 * lS1+kA * lA+kS2 * lS2",
            &[("kS1", 2.0), ("lS1", 3.0), ("kA", 1.0), ("lA", 4.0), ("kS2", 2.0), ("lS2", 5.0)],
        );
        assert_eq!(v, 17.0);
    }

    #[test]
    fn identity_and_precedence() {
        assert_eq!(eval_with("a", &[("a", 7.0)]), 7.0);
        assert_eq!(eval_with("1 - 2 - 3", &[]), -4.0);
        assert_eq!(eval_with("8 / 4 / 2", &[]), 1.0);
        assert_eq!(eval_with("2 + 3 * 4", &[]), 14.0);
        assert_eq!(eval_with("(2 + 3) * 4", &[]), 20.0);
        assert_eq!(eval_with("-2 * -3", &[]), 6.0);
        assert_eq!(eval_with("1.5e2 + .5", &[]), 150.5);
        assert_eq!(eval_with("pi / 2", &[]), core::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse_expression("1 + * 2").unwrap_err();
        assert_eq!(e.position, 4);
        assert_eq!(e.token, "*");
        let e = parse_expression("(a + b").unwrap_err();
        assert_eq!(e.token, "end of input");
        let e = parse_expression("a b").unwrap_err();
        assert_eq!((e.position, e.token.as_str()), (2, "b"));
        assert!(parse_expression("a $ b").is_err());
        assert!(parse_expression("").is_err());
    }

    #[test]
    fn unbound_and_division() {
        let e = parse_expression("x + 1").unwrap();
        assert_eq!(e.constant(), Err(EvalError::Unbound("x".to_string())));
        assert_eq!(parse_expression("1/0").unwrap().constant(), Err(EvalError::DivisionByZero));
        let vars = parse_expression("a * (b + pi) - a").unwrap().variables();
        assert_eq!(vars.into_iter().collect::<alloc::vec::Vec<_>>(), ["a", "b"]);
    }
}
