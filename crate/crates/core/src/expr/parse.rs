//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := unary ("^" factor)?
//! unary  := "-" unary | atom
//! atom   := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! Unary minus binds tighter than `^`, so `-x^2` reads as `(-x)^2`.

use super::{BinOp, Expr, Func};
use crate::error::{Error, Result};

pub const RESERVED_FUNCTIONS: [&str; 9] =
    ["exp", "log", "sin", "cos", "tan", "cot", "sqrt", "abs", "sign"];

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
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next()?;
            let end = tok == Tok::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn next(&mut self) -> Result<(Tok, usize)> {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok((Tok::End, start));
        };
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = simple {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                self.pos += 1;
            }
            return Ok((Tok::Ident(self.src[start..self.pos].to_string()), start));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(Error::Syntax {
            offset: start,
            message: format!("unexpected character `{ch}`"),
        })
    }

    fn digits(&mut self) -> usize {
        let s = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.pos - s
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize)> {
        let mut n = self.digits();
        if self.peek() == Some(b'.') {
            self.pos += 1;
            n += self.digits();
        }
        if n == 0 {
            return Err(Error::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                // `2e` is not an exponent; leave `e` for the identifier lexer.
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        let v: f64 = text.parse().map_err(|_| Error::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        Ok((Tok::Num(v), start))
    }
}

struct Parser<'v> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'v [&'v str],
}

/// Parse `text`; every identifier that is not a reserved function must be one
/// of `variables`.
pub fn parse(text: &str, variables: &[&str]) -> Result<Expr> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        vars: variables,
    };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        Tok::Ident(name) if RESERVED_FUNCTIONS.contains(&name.as_str()) || variables.contains(&name.as_str()) => {
            Err(p.error("juxtaposition is not multiplication; insert `*`"))
        }
        Tok::Num(_) | Tok::LParen => Err(p.error("juxtaposition is not multiplication; insert `*`")),
        _ => Err(p.error("unexpected token")),
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.offset(),
            message: message.to_string(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.unary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.factor()?;
            return Ok(Expr::binary(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::unary(Func::Neg, inner));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return Err(Error::Syntax {
                            offset: self.offset(),
                            message: format!("function `{name}` requires a parenthesized argument"),
                        });
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Expr::unary(f, arg));
                }
                if *self.peek() == Tok::LParen {
                    return Err(Error::Syntax {
                        offset: at,
                        message: format!("`{name}` is not a function"),
                    });
                }
                if self.vars.contains(&name.as_str()) {
                    Ok(Expr::var(&name))
                } else {
                    Err(Error::UnknownIdentifier { name, offset: at })
                }
            }
            Tok::End => Err(Error::Syntax {
                offset: at,
                message: "unexpected end of input".into(),
            }),
            _ => Err(Error::Syntax {
                offset: at,
                message: "expected a number, identifier or `(`".into(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    #[test]
    fn two_over_x() {
        let e = parse("2/x", &["x"]).unwrap();
        assert_eq!(e, Expr::binary(BinOp::Div, c(2.0), Expr::var("x")));
    }

    #[test]
    fn named_constant_in_power() {
        let e = parse("omega^2/x^3", &["x", "omega"]).unwrap();
        let expected = Expr::binary(
            BinOp::Div,
            Expr::binary(BinOp::Pow, Expr::var("omega"), c(2.0)),
            Expr::binary(BinOp::Pow, Expr::var("x"), c(3.0)),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn juxtaposition_rejected() {
        assert!(matches!(parse("sin x cos x", &["x"]), Err(Error::Syntax { .. })));
        assert!(matches!(
            parse("sin(x) cos(x)", &["x"]),
            Err(Error::Syntax { offset: 7, .. })
        ));
        assert!(matches!(parse("2 x", &["x"]), Err(Error::Syntax { offset: 2, .. })));
    }

    #[test]
    fn unknown_identifier() {
        assert_eq!(
            parse("x + y", &["x"]),
            Err(Error::UnknownIdentifier {
                name: "y".into(),
                offset: 4
            })
        );
        assert!(matches!(parse("foo(x)", &["x"]), Err(Error::Syntax { .. })));
    }

    #[test]
    fn precedence_and_associativity() {
        // unary minus binds tighter than ^
        let e = parse("-x^2", &["x"]).unwrap();
        assert_eq!(
            e,
            Expr::binary(BinOp::Pow, Expr::unary(Func::Neg, Expr::var("x")), c(2.0))
        );
        // ^ is right associative
        let e = parse("2^3^2", &[]).unwrap();
        assert_eq!(
            e,
            Expr::binary(BinOp::Pow, c(2.0), Expr::binary(BinOp::Pow, c(3.0), c(2.0)))
        );
        // - is left associative
        let e = parse("1-2-3", &[]).unwrap();
        assert_eq!(
            e,
            Expr::binary(BinOp::Sub, Expr::binary(BinOp::Sub, c(1.0), c(2.0)), c(3.0))
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(parse("1.5e-3", &[]).unwrap(), c(1.5e-3));
        assert_eq!(parse(".25", &[]).unwrap(), c(0.25));
        assert_eq!(parse("3.", &[]).unwrap(), c(3.0));
        assert_eq!(parse("2E+2", &[]).unwrap(), c(200.0));
        assert!(parse(".", &[]).is_err());
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(
            parse("(x + 1", &["x"]),
            Err(Error::Syntax {
                offset: 6,
                message: "expected `)`".into()
            })
        );
        assert!(matches!(parse("x $ 1", &["x"]), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse("", &[]), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(parse("sin", &[]), Err(Error::Syntax { offset: 3, .. })));
    }
}
