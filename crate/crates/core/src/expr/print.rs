use std::fmt::{self, Write};

use super::{BinOp, Expr, Func};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const POWER: u8 = 3;
const UNARY: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if *c < 0.0 => UNARY,
        Expr::Const(_) | Expr::Var(_) | Expr::Call(..) => ATOM,
        Expr::Unary(Func::Neg, _) => UNARY,
        Expr::Unary(..) => ATOM,
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => SUM,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => PRODUCT,
        Expr::Binary(BinOp::Pow, ..) => POWER,
    }
}

pub(crate) fn format_number(c: f64) -> String {
    if c == 0.0 {
        return "0".into();
    }
    let a = c.abs();
    if (1e-5..1e16).contains(&a) {
        format!("{c}")
    } else {
        format!("{c:e}")
    }
}

fn write_child(f: &mut impl Write, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        f.write_char('(')?;
        write_expr(f, e)?;
        f.write_char(')')
    } else {
        write_expr(f, e)
    }
}

fn write_expr(f: &mut impl Write, e: &Expr) -> fmt::Result {
    match e {
        Expr::Const(c) => f.write_str(&format_number(*c)),
        Expr::Var(v) => f.write_str(v),
        Expr::Call(func, arg) => {
            write!(f, "{}(", func.label())?;
            write_expr(f, arg)?;
            f.write_char(')')
        }
        Expr::Unary(Func::Neg, a) => {
            f.write_char('-')?;
            write_child(f, a, UNARY)
        }
        Expr::Unary(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a)?;
            f.write_char(')')
        }
        Expr::Binary(op, a, b) => {
            let (sym, left, right) = match op {
                BinOp::Add => (" + ", SUM, PRODUCT),
                BinOp::Sub => (" - ", SUM, PRODUCT),
                BinOp::Mul => ("*", PRODUCT, POWER),
                BinOp::Div => ("/", PRODUCT, POWER),
                // negative bases are parenthesized for readability even
                // though the grammar would not require it
                BinOp::Pow => ("^", ATOM, POWER),
            };
            write_child(f, a, left)?;
            f.write_str(sym)?;
            write_child(f, b, right)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}
