//! Light, local simplification: constant folding, x+0, x·1, 0·x, x^0, x^1,
//! x/1, 0−x and double negation. Nothing else; equality of expressions is
//! judged by sampling, never by canonical form.

use std::sync::Arc;

use super::eval::{apply_binary, apply_unary};
use super::{BinOp, Expr, Func};

pub fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Binary(op, a, b) => fold_binary(*op, simplify(a), simplify(b)),
        Expr::Unary(f, a) => fold_unary(*f, simplify(a)),
        Expr::Call(f, a) => Expr::Call(f.clone(), Arc::new(simplify(a))),
    }
}

pub(crate) fn fold_binary(op: BinOp, a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if let Ok(v) = apply_binary(op, x, y) {
            if v.is_finite() {
                return Expr::Const(v);
            }
        }
    }
    match op {
        BinOp::Add => {
            if a.is_const(0.0) {
                return b;
            }
            if b.is_const(0.0) {
                return a;
            }
        }
        BinOp::Sub => {
            if b.is_const(0.0) {
                return a;
            }
            if a.is_const(0.0) {
                return fold_unary(Func::Neg, b);
            }
        }
        BinOp::Mul => {
            if a.is_const(0.0) || b.is_const(0.0) {
                return Expr::zero();
            }
            if a.is_const(1.0) {
                return b;
            }
            if b.is_const(1.0) {
                return a;
            }
        }
        BinOp::Div => {
            if b.is_const(1.0) {
                return a;
            }
        }
        BinOp::Pow => {
            if b.is_const(0.0) {
                return Expr::one();
            }
            if b.is_const(1.0) {
                return a;
            }
        }
    }
    Expr::binary(op, a, b)
}

pub(crate) fn fold_unary(f: Func, a: Expr) -> Expr {
    if let Some(x) = a.as_const() {
        if let Ok(v) = apply_unary(f, x) {
            if v.is_finite() {
                return Expr::Const(v);
            }
        }
    }
    if f == Func::Neg {
        if let Expr::Unary(Func::Neg, inner) = &a {
            return (**inner).clone();
        }
    }
    Expr::unary(f, a)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn simp(src: &str) -> String {
        simplify(&parse(src, &["x", "y"]).unwrap()).to_string()
    }

    #[test]
    fn neutral_elements() {
        assert_eq!(simp("1*x + 0"), "x");
        assert_eq!(simp("x^0"), "1");
        assert_eq!(simp("(2*3)/x"), "6/x");
        assert_eq!(simp("0*sin(x) + y"), "y");
        assert_eq!(simp("x^1/1"), "x");
        assert_eq!(simp("--x"), "x");
        assert_eq!(simp("0 - x"), "-x");
    }

    #[test]
    fn does_not_fold_undefined_constants() {
        assert_eq!(simp("1/0"), "1/0");
        assert_eq!(simp("log(-1)"), "log(-1)");
    }

    #[test]
    fn no_aggressive_rewriting() {
        assert_eq!(simp("x + x"), "x + x");
        assert_eq!(simp("x*y/y"), "x*y/y");
    }
}
