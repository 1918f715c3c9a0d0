//! Symbolic expressions over named real variables.
//!
//! An [`Expr`] is an immutable tree. Besides the usual arithmetic and
//! elementary functions it has one opaque node, [`Expr::Call`], that applies a
//! numerically realized one-variable function (a quadrature antiderivative or
//! a monotone inverse). Such functions know their own derivative, so
//! [`differentiate`] remains exact across them.

mod diff;
mod eval;
mod parse;
mod print;
mod scalar;
mod simplify;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub use diff::differentiate;
pub use eval::{Compiled, Env};
pub use parse::{parse, RESERVED_FUNCTIONS};
pub use scalar::ScalarFunction;
pub use simplify::simplify;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Neg,
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Cot,
    Sqrt,
    Abs,
    Sign,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Neg => "-",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Cot => "cot",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "cot" => Func::Cot,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            _ => return None,
        })
    }
}

/// A real function of one real variable realized numerically.
pub trait NumericFn: Send + Sync + fmt::Debug {
    /// Short label used when printing.
    fn label(&self) -> String;

    fn eval(&self, x: f64) -> Result<f64>;

    /// The derivative of `self` evaluated at `arg`, as an expression.
    fn derivative_at(&self, arg: &Expr) -> Expr;
}

#[derive(Debug, Clone)]
pub enum Expr {
    Const(f64),
    Var(Arc<str>),
    Binary(BinOp, Arc<Expr>, Arc<Expr>),
    Unary(Func, Arc<Expr>),
    Call(Arc<dyn NumericFn>, Arc<Expr>),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Expr::Const(a), Expr::Const(b)) => a.to_bits() == b.to_bits(),
            (Expr::Var(a), Expr::Var(b)) => a == b,
            (Expr::Binary(o1, a1, b1), Expr::Binary(o2, a2, b2)) => o1 == o2 && a1 == a2 && b1 == b2,
            (Expr::Unary(f1, a1), Expr::Unary(f2, a2)) => f1 == f2 && a1 == a2,
            (Expr::Call(f1, a1), Expr::Call(f2, a2)) => {
                std::ptr::addr_eq(Arc::as_ptr(f1), Arc::as_ptr(f2)) && a1 == a2
            }
            _ => false,
        }
    }
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(Arc::from(name))
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_const(&self, value: f64) -> bool {
        self.as_const() == Some(value)
    }

    // Raw constructors: no folding at all.

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Arc::new(a), Arc::new(b))
    }

    pub fn unary(f: Func, a: Expr) -> Expr {
        Expr::Unary(f, Arc::new(a))
    }

    pub fn call(f: Arc<dyn NumericFn>, arg: Expr) -> Expr {
        Expr::Call(f, Arc::new(arg))
    }

    // Folding constructors. These apply exactly the rules of [`simplify`]:
    // constant folding, x+0, x·1, 0·x, x^0, x^1, x/1 and double negation.

    pub fn add(a: Expr, b: Expr) -> Expr {
        simplify::fold_binary(BinOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        simplify::fold_binary(BinOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        simplify::fold_binary(BinOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        simplify::fold_binary(BinOp::Div, a, b)
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        simplify::fold_binary(BinOp::Pow, a, b)
    }

    pub fn neg(a: Expr) -> Expr {
        simplify::fold_unary(Func::Neg, a)
    }

    pub fn apply(f: Func, a: Expr) -> Expr {
        simplify::fold_unary(f, a)
    }

    pub fn powi(a: Expr, n: i32) -> Expr {
        Expr::pow(a, Expr::Const(n as f64))
    }

    /// Whether `name` occurs anywhere in the tree.
    pub fn depends_on(&self, name: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => &**v == name,
            Expr::Binary(_, a, b) => a.depends_on(name) || b.depends_on(name),
            Expr::Unary(_, a) | Expr::Call(_, a) => a.depends_on(name),
        }
    }

    /// The set of variable names referenced by the expression.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.to_string());
            }
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Unary(_, a) | Expr::Call(_, a) => a.collect_vars(out),
        }
    }

    /// True when the tree has no numerically realized nodes, so that its
    /// printed form parses back.
    pub fn is_closed_form(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => true,
            Expr::Binary(_, a, b) => a.is_closed_form() && b.is_closed_form(),
            Expr::Unary(_, a) => a.is_closed_form(),
            Expr::Call(..) => false,
        }
    }

    /// Replace every occurrence of the variable `name` by `with`.
    pub fn substitute(&self, name: &str, with: &Expr) -> Expr {
        if !self.depends_on(name) {
            return self.clone();
        }
        match self {
            Expr::Var(_) => with.clone(),
            Expr::Const(_) => self.clone(),
            Expr::Binary(op, a, b) => {
                simplify::fold_binary(*op, a.substitute(name, with), b.substitute(name, with))
            }
            Expr::Unary(f, a) => simplify::fold_unary(*f, a.substitute(name, with)),
            Expr::Call(f, a) => Expr::call(f.clone(), a.substitute(name, with)),
        }
    }

    /// Substitute numeric values for the given names (typically parameters).
    pub fn bind<'a, I>(&self, values: I) -> Expr
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        values
            .into_iter()
            .fold(self.clone(), |e, (name, v)| e.substitute(name, &Expr::Const(v)))
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
            Expr::Unary(_, a) | Expr::Call(_, a) => 1 + a.size(),
        }
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::Const(c)
    }
}

macro_rules! impl_op {
    ($tr:ident, $method:ident, $ctor:ident) => {
        impl std::ops::$tr for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(self, rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$tr<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$ctor(self, Expr::Const(rhs))
            }
        }
        impl std::ops::$tr<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(Expr::Const(self), rhs)
            }
        }
    };
}

impl_op!(Add, add, add);
impl_op!(Sub, sub, sub);
impl_op!(Mul, mul, mul);
impl_op!(Div, div, div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self.clone())
    }
}
