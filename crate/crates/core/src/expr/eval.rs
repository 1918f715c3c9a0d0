use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::{BinOp, Expr, Func, NumericFn};
use crate::error::{Error, Result};

/// Variable bindings for evaluation.
pub trait Env {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl<T: Env + ?Sized> Env for &T {
    fn lookup(&self, name: &str) -> Option<f64> {
        (**self).lookup(name)
    }
}

impl Env for HashMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Env for BTreeMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Env for [(&str, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }
}

impl<const N: usize> Env for [(&str, f64); N] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.as_slice().lookup(name)
    }
}

impl Env for Vec<(&str, f64)> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.as_slice().lookup(name)
    }
}

pub(crate) fn apply_binary(op: BinOp, a: f64, b: f64) -> std::result::Result<f64, &'static str> {
    let v = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0.0 {
                return Err("division by zero");
            }
            a / b
        }
        BinOp::Pow => {
            let v = a.powf(b);
            if !v.is_finite() && a.is_finite() && b.is_finite() {
                return Err(if a < 0.0 {
                    "negative base with non-integer exponent"
                } else {
                    "power is not finite"
                });
            }
            v
        }
    };
    if v.is_finite() || !(a.is_finite() && b.is_finite()) {
        Ok(v)
    } else {
        Err("overflow")
    }
}

pub(crate) fn apply_unary(f: Func, x: f64) -> std::result::Result<f64, &'static str> {
    let v = match f {
        Func::Neg => -x,
        Func::Exp => x.exp(),
        Func::Log => {
            if x <= 0.0 {
                return Err("log of a nonpositive number");
            }
            x.ln()
        }
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => {
            if x.cos() == 0.0 {
                return Err("tan at a pole");
            }
            x.tan()
        }
        Func::Cot => {
            let s = x.sin();
            if s == 0.0 {
                return Err("cot at a pole");
            }
            x.cos() / s
        }
        Func::Sqrt => {
            if x < 0.0 {
                return Err("sqrt of a negative number");
            }
            x.sqrt()
        }
        Func::Abs => x.abs(),
        Func::Sign => {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
    };
    if v.is_finite() || !x.is_finite() {
        Ok(v)
    } else {
        Err("overflow")
    }
}

impl Expr {
    /// Evaluate with the given bindings. Domain violations name the offending
    /// subexpression.
    pub fn eval<E: Env + ?Sized>(&self, env: &E) -> Result<f64> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(v) => env.lookup(v).ok_or_else(|| Error::UnboundVariable(v.to_string())),
            Expr::Binary(op, a, b) => {
                let x = a.eval(env)?;
                let y = b.eval(env)?;
                apply_binary(*op, x, y).map_err(|reason| Error::Domain {
                    expr: self.to_string(),
                    reason: reason.into(),
                })
            }
            Expr::Unary(f, a) => {
                let x = a.eval(env)?;
                apply_unary(*f, x).map_err(|reason| Error::Domain {
                    expr: self.to_string(),
                    reason: reason.into(),
                })
            }
            Expr::Call(f, a) => f.eval(a.eval(env)?),
        }
    }

    /// Evaluate an expression in a single variable.
    pub fn eval_at(&self, name: &str, x: f64) -> Result<f64> {
        self.eval(&[(name, x)])
    }

    /// Resolve variable names to slot indices once for repeated evaluation.
    pub fn compile(&self, slots: &[&str]) -> Result<Compiled> {
        Ok(Compiled {
            root: Node::build(self, slots)?,
            slots: slots.iter().map(|s| s.to_string()).collect(),
            source: self.clone(),
        })
    }
}

#[derive(Debug)]
enum Node {
    Const(f64),
    Slot(usize),
    Bin(BinOp, Box<Node>, Box<Node>),
    Un(Func, Box<Node>),
    Call(Arc<dyn NumericFn>, Box<Node>),
}

impl Node {
    fn build(e: &Expr, slots: &[&str]) -> Result<Node> {
        Ok(match e {
            Expr::Const(c) => Node::Const(*c),
            Expr::Var(v) => Node::Slot(
                slots
                    .iter()
                    .position(|s| *s == &**v)
                    .ok_or_else(|| Error::UnboundVariable(v.to_string()))?,
            ),
            Expr::Binary(op, a, b) => {
                Node::Bin(*op, Box::new(Node::build(a, slots)?), Box::new(Node::build(b, slots)?))
            }
            Expr::Unary(f, a) => Node::Un(*f, Box::new(Node::build(a, slots)?)),
            Expr::Call(f, a) => Node::Call(f.clone(), Box::new(Node::build(a, slots)?)),
        })
    }

    fn eval(&self, values: &[f64]) -> std::result::Result<f64, ()> {
        match self {
            Node::Const(c) => Ok(*c),
            Node::Slot(i) => Ok(values[*i]),
            Node::Bin(op, a, b) => apply_binary(*op, a.eval(values)?, b.eval(values)?).map_err(|_| ()),
            Node::Un(f, a) => apply_unary(*f, a.eval(values)?).map_err(|_| ()),
            Node::Call(f, a) => f.eval(a.eval(values)?).map_err(|_| ()),
        }
    }
}

/// An expression with variables resolved to positional slots.
#[derive(Debug)]
pub struct Compiled {
    root: Node,
    slots: Vec<String>,
    source: Expr,
}

impl Compiled {
    pub fn eval(&self, values: &[f64]) -> Result<f64> {
        debug_assert_eq!(values.len(), self.slots.len());
        match self.root.eval(values) {
            Ok(v) => Ok(v),
            // Re-run the named evaluation to get a descriptive error.
            Err(()) => {
                let env: Vec<(&str, f64)> = self
                    .slots
                    .iter()
                    .map(String::as_str)
                    .zip(values.iter().copied())
                    .collect();
                match self.source.eval(&env) {
                    Err(e) => Err(e),
                    Ok(_) => Err(Error::Domain {
                        expr: self.source.to_string(),
                        reason: "evaluation failed".into(),
                    }),
                }
            }
        }
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }
}
