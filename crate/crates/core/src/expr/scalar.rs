use std::fmt;
use std::sync::Arc;

use super::{differentiate, parse, Compiled, Expr};
use crate::error::{Error, Result};
use crate::interval::Interval;

/// A one-variable expression together with the open interval on which it is
/// meant to be evaluated.
#[derive(Clone)]
pub struct ScalarFunction {
    expr: Expr,
    var: Arc<str>,
    domain: Interval,
    compiled: Arc<Compiled>,
}

impl ScalarFunction {
    pub fn new(expr: Expr, var: &str, domain: Interval) -> Result<Self> {
        if let Some(other) = expr.variables().into_iter().find(|v| v != var) {
            return Err(Error::UnboundVariable(other));
        }
        let compiled = Arc::new(expr.compile(&[var])?);
        Ok(Self {
            expr,
            var: Arc::from(var),
            domain,
            compiled,
        })
    }

    /// Parse `text` in `var`, substituting the named parameters.
    pub fn parse(text: &str, var: &str, params: &[(&str, f64)], domain: Interval) -> Result<Self> {
        let mut names: Vec<&str> = params.iter().map(|(n, _)| *n).collect();
        names.push(var);
        let e = parse(text, &names)?;
        Self::new(e.bind(params.iter().copied()), var, domain)
    }

    pub fn constant(c: f64, var: &str, domain: Interval) -> Self {
        Self::new(Expr::Const(c), var, domain).expect("constants have no variables")
    }

    pub fn identity(var: &str, domain: Interval) -> Self {
        Self::new(Expr::var(var), var, domain).expect("identity is well formed")
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn with_domain(&self, domain: Interval) -> Self {
        Self {
            domain,
            ..self.clone()
        }
    }

    /// Same expression on a different variable name.
    pub fn renamed(&self, var: &str) -> Self {
        if var == &*self.var {
            return self.clone();
        }
        let e = self.expr.substitute(&self.var, &Expr::var(var));
        Self::new(e, var, self.domain).expect("renaming keeps a single variable")
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain {
                value: x,
                lo: self.domain.lo(),
                hi: self.domain.hi(),
            });
        }
        self.compiled.eval(&[x])
    }

    /// Evaluate without the domain check (for limits at the boundary).
    pub fn eval_raw(&self, x: f64) -> Result<f64> {
        self.compiled.eval(&[x])
    }

    pub fn derivative(&self) -> ScalarFunction {
        let d = differentiate(&self.expr, &self.var);
        Self::new(d, &self.var, self.domain).expect("derivative keeps the variable set")
    }

    /// Expression with the variable replaced by `arg`.
    pub fn at(&self, arg: &Expr) -> Expr {
        self.expr.substitute(&self.var, arg)
    }

    /// Values on the `n`-point interior grid of the domain.
    pub fn sample(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        self.domain
            .grid(n)
            .into_iter()
            .map(|x| self.eval(x).map(|y| (x, y)))
            .collect()
    }

    pub fn is_closed_form(&self) -> bool {
        self.expr.is_closed_form()
    }
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ↦ {} on {}", self.var, self.expr, self.domain)
    }
}

impl fmt::Display for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.expr, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_respects_domain() {
        let d = Interval::new(0.0, f64::INFINITY).unwrap();
        let f = ScalarFunction::parse("omega^2/x^3", "x", &[("omega", 2.0)], d).unwrap();
        assert_eq!(f.eval(2.0).unwrap(), 0.5);
        assert!(matches!(f.eval(0.0), Err(Error::OutsideDomain { .. })));
        assert!(matches!(f.eval(-1.0), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn rejects_stray_variables() {
        let d = Interval::new(0.0, 1.0).unwrap();
        let e = parse("x*y", &["x", "y"]).unwrap();
        assert!(ScalarFunction::new(e, "x", d).is_err());
    }
}
