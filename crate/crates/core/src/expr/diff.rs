use super::{BinOp, Expr, Func};

/// Exact symbolic derivative with respect to `var`.
///
/// `abs(u)` differentiates to `sign(u)·u'` and `sign(u)` to zero; both are
/// valid away from zeros of `u`.
pub fn differentiate(e: &Expr, var: &str) -> Expr {
    if !e.depends_on(var) {
        return Expr::zero();
    }
    match e {
        Expr::Const(_) => Expr::zero(),
        Expr::Var(_) => Expr::one(),
        Expr::Binary(op, a, b) => {
            let (a, b) = (&**a, &**b);
            match op {
                BinOp::Add => differentiate(a, var) + differentiate(b, var),
                BinOp::Sub => differentiate(a, var) - differentiate(b, var),
                BinOp::Mul => {
                    let da = differentiate(a, var);
                    let db = differentiate(b, var);
                    da * b.clone() + a.clone() * db
                }
                BinOp::Div => {
                    let da = differentiate(a, var);
                    if !b.depends_on(var) {
                        return da / b.clone();
                    }
                    let db = differentiate(b, var);
                    (da * b.clone() - a.clone() * db) / Expr::powi(b.clone(), 2)
                }
                BinOp::Pow => {
                    if !b.depends_on(var) {
                        // b·a^(b−1)·a'
                        let da = differentiate(a, var);
                        let lowered = Expr::pow(a.clone(), b.clone() - 1.0);
                        return b.clone() * lowered * da;
                    }
                    let db = differentiate(b, var);
                    let ln_a = Expr::apply(Func::Log, a.clone());
                    if !a.depends_on(var) {
                        return e.clone() * ln_a * db;
                    }
                    // a^b·(b'·log a + b·a'/a)
                    let da = differentiate(a, var);
                    e.clone() * (db * ln_a + b.clone() * da / a.clone())
                }
            }
        }
        Expr::Unary(f, a) => {
            let u = &**a;
            let du = differentiate(u, var);
            let outer = match f {
                Func::Neg => return -du,
                Func::Exp => e.clone(),
                Func::Log => return du / u.clone(),
                Func::Sin => Expr::apply(Func::Cos, u.clone()),
                Func::Cos => -Expr::apply(Func::Sin, u.clone()),
                Func::Tan => 1.0 + Expr::powi(e.clone(), 2),
                Func::Cot => -(1.0 + Expr::powi(e.clone(), 2)),
                Func::Sqrt => return du / (2.0 * e.clone()),
                Func::Abs => Expr::apply(Func::Sign, u.clone()),
                Func::Sign => return Expr::zero(),
            };
            outer * du
        }
        Expr::Call(f, a) => f.derivative_at(a) * differentiate(a, var),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn at(e: &Expr, x: f64) -> f64 {
        e.eval(&[("x", x)]).unwrap()
    }

    #[test]
    fn elementary() {
        let d = differentiate(&parse("x^3/3", &["x"]).unwrap(), "x");
        for x in [0.5, 1.0, 2.5] {
            assert!((at(&d, x) - x * x).abs() < 1e-14);
        }
        let d = differentiate(&parse("2/x", &["x"]).unwrap(), "x");
        for x in [0.5, 1.0, 2.5] {
            assert!((at(&d, x) + 2.0 / (x * x)).abs() < 1e-14);
        }
    }

    #[test]
    fn constants_are_not_targets() {
        let e = parse("omega^2*x", &["x", "omega"]).unwrap();
        let d = differentiate(&e, "x");
        assert_eq!(d.to_string(), "omega^2");
        let dw = differentiate(&e, "omega");
        assert_eq!(dw.eval(&[("x", 3.0), ("omega", 2.0)]).unwrap(), 12.0);
    }

    #[test]
    fn abs_and_sign() {
        let d = differentiate(&parse("abs(x^2 - 1)", &["x"]).unwrap(), "x");
        assert_eq!(at(&d, 2.0), 4.0);
        assert_eq!(at(&d, 0.5), -1.0);
        let d = differentiate(&parse("sign(x)*x", &["x"]).unwrap(), "x");
        assert_eq!(at(&d, -3.0), -1.0);
    }

    #[test]
    fn general_power() {
        // d/dx x^x = x^x (log x + 1)
        let d = differentiate(&parse("x^x", &["x"]).unwrap(), "x");
        let x: f64 = 1.7;
        assert!((at(&d, x) - x.powf(x) * (x.ln() + 1.0)).abs() < 1e-13);
        // d/dx 2^x = 2^x log 2
        let d = differentiate(&parse("2^x", &["x"]).unwrap(), "x");
        assert!((at(&d, x) - 2f64.powf(x) * 2f64.ln()).abs() < 1e-13);
    }
}
