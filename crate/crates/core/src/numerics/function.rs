//! Quadrature-backed antiderivatives and numeric inverses that can be
//! embedded in expressions as opaque calls.

use std::fmt;
use std::sync::Arc;

use super::invert::solve_bracketed;
use super::quad::quad;
use crate::error::{Error, Result};
use crate::expr::{Expr, NumericFn, ScalarFunction};
use crate::interval::Interval;

/// Default number of cached knots per antiderivative.
pub const DEFAULT_KNOTS: usize = 256;

const RANGE_SAMPLES: usize = 64;

/// A function known only through numerical evaluation.
#[derive(Clone)]
pub struct NumericFunction {
    inner: Arc<Kind>,
}

enum Kind {
    Antiderivative(Antiderivative),
    Inverse(Inverse),
}

struct Antiderivative {
    integrand: ScalarFunction,
    base: f64,
    knots: Vec<f64>,
    values: Vec<f64>,
    tol: f64,
}

struct Inverse {
    forward: ScalarFunction,
    slope: ScalarFunction,
    range: Interval,
    increasing: bool,
    /// Sorted by x; values strictly monotone.
    table: Vec<(f64, f64)>,
    tol: f64,
}

/// `x ↦ ∫_{x0}^{x} f` on the domain of `f`, with `x0` defaulting to the
/// domain midpoint.
pub fn antiderivative(f: &ScalarFunction, x0: Option<f64>, tol: f64) -> Result<NumericFunction> {
    antiderivative_with_knots(f, x0, tol, DEFAULT_KNOTS)
}

pub fn antiderivative_with_knots(
    f: &ScalarFunction,
    x0: Option<f64>,
    tol: f64,
    knots: usize,
) -> Result<NumericFunction> {
    let domain = f.domain();
    let base = match x0 {
        Some(x) => x,
        None if domain.is_finite() => domain.midpoint(),
        None => domain.probe_window().midpoint(),
    };
    if !domain.contains(base) {
        return Err(Error::OutsideDomain {
            value: base,
            lo: domain.lo(),
            hi: domain.hi(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("antiderivative tolerance must be positive"));
    }
    let window = domain.probe_window();
    let mut xs = window.grid(knots.max(2) - 1);
    xs.push(base);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let start = xs.iter().position(|&x| x == base).expect("base was inserted");
    let mut values = vec![0.0; xs.len()];
    let g = |x: f64| f.eval(x);
    for i in start + 1..xs.len() {
        values[i] = values[i - 1] + quad(g, xs[i - 1], xs[i], tol)?;
    }
    for i in (0..start).rev() {
        values[i] = values[i + 1] - quad(g, xs[i], xs[i + 1], tol)?;
    }
    Ok(NumericFunction {
        inner: Arc::new(Kind::Antiderivative(Antiderivative {
            integrand: f.clone(),
            base,
            knots: xs,
            values,
            tol,
        })),
    })
}

impl NumericFunction {
    /// Numerical inverse of a strictly monotone `forward`; its domain is the
    /// range of `forward`.
    pub fn inverse_of(forward: &ScalarFunction, tol: f64) -> Result<NumericFunction> {
        let domain = forward.domain();
        let window = domain.probe_window();
        let mut table = Vec::with_capacity(RANGE_SAMPLES);
        for x in window.grid(RANGE_SAMPLES) {
            table.push((x, forward.eval(x)?));
        }
        let increasing = table[1].1 > table[0].1;
        let monotone = table
            .windows(2)
            .all(|w| if increasing { w[1].1 > w[0].1 } else { w[1].1 < w[0].1 });
        if !monotone {
            return Err(Error::NonMonotone {
                lo: domain.lo(),
                hi: domain.hi(),
            });
        }
        let first = table[0];
        let last = table[table.len() - 1];
        let at_lo = boundary_value(forward, domain.lo(), first, increasing, false);
        let at_hi = boundary_value(forward, domain.hi(), last, increasing, true);
        let range = Interval::spanning(at_lo, at_hi)?;
        Ok(NumericFunction {
            inner: Arc::new(Kind::Inverse(Inverse {
                forward: forward.clone(),
                slope: forward.derivative(),
                range,
                increasing,
                table,
                tol,
            })),
        })
    }

    /// Wrap as an expression node applied to `arg`.
    pub fn apply(&self, arg: Expr) -> Expr {
        Expr::call(Arc::new(self.clone()), arg)
    }

    pub fn domain(&self) -> Interval {
        match &*self.inner {
            Kind::Antiderivative(a) => a.integrand.domain(),
            Kind::Inverse(i) => i.range,
        }
    }

    /// Base point of an antiderivative.
    pub fn base_point(&self) -> Option<f64> {
        match &*self.inner {
            Kind::Antiderivative(a) => Some(a.base),
            Kind::Inverse(_) => None,
        }
    }

    /// Cached `(x, F(x))` pairs of an antiderivative.
    pub fn knots(&self) -> Vec<(f64, f64)> {
        match &*self.inner {
            Kind::Antiderivative(a) => a.knots.iter().copied().zip(a.values.iter().copied()).collect(),
            Kind::Inverse(i) => i.table.iter().map(|&(x, y)| (y, x)).collect(),
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        // Closed at finite ends so boundary limits can be probed.
        let d = self.domain();
        if !(d.contains(x) || x == d.lo() || x == d.hi()) {
            return Err(Error::OutsideDomain {
                value: x,
                lo: d.lo(),
                hi: d.hi(),
            });
        }
        match &*self.inner {
            Kind::Antiderivative(a) => a.eval(x),
            Kind::Inverse(i) => i.eval(x),
        }
    }

    pub fn derivative_value(&self, x: f64) -> Result<f64> {
        match &*self.inner {
            Kind::Antiderivative(a) => a.integrand.eval(x),
            Kind::Inverse(i) => Ok(1.0 / i.slope.eval(self.evaluate(x)?)?),
        }
    }
}

/// Limit of `forward` at a domain end, approached from the interior sample.
fn boundary_value(forward: &ScalarFunction, end: f64, inner: (f64, f64), increasing: bool, upper: bool) -> f64 {
    let toward_infinity = if increasing == upper { f64::INFINITY } else { f64::NEG_INFINITY };
    if end.is_finite() {
        if let Ok(v) = forward.eval_raw(end) {
            if v.is_finite() {
                return v;
            }
        }
        return toward_infinity;
    }
    // Infinite end: walk outward while the value keeps growing.
    let (mut x, mut v) = inner;
    let mut step = 1.0f64.max(x.abs());
    for _ in 0..64 {
        let nx = if upper { x + step } else { x - step };
        match forward.eval(nx) {
            Ok(nv) if nv.is_finite() => {
                if (nv - v).abs() <= 1e-15 * nv.abs().max(1.0) {
                    return nv;
                }
                x = nx;
                v = nv;
            }
            _ => return toward_infinity,
        }
        step *= 2.0;
    }
    toward_infinity
}

impl Antiderivative {
    fn eval(&self, x: f64) -> Result<f64> {
        let i = self.knots.partition_point(|&k| k < x);
        let k = if i == 0 {
            0
        } else if i == self.knots.len() {
            i - 1
        } else if x - self.knots[i - 1] <= self.knots[i] - x {
            i - 1
        } else {
            i
        };
        let from = self.knots[k];
        if from == x {
            return Ok(self.values[k]);
        }
        Ok(self.values[k] + quad(|s| self.integrand.eval(s), from, x, self.tol)?)
    }
}

enum Reach {
    Bracket((f64, f64), (f64, f64)),
    Hit(f64),
}

impl Inverse {
    fn eval(&self, y: f64) -> Result<f64> {
        let domain = self.forward.domain();
        let above = |v: f64| if self.increasing { v >= y } else { v <= y };
        let i = self.table.partition_point(|&(_, v)| !above(v));
        let (lo, hi) = if i == 0 {
            match self.extend(y, self.table[0], domain.lo())? {
                Reach::Bracket(lo, hi) => (lo, hi),
                Reach::Hit(x) => return Ok(x),
            }
        } else if i == self.table.len() {
            match self.extend(y, self.table[i - 1], domain.hi())? {
                Reach::Bracket(lo, hi) => (lo, hi),
                Reach::Hit(x) => return Ok(x),
            }
        } else {
            (self.table[i - 1], self.table[i])
        };
        let f = |x: f64| self.forward.eval(x);
        let df = |x: f64| self.slope.eval(x);
        solve_bracketed(&f, Some(&df), y, lo, hi, self.tol)
    }

    /// Bracket beyond the sampled table toward a domain end.
    fn extend(&self, y: f64, inner: (f64, f64), end: f64) -> Result<Reach> {
        let (x0, v0) = inner;
        let mut prev = inner;
        for k in 1..200 {
            let x = if end.is_finite() {
                end + (x0 - end) * 0.5f64.powi(k)
            } else {
                x0 + (end.signum()) * 2f64.powi(k)
            };
            if x == prev.0 || !self.forward.domain().contains(x) {
                break;
            }
            let v = self.forward.eval(x)?;
            if (v - y) * (v0 - y) <= 0.0 {
                return Ok(if x < prev.0 { Reach::Bracket((x, v), prev) } else { Reach::Bracket(prev, (x, v)) });
            }
            prev = (x, v);
        }
        // A target equal to the boundary value up to rounding is never
        // crossed by the approach; accept the closest point.
        if (prev.1 - y).abs() <= self.tol * y.abs().max(1.0) {
            return Ok(Reach::Hit(prev.0));
        }
        Err(Error::Bracket {
            target: y,
            lo: x0.min(end),
            hi: x0.max(end),
            f_lo: v0,
            f_hi: prev.1,
        })
    }
}

impl fmt::Debug for NumericFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl NumericFn for NumericFunction {
    fn label(&self) -> String {
        match &*self.inner {
            Kind::Antiderivative(a) => format!("integral[{}; {} from {}]", a.integrand.expr(), a.integrand.var(), a.base),
            Kind::Inverse(i) => format!("inverse[{}; {}]", i.forward.expr(), i.forward.var()),
        }
    }

    fn eval(&self, x: f64) -> Result<f64> {
        self.evaluate(x)
    }

    fn derivative_at(&self, arg: &Expr) -> Expr {
        match &*self.inner {
            Kind::Antiderivative(a) => a.integrand.at(arg),
            Kind::Inverse(i) => Expr::div(Expr::one(), i.slope.at(&self.apply(arg.clone()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::differentiate;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn sf(text: &str, lo: f64, hi: f64) -> ScalarFunction {
        ScalarFunction::parse(text, "x", &[], Interval::new(lo, hi).unwrap()).unwrap()
    }

    #[test]
    fn spec_antiderivatives() {
        let one = antiderivative(&sf("1", -1.0, 10.0), Some(0.0), 1e-12).unwrap();
        assert!((one.evaluate(5.0).unwrap() - 5.0).abs() < 1e-12);
        let sq = antiderivative(&sf("x^2", -1.0, 10.0), Some(0.0), 1e-12).unwrap();
        assert!((sq.evaluate(3.0).unwrap() - 9.0).abs() < 1e-11);
        let lg = antiderivative(&sf("2/x", 0.0, 10.0), Some(1.0), 1e-12).unwrap();
        let e = std::f64::consts::E;
        assert!((lg.evaluate(e).unwrap() - 2.0 * e.ln()).abs() < 1e-11);
        assert_eq!(lg.evaluate(1.0).unwrap(), 0.0);
        assert_eq!(lg.base_point(), Some(1.0));
    }

    #[test]
    fn default_base_is_midpoint() {
        let f = antiderivative(&sf("cos(x)", 0.0, 2.0), None, 1e-12).unwrap();
        assert_eq!(f.base_point(), Some(1.0));
        assert!((f.evaluate(0.3).unwrap() - (0.3f64.sin() - 1f64.sin())).abs() < 1e-12);
    }

    #[test]
    fn knots_are_reproduced_exactly() {
        let f = antiderivative(&sf("exp(-x)*sin(3*x)", 0.0, 4.0), None, 1e-12).unwrap();
        for (x, v) in f.knots() {
            assert_eq!(f.evaluate(x).unwrap(), v);
        }
    }

    #[test]
    fn derivative_matches_integrand() {
        let g = sf("1/(1 + x^2) + cos(x)", -3.0, 3.0);
        let f = antiderivative(&g, None, 1e-13).unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..16 {
            let x: f64 = rng.gen_range(-2.9..2.9);
            let h = 1e-3;
            let fd = (f.evaluate(x + h).unwrap() - f.evaluate(x - h).unwrap()) / (2.0 * h);
            let exact = g.eval(x).unwrap();
            assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn embeds_in_expressions() {
        let g = sf("2*x", 0.0, 3.0);
        let big_g = antiderivative(&g, Some(1.0), 1e-12).unwrap();
        // exp(G(x)) with G = x² − 1
        let e = Expr::apply(crate::expr::Func::Exp, big_g.apply(Expr::var("x")));
        assert!((e.eval_at("x", 2.0).unwrap() - 3f64.exp()).abs() < 1e-10);
        let d = differentiate(&e, "x");
        assert!((d.eval_at("x", 2.0).unwrap() - 4.0 * 3f64.exp()).abs() < 1e-9);
        assert!(!e.is_closed_form());
    }

    #[test]
    fn inverse_of_cube() {
        let phi = sf("x^3/3", 0.0, 5.0);
        let inv = NumericFunction::inverse_of(&phi, 1e-15).unwrap();
        assert_eq!(inv.domain().lo(), 0.0);
        assert!((inv.domain().hi() - 125.0 / 3.0).abs() < 1e-12);
        assert!((inv.evaluate(9.0).unwrap() - 3.0).abs() < 1e-12);
        // beyond the sampled table, toward the lower end
        let x = inv.evaluate(1e-9).unwrap();
        assert!((x.powi(3) / 3.0 - 1e-9).abs() <= 1e-15);
        assert!((inv.derivative_value(9.0).unwrap() - 1.0 / 9.0).abs() < 1e-12);
        assert!(matches!(inv.evaluate(50.0), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn inverse_on_unbounded_domain() {
        let phi = sf("-exp(-x)", 0.0, f64::INFINITY);
        let inv = NumericFunction::inverse_of(&phi, 1e-15).unwrap();
        assert!(inv.domain().hi() <= 0.0 && inv.domain().hi() > -1e-14);
        assert_eq!(inv.domain().lo(), -1.0);
        let x = inv.evaluate(-1e-6).unwrap();
        assert!((x - 1e6f64.ln()).abs() < 1e-9, "{x}");
    }

    #[test]
    fn inverse_rejects_non_monotone() {
        assert!(matches!(
            NumericFunction::inverse_of(&sf("sin(x)", 0.0, 3.0), 1e-12),
            Err(Error::NonMonotone { .. })
        ));
    }
}
