use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{differentiate, parse, simplify, Compiled, Expr};
use crate::interval::Interval;

/// Velocity probe box used for every bivariate identity.
pub const VELOCITY_BOX: (f64, f64) = (-2.0, 2.0);
/// Upper bound on the number of probe points of a grid.
pub const MAX_PROBES: usize = 4096;

/// Position variable names: `x` for one dimension, `x1 .. xn` otherwise.
pub fn position_names(n: usize) -> Vec<String> {
    if n == 1 {
        vec!["x".into()]
    } else {
        (1..=n).map(|i| format!("x{i}")).collect()
    }
}

/// Velocity variable names: `v` for one dimension, `v1 .. vn` otherwise.
pub fn velocity_names(n: usize) -> Vec<String> {
    if n == 1 {
        vec!["v".into()]
    } else {
        (1..=n).map(|i| format!("v{i}")).collect()
    }
}

/// Tensor grid with `k` interior points per axis, `k` chosen so that the
/// total stays within [`MAX_PROBES`].
pub(crate) fn tensor_grid(axes: &[Interval], max_per_axis: usize) -> Vec<Vec<f64>> {
    let dims = axes.len().max(1);
    let mut k = max_per_axis;
    while k > 2 && k.pow(dims as u32) > MAX_PROBES {
        k -= 1;
    }
    let lines: Vec<Vec<f64>> = axes.iter().map(|a| a.grid(k)).collect();
    let mut points = vec![Vec::with_capacity(axes.len())];
    for line in &lines {
        points = points
            .into_iter()
            .flat_map(|p| {
                line.iter().map(move |&c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    points
}

fn check_box(domain: &[Interval], x: &[f64]) -> Result<()> {
    for (d, &xi) in domain.iter().zip(x) {
        if !d.contains(xi) {
            return Err(Error::OutsideDomain {
                value: xi,
                lo: d.lo(),
                hi: d.hi(),
            });
        }
    }
    Ok(())
}

/// `ẍⁱ = Xⁱ(x, v)` on a box in position space.
#[derive(Clone)]
pub struct SodeField {
    components: Vec<Expr>,
    domain: Vec<Interval>,
    compiled: Arc<Vec<Compiled>>,
}

impl SodeField {
    pub fn new(components: Vec<Expr>, domain: Vec<Interval>) -> Result<Self> {
        let n = components.len();
        if n == 0 || domain.len() != n {
            return Err(Error::invalid(format!(
                "field needs one component and one domain interval per dimension; got {n} and {}",
                domain.len()
            )));
        }
        let names = Self::names_for(n);
        let slots: Vec<&str> = names.iter().map(String::as_str).collect();
        let components: Vec<Expr> = components.iter().map(simplify).collect();
        for c in &components {
            if let Some(other) = c.variables().into_iter().find(|v| !slots.contains(&v.as_str())) {
                return Err(Error::UnboundVariable(other));
            }
        }
        let compiled = components.iter().map(|c| c.compile(&slots)).collect::<Result<Vec<_>>>()?;
        let field = Self {
            components,
            domain,
            compiled: Arc::new(compiled),
        };
        for p in field.probe_points() {
            let (x, v) = p.split_at(n);
            for (i, value) in field.eval(x, v)?.into_iter().enumerate() {
                if !value.is_finite() {
                    return Err(Error::invalid(format!("component {} is not finite at {p:?}", i + 1)));
                }
            }
        }
        Ok(field)
    }

    /// Parse components in the dimension's variable names, binding `params`.
    pub fn parse(components: &[&str], domain: Vec<Interval>, params: &[(&str, f64)]) -> Result<Self> {
        let names = Self::names_for(components.len());
        let mut vars: Vec<&str> = names.iter().map(String::as_str).collect();
        vars.extend(params.iter().map(|(n, _)| *n));
        let exprs = components
            .iter()
            .map(|c| Ok(parse(c, &vars)?.bind(params.iter().copied())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(exprs, domain)
    }

    fn names_for(n: usize) -> Vec<String> {
        let mut names = position_names(n);
        names.extend(velocity_names(n));
        names
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn domain(&self) -> &[Interval] {
        &self.domain
    }

    pub fn positions(&self) -> Vec<String> {
        position_names(self.n())
    }

    pub fn velocities(&self) -> Vec<String> {
        velocity_names(self.n())
    }

    /// `X(x, v)`, without a domain check.
    pub fn eval(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let mut slots = Vec::with_capacity(2 * self.n());
        slots.extend_from_slice(x);
        slots.extend_from_slice(v);
        self.compiled.iter().map(|c| c.eval(&slots)).collect()
    }

    /// The first-order system on `(x, v)`; leaving the domain is an error.
    pub fn first_order(&self) -> impl Fn(f64, &[f64]) -> Result<Vec<f64>> + '_ {
        move |_, state| {
            let (x, v) = state.split_at(self.n());
            check_box(&self.domain, x)?;
            let mut out = v.to_vec();
            out.extend(self.eval(x, v)?);
            Ok(out)
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        check_box(&self.domain, x).is_ok()
    }

    /// Probe points `(x, v)` on the domain times the velocity box.
    pub fn probe_points(&self) -> Vec<Vec<f64>> {
        let vel = Interval::new(VELOCITY_BOX.0, VELOCITY_BOX.1).expect("velocity box is ordered");
        let mut axes = self.domain.clone();
        axes.extend(std::iter::repeat_n(vel, self.n()));
        tensor_grid(&axes, 8)
    }

    /// Same field on a smaller box.
    pub fn restrict(&self, domain: Vec<Interval>) -> Result<Self> {
        for (outer, inner) in self.domain.iter().zip(&domain) {
            if !outer.contains_interval(inner) {
                return Err(Error::DomainMismatch(format!("{inner} is not inside {outer}")));
            }
        }
        Self::new(self.components.clone(), domain)
    }
}

impl fmt::Debug for SodeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SodeField")
            .field("components", &self.components.iter().map(|c| c.to_string()).collect::<Vec<_>>())
            .field("domain", &self.domain)
            .finish()
    }
}

/// A nonvanishing function of position with constant sign, defining the
/// time change `dt = f dτ`.
#[derive(Clone)]
pub struct BasicFunction {
    expr: Expr,
    domain: Vec<Interval>,
    sign: f64,
    compiled: Arc<Compiled>,
}

impl BasicFunction {
    pub fn new(expr: Expr, domain: Vec<Interval>) -> Result<Self> {
        let names = position_names(domain.len());
        let slots: Vec<&str> = names.iter().map(String::as_str).collect();
        let expr = simplify(&expr);
        if let Some(other) = expr.variables().into_iter().find(|v| !slots.contains(&v.as_str())) {
            return Err(Error::UnboundVariable(other));
        }
        let compiled = Arc::new(expr.compile(&slots)?);
        let sign = sign_on(&compiled, &domain)?;
        Ok(Self {
            expr,
            domain,
            sign,
            compiled,
        })
    }

    pub fn parse(text: &str, domain: Vec<Interval>, params: &[(&str, f64)]) -> Result<Self> {
        let names = position_names(domain.len());
        let mut vars: Vec<&str> = names.iter().map(String::as_str).collect();
        vars.extend(params.iter().map(|(n, _)| *n));
        Self::new(parse(text, &vars)?.bind(params.iter().copied()), domain)
    }

    pub fn constant(c: f64, domain: Vec<Interval>) -> Result<Self> {
        Self::new(Expr::Const(c), domain)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn domain(&self) -> &[Interval] {
        &self.domain
    }

    pub fn n(&self) -> usize {
        self.domain.len()
    }

    /// `+1` or `−1`.
    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_box(&self.domain, x)?;
        self.compiled.eval(x)
    }

    /// `dτ/dt = 1/f`.
    pub fn h_dtau_per_dt(&self) -> Expr {
        Expr::div(Expr::one(), self.expr.clone())
    }

    pub fn partial(&self, i: usize) -> Expr {
        simplify(&differentiate(&self.expr, &position_names(self.n())[i]))
    }

    /// The same function re-validated on another box.
    pub fn on(&self, domain: Vec<Interval>) -> Result<Self> {
        Self::new(self.expr.clone(), domain)
    }

    pub fn product(&self, other: &BasicFunction) -> Result<Self> {
        Self::new(self.expr.clone() * other.expr.clone(), self.domain.clone())
    }

    pub fn reciprocal(&self) -> Result<Self> {
        Self::new(self.h_dtau_per_dt(), self.domain.clone())
    }
}

impl fmt::Debug for BasicFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BasicFunction({}, sign {})", self.expr, self.sign)
    }
}

fn sign_on(compiled: &Compiled, domain: &[Interval]) -> Result<f64> {
    let mut sign = 0.0;
    let mut last_good: Option<Vec<f64>> = None;
    for p in tensor_grid(domain, 4) {
        let v = compiled.eval(&p)?;
        if !v.is_finite() || v == 0.0 || (sign != 0.0 && v.signum() != sign) {
            let from = last_good.unwrap_or_else(|| p.clone());
            return Err(Error::SignChange {
                what: format!("basic function {} between {from:?} and {p:?}", compiled.source()),
                lo: from[0],
                hi: p[0],
            });
        }
        sign = v.signum();
        last_good = Some(p);
    }
    Ok(sign)
}

/// The field seen in time `τ` with quasi-velocities `v̄ = f·v`:
/// `dv̄ⁱ/dτ = f²Xⁱ(x, v̄/f) + (Σⱼ ∂ⱼf·v̄ʲ/f)·v̄ⁱ`.
pub fn transform_system(field: &SodeField, f: &BasicFunction) -> Result<SodeField> {
    let n = field.n();
    if f.n() != n {
        return Err(Error::invalid(format!("basic function is {}-dimensional, field is {n}-dimensional", f.n())));
    }
    let f = f.on(field.domain().to_vec())?;
    if f.expr().is_const(1.0) {
        return Ok(field.clone());
    }
    let fe = f.expr().clone();
    let vel = velocity_names(n);
    let drift = (0..n).fold(Expr::zero(), |acc, j| acc + f.partial(j) * Expr::var(&vel[j]));
    let drift = drift / fe.clone();
    let components = field
        .components()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let rescaled = vel
                .iter()
                .fold(c.clone(), |e, name| e.substitute(name, &(Expr::var(name) / fe.clone())));
            Expr::powi(fe.clone(), 2) * rescaled + drift.clone() * Expr::var(&vel[i])
        })
        .collect();
    SodeField::new(components, field.domain().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn names() {
        assert_eq!(position_names(1), ["x"]);
        assert_eq!(velocity_names(2), ["v1", "v2"]);
    }

    #[test]
    fn grid_is_capped() {
        let axes = vec![dom(0.0, 1.0); 6];
        let g = tensor_grid(&axes, 8);
        assert!(g.len() <= MAX_PROBES && g.len() >= 64);
        assert_eq!(tensor_grid(&[dom(0.0, 1.0); 2], 8).len(), 64);
    }

    #[test]
    fn rejects_foreign_variables() {
        assert!(SodeField::parse(&["x*y"], vec![dom(0.0, 1.0)], &[]).is_err());
        assert!(SodeField::parse(&["-x1", "-x2"], vec![dom(0.0, 1.0)], &[]).is_err());
        assert!(SodeField::parse(&["1/x"], vec![dom(-1.0, 1.0)], &[]).is_ok());
        assert!(SodeField::parse(&["log(x)"], vec![dom(-1.0, 1.0)], &[]).is_err());
    }

    #[test]
    fn basic_function_sign() {
        let f = BasicFunction::parse("-1 - x^2", vec![dom(-2.0, 2.0)], &[]).unwrap();
        assert_eq!(f.sign(), -1.0);
        assert!(matches!(
            BasicFunction::parse("x1 - x2", vec![dom(0.0, 1.0), dom(0.0, 1.0)], &[]),
            Err(Error::SignChange { .. })
        ));
    }

    #[test]
    fn unit_function_leaves_field_unchanged() {
        let g = SodeField::parse(&["-x*v"], vec![dom(0.5, 2.0)], &[]).unwrap();
        let one = BasicFunction::constant(1.0, vec![dom(0.5, 2.0)]).unwrap();
        let t = transform_system(&g, &one).unwrap();
        assert_eq!(t.components(), g.components());
    }

    #[test]
    fn oscillator_picks_up_quadratic_damping() {
        let d = vec![dom(0.5, 2.0)];
        let g = SodeField::parse(&["-(omega^2)*x"], d.clone(), &[("omega", 1.5)]).unwrap();
        let f = BasicFunction::parse("1 + x^2/4", d, &[]).unwrap();
        let t = transform_system(&g, &f).unwrap();
        for &(x, v) in &[(0.7, 0.3), (1.3, -1.1), (1.9, 1.7)] {
            let fx = 1.0 + x * x / 4.0;
            let df = x / 2.0;
            let expected = df / fx * v * v - fx * fx * 2.25 * x;
            let got = t.eval(&[x], &[v]).unwrap()[0];
            assert!((got - expected).abs() < 1e-13 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn inverse_square_function_yields_ermakov_pinney() {
        let d = vec![dom(0.3, 3.0)];
        let g = SodeField::parse(&["-(omega^2)*x"], d.clone(), &[("omega", 2.0)]).unwrap();
        let f = BasicFunction::parse("x^(-2)", d, &[]).unwrap();
        let t = transform_system(&g, &f).unwrap();
        for &(x, v) in &[(0.4f64, 0.3f64), (1.3, -1.1), (2.9, 1.7)] {
            let ermakov = -2.0 / x * v * v - 4.0 / x.powi(3);
            let got = t.eval(&[x], &[v]).unwrap()[0];
            assert!((got - ermakov).abs() < 1e-12 * ermakov.abs().max(1.0), "{got} {ermakov}");
        }
    }

    #[test]
    fn first_order_form_checks_domain() {
        let g = SodeField::parse(&["-x1", "-x2"], vec![dom(-1.0, 1.0), dom(-1.0, 1.0)], &[]).unwrap();
        let rhs = g.first_order();
        assert_eq!(rhs(0.0, &[0.5, 0.25, 1.0, 2.0]).unwrap(), vec![1.0, 2.0, -0.5, -0.25]);
        assert!(rhs(0.0, &[1.5, 0.0, 0.0, 0.0]).is_err());
    }
}
