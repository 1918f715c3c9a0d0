use serde::Serialize;

use super::transform::GenSundman;
use crate::error::{Error, Result};
use crate::expr::{differentiate, simplify, Expr, ScalarFunction};
use crate::interval::Interval;
use crate::numerics::NumericFunction;

/// Name of the position variable in every coefficient.
pub const POSITION: &str = "x";
/// Name of the velocity variable in a right-hand side `X(x, v)`.
pub const VELOCITY: &str = "v";

/// Number of probe points used to validate coefficients on a domain.
pub const PROBE_POINTS: usize = 64;

/// `ẍ + γ(x)ẋ² + A(x)ẋ + b(x) = 0` on an open interval.
#[derive(Clone, Debug)]
pub struct QuadraticSode {
    gamma: ScalarFunction,
    a: ScalarFunction,
    b: ScalarFunction,
    domain: Interval,
}

/// Samples and scale used to decide whether Q vanishes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QDiagnostics {
    pub samples: Vec<(f64, f64)>,
    pub max_abs: f64,
    pub scale: f64,
    /// `max_abs / scale`.
    pub ratio: f64,
    pub tol: f64,
    pub vanishes: bool,
}

/// Result of reading a right-hand side as a quadratic in the velocity.
#[derive(Debug, Clone)]
pub enum Normalized {
    Quadratic(QuadraticSode),
    NotQuadratic { reason: String },
}

pub(crate) fn probe(f: &ScalarFunction, what: &str) -> Result<()> {
    for x in f.domain().grid(PROBE_POINTS) {
        let v = f.eval(x).map_err(|e| Error::invalid(format!("{what} is not evaluable at x = {x}: {e}")))?;
        if !v.is_finite() {
            return Err(Error::invalid(format!("{what} is not finite at x = {x}")));
        }
    }
    Ok(())
}

fn scalar(e: Expr, domain: Interval) -> Result<ScalarFunction> {
    ScalarFunction::new(simplify(&e), POSITION, domain)
}

impl QuadraticSode {
    pub fn new(gamma: Expr, a: Expr, b: Expr, domain: Interval) -> Result<Self> {
        Self::from_functions(scalar(gamma, domain)?, scalar(a, domain)?, scalar(b, domain)?, domain)
    }

    pub fn from_functions(gamma: ScalarFunction, a: ScalarFunction, b: ScalarFunction, domain: Interval) -> Result<Self> {
        let gamma = gamma.renamed(POSITION).with_domain(domain);
        let a = a.renamed(POSITION).with_domain(domain);
        let b = b.renamed(POSITION).with_domain(domain);
        probe(&gamma, "gamma")?;
        probe(&a, "A")?;
        probe(&b, "b")?;
        Ok(Self { gamma, a, b, domain })
    }

    /// Parse the three coefficients in `x` with the given parameter values.
    pub fn parse(gamma: &str, a: &str, b: &str, domain: Interval, params: &[(&str, f64)]) -> Result<Self> {
        Self::from_functions(
            ScalarFunction::parse(gamma, POSITION, params, domain)?,
            ScalarFunction::parse(a, POSITION, params, domain)?,
            ScalarFunction::parse(b, POSITION, params, domain)?,
            domain,
        )
    }

    pub fn gamma(&self) -> &ScalarFunction {
        &self.gamma
    }

    pub fn a(&self) -> &ScalarFunction {
        &self.a
    }

    pub fn b(&self) -> &ScalarFunction {
        &self.b
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn restrict(&self, domain: Interval) -> Result<Self> {
        if !self.domain.contains_interval(&domain) {
            return Err(Error::DomainMismatch(format!("{domain} is not inside {}", self.domain)));
        }
        Self::from_functions(self.gamma.clone(), self.a.clone(), self.b.clone(), domain)
    }

    /// Values `(γ, A, b)` at `x`.
    pub fn coefficients_at(&self, x: f64) -> Result<(f64, f64, f64)> {
        Ok((self.gamma.eval(x)?, self.a.eval(x)?, self.b.eval(x)?))
    }

    /// The right-hand side `X(x, v) = −γv² − Av − b`.
    pub fn field(&self) -> Expr {
        let v = Expr::var(VELOCITY);
        -(self.gamma.expr().clone() * Expr::powi(v.clone(), 2) + self.a.expr().clone() * v + self.b.expr().clone())
    }

    pub fn acceleration(&self, x: f64, v: f64) -> Result<f64> {
        let (g, a, b) = self.coefficients_at(x)?;
        Ok(-(g * v * v + a * v + b))
    }

    /// `P = A·b′ + γ·A·b − A′·b`.
    pub fn p_invariant(&self) -> ScalarFunction {
        let (g, a, b) = (self.gamma.expr(), self.a.expr(), self.b.expr());
        let da = differentiate(a, POSITION);
        let db = differentiate(b, POSITION);
        let p = a.clone() * db + g.clone() * a.clone() * b.clone() - da * b.clone();
        scalar(p, self.domain).expect("P uses only the position variable")
    }

    /// `Q = A·P′ − 3·A′·P`.
    pub fn q_invariant(&self) -> ScalarFunction {
        let a = self.a.expr();
        let p = self.p_invariant();
        let q = a.clone() * differentiate(p.expr(), POSITION) - 3.0 * differentiate(a, POSITION) * p.expr().clone();
        scalar(q, self.domain).expect("Q uses only the position variable")
    }

    /// Sample Q on an `n`-point grid and compare against `tol·scale`.
    pub fn q_test(&self, n: usize, tol: f64) -> Result<QDiagnostics> {
        let q = self.q_invariant();
        let d = |f: &ScalarFunction| f.derivative();
        let derivs = [
            d(&self.gamma),
            d(&self.a),
            d(&self.b),
            d(&d(&self.a)),
            d(&d(&self.b)),
        ];
        let mut samples = Vec::with_capacity(n);
        let mut scale = 1.0f64;
        let mut max_abs = 0.0f64;
        for x in self.domain.grid(n) {
            let qx = q.eval(x)?;
            let (g, a, b) = self.coefficients_at(x)?;
            let vals: Vec<f64> = derivs.iter().map(|f| f.eval(x)).collect::<Result<_>>()?;
            let [dg, da, db, dda, ddb] = [vals[0], vals[1], vals[2], vals[3], vals[4]];
            let t = q_term_magnitude(g, a, b, dg, da, db, dda, ddb);
            scale = scale.max(t);
            max_abs = max_abs.max(qx.abs());
            samples.push((x, qx));
        }
        let ratio = max_abs / scale;
        Ok(QDiagnostics {
            samples,
            max_abs,
            scale,
            ratio,
            tol,
            vanishes: ratio <= tol,
        })
    }

    /// Coefficients after `dτ = h(x)dt`: `(γ + h′/h, A/h, b/h²)`.
    pub fn apply_pure_sundman(&self, h: &ScalarFunction) -> Result<Self> {
        let h = h.renamed(POSITION).with_domain(self.domain);
        for x in self.domain.grid(PROBE_POINTS) {
            let v = h.eval(x)?;
            if !(v > 0.0) {
                return Err(Error::invalid(format!("h must be positive on the domain; h({x}) = {v}")));
            }
        }
        if h.expr().is_const(1.0) {
            return Ok(self.clone());
        }
        let he = h.expr().clone();
        let dh = differentiate(&he, POSITION);
        Self::new(
            self.gamma.expr().clone() + dh / he.clone(),
            self.a.expr().clone() / he.clone(),
            self.b.expr().clone() / Expr::powi(he, 2),
            self.domain,
        )
    }

    /// Coefficients in `x̄ = φ(x)`: `((γ − J′/J)/J, A, J·b)` composed with
    /// `φ⁻¹`, on the domain `φ(domain)`.
    pub fn apply_coordinate_change(&self, phi: &ScalarFunction, tol: f64) -> Result<Self> {
        let phi = phi.renamed(POSITION).with_domain(self.domain);
        if *phi.expr() == Expr::var(POSITION) {
            return Ok(self.clone());
        }
        let j = simplify(&differentiate(phi.expr(), POSITION));
        let dj = differentiate(&j, POSITION);
        let gamma = (self.gamma.expr().clone() - dj / j.clone()) / j.clone();
        let b = j * self.b.expr().clone();
        let inverse = NumericFunction::inverse_of(&phi, tol)?;
        let back = inverse.apply(Expr::var(POSITION));
        Self::new(
            gamma.substitute(POSITION, &back),
            self.a.expr().substitute(POSITION, &back),
            b.substitute(POSITION, &back),
            inverse.domain(),
        )
    }

    /// Coefficients of the matched-point map `x ↦ (φ(x), coefficients)`
    /// without inverting φ: values of the transformed coefficients at
    /// `φ(x)`.
    pub fn transformed_at(&self, t: &GenSundman, x: f64) -> Result<(f64, f64, f64)> {
        let (g, a, b) = self.coefficients_at(x)?;
        let h = t.h().eval(x)?;
        let dh = t.h().derivative().eval(x)?;
        let j = t.phi().derivative().eval(x)?;
        let dj = t.phi().derivative().derivative().eval(x)?;
        let (g1, a1, b1) = (g + dh / h, a / h, b / (h * h));
        Ok(((g1 - dj / j) / j, a1, j * b1))
    }

    /// Apply `(h, φ)`: the pure Sundman factor first, then the coordinate
    /// change.
    pub fn apply_transform(&self, t: &GenSundman, tol: f64) -> Result<Self> {
        if t.domain() != self.domain {
            let s = self.restrict(t.domain())?;
            return s.apply_pure_sundman(t.h())?.apply_coordinate_change(t.phi(), tol);
        }
        self.apply_pure_sundman(t.h())?.apply_coordinate_change(t.phi(), tol)
    }
}

/// Sum of the magnitudes of the individual terms of Q: the size Q would
/// have without cancellation.
#[allow(clippy::too_many_arguments)]
fn q_term_magnitude(g: f64, a: f64, b: f64, dg: f64, da: f64, db: f64, dda: f64, ddb: f64) -> f64 {
    let p_prime_terms = (da * db).abs()
        + (a * ddb).abs()
        + (dg * a * b).abs()
        + (g * da * b).abs()
        + (g * a * db).abs()
        + (dda * b).abs()
        + (da * db).abs();
    let p_terms = (a * db).abs() + (g * a * b).abs() + (da * b).abs();
    a.abs() * p_prime_terms + 3.0 * da.abs() * p_terms
}

/// Velocity sample box for bivariate identities.
const VELOCITY_BOX: (f64, f64) = (-2.0, 2.0);
const NORMALIZE_GRID: usize = 16;

/// Read `ẍ = X(x, v)` as `ẍ + γv² + Av + b = 0`.
pub fn normalize(x_rhs: &Expr, domain: Interval) -> Result<Normalized> {
    if let Some(other) = x_rhs.variables().into_iter().find(|n| n != POSITION && n != VELOCITY) {
        return Err(Error::UnboundVariable(other));
    }
    let vel = Interval::new(VELOCITY_BOX.0, VELOCITY_BOX.1)?;
    let compiled = x_rhs.compile(&[POSITION, VELOCITY])?;
    let d1 = differentiate(x_rhs, VELOCITY);
    let d2 = differentiate(&d1, VELOCITY);
    let d3 = differentiate(&d2, VELOCITY).compile(&[POSITION, VELOCITY])?;

    let xs = domain.grid(NORMALIZE_GRID);
    let vs = vel.grid(NORMALIZE_GRID);
    let mut scale = 1.0f64;
    for &x in &xs {
        for &v in &vs {
            scale = scale.max(compiled.eval(&[x, v])?.abs());
        }
    }
    for &x in &xs {
        for &v in &vs {
            let t = d3.eval(&[x, v])?;
            if t.abs() > 1e-10 * scale {
                return Ok(Normalized::NotQuadratic {
                    reason: format!("third velocity derivative is {t:e} at (x, v) = ({x}, {v})"),
                });
            }
        }
    }

    let zero = Expr::zero();
    let gamma = simplify(&(-0.5 * d2.substitute(VELOCITY, &zero)));
    let a = simplify(&-d1.substitute(VELOCITY, &zero));
    let b = simplify(&-x_rhs.substitute(VELOCITY, &zero));
    let sode = QuadraticSode::new(gamma, a, b, domain)?;

    // The read-off coefficients must reproduce X off the zero section.
    for &x in &xs {
        for v in [1.0, -1.0] {
            let direct = compiled.eval(&[x, v])?;
            let rebuilt = sode.acceleration(x, v)?;
            if (direct - rebuilt).abs() > 1e-10 * scale {
                return Ok(Normalized::NotQuadratic {
                    reason: format!("quadratic reconstruction misses X by {:e} at (x, v) = ({x}, {v})", direct - rebuilt),
                });
            }
        }
    }
    Ok(Normalized::Quadratic(sode))
}
