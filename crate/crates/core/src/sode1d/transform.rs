use super::sode::{POSITION, PROBE_POINTS};
use crate::error::{Error, Result};
use crate::expr::{simplify, Expr, ScalarFunction};
use crate::interval::Interval;
use crate::numerics::NumericFunction;

/// A generalised Sundman transformation `y = φ(x)`, `dτ = h(x)·dt`.
///
/// `h` is always the rate `dτ/dt`. A time rescaling written `dt = f·dτ`
/// corresponds to `h = 1/f`.
#[derive(Clone, Debug)]
pub struct GenSundman {
    h: ScalarFunction,
    phi: ScalarFunction,
    domain: Interval,
}

/// Order in which the two factors of a transformation are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorOrder {
    /// `(h, φ) = (1, φ) ⋆ (h, id)`: rescale time first, then change coordinate.
    SundmanThenCoordinate,
    /// `(h, φ) = (h∘φ⁻¹, id) ⋆ (1, φ)`: change coordinate first, then
    /// rescale time in the new coordinate.
    CoordinateThenSundman,
}

#[derive(Debug, Clone)]
pub struct Factors {
    pub coordinate_part: GenSundman,
    pub sundman_part: GenSundman,
    pub order: FactorOrder,
}

impl Factors {
    /// Recompose the factors in their recorded order.
    pub fn product(&self) -> Result<GenSundman> {
        match self.order {
            FactorOrder::SundmanThenCoordinate => compose(&self.coordinate_part, &self.sundman_part),
            FactorOrder::CoordinateThenSundman => compose(&self.sundman_part, &self.coordinate_part),
        }
    }
}

fn is_identity_map(phi: &ScalarFunction) -> bool {
    *phi.expr() == Expr::var(POSITION)
}

impl GenSundman {
    /// Build and validate: `h > 0` and `φ′` of constant nonzero sign at the
    /// probe points.
    pub fn new(h: ScalarFunction, phi: ScalarFunction, domain: Interval) -> Result<Self> {
        let h = h.renamed(POSITION).with_domain(domain);
        let phi = phi.renamed(POSITION).with_domain(domain);
        let slope = phi.derivative();
        let mut sign = 0.0f64;
        for x in domain.grid(PROBE_POINTS) {
            let hv = h.eval(x)?;
            if !(hv > 0.0) || !hv.is_finite() {
                return Err(Error::invalid(format!("h must be positive; h({x}) = {hv}")));
            }
            let s = slope.eval(x)?;
            if s == 0.0 || !s.is_finite() || (sign != 0.0 && s.signum() != sign) {
                return Err(Error::NonMonotone {
                    lo: domain.lo(),
                    hi: domain.hi(),
                });
            }
            sign = s.signum();
        }
        Ok(Self { h, phi, domain })
    }

    pub fn identity(domain: Interval) -> Self {
        Self {
            h: ScalarFunction::constant(1.0, POSITION, domain),
            phi: ScalarFunction::identity(POSITION, domain),
            domain,
        }
    }

    /// `(h, id)`.
    pub fn pure_sundman(h: ScalarFunction) -> Result<Self> {
        let d = h.domain();
        Self::new(h, ScalarFunction::identity(POSITION, d), d)
    }

    /// `(1, φ)`.
    pub fn coordinate(phi: ScalarFunction) -> Result<Self> {
        let d = phi.domain();
        Self::new(ScalarFunction::constant(1.0, POSITION, d), phi, d)
    }

    pub fn parse(h: &str, phi: &str, domain: Interval, params: &[(&str, f64)]) -> Result<Self> {
        Self::new(
            ScalarFunction::parse(h, POSITION, params, domain)?,
            ScalarFunction::parse(phi, POSITION, params, domain)?,
            domain,
        )
    }

    /// The rate `dτ/dt` as a function of the original coordinate.
    pub fn h(&self) -> &ScalarFunction {
        &self.h
    }

    /// Same as [`GenSundman::h`], named for its direction.
    pub fn h_dtau_per_dt(&self) -> &ScalarFunction {
        &self.h
    }

    pub fn phi(&self) -> &ScalarFunction {
        &self.phi
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn is_identity(&self) -> bool {
        self.h.expr().is_const(1.0) && is_identity_map(&self.phi)
    }

    pub fn is_closed_form(&self) -> bool {
        self.h.is_closed_form() && self.phi.is_closed_form()
    }

    /// `φ(domain)`, oriented increasingly.
    pub fn range(&self) -> Result<Interval> {
        if is_identity_map(&self.phi) {
            return Ok(self.domain);
        }
        Ok(NumericFunction::inverse_of(&self.phi, 1e-15)?.domain())
    }

    /// `(h(x), φ(x))`.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        Ok((self.h.eval(x)?, self.phi.eval(x)?))
    }

    /// `(x, v) ↦ (φ(x), φ′(x)·v/h(x))`.
    pub fn map_state(&self, x: f64, v: f64) -> Result<(f64, f64)> {
        let (h, y) = self.eval(x)?;
        let j = self.phi.derivative().eval(x)?;
        Ok((y, j * v / h))
    }

    /// Same transformation on a smaller domain.
    pub fn restrict(&self, domain: Interval) -> Result<Self> {
        if !self.domain.contains_interval(&domain) {
            return Err(Error::DomainMismatch(format!("{domain} is not inside {}", self.domain)));
        }
        Ok(Self {
            h: self.h.with_domain(domain),
            phi: self.phi.with_domain(domain),
            domain,
        })
    }

    /// The group inverse `((1/h)∘φ⁻¹, φ⁻¹)` on `φ(domain)`.
    pub fn inverse(&self, tol: f64) -> Result<Self> {
        if is_identity_map(&self.phi) {
            let h = simplify(&(1.0 / self.h.expr().clone()));
            return Self::new(ScalarFunction::new(h, POSITION, self.domain)?, self.phi.clone(), self.domain);
        }
        let inv = NumericFunction::inverse_of(&self.phi, tol)?;
        let range = inv.domain();
        let back = inv.apply(Expr::var(POSITION));
        let h = Expr::div(Expr::one(), self.h.at(&back));
        Self::new(
            ScalarFunction::new(h, POSITION, range)?,
            ScalarFunction::new(back, POSITION, range)?,
            range,
        )
    }

    /// Both factors for the requested order.
    pub fn factorize(&self, order: FactorOrder, tol: f64) -> Result<Factors> {
        let d = self.domain;
        let coordinate_part = Self {
            h: ScalarFunction::constant(1.0, POSITION, d),
            phi: self.phi.clone(),
            domain: d,
        };
        let sundman_part = match order {
            FactorOrder::SundmanThenCoordinate => Self {
                h: self.h.clone(),
                phi: ScalarFunction::identity(POSITION, d),
                domain: d,
            },
            FactorOrder::CoordinateThenSundman => {
                if is_identity_map(&self.phi) {
                    Self {
                        h: self.h.clone(),
                        phi: self.phi.clone(),
                        domain: d,
                    }
                } else {
                    let inv = NumericFunction::inverse_of(&self.phi, tol)?;
                    let range = inv.domain();
                    let h = self.h.at(&inv.apply(Expr::var(POSITION)));
                    Self {
                        h: ScalarFunction::new(h, POSITION, range)?,
                        phi: ScalarFunction::identity(POSITION, range),
                        domain: range,
                    }
                }
            }
        };
        Ok(Factors {
            coordinate_part,
            sundman_part,
            order,
        })
    }
}

/// The group product `t2 ⋆ t1 = ((h₂∘φ₁)·h₁, φ₂∘φ₁)`: apply `t1`, then `t2`.
///
/// The result lives on the part of `t1`'s domain that `φ₁` maps into
/// `t2`'s domain.
pub fn compose(t2: &GenSundman, t1: &GenSundman) -> Result<GenSundman> {
    let domain = preimage_domain(t1, t2.domain)?;
    let inner = t1.phi.expr();
    let h = simplify(&(t2.h.at(inner) * t1.h.expr().clone()));
    let phi = simplify(&t2.phi.at(inner));
    GenSundman::new(
        ScalarFunction::new(h, POSITION, domain)?,
        ScalarFunction::new(phi, POSITION, domain)?,
        domain,
    )
}

/// Largest subinterval of `t.domain` whose image under φ lies in `target`.
fn preimage_domain(t: &GenSundman, target: Interval) -> Result<Interval> {
    let mismatch = || Error::DomainMismatch(format!("the image of {} does not meet {target}", t.domain));
    if is_identity_map(&t.phi) {
        return t.domain.intersect(&target).ok_or_else(mismatch);
    }
    let inv = NumericFunction::inverse_of(&t.phi, 1e-15)?;
    let range = inv.domain();
    if target.contains_interval(&range) {
        return Ok(t.domain);
    }
    let meet = range.intersect(&target).ok_or_else(mismatch)?;
    let pull = |y: f64, fallback_low: bool| -> Result<f64> {
        if inv.domain().contains(y) {
            inv.evaluate(y)
        } else {
            // y is an end of the range: map back to the matching domain end
            let increasing = t.phi.derivative().eval(t.domain.midpoint())? > 0.0;
            Ok(if increasing == fallback_low { t.domain.lo() } else { t.domain.hi() })
        }
    };
    let a = pull(meet.lo(), true)?;
    let b = pull(meet.hi(), false)?;
    Interval::spanning(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn same(t: &GenSundman, h: impl Fn(f64) -> f64, phi: impl Fn(f64) -> f64, tol: f64) {
        for x in t.domain().grid(16) {
            let (hv, pv) = t.eval(x).unwrap();
            assert!((hv - h(x)).abs() <= tol * h(x).abs().max(1.0), "h({x}) = {hv}");
            assert!((pv - phi(x)).abs() <= tol * phi(x).abs().max(1.0), "phi({x}) = {pv}");
        }
    }

    #[test]
    fn validation() {
        let d = dom(1.0, 2.0);
        assert!(GenSundman::parse("x - 1.5", "x", d, &[]).is_err());
        assert!(matches!(GenSundman::parse("1", "(x - 1.5)^2", d, &[]), Err(Error::NonMonotone { .. })));
        assert!(GenSundman::parse("x", "-x^3", d, &[]).is_ok());
    }

    #[test]
    fn composition_examples() {
        let d = dom(1.0, 2.0);
        let t1 = GenSundman::parse("x", "x^2", d, &[]).unwrap();
        let t2 = GenSundman::parse("1", "x + 1", dom(0.0, 10.0), &[]).unwrap();
        let c = compose(&t2, &t1).unwrap();
        assert_eq!(c.domain(), d);
        same(&c, |x| x, |x| x * x + 1.0, 1e-15);

        let id = GenSundman::identity(dom(-100.0, 100.0));
        let c = compose(&id, &t1).unwrap();
        same(&c, |x| x, |x| x * x, 1e-15);
    }

    #[test]
    fn composition_restricts_domain() {
        let t1 = GenSundman::parse("1", "2*x", dom(0.0, 3.0), &[]).unwrap();
        let t2 = GenSundman::parse("1", "x", dom(1.0, 4.0), &[]).unwrap();
        let c = compose(&t2, &t1).unwrap();
        assert!((c.domain().lo() - 0.5).abs() < 1e-12 && (c.domain().hi() - 2.0).abs() < 1e-12);
        let far = GenSundman::identity(dom(10.0, 20.0));
        assert!(matches!(compose(&far, &t1), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn inverse_examples() {
        let d = dom(-4.0, 4.0);
        let id = GenSundman::identity(d);
        assert!(id.inverse(1e-15).unwrap().is_identity());

        let t = GenSundman::parse("1", "2*x", d, &[]).unwrap();
        let inv = t.inverse(1e-15).unwrap();
        same(&inv, |_| 1.0, |y| y / 2.0, 1e-14);

        let t = GenSundman::parse("x", "x^3/3", dom(1.0, 3.0), &[]).unwrap();
        let inv = t.inverse(1e-15).unwrap();
        let (h, phi) = inv.eval(8.0 / 3.0).unwrap();
        assert!((h - 0.5).abs() < 1e-12 && (phi - 2.0).abs() < 1e-12);

        let round = compose(&inv, &t).unwrap();
        same(&round, |_| 1.0, |x| x, 1e-12);
    }

    #[test]
    fn factorizations() {
        let d = dom(1.0, 2.0);
        let t = GenSundman::parse("x", "x^2", d, &[]).unwrap();
        let f = t.factorize(FactorOrder::SundmanThenCoordinate, 1e-15).unwrap();
        same(&f.coordinate_part, |_| 1.0, |x| x * x, 0.0);
        same(&f.sundman_part, |x| x, |x| x, 0.0);
        same(&f.product().unwrap(), |x| x, |x| x * x, 1e-15);

        let f = t.factorize(FactorOrder::CoordinateThenSundman, 1e-15).unwrap();
        same(&f.sundman_part, |y| y.sqrt(), |y| y, 1e-13);
        same(&f.product().unwrap(), |x| x, |x| x * x, 1e-12);

        let pure = GenSundman::parse("x", "x", d, &[]).unwrap();
        let f = pure.factorize(FactorOrder::SundmanThenCoordinate, 1e-15).unwrap();
        assert!(f.coordinate_part.is_identity());
        let coord = GenSundman::parse("1", "x^2", d, &[]).unwrap();
        let f = coord.factorize(FactorOrder::SundmanThenCoordinate, 1e-15).unwrap();
        assert!(f.sundman_part.is_identity());
    }

    #[test]
    fn state_map() {
        let d = dom(1.0, 3.0);
        let id = GenSundman::identity(d);
        assert_eq!(id.map_state(1.5, -2.0).unwrap(), (1.5, -2.0));
        let t = GenSundman::parse("x", "x^3/3", d, &[]).unwrap();
        let (y, w) = t.map_state(2.0, 5.0).unwrap();
        assert!((y - 8.0 / 3.0).abs() < 1e-15 && (w - 10.0).abs() < 1e-14);
        assert_eq!(t.map_state(2.5, 0.0).unwrap().1, 0.0);
        assert!(t.map_state(5.0, 1.0).is_err());
    }
}
