use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::field::SodeField;
use crate::error::{Error, Result};
use crate::expr::{differentiate, simplify, Compiled, Expr};

/// Relative tolerance for the sampled vanishing of a bracket identity.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Relative tolerance for the least-squares reconstruction of a certificate.
pub const FIT_TOL: f64 = 1e-8;

/// `Xⁱ = Σⱼ(Aⁱⱼxʲ + Bⁱⱼvʲ) + Cⁱ` with constant coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineCertificate {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    /// Largest reconstruction error over the probe points.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearityCheck {
    pub holds: bool,
    /// Largest sampled value of the defining identity.
    pub identity_residual: f64,
    pub scale: f64,
    pub certificate: Option<AffineCertificate>,
}

/// Certificate `Aⁱⱼ(x) = ∂Xⁱ/∂vʲ` of a field linear in the velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct FibreLinearCheck {
    pub holds: bool,
    pub identity_residual: f64,
    pub scale: f64,
    pub certificate: Option<Vec<Vec<Expr>>>,
}

impl FibreLinearCheck {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "holds": self.holds,
            "identity_residual": self.identity_residual,
            "scale": self.scale,
            "certificate": self.certificate.as_ref().map(|rows| {
                rows.iter().map(|r| r.iter().map(|e| e.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>()
            }),
        })
    }
}

struct Probe {
    points: Vec<Vec<f64>>,
    scale: f64,
}

fn slots(field: &SodeField) -> Vec<String> {
    let mut s = field.positions();
    s.extend(field.velocities());
    s
}

fn compile_all(field: &SodeField, exprs: &[Expr]) -> Result<Vec<Compiled>> {
    let names = slots(field);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    exprs.iter().map(|e| e.compile(&refs)).collect()
}

fn probe(field: &SodeField) -> Result<Probe> {
    let points = field.probe_points();
    let mut scale = 1.0f64;
    for p in &points {
        let (x, v) = p.split_at(field.n());
        for value in field.eval(x, v)? {
            scale = scale.max(value.abs());
        }
    }
    Ok(Probe { points, scale })
}

fn max_abs(exprs: &[Compiled], points: &[Vec<f64>]) -> Result<f64> {
    let mut m = 0.0f64;
    for p in points {
        for e in exprs {
            m = m.max(e.eval(p)?.abs());
        }
    }
    Ok(m)
}

/// `Σⱼ(xʲ∂X/∂xʲ + vʲ∂X/∂vʲ)`, the dilation applied to one component.
fn dilation(field: &SodeField, c: &Expr) -> Expr {
    field
        .positions()
        .iter()
        .chain(field.velocities().iter())
        .fold(Expr::zero(), |acc, name| acc + Expr::var(name) * differentiate(c, name))
}

/// `Σₖ vᵏ∂X/∂vᵏ`, the fibre dilation applied to one component.
fn fibre_dilation(field: &SodeField, c: &Expr) -> Expr {
    field
        .velocities()
        .iter()
        .fold(Expr::zero(), |acc, name| acc + Expr::var(name) * differentiate(c, name))
}

/// Least-squares fit of every component (minus `offset`) against `(x, v)`.
fn fit_matrices(field: &SodeField, points: &[Vec<f64>], offset: &[f64]) -> Result<AffineCertificate> {
    let n = field.n();
    let m = points.len();
    if m < 2 * n + 1 {
        return Err(Error::DegenerateFit(format!("{m} samples for {} unknowns", 2 * n)));
    }
    let design = DMatrix::from_fn(m, 2 * n, |r, c| points[r][c]);
    let svd = design.clone().svd(true, true);
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![vec![0.0; n]; n];
    let mut residual = 0.0f64;
    for i in 0..n {
        let rhs = DVector::from_iterator(
            m,
            points.iter().map(|p| {
                let (x, v) = p.split_at(n);
                field.eval(x, v).map(|vals| vals[i] - offset[i])
            }).collect::<Result<Vec<_>>>()?,
        );
        let coef = svd
            .solve(&rhs, 1e-14)
            .map_err(|e| Error::DegenerateFit(e.to_string()))?;
        residual = residual.max((&design * &coef - &rhs).amax());
        for j in 0..n {
            a[i][j] = coef[j];
            b[i][j] = coef[n + j];
        }
    }
    Ok(AffineCertificate {
        a,
        b,
        c: offset.to_vec(),
        residual,
    })
}

/// Homogeneous linearity: `Δ̃Xⁱ = Xⁱ` on samples, then constant `A`, `B`
/// recovered by least squares.
pub fn check_linear(field: &SodeField) -> Result<LinearityCheck> {
    let probe = probe(field)?;
    let identity: Vec<Expr> = field
        .components()
        .iter()
        .map(|c| simplify(&(dilation(field, c) - c.clone())))
        .collect();
    let residual = max_abs(&compile_all(field, &identity)?, &probe.points)?;
    finish(field, &probe, residual, &vec![0.0; field.n()])
}

fn finish(field: &SodeField, probe: &Probe, residual: f64, offset: &[f64]) -> Result<LinearityCheck> {
    let mut check = LinearityCheck {
        holds: false,
        identity_residual: residual,
        scale: probe.scale,
        certificate: None,
    };
    if residual > IDENTITY_TOL * probe.scale {
        return Ok(check);
    }
    let cert = fit_matrices(field, &probe.points, offset)?;
    check.holds = cert.residual <= FIT_TOL * probe.scale;
    if check.holds {
        check.certificate = Some(cert);
    }
    Ok(check)
}

/// Inhomogeneous linearity: `Cⁱ = Xⁱ − Δ̃Xⁱ` constant on samples, then `A`,
/// `B` recovered from `Xⁱ − Cⁱ`.
pub fn check_inhomogeneous_linear(field: &SodeField) -> Result<LinearityCheck> {
    let probe = probe(field)?;
    let defects: Vec<Expr> = field
        .components()
        .iter()
        .map(|c| simplify(&(c.clone() - dilation(field, c))))
        .collect();
    let compiled = compile_all(field, &defects)?;
    let first = &probe.points[0];
    let offset: Vec<f64> = compiled.iter().map(|c| c.eval(first)).collect::<Result<_>>()?;
    let mut spread = 0.0f64;
    for p in &probe.points {
        for (c, &c0) in compiled.iter().zip(&offset) {
            spread = spread.max((c.eval(p)? - c0).abs());
        }
    }
    finish(field, &probe, spread, &offset)
}

/// Linearity in the velocities: `Σₖ vᵏ∂Xⁱ/∂vᵏ = Xⁱ` on samples, with the
/// coefficient functions confirmed independent of `v`.
pub fn check_fibre_linear(field: &SodeField) -> Result<FibreLinearCheck> {
    let probe = probe(field)?;
    let identity: Vec<Expr> = field
        .components()
        .iter()
        .map(|c| simplify(&(fibre_dilation(field, c) - c.clone())))
        .collect();
    let residual = max_abs(&compile_all(field, &identity)?, &probe.points)?;
    let mut check = FibreLinearCheck {
        holds: false,
        identity_residual: residual,
        scale: probe.scale,
        certificate: None,
    };
    if residual > IDENTITY_TOL * probe.scale {
        return Ok(check);
    }
    let vel = field.velocities();
    let cert: Vec<Vec<Expr>> = field
        .components()
        .iter()
        .map(|c| vel.iter().map(|name| simplify(&differentiate(c, name))).collect())
        .collect();
    let second: Vec<Expr> = cert
        .iter()
        .flatten()
        .flat_map(|e| vel.iter().map(move |name| differentiate(e, name)))
        .collect();
    let curvature = max_abs(&compile_all(field, &second)?, &probe.points)?;
    check.holds = curvature <= IDENTITY_TOL * probe.scale;
    if check.holds {
        check.certificate = Some(cert);
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;

    fn dom(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn field(src: &[&str]) -> SodeField {
        SodeField::parse(src, vec![dom(-1.5, 2.0); src.len()], &[("omega", 1.3), ("E", -0.5), ("k", 1.0)]).unwrap()
    }

    #[test]
    fn linear_field_recovers_matrices() {
        let g = field(&["2*x1 - 3*x2 + 0.5*v1", "-x1 + 4*v2 - 0.25*v1"]);
        let c = check_linear(&g).unwrap();
        assert!(c.holds);
        let cert = c.certificate.unwrap();
        let expect_a = [[2.0, -3.0], [-1.0, 0.0]];
        let expect_b = [[0.5, 0.0], [-0.25, 4.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((cert.a[i][j] - expect_a[i][j]).abs() < 1e-10);
                assert!((cert.b[i][j] - expect_b[i][j]).abs() < 1e-10);
            }
        }
        let inh = check_inhomogeneous_linear(&g).unwrap();
        assert!(inh.holds && inh.certificate.unwrap().c.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn nonlinear_fields_are_not_linear() {
        assert!(!check_linear(&field(&["-(omega^2)*x^3"])).unwrap().holds);
        let c = check_linear(&field(&["x*v"])).unwrap();
        assert!(!c.holds && c.identity_residual > 0.1);
    }

    #[test]
    fn degree_one_but_nonlinear_is_rejected_by_the_fit() {
        let c = check_linear(&field(&["sqrt(x1^2 + x2^2 + 1e-300)", "0"])).unwrap();
        assert!(!c.holds);
    }

    #[test]
    fn fibre_linear() {
        let c = check_fibre_linear(&field(&["sin(x1)*v1", "sin(x1)*v2"])).unwrap();
        assert!(c.holds);
        let cert = c.certificate.unwrap();
        assert_eq!(cert[0][0].to_string(), "sin(x1)");
        assert!(cert[0][1].is_const(0.0));
        assert!(!check_fibre_linear(&field(&["-(omega^2)*x"])).unwrap().holds);
        assert!(!check_fibre_linear(&field(&["v^2"])).unwrap().holds);
        assert!(!check_fibre_linear(&field(&["sqrt(v1^2 + v2^2 + 1e-300)", "0"])).unwrap().holds);
    }

    #[test]
    fn inhomogeneous_linear() {
        let c = check_inhomogeneous_linear(&field(&["2*E*x + k"])).unwrap();
        assert!(c.holds);
        let cert = c.certificate.unwrap();
        assert!((cert.a[0][0] + 1.0).abs() < 1e-10 && cert.b[0][0].abs() < 1e-10 && (cert.c[0] - 1.0).abs() < 1e-12);
        assert!(!check_linear(&field(&["2*E*x + k"])).unwrap().holds);
        assert!(!check_inhomogeneous_linear(&field(&["x^2"])).unwrap().holds);
    }
}
