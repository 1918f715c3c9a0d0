use std::fmt::Write;

use serde::Serialize;
use serde_json::{json, Value};

use super::sode::{normalize, Normalized, QDiagnostics, QuadraticSode, POSITION};
use super::transform::GenSundman;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::expr::{Expr, Func, ScalarFunction};
use crate::interval::Interval;
use crate::numerics::{antiderivative, fit_affine, AffineFit};

/// Knots used when exporting a transformation without a closed form.
pub const EXPORT_KNOTS: usize = 256;

/// Which linear target was reached, with the transformation that reaches it.
#[derive(Debug, Clone)]
pub enum LinearisationOutcome {
    NotQuadratic {
        reason: String,
    },
    /// Target `y″ = 0`.
    FreeParticle {
        transform: GenSundman,
    },
    /// Target `y″ + 1 = 0`.
    UnitForcing {
        transform: GenSundman,
    },
    /// Target `y″ + α·y′ + B·y + C = 0`.
    Linear {
        transform: GenSundman,
        alpha: f64,
        b: f64,
        c: f64,
    },
    NotLinearisable {
        /// Largest sampled `|Q|` relative to its scale.
        q_residual: f64,
        sample_points: Vec<(f64, f64)>,
    },
}

impl LinearisationOutcome {
    pub fn case(&self) -> &'static str {
        match self {
            Self::NotQuadratic { .. } => "not_quadratic",
            Self::FreeParticle { .. } => "free_particle",
            Self::UnitForcing { .. } => "unit_forcing",
            Self::Linear { .. } => "linear",
            Self::NotLinearisable { .. } => "not_linearisable",
        }
    }

    pub fn transform(&self) -> Option<&GenSundman> {
        match self {
            Self::FreeParticle { transform } | Self::UnitForcing { transform } | Self::Linear { transform, .. } => {
                Some(transform)
            }
            _ => None,
        }
    }

    pub fn is_linearisable(&self) -> bool {
        self.transform().is_some()
    }

    /// `(α, B, C)` of the target `y″ + αy′ + By + C = 0`.
    pub fn target(&self) -> Option<(f64, f64, f64)> {
        match self {
            Self::FreeParticle { .. } => Some((0.0, 0.0, 0.0)),
            Self::UnitForcing { .. } => Some((0.0, 0.0, 1.0)),
            Self::Linear { alpha, b, c, .. } => Some((*alpha, *b, *c)),
            _ => None,
        }
    }
}

/// Integration constants fixed by the engine: `φ(x₀) = 0`, `K = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalization {
    pub base_point: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

#[derive(Debug, Clone)]
pub struct Linearisation {
    pub outcome: LinearisationOutcome,
    pub domain: Interval,
    pub normalization: Option<Normalization>,
    pub q: Option<QDiagnostics>,
    pub affine: Option<AffineFit>,
    /// Whether A and b were judged identically zero.
    pub a_vanishes: Option<bool>,
    pub b_vanishes: Option<bool>,
}

impl Linearisation {
    fn not_quadratic(reason: String, domain: Interval) -> Self {
        Self {
            outcome: LinearisationOutcome::NotQuadratic { reason },
            domain,
            normalization: None,
            q: None,
            affine: None,
            a_vanishes: None,
            b_vanishes: None,
        }
    }

    /// Human-readable summary, one fact per line.
    pub fn describe(&self) -> String {
        let mut out = format!("case: {}\n", self.outcome.case());
        match &self.outcome {
            LinearisationOutcome::NotQuadratic { reason } => {
                let _ = writeln!(out, "reason: {reason}");
            }
            LinearisationOutcome::NotLinearisable { q_residual, .. } => {
                let _ = writeln!(out, "max |Q|/scale = {q_residual:.3e}");
            }
            _ => {}
        }
        if let Some((alpha, b, c)) = self.outcome.target() {
            let _ = writeln!(out, "target: y'' + {alpha}·y' + {b}·y + {c} = 0");
        }
        if let Some(t) = self.outcome.transform() {
            let _ = writeln!(out, "dtau/dt = h(x) = {}", t.h());
            let _ = writeln!(out, "y = phi(x) = {}", t.phi());
        }
        if let Some(n) = &self.normalization {
            let _ = writeln!(out, "normalization: phi({}) = 0, K = {}", n.base_point, n.k);
        }
        if let Some(q) = &self.q {
            let _ = writeln!(out, "Q: max |Q| = {:.3e}, scale {:.3e}, vanishes: {}", q.max_abs, q.scale, q.vanishes);
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "case": self.outcome.case(),
            "domain": [self.domain.lo(), self.domain.hi()],
            "linearisable": self.outcome.is_linearisable(),
        });
        let m = v.as_object_mut().expect("object literal");
        match &self.outcome {
            LinearisationOutcome::NotQuadratic { reason } => {
                m.insert("reason".into(), json!(reason));
            }
            LinearisationOutcome::NotLinearisable { q_residual, sample_points } => {
                m.insert("q_residual".into(), json!(q_residual));
                m.insert("q_samples".into(), json!(sample_points));
            }
            _ => {}
        }
        if let Some(t) = self.outcome.transform() {
            m.insert("transform".into(), transform_json(t));
        }
        if let Some((alpha, b, c)) = self.outcome.target() {
            m.insert("alpha".into(), json!(alpha));
            m.insert("B".into(), json!(b));
            m.insert("C".into(), json!(c));
        }
        if let Some(n) = &self.normalization {
            m.insert("normalization".into(), json!(n));
        }
        if let Some(q) = &self.q {
            m.insert(
                "q_diagnostics".into(),
                json!({
                    "max_abs": q.max_abs,
                    "scale": q.scale,
                    "ratio": q.ratio,
                    "tol": q.tol,
                    "vanishes": q.vanishes,
                    "samples": q.samples,
                }),
            );
        }
        if let Some(fit) = &self.affine {
            m.insert("affine_fit".into(), json!(fit));
        }
        if let Some(z) = self.a_vanishes {
            m.insert("A_vanishes".into(), json!(z));
        }
        if let Some(z) = self.b_vanishes {
            m.insert("b_vanishes".into(), json!(z));
        }
        v
    }
}

/// A closed-form function as its expression string, anything else as a
/// knot table `[x, f(x), f′(x)]` for cubic Hermite interpolation.
pub fn function_json(f: &ScalarFunction) -> Value {
    if f.is_closed_form() {
        return json!({ "kind": "closed_form", "variable": f.var(), "expr": f.to_string() });
    }
    let df = f.derivative();
    let knots: Vec<[f64; 3]> = f
        .domain()
        .grid(EXPORT_KNOTS)
        .into_iter()
        .filter_map(|x| Some([x, f.eval(x).ok()?, df.eval(x).ok()?]))
        .collect();
    json!({
        "kind": "numeric",
        "variable": f.var(),
        "interpolation": "cubic-hermite",
        "definition": f.to_string(),
        "knots": knots,
    })
}

pub fn transform_json(t: &GenSundman) -> Value {
    json!({
        "h_dtau_per_dt": function_json(t.h()),
        "phi": function_json(t.phi()),
        "domain": [t.domain().lo(), t.domain().hi()],
    })
}

/// Normalize `ẍ = X(x, v)` and linearize when quadratic.
pub fn linearize_rhs(x_rhs: &Expr, domain: Interval, cfg: &RunConfig) -> Result<Linearisation> {
    match normalize(x_rhs, domain)? {
        Normalized::Quadratic(s) => linearize(&s, cfg),
        Normalized::NotQuadratic { reason } => Ok(Linearisation::not_quadratic(reason, domain)),
    }
}

/// `∫_{x0}^{x} f` as an expression in `x`: closed form for constants,
/// quadrature-backed otherwise.
fn integral(f: Expr, domain: Interval, x0: f64, tol: f64) -> Result<Expr> {
    if let Some(c) = f.as_const() {
        return Ok(if c == 0.0 {
            Expr::zero()
        } else {
            Expr::mul(Expr::Const(c), Expr::sub(Expr::var(POSITION), Expr::Const(x0)))
        });
    }
    let sf = ScalarFunction::new(f, POSITION, domain)?;
    Ok(antiderivative(&sf, Some(x0), tol)?.apply(Expr::var(POSITION)))
}

fn sign_on_grid(f: &ScalarFunction, grid: &[f64], what: &str) -> Result<f64> {
    let values: Vec<f64> = grid.iter().map(|&x| f.eval(x)).collect::<Result<_>>()?;
    let sign = values[0].signum();
    for (i, &v) in values.iter().enumerate() {
        if v == 0.0 || v.signum() != sign {
            let lo = grid[i.saturating_sub(1)];
            let hi = if v == 0.0 { grid[(i + 1).min(grid.len() - 1)] } else { grid[i] };
            return Err(Error::SignChange {
                what: what.to_string(),
                lo,
                hi,
            });
        }
    }
    Ok(sign)
}

fn max_abs_on(f: &ScalarFunction, grid: &[f64]) -> Result<f64> {
    grid.iter().try_fold(0.0f64, |m, &x| Ok(m.max(f.eval(x)?.abs())))
}

fn base_point(domain: Interval, cfg: &RunConfig) -> Result<f64> {
    let x0 = cfg.base_point.unwrap_or_else(|| domain.midpoint());
    if !domain.contains(x0) {
        return Err(Error::OutsideDomain {
            value: x0,
            lo: domain.lo(),
            hi: domain.hi(),
        });
    }
    Ok(x0)
}

/// Decide linearisability and synthesize the linearising transformation.
pub fn linearize(s: &QuadraticSode, cfg: &RunConfig) -> Result<Linearisation> {
    linearize_piece(s, s.domain(), cfg)
}

/// Linearize on `piece`, anchoring every antiderivative at the base point
/// of the parent domain so that all pieces share one normalization.
fn linearize_piece(parent: &QuadraticSode, piece: Interval, cfg: &RunConfig) -> Result<Linearisation> {
    cfg.validate()?;
    let s = &if piece == parent.domain() { parent.clone() } else { parent.restrict(piece)? };
    let domain = piece;
    let grid = domain.grid(cfg.grid_n);
    let scale = [s.gamma(), s.a(), s.b()]
        .iter()
        .try_fold(1.0f64, |m, f| Ok::<_, Error>(m.max(max_abs_on(f, &grid)?)))?;
    let a_zero = s.a().expr().is_const(0.0) || max_abs_on(s.a(), &grid)? <= cfg.zero_tol * scale;
    let b_zero = s.b().expr().is_const(0.0) || max_abs_on(s.b(), &grid)? <= cfg.zero_tol * scale;
    let q = s.q_test(cfg.grid_n, cfg.q_tol)?;
    let anchor_domain = parent.domain();
    let x0 = base_point(anchor_domain, cfg)?;
    let normalization = Some(Normalization { base_point: x0, k: 1.0 });

    let mut report = Linearisation {
        outcome: LinearisationOutcome::NotQuadratic { reason: String::new() },
        domain,
        normalization,
        q: Some(q.clone()),
        affine: None,
        a_vanishes: Some(a_zero),
        b_vanishes: Some(b_zero),
    };

    let g_int = integral(parent.gamma().expr().clone(), anchor_domain, x0, cfg.quad_tol)?;
    let exp_g = Expr::apply(Func::Exp, g_int.clone());
    let function = |e: Expr| ScalarFunction::new(crate::expr::simplify(&e), POSITION, domain);

    if a_zero && b_zero {
        let h = function(Expr::apply(Func::Exp, Expr::neg(g_int)))?;
        let transform = GenSundman::new(h, ScalarFunction::identity(POSITION, domain), domain)?;
        report.outcome = LinearisationOutcome::FreeParticle { transform };
        return Ok(report);
    }

    if a_zero {
        sign_on_grid(s.b(), &grid, "b")?;
        let b = s.b().expr().clone();
        let h = function(Expr::apply(Func::Abs, b.clone()) * exp_g.clone())?;
        let slope = b * Expr::apply(Func::Exp, 2.0 * g_int);
        let phi = function(integral(crate::expr::simplify(&slope), anchor_domain, x0, cfg.quad_tol)?)?;
        let transform = GenSundman::new(h, phi, domain)?;
        report.outcome = LinearisationOutcome::UnitForcing { transform };
        return Ok(report);
    }

    let alpha = sign_on_grid(s.a(), &grid, "A")?;
    if !q.vanishes {
        report.outcome = LinearisationOutcome::NotLinearisable {
            q_residual: q.ratio,
            sample_points: q.samples,
        };
        return Ok(report);
    }
    let a = s.a().expr().clone();
    let h = function(Expr::apply(Func::Abs, a.clone()))?;
    let slope = a * exp_g.clone();
    let phi = function(integral(crate::expr::simplify(&slope), anchor_domain, x0, cfg.quad_tol)?)?;
    let transform = GenSundman::new(h, phi, domain)?;

    // Forcing in the new coordinate, b·exp(G)/A, must be affine in φ.
    let exp_g = function(exp_g)?;
    let mut samples = Vec::with_capacity(grid.len());
    let mut b2_max = 0.0f64;
    for &x in &grid {
        let (_, av, bv) = s.coefficients_at(x)?;
        let b2 = bv * exp_g.eval(x)? / av;
        b2_max = b2_max.max(b2.abs());
        samples.push((transform.phi().eval(x)?, b2));
    }
    let mut fit = fit_affine(&samples)?;
    // Coefficients whose contribution over the sampled range is below the
    // fit tolerance are rounding noise; left in, a B of 1e-17 puts the
    // particular solution at −C/B.
    let floor = cfg.affine_tol * b2_max.max(1.0);
    let span = samples.iter().map(|s| s.0.abs()).fold(0.0, f64::max);
    if fit.slope.abs() * span <= floor {
        fit.slope = 0.0;
    }
    if fit.intercept.abs() <= floor {
        fit.intercept = 0.0;
    }
    fit.residual = samples.iter().map(|&(p, y)| (y - fit.at(p)).abs()).fold(0.0, f64::max);
    report.affine = Some(fit);
    if fit.residual > floor {
        return Err(Error::Diagnostics(format!(
            "Q vanishes (ratio {:e}) but the transformed forcing is not affine (residual {:e})",
            q.ratio, fit.residual
        )));
    }
    report.outcome = LinearisationOutcome::Linear {
        transform,
        alpha,
        b: fit.slope,
        c: fit.intercept,
    };
    Ok(report)
}

/// Zeros of `f` on the domain, located by bisection between grid samples of
/// opposite sign.
fn sign_changes(f: &ScalarFunction, grid: &[f64]) -> Result<Vec<f64>> {
    let mut roots = Vec::new();
    let values: Vec<f64> = grid.iter().map(|&x| f.eval(x)).collect::<Result<_>>()?;
    for i in 0..grid.len() {
        if values[i] == 0.0 {
            roots.push(grid[i]);
            continue;
        }
        if i + 1 < grid.len() && values[i] * values[i + 1] < 0.0 {
            let (mut lo, mut hi, mut f_lo) = (grid[i], grid[i + 1], values[i]);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = f.eval(mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == f_lo.signum() {
                    lo = mid;
                    f_lo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    Ok(roots)
}

/// Linearize separately on each maximal interval where the dividing
/// coefficient keeps its sign.
pub fn linearize_split(s: &QuadraticSode, cfg: &RunConfig) -> Result<Vec<Linearisation>> {
    cfg.validate()?;
    let domain = s.domain();
    let grid = domain.grid(cfg.grid_n);
    let scale = [s.gamma(), s.a(), s.b()]
        .iter()
        .try_fold(1.0f64, |m, f| Ok::<_, Error>(m.max(max_abs_on(f, &grid)?)))?;
    let a_zero = s.a().expr().is_const(0.0) || max_abs_on(s.a(), &grid)? <= cfg.zero_tol * scale;
    let divider = if a_zero { s.b() } else { s.a() };
    let roots = sign_changes(divider, &grid)?;
    let mut cuts = vec![domain.lo()];
    cuts.extend(roots);
    cuts.push(domain.hi());
    cuts.windows(2)
        .map(|w| linearize_piece(s, Interval::new(w[0], w[1])?, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn dom(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn cfg_at(x0: f64) -> RunConfig {
        RunConfig::default().with_base_point(x0)
    }

    /// Transformed coefficients at matched points must be the target's.
    fn assert_sound(s: &QuadraticSode, r: &Linearisation) {
        let t = r.outcome.transform().unwrap();
        let (alpha, b, c) = r.outcome.target().unwrap();
        for x in s.domain().grid(16) {
            let (g2, a2, b2) = s.transformed_at(t, x).unwrap();
            let y = t.phi().eval(x).unwrap();
            assert!(g2.abs() < 1e-6, "gamma {g2} at {x}");
            assert!((a2 - alpha).abs() < 1e-6, "A {a2} at {x}");
            assert!((b2 - (b * y + c)).abs() < 1e-6 * (b * y + c).abs().max(1.0), "b {b2} at {x}");
        }
    }

    #[test]
    fn free_particle_with_friction() {
        let s = QuadraticSode::parse("1/x", "0", "0", dom(0.5, 3.0), &[]).unwrap();
        let r = linearize(&s, &cfg_at(1.0)).unwrap();
        assert_eq!(r.outcome.case(), "free_particle");
        // G = log x, h = 1/x
        let t = r.outcome.transform().unwrap();
        assert!((t.h().eval(2.0).unwrap() - 0.5).abs() < 1e-11);
        assert_sound(&s, &r);
    }

    #[test]
    fn ermakov_unit_forcing() {
        let s = QuadraticSode::parse("2/x", "0", "omega^2/x^3", dom(0.3, 3.0), &[("omega", 1.0)]).unwrap();
        let r = linearize(&s, &cfg_at(1.0)).unwrap();
        assert_eq!(r.outcome.case(), "unit_forcing");
        let t = r.outcome.transform().unwrap();
        for x in [0.4, 1.0, 2.5] {
            assert!((t.h().eval(x).unwrap() * x - 1.0).abs() < 1e-9);
            assert!((t.phi().eval(x).unwrap() - (x * x - 1.0) / 2.0).abs() < 1e-9);
        }
        assert_sound(&s, &r);
    }

    #[test]
    fn example_linear_target() {
        let s = QuadraticSode::parse("1/x", "x", "1/2", dom(0.5, 3.0), &[]).unwrap();
        let r = linearize(&s, &cfg_at(1.0)).unwrap();
        match &r.outcome {
            LinearisationOutcome::Linear { alpha, b, c, transform } => {
                assert_eq!(*alpha, 1.0);
                assert!(b.abs() < 1e-8 && (c - 0.5).abs() < 1e-8);
                let p = transform.phi().eval(2.0).unwrap();
                assert!((p - 7.0 / 3.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
        assert_sound(&s, &r);
    }

    #[test]
    fn negative_a_branch_is_sound() {
        let s = QuadraticSode::parse("1/x", "-x", "1/2", dom(0.5, 3.0), &[]).unwrap();
        let r = linearize(&s, &cfg_at(1.0)).unwrap();
        assert_eq!(r.outcome.target().unwrap().0, -1.0);
        assert_sound(&s, &r);
    }

    #[test]
    fn cubic_forcing_family_and_perturbation() {
        let d = dom(0.5, 3.0);
        let s = QuadraticSode::parse("1/x", "x", "k1*x^3 + k2", d, &[("k1", 2.0), ("k2", -1.0)]).unwrap();
        let r = linearize(&s, &cfg_at(1.0)).unwrap();
        assert_eq!(r.outcome.case(), "linear");
        assert_sound(&s, &r);
        let s = QuadraticSode::parse("1/x", "x", "1/2 + 0.01*x^5", d, &[]).unwrap();
        let r = linearize(&s, &RunConfig::default()).unwrap();
        assert_eq!(r.outcome.case(), "not_linearisable");
    }

    #[test]
    fn sphere_geodesics() {
        let s = QuadraticSode::parse("-2*cot(x)", "0", "-sin(x)*cos(x)", dom(0.3, PI - 0.3), &[]).unwrap();
        let e = linearize(&s, &RunConfig::default()).unwrap_err();
        assert!(matches!(e, Error::SignChange { ref what, .. } if what == "b"), "{e}");
        let d = dom(0.3, PI / 2.0);
        let s = s.restrict(d).unwrap();
        let r = linearize(&s, &RunConfig::default()).unwrap();
        assert_eq!(r.outcome.case(), "unit_forcing");
        assert_sound(&s, &r);
        // anchored at 1 instead of at the midpoint of the full domain
        let h = r.outcome.transform().unwrap().h().eval(1.0).unwrap();
        let expected = (1f64 / 1f64.tan()) * ((0.3 + PI / 2.0) / 2.0).sin().powi(2);
        assert!((h - expected).abs() < 1e-9, "{h} {expected}");
    }

    #[test]
    fn auto_split_at_sign_change() {
        let s = QuadraticSode::parse("-2*cot(x)", "0", "-sin(x)*cos(x)", dom(0.3, PI - 0.3), &[]).unwrap();
        let parts = linearize_split(&s, &RunConfig::default()).unwrap();
        assert_eq!(parts.len(), 2);
        assert!((parts[0].domain.hi() - PI / 2.0).abs() < 1e-12);
        for (p, piece) in parts.iter().zip([dom(0.3, PI / 2.0), dom(PI / 2.0, PI - 0.3)]) {
            assert_eq!(p.outcome.case(), "unit_forcing");
            assert_sound(&s.restrict(piece).unwrap(), p);
            // shared anchor at π/2: h = |cot x|, φ = 1/(2 sin²x) − 1/2
            let t = p.outcome.transform().unwrap();
            for x in piece.grid(8) {
                assert!((t.h().eval(x).unwrap() - (1.0 / x.tan()).abs()).abs() < 1e-9);
                let phi = 0.5 / x.sin().powi(2) - 0.5;
                assert!((t.phi().eval(x).unwrap() - phi).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn already_linear_is_recovered() {
        let s = QuadraticSode::parse("0", "1", "3*x + 2", dom(-2.0, 2.0), &[]).unwrap();
        let r = linearize(&s, &cfg_at(0.0)).unwrap();
        let (alpha, b, c) = r.outcome.target().unwrap();
        assert_eq!(alpha, 1.0);
        assert!((b - 3.0).abs() < 1e-12 && (c - 2.0).abs() < 1e-12);
        assert!(r.outcome.transform().unwrap().is_closed_form());
    }

    #[test]
    fn json_export() {
        let s = QuadraticSode::parse("1/x", "x", "1/2", dom(0.5, 3.0), &[]).unwrap();
        let r = linearize(&s, &cfg_at(1.0)).unwrap();
        let v = r.to_json();
        assert_eq!(v["case"], "linear");
        assert_eq!(v["alpha"], 1.0);
        assert_eq!(v["normalization"]["base_point"], 1.0);
        assert_eq!(v["transform"]["h_dtau_per_dt"]["kind"], "closed_form");
        assert_eq!(v["transform"]["phi"]["kind"], "numeric");
        assert_eq!(v["transform"]["phi"]["knots"].as_array().unwrap().len(), EXPORT_KNOTS);
    }

    #[test]
    fn not_quadratic_passthrough() {
        let e = crate::expr::parse("-x*v^3", &["x", "v"]).unwrap();
        let r = linearize_rhs(&e, dom(0.5, 2.0), &RunConfig::default()).unwrap();
        assert_eq!(r.outcome.case(), "not_quadratic");
        assert!(!r.outcome.is_linearisable());
    }
}
