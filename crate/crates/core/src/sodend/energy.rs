use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, ScalarFunction};

/// Samples used by the quadratic fits.
pub const ENERGY_SAMPLES: usize = 64;
/// Relative residual below which a sampled function counts as quadratic.
pub const QUADRATIC_TOL: f64 = 1e-8;
/// Default monomial exponents tried by [`find_energy_f`].
pub const DEFAULT_EXPONENTS: [f64; 7] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0];

/// Motion in a potential `𝒱(q)` at fixed energy `E`.
#[derive(Debug, Clone)]
pub struct NaturalSystem {
    potential: ScalarFunction,
    energy: f64,
}

impl NaturalSystem {
    pub fn new(potential: ScalarFunction, energy: f64) -> Result<Self> {
        if !energy.is_finite() {
            return Err(Error::invalid("energy must be finite"));
        }
        crate::sode1d::probe_function(&potential, "potential")?;
        Ok(Self { potential, energy })
    }

    pub fn potential(&self) -> &ScalarFunction {
        &self.potential
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn with_energy(&self, energy: f64) -> Self {
        Self {
            potential: self.potential.clone(),
            energy,
        }
    }

    /// `−𝒱′(q)` as an expression in the potential's variable.
    pub fn force(&self) -> Expr {
        -self.potential.derivative().expr().clone()
    }
}

/// Whether quadraticity is required of `f²` and `f²𝒱` separately (valid for
/// every energy) or only of `f²(E − 𝒱)` at the system's energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMode {
    #[default]
    AllEnergies,
    FixedEnergy,
}

/// `c₂q² + c₁q + c₀` fitted to samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticFit {
    pub coefficients: [f64; 3],
    pub residual: f64,
    pub scale: f64,
}

impl QuadraticFit {
    pub fn accepted(&self) -> bool {
        self.residual <= QUADRATIC_TOL * self.scale
    }
}

/// `f²(E − 𝒱) = Aq² + Bq + C`, giving the target `q̈ = 2Aq + B` in the new
/// time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReduction {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub energy: f64,
    pub mode: EnergyMode,
    /// Fit of `f²` (absent in fixed-energy mode).
    pub f_squared: Option<QuadraticFit>,
    /// Fit of `f²𝒱` (absent in fixed-energy mode).
    pub f_squared_potential: Option<QuadraticFit>,
    /// Fit of `f²(E − 𝒱)` (fixed-energy mode only).
    pub combined: Option<QuadraticFit>,
}

impl EnergyReduction {
    /// Right-hand side `2Aq + B` of the reduced equation.
    pub fn target(&self, q: f64) -> f64 {
        2.0 * self.a * q + self.b
    }

    /// `(A, B, C)` at another energy; only meaningful for all-energy fits.
    pub fn at_energy(&self, energy: f64) -> Option<(f64, f64, f64)> {
        let f2 = self.f_squared?.coefficients;
        let p = self.f_squared_potential?.coefficients;
        Some((f2[0] * energy - p[0], f2[1] * energy - p[1], f2[2] * energy - p[2]))
    }
}

/// Least-squares quadratic through `(q, y)` samples.
pub fn fit_quadratic(samples: &[(f64, f64)]) -> Result<QuadraticFit> {
    if samples.len() < 4 {
        return Err(Error::DegenerateFit(format!("{} samples for a quadratic", samples.len())));
    }
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo >= 1e-12) {
        return Err(Error::DegenerateFit(format!("sample spread {} is too small", hi - lo)));
    }
    if samples.iter().any(|s| !s.1.is_finite()) {
        return Err(Error::DegenerateFit("non-finite sample".into()));
    }
    let m = samples.len();
    let design = DMatrix::from_fn(m, 3, |r, c| samples[r].0.powi(2 - c as i32));
    let rhs = DVector::from_iterator(m, samples.iter().map(|s| s.1));
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::DegenerateFit(e.to_string()))?;
    let residual = (&design * &coef - &rhs).amax();
    let scale = samples.iter().fold(1.0f64, |m, s| m.max(s.1.abs()));
    Ok(QuadraticFit {
        coefficients: [coef[0], coef[1], coef[2]],
        residual,
        scale,
    })
}

/// Check whether the time change `dt = f dτ` turns motion at energy `E` into
/// an inhomogeneous linear equation.
pub fn energy_reduce(sys: &NaturalSystem, f: &ScalarFunction) -> Result<Option<EnergyReduction>> {
    energy_reduce_with(sys, f, EnergyMode::AllEnergies)
}

pub fn energy_reduce_with(sys: &NaturalSystem, f: &ScalarFunction, mode: EnergyMode) -> Result<Option<EnergyReduction>> {
    let domain = sys.potential.domain();
    let f = f.renamed(sys.potential.var()).with_domain(domain);
    let e = sys.energy;
    let mut f2 = Vec::with_capacity(ENERGY_SAMPLES);
    let mut f2v = Vec::with_capacity(ENERGY_SAMPLES);
    for q in domain.grid(ENERGY_SAMPLES) {
        let fq = f.eval(q)?;
        if !(fq > 0.0) {
            return Err(Error::invalid(format!("f must be positive; f({q}) = {fq}")));
        }
        let v = sys.potential.eval(q)?;
        f2.push((q, fq * fq));
        f2v.push((q, fq * fq * v));
    }
    match mode {
        EnergyMode::AllEnergies => {
            let a = fit_quadratic(&f2)?;
            let p = fit_quadratic(&f2v)?;
            if !(a.accepted() && p.accepted()) {
                return Ok(None);
            }
            let (ac, pc) = (a.coefficients, p.coefficients);
            Ok(Some(EnergyReduction {
                a: ac[0] * e - pc[0],
                b: ac[1] * e - pc[1],
                c: ac[2] * e - pc[2],
                energy: e,
                mode,
                f_squared: Some(a),
                f_squared_potential: Some(p),
                combined: None,
            }))
        }
        EnergyMode::FixedEnergy => {
            let samples: Vec<(f64, f64)> = f2.iter().zip(&f2v).map(|(a, p)| (a.0, a.1 * e - p.1)).collect();
            let fit = fit_quadratic(&samples)?;
            if !fit.accepted() {
                return Ok(None);
            }
            let c = fit.coefficients;
            Ok(Some(EnergyReduction {
                a: c[0],
                b: c[1],
                c: c[2],
                energy: e,
                mode,
                f_squared: None,
                f_squared_potential: None,
                combined: Some(fit),
            }))
        }
    }
}

/// A monomial `f(q) = qᵖ` that reduces the system.
#[derive(Debug, Clone)]
pub struct EnergyFunction {
    pub exponent: f64,
    pub f: ScalarFunction,
    pub reduction: EnergyReduction,
}

/// Try `f(q) = qᵖ` for each exponent, smallest `|p|` first (ties keep the
/// given order), and return the first that reduces the system.
pub fn find_energy_f(sys: &NaturalSystem, exponents: &[f64]) -> Result<Option<EnergyFunction>> {
    if exponents.is_empty() {
        return Err(Error::invalid("at least one exponent is required"));
    }
    let mut order: Vec<f64> = exponents.to_vec();
    order.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let var = sys.potential.var().to_string();
    let domain = sys.potential.domain();
    for p in order {
        let f = ScalarFunction::new(Expr::pow(Expr::var(&var), Expr::Const(p)), &var, domain)?;
        let reduction = match energy_reduce(sys, &f) {
            Ok(r) => r,
            Err(Error::Domain { .. }) | Err(Error::Invalid(_)) => None,
            Err(e) => return Err(e),
        };
        if let Some(reduction) = reduction {
            return Ok(Some(EnergyFunction { exponent: p, f, reduction }));
        }
    }
    Ok(None)
}
