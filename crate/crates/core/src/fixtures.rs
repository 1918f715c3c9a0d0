//! Reference equations with known linearisations.

use std::f64::consts::PI;

use crate::error::Result;
use crate::expr::ScalarFunction;
use crate::interval::Interval;
use crate::sode1d::QuadraticSode;
use crate::sodend::{BasicFunction, NaturalSystem, SodeField};

fn interval(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).expect("fixture intervals are ordered")
}

/// `ẍ + (2/x)ẋ² + ω²/x³ = 0` on `(0.3, 3)`.
pub fn ermakov_pinney(omega: f64) -> Result<QuadraticSode> {
    QuadraticSode::parse("2/x", "0", "omega^2/x^3", interval(0.3, 3.0), &[("omega", omega)])
}

/// `ẍ = 2ẋ²cot x + sin x cos x` on `(0.3, π − 0.3)`.
pub fn sphere_geodesics() -> Result<QuadraticSode> {
    QuadraticSode::parse("-2*cot(x)", "0", "-sin(x)*cos(x)", interval(0.3, PI - 0.3), &[])
}

/// `ẍ + ẋ²/x + xẋ + 1/2 = 0` on `(0.5, 3)`.
pub fn nap() -> Result<QuadraticSode> {
    QuadraticSode::parse("1/x", "x", "1/2", interval(0.5, 3.0), &[])
}

/// `ẍ + ẋ²/x + xẋ + k₁x³ + k₂ + εx⁵ = 0` on `(0.5, 3)`.
pub fn cubic_forcing(k1: f64, k2: f64, eps: f64) -> Result<QuadraticSode> {
    QuadraticSode::parse(
        "1/x",
        "x",
        "k1*x^3 + k2 + eps*x^5",
        interval(0.5, 3.0),
        &[("k1", k1), ("k2", k2), ("eps", eps)],
    )
}

/// Liénard equation `ẍ + f ẋ + g = 0` with `f = x` and
/// `g = k₁f∫₀ˣf + k₂f + shift` on `(0.5, 3)`.
pub fn lienard(k1: f64, k2: f64, shift: f64) -> Result<QuadraticSode> {
    QuadraticSode::parse(
        "0",
        "x",
        "k1*x*(x^2/2) + k2*x + shift",
        interval(0.5, 3.0),
        &[("k1", k1), ("k2", k2), ("shift", shift)],
    )
}

/// Effective radial potential `−k/r + ℓ²/(2r²)` on `(0.5, 5)`.
pub fn kepler_potential(k: f64, l: f64) -> Result<ScalarFunction> {
    ScalarFunction::parse("-k/r + l^2/(2*r^2)", "r", &[("k", k), ("l", l)], interval(0.5, 5.0))
}

pub fn kepler_system(energy: f64, k: f64, l: f64) -> Result<NaturalSystem> {
    NaturalSystem::new(kepler_potential(k, l)?, energy)
}

/// Radial Kepler motion `r̈ = ℓ²/r³ − k/r²` on `(0.2, 10)`.
pub fn kepler_radial(k: f64, l: f64) -> Result<SodeField> {
    SodeField::parse(&["l^2/x^3 - k/x^2"], vec![interval(0.2, 10.0)], &[("k", k), ("l", l)])
}

/// Energy of radial Kepler motion at `(r, ṙ)`.
pub fn kepler_energy(k: f64, l: f64, r: f64, rdot: f64) -> f64 {
    0.5 * rdot * rdot - k / r + l * l / (2.0 * r * r)
}

/// `f(r) = r`.
pub fn kepler_time_function() -> Result<BasicFunction> {
    BasicFunction::parse("x", vec![interval(0.2, 10.0)], &[])
}

/// `ẍ = −ω²x` on `domain`.
pub fn oscillator(omega: f64, domain: Interval) -> Result<SodeField> {
    SodeField::parse(&["-(omega^2)*x"], vec![domain], &[("omega", omega)])
}

/// `ẍⁱ = −xⁱ` in the plane, on `(−3, 3)²`.
pub fn oscillator_2d() -> Result<SodeField> {
    SodeField::parse(&["-x1", "-x2"], vec![interval(-3.0, 3.0); 2], &[])
}

/// `f = 1 + x²/4` (or `1 + |x|²/4` in the plane).
pub fn soft_time_function(n: usize) -> Result<BasicFunction> {
    let text = if n == 1 { "1 + x^2/4" } else { "1 + (x1^2 + x2^2)/4" };
    BasicFunction::parse(text, vec![interval(-3.0, 3.0); n], &[])
}

/// `f = x⁻²`, which turns the oscillator into the Ermakov–Pinney equation.
pub fn inverse_square_time_function() -> Result<BasicFunction> {
    BasicFunction::parse("x^(-2)", vec![interval(0.3, 3.0)], &[])
}
