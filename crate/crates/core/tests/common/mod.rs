#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use sundman_core::sode1d::{GenSundman, QuadraticSode};
use sundman_core::{Interval, ScalarFunction};

/// Positive working interval shared by the random equations.
pub const SAFE: (f64, f64) = (0.5, 2.5);
/// Wide positive interval for the outer factors of compositions.
pub const WIDE: (f64, f64) = (0.01, 100.0);

pub fn dom(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

pub fn safe() -> Interval {
    dom(SAFE.0, SAFE.1)
}

fn coef(rng: &mut StdRng) -> f64 {
    // Rationals with small denominators keep the expressions readable.
    let num: i32 = rng.gen_range(-6..=6);
    let den: i32 = rng.gen_range(1..=4);
    num as f64 / den as f64
}

pub fn nonzero_coef(rng: &mut StdRng) -> f64 {
    loop {
        let c = coef(rng);
        if c != 0.0 {
            return c;
        }
    }
}

/// A rational or trigonometric coefficient, finite on positive `x`.
fn term(rng: &mut StdRng) -> String {
    let (a, b) = (coef(rng), nonzero_coef(rng));
    match rng.gen_range(0..6) {
        0 => format!("({a}) + ({b})*x"),
        1 => format!("({a})/x + ({b})*x^2"),
        2 => format!("({a})*sin(x) + ({b})"),
        3 => format!("({a})*cos(2*x) + ({b})*x"),
        4 => format!("({b})/(1 + x^2) + ({a})*x^3"),
        _ => format!("({b})*exp(-x/2) + ({a})"),
    }
}

pub fn random_sode(rng: &mut StdRng) -> QuadraticSode {
    let (g, a, b) = (term(rng), term(rng), term(rng));
    QuadraticSode::parse(&g, &a, &b, safe(), &[]).unwrap()
}

/// Strictly positive on the positive half-line.
pub fn random_h_text(rng: &mut StdRng) -> String {
    let a = coef(rng) / 2.0;
    let b = rng.gen_range(0..=4) as f64 / 4.0;
    match rng.gen_range(0..4) {
        0 => format!("exp(({a})*sin(x))"),
        1 => format!("1 + ({b})*x^2"),
        2 => format!("x^({a})"),
        _ => format!("(1 + x)/(2 + ({b})*x)"),
    }
}

/// Strictly monotone and positive on the positive half-line.
pub fn random_phi_text(rng: &mut StdRng) -> String {
    let c = rng.gen_range(2..=8) as f64 / 4.0;
    let p = rng.gen_range(2..=6) as f64 / 4.0;
    let d = rng.gen_range(0..=4) as f64 / 8.0;
    match rng.gen_range(0..4) {
        0 => format!("({c})*x^({p})"),
        1 => format!("({c})*x + ({d})*x^3"),
        2 => format!("({c})/x"),
        _ => format!("log(1 + ({c})*x)"),
    }
}

pub fn random_h(rng: &mut StdRng, d: Interval) -> ScalarFunction {
    ScalarFunction::parse(&random_h_text(rng), "x", &[], d).unwrap()
}

pub fn random_phi(rng: &mut StdRng, d: Interval) -> ScalarFunction {
    ScalarFunction::parse(&random_phi_text(rng), "x", &[], d).unwrap()
}

pub fn random_transform(rng: &mut StdRng, d: Interval) -> GenSundman {
    GenSundman::parse(&random_h_text(rng), &random_phi_text(rng), d, &[]).unwrap()
}

/// Five-point central difference.
pub fn d1(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// `Q = A·P′ − 3A′·P` with `P = A·b′ + γAb − A′b`, from coefficient values
/// alone, derivatives by nested central differences with respect to the
/// coordinate `ξ` where `dξ = J(x)·dx`.
pub fn q_oracle(
    gamma: &dyn Fn(f64) -> f64,
    a: &dyn Fn(f64) -> f64,
    b: &dyn Fn(f64) -> f64,
    jac: &dyn Fn(f64) -> f64,
    x: f64,
) -> f64 {
    let h = 1e-3;
    let dd = |f: &dyn Fn(f64) -> f64, x: f64| d1(f, x, h) / jac(x);
    let p = |x: f64| a(x) * dd(b, x) + gamma(x) * a(x) * b(x) - dd(a, x) * b(x);
    a(x) * dd(&p, x) - 3.0 * dd(a, x) * p(x)
}

pub fn rel_sup(lhs: &[f64], rhs: &[f64]) -> f64 {
    let scale = rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    lhs.iter().zip(rhs).fold(0.0f64, |m, (l, r)| m.max((l - r).abs())) / scale
}
