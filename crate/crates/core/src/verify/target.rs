use serde::Serialize;

/// Homogeneous part of the solution, by root regime of `r² + αr + B = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Homogeneous {
    /// `c₁e^{r₁τ} + c₂e^{r₂τ}`.
    Distinct { r1: f64, r2: f64, c1: f64, c2: f64 },
    /// `(c₀ + c₁τ)e^{rτ}`.
    Repeated { r: f64, c0: f64, c1: f64 },
    /// `e^{στ}(c₀cos ωτ + c₁sin ωτ)`.
    Complex { sigma: f64, omega: f64, c0: f64, c1: f64 },
}

impl Homogeneous {
    fn eval(&self, tau: f64) -> (f64, f64) {
        match *self {
            Homogeneous::Distinct { r1, r2, c1, c2 } => {
                let (e1, e2) = ((r1 * tau).exp(), (r2 * tau).exp());
                (c1 * e1 + c2 * e2, c1 * r1 * e1 + c2 * r2 * e2)
            }
            Homogeneous::Repeated { r, c0, c1 } => {
                let e = (r * tau).exp();
                let p = c0 + c1 * tau;
                (p * e, (c1 + r * p) * e)
            }
            Homogeneous::Complex { sigma, omega, c0, c1 } => {
                let e = (sigma * tau).exp();
                let (s, c) = (omega * tau).sin_cos();
                let u = c0 * c + c1 * s;
                let du = -c0 * omega * s + c1 * omega * c;
                (e * u, e * (sigma * u + du))
            }
        }
    }
}

/// Particular solution of `y″ + αy′ + By + C = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Particular {
    /// `−C/B`.
    Constant { value: f64 },
    /// `−(C/α)τ`.
    Linear { slope: f64 },
    /// `−Cτ²/2`.
    Quadratic { half_curvature: f64 },
}

impl Particular {
    fn eval(&self, tau: f64) -> (f64, f64) {
        match *self {
            Particular::Constant { value } => (value, 0.0),
            Particular::Linear { slope } => (slope * tau, slope),
            Particular::Quadratic { half_curvature } => (half_curvature * tau * tau, 2.0 * half_curvature * tau),
        }
    }
}

/// Exact solution of `y″ + αy′ + By + C = 0` with `y(0) = y₀`, `y′(0) = w₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearTarget {
    pub alpha: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub homogeneous: Homogeneous,
    pub particular: Particular,
}

impl LinearTarget {
    /// `(y(τ), y′(τ))`.
    pub fn eval(&self, tau: f64) -> (f64, f64) {
        let (u, du) = self.homogeneous.eval(tau);
        let (p, dp) = self.particular.eval(tau);
        (u + p, du + dp)
    }

    pub fn y(&self, tau: f64) -> f64 {
        self.eval(tau).0
    }
}

pub fn solve_linear_target(alpha: f64, b: f64, c: f64, y0: f64, w0: f64) -> LinearTarget {
    let particular = if b != 0.0 {
        Particular::Constant { value: -c / b }
    } else if alpha != 0.0 {
        Particular::Linear { slope: -c / alpha }
    } else {
        Particular::Quadratic { half_curvature: -c / 2.0 }
    };
    let (p0, dp0) = particular.eval(0.0);
    let (u0, du0) = (y0 - p0, w0 - dp0);
    let disc = alpha * alpha - 4.0 * b;
    let homogeneous = if disc > 0.0 {
        // Stable root pair: the larger-magnitude root first, the other from
        // the product r₁r₂ = B.
        let q = -0.5 * (alpha + alpha.signum() * disc.sqrt());
        let q = if alpha == 0.0 { 0.5 * disc.sqrt() } else { q };
        let (r1, r2) = (q, b / q);
        let c1 = (du0 - r2 * u0) / (r1 - r2);
        Homogeneous::Distinct { r1, r2, c1, c2: u0 - c1 }
    } else if disc == 0.0 {
        let r = -0.5 * alpha;
        Homogeneous::Repeated {
            r,
            c0: u0,
            c1: du0 - r * u0,
        }
    } else {
        let sigma = -0.5 * alpha;
        let omega = 0.5 * (-disc).sqrt();
        Homogeneous::Complex {
            sigma,
            omega,
            c0: u0,
            c1: (du0 - sigma * u0) / omega,
        }
    };
    LinearTarget {
        alpha,
        b,
        c,
        homogeneous,
        particular,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Residual of the equation by central differences of the evaluator.
    fn residual(t: &LinearTarget, tau: f64) -> f64 {
        let h = 1e-4;
        let (y, w) = t.eval(tau);
        let ddy = (t.eval(tau + h).1 - t.eval(tau - h).1) / (2.0 * h);
        (ddy + t.alpha * w + t.b * y + t.c).abs()
    }

    #[test]
    fn unit_forcing_from_rest() {
        let t = solve_linear_target(0.0, 0.0, 1.0, 0.0, 0.0);
        for tau in [0.0, 0.5, 2.0] {
            assert_eq!(t.y(tau), -tau * tau / 2.0);
        }
    }

    #[test]
    fn free_particle() {
        let t = solve_linear_target(0.0, 0.0, 0.0, 0.0, 1.0);
        for tau in [0.0, 0.5, 2.0] {
            assert_eq!(t.eval(tau), (tau, 1.0));
        }
    }

    #[test]
    fn friction_with_unit_half_forcing() {
        let t = solve_linear_target(1.0, 0.0, 0.5, 0.0, 0.0);
        for i in 0..=30 {
            let tau = i as f64 * 0.1;
            let exact = -tau / 2.0 + 0.5 * (1.0 - (-tau).exp());
            assert!((t.y(tau) - exact).abs() <= 1e-15);
            assert!(residual(&t, tau) <= 1e-7);
        }
    }

    #[test]
    fn all_regimes_satisfy_equation_and_initial_data() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let cases = [(2.0, 1.0), (0.0, 4.0), (3.0, 1.0), (-1.0, 0.0), (0.0, -2.0), (0.0, 0.0)];
        for &(alpha, b) in &cases {
            for _ in 0..8 {
                let (c, y0, w0) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let t = solve_linear_target(alpha, b, c, y0, w0);
                let (y, w) = t.eval(0.0);
                assert!((y - y0).abs() < 1e-14 && (w - w0).abs() < 1e-14, "{t:?}");
                for tau in [0.3, 1.1, 2.0] {
                    let scale = 1.0 + t.y(tau).abs() + t.eval(tau).1.abs();
                    assert!(residual(&t, tau) <= 1e-6 * scale, "{alpha} {b}: {}", residual(&t, tau));
                }
            }
        }
    }

    #[test]
    fn regimes_are_classified() {
        assert!(matches!(solve_linear_target(2.0, 1.0, 0.0, 1.0, 0.0).homogeneous, Homogeneous::Repeated { .. }));
        assert!(matches!(solve_linear_target(0.0, 1.0, 0.0, 1.0, 0.0).homogeneous, Homogeneous::Complex { .. }));
        assert!(matches!(solve_linear_target(3.0, 1.0, 0.0, 1.0, 0.0).homogeneous, Homogeneous::Distinct { .. }));
    }
}
