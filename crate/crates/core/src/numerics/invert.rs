//! Inversion of strictly monotone functions on a bracket.

use crate::error::{Error, Result};

/// Number of interior slope samples used to detect non-monotonicity.
const MONOTONE_SAMPLES: usize = 16;
const MAX_ITER: usize = 200;

/// Solve `f(x) = y` for `x` in `[lo, hi]`, `f` strictly monotone.
///
/// Returns `x` with `|f(x) − y| ≤ tol·max(1, |y|)`, or the best point once
/// the bracket has shrunk to rounding level.
pub fn invert_monotone<F>(f: F, y: f64, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    check_args(y, lo, hi, tol)?;
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    check_monotone(&f, lo, hi, f_lo, f_hi)?;
    check_bracket(y, lo, hi, f_lo, f_hi)?;
    solve_bracketed(&f, None::<&fn(f64) -> Result<f64>>, y, (lo, f_lo), (hi, f_hi), tol)
}

/// As [`invert_monotone`], using `df` for Newton steps.
pub fn invert_monotone_with_slope<F, D>(f: F, df: D, y: f64, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
    D: Fn(f64) -> Result<f64>,
{
    check_args(y, lo, hi, tol)?;
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    check_monotone(&f, lo, hi, f_lo, f_hi)?;
    check_bracket(y, lo, hi, f_lo, f_hi)?;
    solve_bracketed(&f, Some(&df), y, (lo, f_lo), (hi, f_hi), tol)
}

fn check_args(y: f64, lo: f64, hi: f64, tol: f64) -> Result<()> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInterval { lo, hi });
    }
    if !(tol > 0.0) || !y.is_finite() {
        return Err(Error::invalid("inversion needs a finite target and a positive tolerance"));
    }
    Ok(())
}

fn check_monotone<F>(f: &F, lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<()>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut prev = f_lo;
    let mut direction = 0.0f64;
    for i in 1..=MONOTONE_SAMPLES + 1 {
        let v = if i == MONOTONE_SAMPLES + 1 {
            f_hi
        } else {
            f(lo + (hi - lo) * i as f64 / (MONOTONE_SAMPLES + 1) as f64)?
        };
        let step = v - prev;
        if step == 0.0 || (direction != 0.0 && step.signum() != direction) {
            return Err(Error::NonMonotone { lo, hi });
        }
        direction = step.signum();
        prev = v;
    }
    Ok(())
}

fn check_bracket(y: f64, lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<()> {
    if (f_lo - y) * (f_hi - y) > 0.0 {
        return Err(Error::Bracket {
            target: y,
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    Ok(())
}

/// Safeguarded Newton (or regula falsi without a slope) on a bracket whose
/// end values straddle `y`. Falls back to bisection whenever a step leaves
/// the bracket or the bracket stops shrinking.
pub(crate) fn solve_bracketed<F, D>(
    f: &F,
    df: Option<&D>,
    y: f64,
    (mut a, fa): (f64, f64),
    (mut b, fb): (f64, f64),
    tol: f64,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + ?Sized,
    D: Fn(f64) -> Result<f64> + ?Sized,
{
    let accept = tol * y.abs().max(1.0);
    let mut ga = fa - y;
    let mut gb = fb - y;
    if ga.abs() <= accept {
        return Ok(a);
    }
    if gb.abs() <= accept {
        return Ok(b);
    }
    let mut x = secant(a, ga, b, gb);
    let mut width = (b - a).abs();
    for _ in 0..MAX_ITER {
        let gx = f(x)? - y;
        if gx.abs() <= accept {
            return Ok(x);
        }
        if gx.signum() == ga.signum() {
            a = x;
            ga = gx;
        } else {
            b = x;
            gb = gx;
        }
        let new_width = (b - a).abs();
        if new_width <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) || new_width == 0.0 {
            return Ok(if ga.abs() < gb.abs() { a } else { b });
        }
        let (left, right) = (a.min(b), a.max(b));
        let stalled = new_width > 0.5 * width;
        width = new_width;
        let candidate = match df {
            Some(d) => match d(x) {
                Ok(s) if s != 0.0 && s.is_finite() => x - gx / s,
                _ => f64::NAN,
            },
            None => secant(a, ga, b, gb),
        };
        x = if stalled || !(candidate > left && candidate < right) {
            0.5 * (a + b)
        } else {
            candidate
        };
    }
    Ok(if ga.abs() < gb.abs() { a } else { b })
}

fn secant(a: f64, ga: f64, b: f64, gb: f64) -> f64 {
    let x = a - ga * (b - a) / (gb - ga);
    if x.is_finite() {
        x
    } else {
        0.5 * (a + b)
    }
}
