//! Globally adaptive 21-point Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Kronrod abscissae on [0, 1); the Gauss nodes are the odd entries.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208244768000,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Default cap on the number of panels.
pub const MAX_PANELS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn checked<F>(f: &F, x: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let y = f(x)?;
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFinite { t: x })
    }
}

/// One GK21 panel: (kronrod estimate, error estimate).
pub(crate) fn gk21<F>(f: &F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = checked(f, center)?;
    let mut gauss = 0.0;
    let mut kronrod = fc * WGK[10];
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = checked(f, center - dx)?;
        let f2 = checked(f, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((value, err))
}

/// ∫ₐᵇ f with estimated absolute error ≤ `tol·max(1, |result|)`.
pub fn quad<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    quad_detailed(f, a, b, tol, MAX_PANELS).map(|r| r.value)
}

pub fn quad_detailed<F>(f: F, a: f64, b: f64, tol: f64, max_panels: usize) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::invalid("quadrature tolerance must be positive"));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid("quadrature bounds must be finite"));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            panels: 0,
            evaluations: 0,
        });
    }
    if a > b {
        return quad_detailed(f, b, a, tol, max_panels).map(|r| QuadResult {
            value: -r.value,
            ..r
        });
    }

    let (value, error) = gk21(&f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut evaluations = 21;

    while total_err > tol * total.abs().max(1.0) {
        if heap.len() >= max_panels {
            return Err(Error::Quadrature {
                estimate: total,
                error_bound: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot split further in floating point
            return Err(Error::Quadrature {
                estimate: total,
                error_bound: total_err,
            });
        }
        let (v1, e1) = gk21(&f, worst.a, mid)?;
        let (v2, e2) = gk21(&f, mid, worst.b)?;
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // re-sum to shed the drift of incremental updates
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult {
        value,
        error,
        panels: heap.len(),
        evaluations,
    })
}
