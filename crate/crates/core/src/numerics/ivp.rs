//! Dormand–Prince 5(4) integration with a quartic Hermite-type dense output.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 1.0 / 5.0;
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
/// Fifth-order weights (also the last stage row).
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
/// Fifth minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
/// Dense-output correction weights.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvpOptions {
    /// Used as both absolute and relative local error tolerance.
    pub tol: f64,
    pub max_steps: usize,
    /// Return the trajectory computed so far instead of an error when the
    /// step size underflows or the field stops being evaluable.
    pub truncate_on_failure: bool,
    pub initial_step: Option<f64>,
}

impl IvpOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_steps: 1_000_000,
            truncate_on_failure: false,
            initial_step: None,
        }
    }

    pub fn truncating(mut self) -> Self {
        self.truncate_on_failure = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Truncated { t: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IvpStats {
    pub tol: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

/// Samples of an integral curve with continuous extension between them.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
    /// Per-step quartic correction term.
    bumps: Vec<Vec<f64>>,
    stats: IvpStats,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    /// Field value at each sample.
    pub fn slopes(&self) -> &[Vec<f64>] {
        &self.slopes
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn last_state(&self) -> &[f64] {
        &self.states[self.states.len() - 1]
    }

    pub fn stats(&self) -> &IvpStats {
        &self.stats
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self.stats.termination, Termination::Truncated { .. })
    }

    fn locate(&self, t: f64) -> Result<usize> {
        let (t0, t1) = (self.t_start(), self.t_end());
        if !(t >= t0 && t <= t1) {
            return Err(Error::OutsideDomain { value: t, lo: t0, hi: t1 });
        }
        let i = self.times.partition_point(|&s| s <= t);
        Ok(i.clamp(1, self.times.len().max(2) - 1) - 1)
    }

    /// Interpolated state at `t` within the integrated window.
    pub fn dense(&self, t: f64) -> Result<Vec<f64>> {
        if self.len() == 1 {
            return if t == self.times[0] {
                Ok(self.states[0].clone())
            } else {
                Err(Error::OutsideDomain { value: t, lo: t, hi: t })
            };
        }
        let i = self.locate(t)?;
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        let h = tb - ta;
        let th = (t - ta) / h;
        let th1 = 1.0 - th;
        let (ya, yb, fa, fb, bump) = (&self.states[i], &self.states[i + 1], &self.slopes[i], &self.slopes[i + 1], &self.bumps[i]);
        Ok((0..self.dim())
            .map(|j| {
                let diff = yb[j] - ya[j];
                let r3 = h * fa[j] - diff;
                let r4 = diff - h * fb[j] - r3;
                ya[j] + th * (diff + th1 * (r3 + th * (r4 + th1 * bump[j])))
            })
            .collect())
    }

    /// CSV with header `t,x1..xn,v1..vn` for even dimension, `t,x1..xn`
    /// otherwise; values printed with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut header = vec!["t".to_string()];
        if n % 2 == 0 {
            header.extend((1..=n / 2).map(|i| format!("x{i}")));
            header.extend((1..=n / 2).map(|i| format!("v{i}")));
        } else {
            header.extend((1..=n).map(|i| format!("x{i}")));
        }
        let mut out = header.join(",");
        out.push('\n');
        for (t, y) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t:.16e}");
            for v in y {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }
}

fn rms_scaled(v: &[f64], scale: &[f64]) -> f64 {
    (v.iter().zip(scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

fn eval_field<F>(field: &F, t: f64, y: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let d = field(t, y)?;
    if d.len() != y.len() {
        return Err(Error::invalid(format!("field returned {} components for a {}-dimensional state", d.len(), y.len())));
    }
    if d.iter().all(|v| v.is_finite()) {
        Ok(d)
    } else {
        Err(Error::NonFinite { t })
    }
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for &(c, k) in terms {
        if c != 0.0 {
            for (o, kv) in out.iter_mut().zip(k) {
                *o += h * c * kv;
            }
        }
    }
    out
}

/// Integrate `y' = field(t, y)` from `t0` to `t_end > t0`.
pub fn solve_ivp<F>(field: F, t0: f64, state0: &[f64], t_end: f64, tol: f64) -> Result<Trajectory>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    solve_ivp_with(field, t0, state0, t_end, &IvpOptions::new(tol))
}

pub fn solve_ivp_with<F>(field: F, t0: f64, state0: &[f64], t_end: f64, opts: &IvpOptions) -> Result<Trajectory>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let tol = opts.tol;
    if !(tol > 0.0) {
        return Err(Error::invalid("integration tolerance must be positive"));
    }
    if state0.is_empty() || state0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial state must be non-empty and finite"));
    }
    if !(t_end > t0) || !t_end.is_finite() || !t0.is_finite() {
        return Err(Error::invalid("integration window must satisfy t0 < t_end"));
    }
    let span = t_end - t0;
    let f0 = eval_field(&field, t0, state0)?;
    let mut evaluations = 1;

    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![state0.to_vec()],
        slopes: vec![f0.clone()],
        bumps: Vec::new(),
        stats: IvpStats {
            tol,
            accepted_steps: 0,
            rejected_steps: 0,
            evaluations: 0,
            termination: Termination::Completed,
        },
    };

    let mut h = match opts.initial_step {
        Some(h) => h.min(span),
        None => {
            let (h, n) = initial_step(&field, t0, state0, &f0, tol, span);
            evaluations += n;
            h
        }
    };

    let mut t = t0;
    let mut y = state0.to_vec();
    let mut k1 = f0;
    let mut last_rejected = false;
    let mut failure: Option<String> = None;

    while t < t_end {
        if traj.stats.accepted_steps + traj.stats.rejected_steps >= opts.max_steps {
            failure = Some("step budget exhausted".into());
            break;
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h < h_min {
            failure = Some(failure.unwrap_or_else(|| "step size underflow".into()));
            break;
        }
        let last = t + h >= t_end || t_end - (t + h) < h_min;
        let h_step = if last { t_end - t } else { h };

        let stages = (|| -> Result<[Vec<f64>; 7]> {
            let k2 = eval_field(&field, t + C[1] * h_step, &axpy(&y, h_step, &[(A21, &k1)]))?;
            let k3 = eval_field(&field, t + C[2] * h_step, &axpy(&y, h_step, &[(A3[0], &k1), (A3[1], &k2)]))?;
            let k4 = eval_field(
                &field,
                t + C[3] * h_step,
                &axpy(&y, h_step, &[(A4[0], &k1), (A4[1], &k2), (A4[2], &k3)]),
            )?;
            let k5 = eval_field(
                &field,
                t + C[4] * h_step,
                &axpy(&y, h_step, &[(A5[0], &k1), (A5[1], &k2), (A5[2], &k3), (A5[3], &k4)]),
            )?;
            let k6 = eval_field(
                &field,
                t + C[5] * h_step,
                &axpy(&y, h_step, &[(A6[0], &k1), (A6[1], &k2), (A6[2], &k3), (A6[3], &k4), (A6[4], &k5)]),
            )?;
            let y_new = axpy(&y, h_step, &[(B[0], &k1), (B[2], &k3), (B[3], &k4), (B[4], &k5), (B[5], &k6)]);
            let k7 = eval_field(&field, t + h_step, &y_new)?;
            Ok([k2, k3, k4, k5, k6, k7, y_new])
        })();
        evaluations += 6;

        let [k2, k3, k4, k5, k6, k7, y_new] = match stages {
            Ok(s) => s,
            Err(e) => {
                // Treat an unevaluable stage as a rejected step.
                failure = Some(e.to_string());
                traj.stats.rejected_steps += 1;
                last_rejected = true;
                h = 0.25 * h_step;
                continue;
            }
        };
        failure = None;

        let ks: [&[f64]; 7] = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
        let err_vec: Vec<f64> = (0..y.len())
            .map(|j| h_step * (0..7).map(|s| E[s] * ks[s][j]).sum::<f64>())
            .collect();
        let scale: Vec<f64> = y.iter().zip(&y_new).map(|(a, b)| tol + tol * a.abs().max(b.abs())).collect();
        let err = rms_scaled(&err_vec, &scale);

        if err <= 1.0 {
            let bump: Vec<f64> = (0..y.len())
                .map(|j| h_step * (0..7).map(|s| D[s] * ks[s][j]).sum::<f64>())
                .collect();
            t = if last { t_end } else { t + h_step };
            traj.times.push(t);
            traj.states.push(y_new.clone());
            traj.slopes.push(k7.clone());
            traj.bumps.push(bump);
            traj.stats.accepted_steps += 1;
            y = y_new;
            k1 = k7;
            let mut factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if last_rejected {
                factor = factor.min(1.0);
            }
            last_rejected = false;
            h = h_step * factor;
        } else {
            traj.stats.rejected_steps += 1;
            last_rejected = true;
            h = h_step * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }

    traj.stats.evaluations = evaluations;
    if let Some(reason) = failure.filter(|_| t < t_end) {
        if opts.truncate_on_failure && traj.len() > 1 {
            traj.stats.termination = Termination::Truncated { t, reason };
            return Ok(traj);
        }
        return Err(Error::StepUnderflow { t, state: y });
    }
    Ok(traj)
}

/// Starting step from the local scale of the solution and its derivative.
fn initial_step<F>(field: &F, t0: f64, y0: &[f64], f0: &[f64], tol: f64, span: f64) -> (f64, usize)
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let scale: Vec<f64> = y0.iter().map(|v| tol + tol * v.abs()).collect();
    let d0 = rms_scaled(y0, &scale);
    let d1 = rms_scaled(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(span);
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = match eval_field(field, t0 + h0, &y1) {
        Ok(f1) => f1,
        Err(_) => return (h0 * 1e-3, 1),
    };
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms_scaled(&diff, &scale) / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dmax).powf(0.2)
    };
    ((100.0 * h0).min(h1).min(span), 1)
}
