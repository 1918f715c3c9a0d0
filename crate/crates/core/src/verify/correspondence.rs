use std::fmt;

use serde::Serialize;

use super::target::{solve_linear_target, LinearTarget};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::numerics::{quad, solve_ivp_with, IvpOptions, IvpStats, Termination, Trajectory};
use crate::sode1d::{LinearisationOutcome, QuadraticSode};
use crate::sodend::{transform_system, BasicFunction, SodeField};

/// Number of equispaced comparison times.
pub const DEFAULT_SAMPLES: usize = 256;
/// Stencil step for second derivatives, relative to the `τ` span.
pub const STENCIL_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Verdict threshold on both error measures.
    pub tol: f64,
    pub ivp_tol: f64,
    pub quad_tol: f64,
    pub samples: usize,
    /// Multiplies `dτ/dt` before use; `1` except for fault injection.
    pub h_scale: f64,
    pub embed_trajectories: bool,
}

impl VerifyOptions {
    pub fn new(tol: f64, cfg: &RunConfig) -> Self {
        Self {
            tol,
            ivp_tol: cfg.ivp_tol,
            quad_tol: cfg.quad_tol,
            samples: DEFAULT_SAMPLES,
            h_scale: 1.0,
            embed_trajectories: false,
        }
    }

    pub fn with_h_scale(mut self, s: f64) -> Self {
        self.h_scale = s;
        self
    }

    pub fn with_ivp_tol(mut self, tol: f64) -> Self {
        self.ivp_tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("tol", self.tol), ("ivp_tol", self.ivp_tol), ("quad_tol", self.quad_tol), ("h_scale", self.h_scale)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.samples < 2 {
            return Err(Error::invalid("at least two samples are required"));
        }
        Ok(())
    }
}

/// Column-labelled samples of both sides of a correspondence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SampleTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddedTrajectories {
    pub original: String,
    pub transformed: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrespondenceReport {
    pub kind: &'static str,
    pub max_state_error: f64,
    /// Velocity deviation relative to `max(1, |reference|)`.
    pub max_velocity_error: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub requested_t_end: f64,
    pub covered_t_end: f64,
    /// Why the comparison window ends before `requested_t_end`.
    pub truncation: Option<String>,
    /// `(t, τ)` at the comparison times.
    pub tau_of_t: Vec<[f64; 2]>,
    /// Largest gap between `τ` from quadrature and from the augmented state.
    pub tau_crosscheck: f64,
    /// Largest `|d²x̄/dτ² − target|` when a target was supplied.
    pub target_residual: Option<f64>,
    pub h_scale: f64,
    pub integrator_stats: IvpStats,
    pub transformed_stats: Option<IvpStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<EmbeddedTrajectories>,
    #[serde(skip)]
    pub table: SampleTable,
}

impl CorrespondenceReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    /// Human-readable summary of a run started at `(x0, v0)`.
    pub fn describe(&self, x0: impl fmt::Debug, v0: impl fmt::Debug) -> String {
        let mut out = format!(
            "run from (x, v) = ({x0:?}, {v0:?}) to t = {}: max state error {:.3e}, max velocity error {:.3e}, tau cross-check {:.1e}\n",
            self.covered_t_end, self.max_state_error, self.max_velocity_error, self.tau_crosscheck
        );
        if let Some(why) = &self.truncation {
            out.push_str(&format!("  window truncated at t = {} of {}: {why}\n", self.covered_t_end, self.requested_t_end));
        }
        if let Some(r) = self.target_residual {
            out.push_str(&format!("max residual against the target equation: {r:.3e}\n"));
        }
        out.push_str(&format!(
            "verdict at tolerance {:e}: {}\n",
            self.tolerance,
            if self.passed() { "pass" } else { "fail" }
        ));
        out
    }
}

fn truncation_reason(traj: &Trajectory) -> Option<String> {
    match &traj.stats().termination {
        Termination::Completed => None,
        Termination::Truncated { t, reason } => Some(format!("trajectory stopped at t = {t}: {reason}")),
    }
}

fn sample_times(t_end: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect()
}

/// `τ(t) = ∫₀ᵗ rate(x(s)) ds`, integrated panel by panel over the accepted
/// steps of `traj` along its dense output.
struct TauMap<'a, R> {
    traj: &'a Trajectory,
    rate: R,
    knots: Vec<f64>,
    tol: f64,
}

impl<'a, R: Fn(&[f64]) -> Result<f64>> TauMap<'a, R> {
    fn new(traj: &'a Trajectory, rate: R, tol: f64) -> Result<Self> {
        let mut map = Self {
            traj,
            rate,
            knots: Vec::with_capacity(traj.len()),
            tol,
        };
        let mut acc = 0.0;
        map.knots.push(0.0);
        for w in traj.times().windows(2) {
            acc += map.panel(w[0], w[1])?;
            map.knots.push(acc);
        }
        Ok(map)
    }

    fn panel(&self, a: f64, b: f64) -> Result<f64> {
        quad(|s| (self.rate)(&self.traj.dense(s)?), a, b, self.tol)
    }

    fn at(&self, t: f64) -> Result<f64> {
        let times = self.traj.times();
        let k = times.partition_point(|&s| s <= t).saturating_sub(1).min(times.len() - 1);
        if times[k] == t {
            return Ok(self.knots[k]);
        }
        Ok(self.knots[k] + self.panel(times[k], t)?)
    }
}

fn max_gap(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

fn relative_gap(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(1.0)
}

/// Integrate the original equation, push it through the transformation, and
/// compare with the closed-form solution of the linear target.
pub fn verify_linearisation(
    s: &QuadraticSode,
    outcome: &LinearisationOutcome,
    x0: f64,
    v0: f64,
    t_end: f64,
    opts: &VerifyOptions,
) -> Result<CorrespondenceReport> {
    opts.validate()?;
    let transform = outcome
        .transform()
        .ok_or_else(|| Error::invalid(format!("outcome `{}` carries no transformation", outcome.case())))?;
    let (alpha, b, c) = outcome.target().expect("transform implies a target");
    let domain = transform.domain();
    if !domain.contains(x0) {
        return Err(Error::OutsideDomain {
            value: x0,
            lo: domain.lo(),
            hi: domain.hi(),
        });
    }
    let h = transform.h();
    let phi = transform.phi();
    let dphi = phi.derivative();
    let scale = opts.h_scale;
    let rate = |x: f64| -> Result<f64> { Ok(scale * h.eval(x)?) };
    let map = |x: f64, v: f64| -> Result<(f64, f64)> { Ok((phi.eval(x)?, dphi.eval(x)? * v / rate(x)?)) };

    let inside = |x: f64| -> Result<()> {
        if domain.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain {
                value: x,
                lo: domain.lo(),
                hi: domain.hi(),
            })
        }
    };
    let ivp = IvpOptions::new(opts.ivp_tol).truncating();
    let traj = solve_ivp_with(
        |_, y: &[f64]| {
            inside(y[0])?;
            Ok(vec![y[1], s.acceleration(y[0], y[1])?])
        },
        0.0,
        &[x0, v0],
        t_end,
        &ivp,
    )?;
    let covered = traj.t_end();
    if !(covered > 0.0) {
        return Err(Error::invalid(format!("trajectory leaves {domain} immediately")));
    }
    let augmented = solve_ivp_with(
        |_, y: &[f64]| {
            inside(y[0])?;
            Ok(vec![y[1], s.acceleration(y[0], y[1])?, rate(y[0])?])
        },
        0.0,
        &[x0, v0, 0.0],
        covered,
        &ivp,
    )?;
    let tau = TauMap::new(&traj, |y: &[f64]| rate(y[0]), opts.quad_tol)?;

    let (y0, w0) = map(x0, v0)?;
    let target: LinearTarget = solve_linear_target(alpha, b, c, y0, w0);

    let mut table = SampleTable {
        columns: ["t", "x", "v", "tau", "y_mapped", "w_mapped", "y_closed_form", "w_closed_form"]
            .map(String::from)
            .to_vec(),
        rows: Vec::with_capacity(opts.samples),
    };
    let (mut state_err, mut vel_err, mut tau_gap) = (0.0f64, 0.0f64, 0.0f64);
    let mut tau_of_t = Vec::with_capacity(opts.samples);
    for t in sample_times(covered, opts.samples) {
        let y = traj.dense(t)?;
        let (x, v) = (y[0], y[1]);
        let tau_t = tau.at(t)?;
        if t <= augmented.t_end() {
            tau_gap = tau_gap.max(max_gap(tau_t, augmented.dense(t)?[2]));
        }
        let (ym, wm) = map(x, v)?;
        let (yc, wc) = target.eval(tau_t);
        state_err = state_err.max(max_gap(ym, yc));
        vel_err = vel_err.max(relative_gap(wm, wc));
        tau_of_t.push([t, tau_t]);
        table.rows.push(vec![t, x, v, tau_t, ym, wm, yc, wc]);
    }
    check_monotone(&tau_of_t)?;

    let transformed = opts.embed_trajectories.then(|| {
        let mut out = String::from("tau,y,w\n");
        for row in &table.rows {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", row[3], row[6], row[7]));
        }
        out
    });
    let verdict = if state_err <= opts.tol && vel_err <= opts.tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(CorrespondenceReport {
        kind: "linearisation",
        max_state_error: state_err,
        max_velocity_error: vel_err,
        tolerance: opts.tol,
        verdict,
        requested_t_end: t_end,
        covered_t_end: covered,
        truncation: truncation_reason(&traj),
        tau_of_t,
        tau_crosscheck: tau_gap,
        target_residual: None,
        h_scale: opts.h_scale,
        integrator_stats: traj.stats().clone(),
        transformed_stats: None,
        trajectories: transformed.map(|transformed| EmbeddedTrajectories {
            original: traj.to_csv(),
            transformed,
        }),
        table,
    })
}

fn check_monotone(tau_of_t: &[[f64; 2]]) -> Result<()> {
    for w in tau_of_t.windows(2) {
        if !(w[1][1] > w[0][1]) {
            return Err(Error::Diagnostics(format!(
                "tau is not increasing between t = {} and t = {}",
                w[0][0], w[1][0]
            )));
        }
    }
    Ok(())
}

/// Residual of the barred trajectory against a prescribed acceleration
/// `x̄″ = target(x̄)`, with second derivatives from a five-point stencil on
/// the dense output.
pub type TargetField<'a> = &'a dyn Fn(&[f64]) -> Result<Vec<f64>>;

/// Integrate a field and its time-changed version, and compare the two
/// along `τ(t) = ∫dt/f`.
pub fn verify_field_transform(
    field: &SodeField,
    f: &BasicFunction,
    x0: &[f64],
    v0: &[f64],
    t_end: f64,
    opts: &VerifyOptions,
) -> Result<CorrespondenceReport> {
    verify_field_transform_with_target(field, f, x0, v0, t_end, opts, None)
}

pub fn verify_field_transform_with_target(
    field: &SodeField,
    f: &BasicFunction,
    x0: &[f64],
    v0: &[f64],
    t_end: f64,
    opts: &VerifyOptions,
    target: Option<TargetField<'_>>,
) -> Result<CorrespondenceReport> {
    opts.validate()?;
    let n = field.n();
    if x0.len() != n || v0.len() != n {
        return Err(Error::invalid(format!("initial state must have {n} positions and {n} velocities")));
    }
    if !field.contains(x0) {
        return Err(Error::invalid(format!("initial position {x0:?} is outside the field domain")));
    }
    let f = f.on(field.domain().to_vec())?;
    let barred = transform_system(field, &f)?;
    let scale = opts.h_scale;
    let rate = |x: &[f64]| -> Result<f64> { Ok(scale / f.eval(x)?) };

    let ivp = IvpOptions::new(opts.ivp_tol).truncating();
    let mut state0 = x0.to_vec();
    state0.extend_from_slice(v0);
    let traj = solve_ivp_with(field.first_order(), 0.0, &state0, t_end, &ivp)?;
    let covered = traj.t_end();
    if !(covered > 0.0) {
        return Err(Error::invalid("trajectory leaves the domain immediately"));
    }
    let rhs = field.first_order();
    let mut aug0 = state0.clone();
    aug0.push(0.0);
    let augmented = solve_ivp_with(
        |t, y: &[f64]| {
            let mut d = rhs(t, &y[..2 * n])?;
            d.push(rate(&y[..n])?);
            Ok(d)
        },
        0.0,
        &aug0,
        covered,
        &ivp,
    )?;
    let tau = TauMap::new(&traj, |y: &[f64]| rate(&y[..n]), opts.quad_tol)?;
    let tau_end = tau.at(covered)?;

    let f0 = f.eval(x0)?;
    let mut bar0 = x0.to_vec();
    bar0.extend(v0.iter().map(|v| f0 * v));
    let bar = solve_ivp_with(barred.first_order(), 0.0, &bar0, tau_end, &ivp)?;

    let mut columns = vec!["t".to_string()];
    columns.extend(field.positions());
    columns.extend(field.velocities());
    columns.push("tau".into());
    columns.extend(field.positions().iter().map(|p| format!("{p}_bar")));
    columns.extend(field.velocities().iter().map(|p| format!("{p}_bar")));
    if target.is_some() {
        columns.push("residual".into());
    }
    let mut table = SampleTable {
        columns,
        rows: Vec::with_capacity(opts.samples),
    };
    let stencil = STENCIL_FRACTION * (bar.t_end() - bar.t_start());
    let (mut state_err, mut vel_err, mut tau_gap) = (0.0f64, 0.0f64, 0.0f64);
    let mut tau_of_t = Vec::with_capacity(opts.samples);
    let mut truncation = truncation_reason(&traj);
    for t in sample_times(covered, opts.samples) {
        let y = traj.dense(t)?;
        let tau_t = tau.at(t)?;
        if t <= augmented.t_end() {
            tau_gap = tau_gap.max(max_gap(tau_t, augmented.dense(t)?[2 * n]));
        }
        if tau_t > bar.t_end() {
            truncation.get_or_insert_with(|| format!("transformed trajectory stopped at tau = {}", bar.t_end()));
            break;
        }
        let yb = bar.dense(tau_t)?;
        let fx = f.eval(&y[..n])?;
        for i in 0..n {
            state_err = state_err.max(max_gap(yb[i], y[i]));
            vel_err = vel_err.max(relative_gap(yb[n + i], fx * y[n + i]));
        }
        tau_of_t.push([t, tau_t]);
        let mut row = vec![t];
        row.extend_from_slice(&y);
        row.push(tau_t);
        row.extend_from_slice(&yb);
        if let Some(target) = target {
            let at = tau_t.clamp(bar.t_start() + 2.0 * stencil, bar.t_end() - 2.0 * stencil);
            row.push(stencil_residual(&bar, n, target, at, stencil)?);
        }
        table.rows.push(row);
    }
    check_monotone(&tau_of_t)?;

    let target_residual = match target {
        Some(target) => Some(second_derivative_residual(&bar, n, target, opts.samples)?),
        None => None,
    };
    let verdict = if state_err <= opts.tol && vel_err <= opts.tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(CorrespondenceReport {
        kind: "field_transform",
        max_state_error: state_err,
        max_velocity_error: vel_err,
        tolerance: opts.tol,
        verdict,
        requested_t_end: t_end,
        covered_t_end: covered,
        truncation,
        tau_of_t,
        tau_crosscheck: tau_gap,
        target_residual,
        h_scale: opts.h_scale,
        integrator_stats: traj.stats().clone(),
        transformed_stats: Some(bar.stats().clone()),
        trajectories: opts.embed_trajectories.then(|| EmbeddedTrajectories {
            original: traj.to_csv(),
            transformed: bar.to_csv(),
        }),
        table,
    })
}

/// Largest `|x̄″(τ) − target(x̄(τ))|` over equispaced `τ` at which the
/// five-point stencil fits inside the trajectory.
pub fn second_derivative_residual(bar: &Trajectory, n: usize, target: TargetField<'_>, samples: usize) -> Result<f64> {
    let (a, b) = (bar.t_start(), bar.t_end());
    let h = STENCIL_FRACTION * (b - a);
    let mut worst = 0.0f64;
    for i in 0..samples {
        let tau = a + 2.0 * h + (b - a - 4.0 * h) * i as f64 / (samples - 1) as f64;
        worst = worst.max(stencil_residual(bar, n, target, tau, h)?);
    }
    Ok(worst)
}

fn stencil_residual(bar: &Trajectory, n: usize, target: TargetField<'_>, tau: f64, h: f64) -> Result<f64> {
    let at = |s: f64| bar.dense(s);
    let (m2, m1, c, p1, p2) = (at(tau - 2.0 * h)?, at(tau - h)?, at(tau)?, at(tau + h)?, at(tau + 2.0 * h)?);
    let expected = target(&c[..n])?;
    let mut worst = 0.0f64;
    for k in 0..n {
        let d2 = (-p2[k] + 16.0 * p1[k] - 30.0 * c[k] + 16.0 * m1[k] - m2[k]) / (12.0 * h * h);
        worst = worst.max((d2 - expected[k]).abs());
    }
    Ok(worst)
}
