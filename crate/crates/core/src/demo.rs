//! Bundled end-to-end runs over the reference equations.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fixtures;
use crate::interval::Interval;
use crate::sode1d::{linearize, linearize_split, Linearisation, QuadraticSode};
use crate::sodend::{find_energy_f, BasicFunction, DEFAULT_EXPONENTS};
use crate::verify::{
    solve_linear_target, verify_field_transform_with_target, verify_linearisation, CorrespondenceReport, SampleTable,
    VerifyOptions,
};

pub const DEMO_NAMES: [&str; 6] = ["ermakov", "sphere", "nap", "lienard", "kepler", "oscillator-damped"];

/// Agreement required between the mapped and closed-form trajectories.
pub const DEMO_TOL: f64 = 1e-6;
/// Largest accepted `|d²r/dτ² − (2Er + k)|` in the Kepler run.
pub const KEPLER_RESIDUAL_TOL: f64 = 1e-4;
/// Agreement required in the Kepler run.
pub const KEPLER_TOL: f64 = 1e-5;

const PLOT_COLUMNS: [&str; 5] = ["t", "x", "tau", "y_mapped", "y_closed_form"];

#[derive(Debug, Clone)]
pub struct DemoReport {
    pub name: &'static str,
    pub passed: bool,
    pub summary: String,
    pub json: Value,
    /// Plot data with columns `t, x, tau, y_mapped, y_closed_form` and any
    /// demo-specific extras.
    pub table: SampleTable,
}

pub fn run_demo(name: &str, cfg: &RunConfig) -> Result<DemoReport> {
    cfg.validate()?;
    match name {
        "ermakov" => ermakov(cfg),
        "sphere" => sphere(cfg),
        "nap" => nap(cfg),
        "lienard" => lienard(cfg),
        "kepler" => kepler(cfg),
        "oscillator-damped" => damped(cfg),
        _ => Err(Error::invalid(format!("unknown demo `{name}`; available: {}", DEMO_NAMES.join(", ")))),
    }
}

fn with_default_base(cfg: &RunConfig, x0: f64) -> RunConfig {
    let mut c = cfg.clone();
    c.base_point.get_or_insert(x0);
    c
}

fn options(cfg: &RunConfig, tol: f64) -> VerifyOptions {
    VerifyOptions::new(tol, cfg)
}

/// `t, x, tau, y_mapped, y_closed_form` from a linearisation report.
fn plot_table(report: &CorrespondenceReport) -> SampleTable {
    let names = ["t", "x", "tau", "y_mapped", "y_closed_form"];
    let cols: Vec<Vec<f64>> = names.iter().map(|n| report.table.column(n).expect("linearisation column")).collect();
    SampleTable {
        columns: PLOT_COLUMNS.map(String::from).to_vec(),
        rows: (0..report.table.rows.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect(),
    }
}

/// Linearize, verify from one state, and package the result.
fn scalar_demo(
    name: &'static str,
    title: &str,
    s: &QuadraticSode,
    cfg: &RunConfig,
    (x0, v0, t_end): (f64, f64, f64),
    extra: impl FnOnce(&Linearisation, &mut String, &mut serde_json::Map<String, Value>) -> Result<bool>,
) -> Result<DemoReport> {
    let lin = linearize(s, cfg)?;
    let mut summary = format!("demo {name}: {title} on {}\n", s.domain());
    summary.push_str(&lin.describe());
    let mut obj = serde_json::Map::new();
    let extra_ok = extra(&lin, &mut summary, &mut obj)?;
    if !lin.outcome.is_linearisable() {
        return Err(Error::Diagnostics(format!("demo {name} did not linearize: {}", lin.outcome.case())));
    }
    let report = verify_linearisation(s, &lin.outcome, x0, v0, t_end, &options(cfg, DEMO_TOL))?;
    summary.push_str(&report.describe(x0, v0));
    let passed = report.passed() && extra_ok;
    obj.insert("demo".into(), json!(name));
    obj.insert("passed".into(), json!(passed));
    obj.insert("linearisation".into(), lin.to_json());
    obj.insert("verification".into(), report.to_json());
    Ok(DemoReport {
        name,
        passed,
        summary,
        json: Value::Object(obj),
        table: plot_table(&report),
    })
}

fn ermakov(cfg: &RunConfig) -> Result<DemoReport> {
    let omega = 1.0;
    let s = fixtures::ermakov_pinney(omega)?;
    let cfg = with_default_base(cfg, 1.0);
    scalar_demo("ermakov", "x'' + (2/x)x'^2 + omega^2/x^3 = 0, omega = 1", &s, &cfg, (1.0, 0.0, 0.8), |lin, out, obj| {
        // h should be ω²/x: report the spread of h(x)·x/ω².
        let Some(t) = lin.outcome.transform() else { return Ok(false) };
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in s.domain().grid(64) {
            let r = t.h().eval(x)? * x / (omega * omega);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let _ = writeln!(out, "h(x)·x/omega^2 over 64 samples: [{lo:.12}, {hi:.12}]");
        obj.insert("h_times_x_over_omega2".into(), json!([lo, hi]));
        Ok((hi - lo).abs() <= 1e-9 * hi.abs())
    })
}

fn nap(cfg: &RunConfig) -> Result<DemoReport> {
    let s = fixtures::nap()?;
    let cfg = with_default_base(cfg, 1.0);
    scalar_demo("nap", "x'' + x'^2/x + x·x' + 1/2 = 0", &s, &cfg, (1.0, 0.0, 1.5), |_, _, _| Ok(true))
}

fn lienard(cfg: &RunConfig) -> Result<DemoReport> {
    let s = fixtures::lienard(1.0, 1.0, 0.0)?;
    let perturbed = linearize(&fixtures::lienard(1.0, 1.0, 0.05)?, cfg)?;
    scalar_demo(
        "lienard",
        "x'' + x·x' + x·(x^2/2) + x = 0",
        &s,
        cfg,
        (1.5, 0.0, 0.5),
        |lin, out, obj| {
            let q_zero = lin.q.as_ref().is_some_and(|q| q.vanishes);
            let flipped = perturbed.outcome.case() == "not_linearisable";
            let _ = writeln!(
                out,
                "with g shifted by 0.05: case {} (Q ratio {:.3e})",
                perturbed.outcome.case(),
                perturbed.q.as_ref().map_or(f64::NAN, |q| q.ratio)
            );
            obj.insert("perturbed".into(), perturbed.to_json());
            Ok(q_zero && flipped)
        },
    )
}

fn damped(cfg: &RunConfig) -> Result<DemoReport> {
    let s = QuadraticSode::parse("0", "1/2", "x", Interval::new(-3.0, 3.0)?, &[])?;
    let cfg = with_default_base(cfg, 0.0);
    scalar_demo("oscillator-damped", "x'' + x'/2 + x = 0", &s, &cfg, (1.0, 0.0, 10.0), |_, _, _| Ok(true))
}

fn sphere(cfg: &RunConfig) -> Result<DemoReport> {
    let s = fixtures::sphere_geodesics()?;
    let pieces = linearize_split(&s, cfg)?;
    let mut summary = format!(
        "demo sphere: x'' - 2cot(x)·x'^2 - sin(x)cos(x) = 0 on {}, split into {} pieces\n",
        s.domain(),
        pieces.len()
    );
    let starts = [(1.0, -0.5), (std::f64::consts::PI - 1.0, 0.5)];
    let mut table = SampleTable {
        columns: std::iter::once("piece").chain(PLOT_COLUMNS).map(String::from).collect(),
        rows: Vec::new(),
    };
    let mut runs = Vec::new();
    let mut passed = pieces.len() == 2;
    for (k, (lin, &(x0, v0))) in pieces.iter().zip(&starts).enumerate() {
        let _ = writeln!(summary, "piece {k}: {}", lin.domain);
        summary.push_str(&lin.describe());
        let report = verify_linearisation(&s, &lin.outcome, x0, v0, 1.0, &options(cfg, DEMO_TOL))?;
        summary.push_str(&report.describe(x0, v0));
        passed &= report.passed();
        for row in plot_table(&report).rows {
            table.rows.push(std::iter::once(k as f64).chain(row).collect());
        }
        runs.push(json!({ "linearisation": lin.to_json(), "verification": report.to_json() }));
    }
    Ok(DemoReport {
        name: "sphere",
        passed,
        summary,
        json: json!({ "demo": "sphere", "passed": passed, "pieces": runs }),
        table,
    })
}

fn kepler(cfg: &RunConfig) -> Result<DemoReport> {
    let (k, l, fit_energy) = (1.0, 1.0, -0.5);
    let (r0, rdot0, t_end) = (1.0, 0.3, 1.0);
    let sys = fixtures::kepler_system(fit_energy, k, l)?;
    let found = find_energy_f(&sys, &DEFAULT_EXPONENTS)?
        .ok_or_else(|| Error::Diagnostics("no monomial time function reduces the Kepler system".into()))?;
    let red = &found.reduction;
    let mut summary = format!(
        "demo kepler: V = -k/r + l^2/(2r^2), k = {k}, l = {l}\nf(r) = r^{} reduces f^2(E - V) = A r^2 + B r + C at E = {fit_energy}: A = {}, B = {}, C = {}\n",
        found.exponent, red.a, red.b, red.c
    );

    // The run's own energy selects the reduced equation along it.
    let energy = fixtures::kepler_energy(k, l, r0, rdot0);
    let (a, b, _) = red
        .at_energy(energy)
        .ok_or_else(|| Error::Diagnostics("reduction is not valid at every energy".into()))?;
    let field = fixtures::kepler_radial(k, l)?;
    let f = BasicFunction::new(found.f.renamed("x").expr().clone(), field.domain().to_vec())?;
    let target = move |x: &[f64]| Ok(vec![2.0 * a * x[0] + b]);
    let report = verify_field_transform_with_target(
        &field,
        &f,
        &[r0],
        &[rdot0],
        t_end,
        &options(cfg, KEPLER_TOL),
        Some(&target),
    )?;
    let residual = report.target_residual.unwrap_or(f64::INFINITY);

    let closed = solve_linear_target(0.0, -2.0 * a, -b, r0, f.eval(&[r0])? * rdot0);
    let cols = ["t", "x", "tau", "x_bar", "residual"].map(|n| report.table.column(n).expect("field column"));
    let mut closed_gap = 0.0f64;
    let rows: Vec<Vec<f64>> = (0..cols[0].len())
        .map(|i| {
            let yc = closed.y(cols[2][i]);
            closed_gap = closed_gap.max((yc - cols[3][i]).abs());
            vec![cols[0][i], cols[1][i], cols[2][i], cols[3][i], yc, cols[4][i]]
        })
        .collect();
    let passed = report.passed() && residual <= KEPLER_RESIDUAL_TOL && closed_gap <= KEPLER_TOL;
    let _ = writeln!(
        summary,
        "run from (r, r') = ({r0}, {rdot0}) with E = {energy}: target r'' = {}·r + {b}",
        2.0 * a
    );
    let _ = writeln!(
        summary,
        "max |r_bar(tau(t)) - r(t)| = {:.3e}, max |r'' - (2Er + k)| = {residual:.3e}, max gap to closed form {closed_gap:.3e}",
        report.max_state_error
    );
    let _ = writeln!(summary, "verdict: {}", if passed { "pass" } else { "fail" });
    Ok(DemoReport {
        name: "kepler",
        passed,
        summary,
        json: json!({
            "demo": "kepler",
            "passed": passed,
            "exponent": found.exponent,
            "reduction": red,
            "run_energy": energy,
            "closed_form_gap": closed_gap,
            "verification": report.to_json(),
        }),
        table: SampleTable {
            columns: PLOT_COLUMNS.iter().copied().chain(["residual"]).map(String::from).collect(),
            rows,
        },
    })
}
