use std::fmt::Write;

use serde_json::{json, Value};
use sundman_core::demo::run_demo;
use sundman_core::document::{FieldDocument, SodeDocument};
use sundman_core::sode1d::Linearisation;
use sundman_core::sodend::{check_fibre_linear, check_inhomogeneous_linear, check_linear, transform_system};
use sundman_core::verify::{verify_field_transform, verify_linearisation, SampleTable, VerifyOptions};
use sundman_core::{Error, Result, RunConfig};

use crate::args::VerifyArgs;

/// Exit statuses shared by every command.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;

/// One command's result in every output format.
#[derive(Debug)]
pub struct Report {
    pub json: Value,
    pub csv: String,
    pub pretty: String,
    pub code: i32,
}

fn status(positive: bool) -> i32 {
    if positive {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    }
}

/// Drop knot tables from numeric functions, keeping their definitions.
fn strip_knots(v: &mut Value) {
    match v {
        Value::Object(m) => {
            if m.get("kind").and_then(Value::as_str) == Some("numeric") {
                m.remove("knots");
            }
            m.values_mut().for_each(strip_knots);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_knots),
        _ => {}
    }
}

fn q_table(pieces: &[Linearisation]) -> SampleTable {
    let rows = pieces
        .iter()
        .enumerate()
        .flat_map(|(k, lin)| {
            let samples = lin.q.as_ref().map(|q| q.samples.clone()).unwrap_or_default();
            samples.into_iter().map(move |(x, q)| vec![k as f64, x, q])
        })
        .collect();
    SampleTable {
        columns: ["piece", "x", "q"].map(String::from).to_vec(),
        rows,
    }
}

/// Classify a scalar document; `with_knots` exports numeric transformations
/// in full.
pub fn check(doc: &SodeDocument, cfg: &RunConfig, with_knots: bool) -> Result<Report> {
    let pieces = doc.linearize(cfg)?;
    let linearisable = pieces.iter().all(|p| p.outcome.is_linearisable());
    let mut json_pieces: Vec<Value> = pieces.iter().map(Linearisation::to_json).collect();
    if !with_knots {
        json_pieces.iter_mut().for_each(strip_knots);
    }
    let mut pretty = String::new();
    for lin in &pieces {
        if pieces.len() > 1 {
            let _ = writeln!(pretty, "piece {}", lin.domain);
        }
        pretty.push_str(&lin.describe());
    }
    let _ = writeln!(pretty, "linearisable: {linearisable}");
    Ok(Report {
        json: json!({
            "command": if with_knots { "linearize" } else { "check" },
            "linearisable": linearisable,
            "pieces": json_pieces,
        }),
        csv: q_table(&pieces).to_csv(),
        pretty,
        code: status(linearisable),
    })
}

pub fn verify(doc: &SodeDocument, cfg: &RunConfig, args: &VerifyArgs) -> Result<Report> {
    let initial = doc.initial;
    let pick = |flag: Option<f64>, stored: Option<f64>, name: &str| {
        flag.or(stored)
            .ok_or_else(|| Error::invalid(format!("--{name} is required when the document has no \"initial\" block")))
    };
    let x0 = pick(args.x0, initial.map(|i| i.x), "x0")?;
    let v0 = pick(args.v0, initial.map(|i| i.v), "v0")?;
    let t_end = pick(args.t_end, initial.map(|i| i.t_end), "t-end")?;

    let pieces = doc.linearize(cfg)?;
    let lin = pieces
        .iter()
        .find(|p| p.domain.contains(x0))
        .ok_or_else(|| Error::invalid(format!("x0 = {x0} lies in no linearised piece of the domain")))?;
    let mut pretty = lin.describe();
    let quadratic = doc.quadratic()?;
    let (Some(s), true) = (quadratic, lin.outcome.is_linearisable()) else {
        let _ = writeln!(pretty, "verdict: fail (nothing to verify)");
        return Ok(Report {
            json: json!({
                "command": "verify",
                "passed": false,
                "linearisation": lin.to_json(),
                "verification": Value::Null,
            }),
            csv: String::new(),
            pretty,
            code: EXIT_NEGATIVE,
        });
    };
    let s = s.restrict(lin.domain)?;
    let mut opts = VerifyOptions::new(args.tol, cfg).with_h_scale(args.inject_h_scale);
    opts.samples = args.samples;
    opts.embed_trajectories = args.embed_trajectories;
    let report = verify_linearisation(&s, &lin.outcome, x0, v0, t_end, &opts)?;
    pretty.push_str(&report.describe(x0, v0));
    let mut lin_json = lin.to_json();
    strip_knots(&mut lin_json);
    Ok(Report {
        json: json!({
            "command": "verify",
            "passed": report.passed(),
            "linearisation": lin_json,
            "verification": report.to_json(),
        }),
        csv: report.table.to_csv(),
        pretty,
        code: status(report.passed()),
    })
}

pub fn demo(name: &str, cfg: &RunConfig) -> Result<Report> {
    let r = run_demo(name, cfg)?;
    let mut json = r.json;
    if let Value::Object(m) = &mut json {
        m.insert("command".into(), json!("demo"));
        m.insert("summary".into(), json!(r.summary));
    }
    Ok(Report {
        json,
        csv: r.table.to_csv(),
        pretty: r.summary,
        code: status(r.passed),
    })
}

fn verdict_line(out: &mut String, name: &str, holds: bool, residual: f64, scale: f64) {
    let _ = writeln!(out, "{name}: {holds} (identity residual {residual:.3e}, scale {scale:.3e})");
}

/// Twelve decimals, trailing zeros dropped; the JSON keeps full precision.
fn short(v: f64) -> String {
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn matrix_text(m: &[Vec<f64>]) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|r| r.iter().map(|&v| short(v)).collect::<Vec<_>>().join(", "))
        .collect();
    format!("[{}]", rows.join("; "))
}

pub fn field(doc: &FieldDocument, cfg: &RunConfig, tol: f64) -> Result<Report> {
    let field = doc.field()?;
    let linear = check_linear(&field)?;
    let fibre = check_fibre_linear(&field)?;
    let inhomogeneous = check_inhomogeneous_linear(&field)?;

    let mut pretty = format!("field in {} dimensions\n", field.n());
    for (i, c) in field.components().iter().enumerate() {
        let _ = writeln!(pretty, "  X{} = {c}", i + 1);
    }
    verdict_line(&mut pretty, "linear", linear.holds, linear.identity_residual, linear.scale);
    if let Some(c) = &linear.certificate {
        let _ = writeln!(pretty, "  A = {}, B = {}", matrix_text(&c.a), matrix_text(&c.b));
    }
    verdict_line(&mut pretty, "fibre-linear", fibre.holds, fibre.identity_residual, fibre.scale);
    if let Some(rows) = &fibre.certificate {
        for (i, row) in rows.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|e| e.to_string()).collect();
            let _ = writeln!(pretty, "  dX{}/dv = [{}]", i + 1, cells.join(", "));
        }
    }
    verdict_line(
        &mut pretty,
        "inhomogeneous-linear",
        inhomogeneous.holds,
        inhomogeneous.identity_residual,
        inhomogeneous.scale,
    );
    if let Some(c) = &inhomogeneous.certificate {
        let _ = writeln!(
            pretty,
            "  A = {}, B = {}, C = {}",
            matrix_text(&c.a),
            matrix_text(&c.b),
            matrix_text(std::slice::from_ref(&c.c))
        );
    }

    let mut json = json!({
        "command": "field",
        "n": field.n(),
        "components": field.components().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "linear": linear,
        "fibre_linear": fibre.to_json(),
        "inhomogeneous_linear": inhomogeneous,
    });
    let mut code = EXIT_OK;
    let mut csv = String::from("detector,holds,identity_residual,scale\n");
    for (name, holds, r, s) in [
        ("linear", linear.holds, linear.identity_residual, linear.scale),
        ("fibre_linear", fibre.holds, fibre.identity_residual, fibre.scale),
        ("inhomogeneous_linear", inhomogeneous.holds, inhomogeneous.identity_residual, inhomogeneous.scale),
    ] {
        let _ = writeln!(csv, "{name},{holds},{r:.16e},{s:.16e}");
    }

    if let Some(f) = doc.time_function()? {
        let barred = transform_system(&field, &f)?;
        let components: Vec<String> = barred.components().iter().map(|c| c.to_string()).collect();
        let _ = writeln!(pretty, "time change dtau/dt = {}, quasi-velocities f·v:", f.h_dtau_per_dt());
        for (i, c) in components.iter().enumerate() {
            let _ = writeln!(pretty, "  X{}_bar = {c}", i + 1);
        }
        let mut transformed = json!({
            "f": f.expr().to_string(),
            "h_dtau_per_dt": f.h_dtau_per_dt().to_string(),
            "components": components,
        });
        if let Some(init) = &doc.initial {
            let opts = VerifyOptions::new(tol, cfg);
            let report = verify_field_transform(&field, &f, &init.x, &init.v, init.t_end, &opts)?;
            pretty.push_str(&report.describe(&init.x, &init.v));
            csv = report.table.to_csv();
            code = status(report.passed());
            transformed["verification"] = report.to_json();
        }
        json["transformed"] = transformed;
    }
    Ok(Report { json, csv, pretty, code })
}
