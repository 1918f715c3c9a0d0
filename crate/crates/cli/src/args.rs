use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sundman_core::OutputFormat;

/// Sundman linearisation of second-order differential equations.
///
/// Defaults for every tolerance come from the config file (--config or
/// SUNDMAN_CONFIG) and otherwise from the built-in values shown below.
#[derive(Debug, Parser)]
#[command(name = "sundman", version, propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML or JSON run configuration.
    #[arg(long, global = true, env = "SUNDMAN_CONFIG", value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Relative threshold for declaring Q identically zero [default: 1e-9].
    #[arg(long, global = true, value_name = "TOL")]
    pub q_tol: Option<f64>,
    /// Local error tolerance of the ODE integrator [default: 1e-10].
    #[arg(long, global = true, value_name = "TOL")]
    pub ivp_tol: Option<f64>,
    /// Anchor of every antiderivative, φ(base) = 0 [default: domain midpoint].
    #[arg(long, global = true, value_name = "X", allow_negative_numbers = true)]
    pub base_point: Option<f64>,
    /// Output format [default: json].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Parameter override, repeatable; wins over the document's "params".
    #[arg(long = "param", global = true, value_name = "NAME=VALUE", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Split the domain where the dividing coefficient changes sign
    /// [default: off].
    #[arg(long, global = true)]
    pub auto_split: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Pretty,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
            Format::Pretty => OutputFormat::Pretty,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a scalar equation and report the Q test.
    ///
    /// Exit status: 0 linearisable, 2 not linearisable, 1 input error.
    Check(Input),
    /// Same as check, with numeric transformations exported as knot tables.
    Linearize(Input),
    /// Linearize, then integrate both sides and compare trajectories.
    ///
    /// Exit status: 0 when the verdict is pass, 2 otherwise, 1 input error.
    Verify(VerifyArgs),
    /// Run a bundled example end to end.
    ///
    /// Exit status: 0 when every check passes, 2 otherwise, 1 for an
    /// unknown name.
    Demo(DemoArgs),
    /// Linearity detectors and time change of an n-dimensional field.
    ///
    /// Exit status: 0, or 2 when a requested trajectory comparison fails.
    Field(FieldArgs),
}

#[derive(Debug, Args)]
pub struct Input {
    /// JSON document; `-` reads standard input.
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: Input,
    /// Initial position [default: the document's "initial" block].
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    /// Initial velocity.
    #[arg(long, allow_negative_numbers = true)]
    pub v0: Option<f64>,
    /// Final time.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Pass threshold on the trajectory discrepancy.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Number of comparison samples.
    #[arg(long, default_value_t = sundman_core::verify::DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Embed both integrated trajectories in the JSON report.
    #[arg(long)]
    pub embed_trajectories: bool,
    /// Test hook: multiply dτ/dt by this factor to corrupt the transformation.
    #[arg(long, hide = true, default_value_t = 1.0)]
    pub inject_h_scale: f64,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    #[command(flatten)]
    pub input: Input,
    /// Pass threshold when the document has an "initial" block and `f`.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// One of ermakov, sphere, nap, lienard, kepler, oscillator-damped.
    pub name: String,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(format!("empty parameter name in `{s}`"));
    }
    let value = value.trim().parse::<f64>().map_err(|e| format!("bad value for `{name}`: {e}"))?;
    Ok((name.to_string(), value))
}
