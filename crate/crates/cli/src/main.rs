mod args;
mod commands;
mod config;

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use sundman_core::document::{FieldDocument, SodeDocument};
use sundman_core::{Error, OutputFormat, Result};

use args::{Cli, Command, Input};
use commands::{Report, EXIT_INPUT};

fn read_input(input: &Input) -> Result<String> {
    if input.input == Path::new("-") {
        let mut text = String::new();
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Error::invalid(format!("cannot read standard input: {e}")))?;
        return Ok(text);
    }
    fs::read_to_string(&input.input).map_err(|e| Error::invalid(format!("cannot read {}: {e}", input.input.display())))
}

fn overrides(cli: &Cli) -> impl Iterator<Item = (&str, f64)> {
    cli.global.params.iter().map(|(k, v)| (k.as_str(), *v))
}

fn sode_document(cli: &Cli, input: &Input) -> Result<SodeDocument> {
    Ok(SodeDocument::from_json(&read_input(input)?)?.with_params(overrides(cli)))
}

fn run(cli: &Cli) -> Result<(Report, OutputFormat)> {
    let cfg = config::resolve(&cli.global)?;
    let report = match &cli.command {
        Command::Check(input) => commands::check(&sode_document(cli, input)?, &cfg, false)?,
        Command::Linearize(input) => commands::check(&sode_document(cli, input)?, &cfg, true)?,
        Command::Verify(args) => commands::verify(&sode_document(cli, &args.input)?, &cfg, args)?,
        Command::Demo(args) => commands::demo(&args.name, &cfg)?,
        Command::Field(args) => {
            let doc = FieldDocument::from_json(&read_input(&args.input)?)?.with_params(overrides(cli));
            commands::field(&doc, &cfg, args.tol)?
        }
    };
    Ok((report, cfg.output_format))
}

fn render(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(&report.json).expect("report serializes");
            text.push('\n');
            text
        }
        OutputFormat::Csv => report.csv.clone(),
        OutputFormat::Pretty => report.pretty.clone(),
    }
}

fn emit(text: &str, out: Option<&Path>) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok((report, format)) => match emit(&render(&report, format), cli.global.out.as_deref()) {
            Ok(()) => report.code,
            Err(e) => {
                eprintln!("error: cannot write output: {e}");
                EXIT_INPUT
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    };
    ExitCode::from(code as u8)
}
