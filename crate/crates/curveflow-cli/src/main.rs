//! Curve evolution with curvature adjusted tangential redistribution.
//!
//! Usage: `curveflow <command> --config <path> [--out <dir>] [--set section.key=value ...]`
//! with commands `evolve`, `eoc`, `discrepancy`, `redistribute`, `segment`.
//! `--set` overrides file values; the output directory defaults to
//! `output.directory`, then `$CURVEFLOW_OUT`, then `./out`.

mod commands;
mod config;
mod csvio;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use commands::CliError;

const USAGE: &str = "usage: curveflow <evolve|eoc|discrepancy|redistribute|segment> \
--config <path> [--out <dir>] [--set section.key=value ...]";

struct Args {
    command: String,
    config_path: PathBuf,
    out_dir: Option<PathBuf>,
    overrides: Vec<(String, String)>,
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    let mut iter = argv.iter();
    let command = iter.next().ok_or(USAGE)?.clone();
    if command == "help" || command == "--help" || command == "-h" {
        return Err(USAGE.to_string());
    }
    let mut config_path = None;
    let mut out_dir = None;
    let mut overrides = Vec::new();
    while let Some(arg) = iter.next() {
        match arg.as_str() {
            "--config" => {
                let v = iter.next().ok_or("--config needs a path")?;
                config_path = Some(PathBuf::from(v));
            }
            "--out" => {
                let v = iter.next().ok_or("--out needs a directory")?;
                out_dir = Some(PathBuf::from(v));
            }
            "--set" => {
                let v = iter.next().ok_or("--set needs section.key=value")?;
                let (k, val) = v
                    .split_once('=')
                    .ok_or("--set expects section.key=value")?;
                overrides.push((k.trim().to_string(), val.trim().to_string()));
            }
            other => return Err(format!("unknown argument '{other}'\n{USAGE}")),
        }
    }
    let config_path = config_path.ok_or(format!("missing --config\n{USAGE}"))?;
    Ok(Args { command, config_path, out_dir, overrides })
}

fn run(argv: &[String]) -> Result<(), CliError> {
    let args = parse_args(argv).map_err(CliError::Config)?;
    let text = std::fs::read_to_string(&args.config_path).map_err(|e| {
        CliError::Config(format!("cannot read config '{}': {e}", args.config_path.display()))
    })?;
    let cfg = config::parse_config_with_overrides(&text, &args.overrides)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let out = args
        .out_dir
        .or_else(|| cfg.output.directory.clone().map(PathBuf::from))
        .or_else(|| std::env::var_os("CURVEFLOW_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let written = commands::run(&args.command, &cfg, &out)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match run(&argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}: {}", err.kind(), err);
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
