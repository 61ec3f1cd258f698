//! `entropy-lab`: runs the named experiments and writes CSV reports.

mod config;
mod error;
mod experiments;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::experiments::{catalog_text, find, Run, CATALOG};
use crate::output::{manifest_line, OutputDir};

#[derive(Debug, Parser)]
#[command(name = "entropy-lab", version, about = "Numerical experiments for entropy methods in conservation laws")]
struct Args {
    /// Experiment name; omit to list the catalog.
    experiment: Option<String>,
    /// INI config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: out/<experiment>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomly generated data.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add a generation timestamp to CSV headers.
    #[arg(long)]
    timestamp: bool,
}

fn run(args: &Args, name: &str, out_dir: &Path) -> Result<Vec<String>> {
    let experiment = find(name).ok_or_else(|| CliError::UnknownExperiment {
        name: name.to_string(),
        valid: CATALOG.iter().map(|e| e.name).collect::<Vec<_>>().join(", "),
    })?;
    let path = args.config.as_ref().ok_or_else(|| CliError::Config("missing --config <path>".into()))?;
    let bytes = std::fs::read(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Config("config is not valid UTF-8".into()))?;
    let cfg = Config::parse(&text, &experiment.allowed())?;
    for key in experiment.required {
        if cfg.raw(key).is_none() {
            return Err(CliError::Config(format!("missing required key `{key}`")));
        }
    }
    let out = OutputDir::create(out_dir, manifest_line(name, &bytes), args.timestamp)?;
    let mut state = Run { cfg, out, seed: args.seed, summary: Vec::new() };
    let outcome = (experiment.run)(&mut state);
    let mut lines = vec![state.out.manifest().to_string()];
    lines.append(&mut state.summary);
    lines.extend(state.out.written().iter().map(|p| format!("wrote {}", p.display())));
    match outcome {
        Ok(()) => Ok(lines),
        Err(e) => {
            lines.iter().for_each(|l| println!("{l}"));
            Err(e)
        }
    }
}

fn failure_record(experiment: &str, err: &CliError) -> String {
    let mut record = serde_json::json!({
        "status": "failure",
        "experiment": experiment,
        "kind": err.kind(),
        "exit_code": err.exit_code(),
        "message": err.to_string(),
    });
    if let CliError::UnknownKey(key) = err {
        record["key"] = serde_json::Value::String(key.clone());
    }
    record.to_string()
}

fn main() -> ExitCode {
    let args = Args::parse();
    let Some(name) = args.experiment.clone() else {
        print!("{}", catalog_text());
        return ExitCode::SUCCESS;
    };
    let out_dir = args.out.clone().unwrap_or_else(|| Path::new("out").join(&name));
    match run(&args, &name, &out_dir) {
        Ok(lines) => {
            lines.iter().for_each(|l| println!("{l}"));
            ExitCode::SUCCESS
        }
        Err(err) => {
            let record = failure_record(&name, &err);
            eprintln!("{record}");
            if out_dir.is_dir() {
                let _ = std::fs::write(out_dir.join("failure.json"), format!("{record}\n"));
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
