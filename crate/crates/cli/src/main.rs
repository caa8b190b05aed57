#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cli;
mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::cli::Cli;
use crate::config::RunConfig;
use crate::error::{AppError, Kind};

fn thread_count(flag: Option<usize>, cfg: &RunConfig) -> Result<Option<usize>, AppError> {
    if let Ok(v) = std::env::var("ZS_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| AppError::config_msg(format!("ZS_THREADS = '{v}' is not a positive integer")))?;
        return Ok(Some(n));
    }
    Ok(flag.or(cfg.threads))
}

fn execute(cli: Cli) -> Result<bool, AppError> {
    let cfg = cli.command.into_config()?;
    cfg.validate()?;
    if let Some(n) = thread_count(cli.threads, &cfg)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| AppError::config_msg(format!("thread pool: {e}")))?;
    }
    match commands::run(&cfg) {
        Ok(outcome) => {
            outcome.artifacts.write()?;
            for check in outcome.report.checks.iter().filter(|c| c.gated && !c.passed) {
                eprintln!("check failed: {} = {:e} (tolerance {:e})", check.name, check.measured, check.tolerance);
            }
            if let Some(err) = &outcome.report.error {
                eprintln!("partial run: {err}");
            }
            Ok(outcome.passed())
        }
        Err(e) => {
            // numerical failures still leave a partial report behind
            if e.kind == Kind::Module {
                if let Some(path) = &cfg.output.report {
                    let mut report = commands::base_report(&cfg);
                    report.fail(&e.message);
                    std::fs::write(path, output::report_json(&report)).map_err(|io| AppError::io(path, io))?;
                }
            }
            Err(e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("zs: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
