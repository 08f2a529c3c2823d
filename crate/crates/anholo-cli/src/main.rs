use std::fs;
use std::io::Write;
use std::process::ExitCode;

use anholo_cli::{execute, Cli, EXIT_USAGE};
use clap::error::ErrorKind;
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE as u8),
            };
        }
    };
    let pool = match thread_pool() {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let outcome = pool.install(|| execute(&cli.command));
    let common = cli.command.common();
    let json = outcome.report.to_json();
    match &common.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &json) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => {
            let _ = std::io::stdout().write_all(json.as_bytes());
        }
    }
    if let (Some(path), Some(table)) = (&common.csv, &outcome.table) {
        if let Err(e) = fs::write(path, table.to_csv()) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    if let Some((kind, msg)) = &outcome.report.error {
        eprintln!("error ({kind}): {msg}");
    }
    ExitCode::from(outcome.code as u8)
}

/// Worker pool sized by ANHOLO_THREADS (default: rayon's choice).
fn thread_pool() -> Result<rayon::ThreadPool, String> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("ANHOLO_THREADS") {
        let k: usize = v.trim().parse().map_err(|_| format!("ANHOLO_THREADS must be a positive integer, got {v:?}"))?;
        if k == 0 {
            return Err("ANHOLO_THREADS must be positive".into());
        }
        b = b.num_threads(k);
    }
    b.build().map_err(|e| e.to_string())
}
