use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use eacomm::cli::{run, Cli, EXIT_OK, EXIT_USAGE, THREADS_ENV};

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { EXIT_OK as u8 });
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("eacomm: [cli] {e}");
        return ExitCode::from(EXIT_USAGE as u8);
    }
    match run(&cli) {
        Ok(out) => {
            let text = if cli.global.json {
                match out.report.to_json() {
                    Ok(s) => s,
                    Err(e) => {
                        eprintln!("eacomm: [dataio] {e}");
                        return ExitCode::from(eacomm::cli::error_exit_code(&e) as u8);
                    }
                }
            } else {
                out.summary.iter().map(|l| format!("{l}\n")).collect()
            };
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush());
            for w in &out.report.warnings {
                log::warn!("{w}");
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(f) => {
            eprintln!("eacomm: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
