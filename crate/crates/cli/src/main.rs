mod config;
mod output;
mod run;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use config::{resolve, Cli, CliError, ExperimentConfig};

fn execute(cfg: &ExperimentConfig) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start {} threads: {e}", cfg.threads)))?;
    let out = run::run(cfg)?;
    let mut sink: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    output::write_table(&mut sink, cfg, &out.table)?;
    sink.flush()?;
    if out.gate_failed {
        return Err(CliError::ValidationFailed(
            "tensor network and exact simulation disagree beyond 3 standard errors".into(),
        ));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::ValueValidation | ErrorKind::InvalidValue => 7,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (mode, flags) = cli.command.split();
    let result = resolve(mode, flags, std::env::var("MAGICFLOW_SEED").ok()).and_then(|cfg| {
        log::info!("running {mode} with seed {}", cfg.seed);
        execute(&cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("magicflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
