//! `jostlab <command> --config <path> [--out <dir>] [--threads <n>] [--seed <u64>] [--kappa <k>]`
//!
//! Exit status: 0 success, 1 hard audit failure, 2 config error, 3 numerical
//! diagnostic, 4 I/O error. Every run that gets past config parsing writes
//! manifest.json into the output directory.

mod audit;
mod commands;
mod config;
mod output;

use clap::Parser;
use commands::Failure;
use config::{Command, ConfigError};
use output::{sha256_hex, Sink};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "jostlab", version, about = "Jost solutions, resolvents and threshold diagnostics for (-i d/dx)^N + V")]
struct Cli {
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// output directory; overrides `output.dir` of the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// worker threads; 1 gives a strictly sequential run
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// κ for `bifurcate`; overrides the config value
    #[arg(long)]
    kappa: Option<f64>,
}

fn config_failure(e: &ConfigError) -> ExitCode {
    eprintln!("{e}");
    eprintln!("{}", e.to_json());
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return config_failure(&ConfigError::plain(format!("cannot read {}: {e}", cli.config.display()))),
    };
    let mut sc = match config::parse(&text) {
        Ok(s) => s,
        Err(e) => return config_failure(&e),
    };
    if let Some(s) = cli.seed {
        sc.seed = s;
    }
    if let Some(k) = cli.kappa {
        sc.kappa = Some(k);
    }
    if let Err(e) = sc.validate(cli.command) {
        return config_failure(&e);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return config_failure(&ConfigError::field("--threads", "must be at least 1"));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("thread pool: {e}");
        }
    }
    let base = cli.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let out = cli.out.clone().unwrap_or_else(|| base.join(&sc.output.dir));
    let mut sink = match Sink::new(&out) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("cannot create {}: {e}", out.display());
            return ExitCode::from(4);
        }
    };
    // hash the effective scenario so CLI overrides are part of the identity
    let effective = serde_json::to_string(&sc).expect("scenario serializes");
    let config_hash = sha256_hex(effective.as_bytes());
    let name = cli.command.name();

    let result = match cli.command {
        Command::Audit => audit::audit_all(&sc, &base, &mut sink).map(|failed| {
            if failed > 0 {
                eprintln!("{failed} hard audit check(s) failed; see {}", sink.root().join("audit.csv").display());
            }
            failed
        }),
        c => commands::run(c, &sc, &mut sink).map(|_| 0),
    };
    let (status, code) = match result {
        Ok(0) => ("ok", 0u8),
        Ok(_) => ("audit_failed", 1),
        Err(Failure::Config(e)) => {
            eprintln!("{e}");
            eprintln!("{}", e.to_json());
            if let Err(io) = sink.write_json("error.json", &e.to_json()) {
                eprintln!("{io}");
            }
            ("config_error", 2)
        }
        Err(Failure::Numerical { kind, message, context }) => {
            let obj = serde_json::json!({ "error": "numerical", "kind": kind, "message": message, "context": context });
            eprintln!("{message}");
            eprintln!("{obj}");
            if let Err(io) = sink.write_json("error.json", &obj) {
                eprintln!("{io}");
            }
            ("numerical_error", 3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("i/o error: {e}");
            ("io_error", 4)
        }
    };
    match sink.finish(name, &config_hash, sc.seed, status) {
        Ok(files) => {
            for f in files {
                println!("{}  {}", f.sha256, f.path);
            }
        }
        Err(e) => {
            eprintln!("cannot write manifest: {e}");
            return ExitCode::from(4);
        }
    }
    ExitCode::from(code)
}
