use clap::Parser;
use lapbench::experiment::{catalog_json, catalog_text, error_exit_code, run_experiment, write_outputs, ExperimentConfig, RunInfo};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Reproducible experiments on discrete Schrödinger operators.
///
/// Exit status: 0 when every verdict passes, 1 when a verdict fails, 2 for configuration
/// errors, 3 for numerical failures.
#[derive(Parser, Debug)]
#[command(name = "lapbench", version)]
struct Cli {
    /// Experiment config (TOML). Without it the catalog is printed.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of physical cores.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Seed, overriding the config.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Print the experiment catalog.
    #[arg(long)]
    list: bool,
    /// Print the catalog as JSON.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = cli.config.as_ref().filter(|_| !cli.list) else {
        if cli.json {
            println!("{}", catalog_json());
        } else {
            print!("{}", catalog_text());
        }
        return ExitCode::SUCCESS;
    };
    let workers = cli.workers.unwrap_or_else(num_cpus::get_physical).max(1);
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
        eprintln!("error: cannot start {workers} workers: {e}");
        return ExitCode::from(3);
    }
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    if let Some(s) = cli.seed {
        cfg.set_seed(s);
    }
    let start = Instant::now();
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            let code = error_exit_code(&e);
            eprintln!("{} failed: {e}", cfg.id().as_str());
            return ExitCode::from(code as u8);
        }
    };
    let dir = cli.out.unwrap_or_else(|| cfg.output().directory.clone());
    let info = RunInfo { config_text: &text, wall_seconds: start.elapsed().as_secs_f64(), workers };
    print!("{}", report.summary_text());
    match write_outputs(&report, &cfg.output().formats, &dir, &info) {
        Ok(paths) => println!("wrote {} files to {}", paths.len(), dir.display()),
        Err(e) => {
            eprintln!("cannot write outputs: {e}");
            return ExitCode::from(3);
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
