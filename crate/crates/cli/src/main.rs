use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vortlab_cli::{exit, output_dir, preset, run_experiment, ExperimentConfig, PRESETS};

#[derive(Parser)]
#[command(name = "vortlab", about = "Picard-scheme experiments for singular 3-D Euler data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file, or from a preset with `preset:NAME`.
    Run { config: String },
    /// List the bundled presets, or print one.
    Presets { name: Option<String> },
    Version,
}

fn load(arg: &str) -> Result<String, String> {
    if let Some(name) = arg.strip_prefix("preset:") {
        return preset(name).map(str::to_string).ok_or_else(|| format!("no preset named `{name}`"));
    }
    std::fs::read_to_string(PathBuf::from(arg)).map_err(|e| format!("cannot read {arg}: {e}"))
}

fn run(arg: &str) -> ExitCode {
    let text = match load(arg) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit::PARSE);
        }
    };
    let cfg = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(exit::PARSE);
        }
    };
    let out = output_dir(&cfg);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(exit::RUNTIME);
        }
    };
    match pool.install(|| run_experiment(&cfg, &out)) {
        Ok(report) => {
            print!("{}", report.summary());
            println!("artifacts in {}", out.display());
            if report.all_passed() {
                ExitCode::from(exit::OK)
            } else {
                ExitCode::from(exit::CONTRACT_FAILED)
            }
        }
        Err(e) => {
            eprintln!("runtime error: {e}");
            ExitCode::from(exit::RUNTIME)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { config } => run(&config),
        Command::Presets { name: None } => {
            for (name, text) in PRESETS {
                let about = text.lines().next().unwrap_or("").trim_start_matches("# ");
                println!("{name:20} {about}");
            }
            ExitCode::SUCCESS
        }
        Command::Presets { name: Some(name) } => match preset(&name) {
            Some(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("no preset named `{name}`");
                ExitCode::from(exit::PARSE)
            }
        },
        Command::Version => {
            println!("vortlab {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}
