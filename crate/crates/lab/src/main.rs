use std::path::PathBuf;
use std::process::ExitCode;

use carleman_lab::{config, run, RunError, OUT_ENV};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "carleman-lab", version, about = "Runs one Carleman-lab experiment from a JSON config")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the config. Exit 0 when every acceptance
    /// item it touches passes, 1 otherwise, 2 on config errors and 3 when a
    /// numerical guard trips.
    Run {
        /// Path to the JSON config.
        #[arg(required_unless_present = "print_schema")]
        config: Option<PathBuf>,
        /// Cap on worker threads.
        #[arg(long)]
        threads: Option<usize>,
        /// Print the config schema and exit.
        #[arg(long)]
        print_schema: bool,
    },
}

fn main() -> ExitCode {
    let Command::Run { config: path, threads, print_schema } = Cli::parse().command;
    if print_schema {
        println!("{}", serde_json::to_string_pretty(&config::schema()).expect("schema serializes"));
        return ExitCode::SUCCESS;
    }
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("config error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    }
    let path = path.expect("clap enforces a config path");
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let out = std::env::var_os(OUT_ENV).map(PathBuf::from);
    match run(&text, out) {
        Ok(summary) => {
            for item in &summary.items {
                println!("{}", item.line());
            }
            if summary.items.is_empty() {
                println!("no acceptance item touched");
            }
            for a in &summary.artifacts {
                eprintln!("wrote {}", a.display());
            }
            if summary.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(RunError::Guard { name, message }) => {
            println!("FAIL guard {name}: {message}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
