use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use tasc::{http, load_scenario, run_batch, BatchOptions, Engine};
use tasc_core::milp::SolveConfig;

#[derive(Parser)]
#[command(name = "tasc", version, about = "Steerable multi-agent task assignment")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a scenario once under a file of directives.
    Solve {
        scenario: PathBuf,
        #[arg(long)]
        directives: Option<PathBuf>,
        #[arg(long)]
        alpha1: Option<f64>,
        #[arg(long)]
        alpha2: Option<f64>,
        /// Seconds the solver may spend per solve.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Also write a JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Interactive dialogue on a scenario.
    Repl { scenario: PathBuf },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value = "scenarios")]
        scenarios: PathBuf,
        #[arg(long)]
        sessions: Option<PathBuf>,
    },
    /// Validate a scenario file.
    Check { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Cmd::Solve { scenario, directives, alpha1, alpha2, time_limit, report } => {
            let options = BatchOptions { alpha1, alpha2, time_limit_secs: time_limit };
            match run_batch(&scenario, directives.as_deref(), &options) {
                Ok(outcome) => {
                    print!("{}", outcome.text);
                    if let Some(path) = report {
                        let json = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
                        if let Err(e) = std::fs::write(&path, json + "\n") {
                            eprintln!("cannot write {}: {e}", path.display());
                            return ExitCode::from(1);
                        }
                    }
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
            }
        }
        Cmd::Repl { scenario } => {
            let stdin = std::io::stdin();
            match tasc::repl::run_repl(&scenario, stdin.lock(), std::io::stdout()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
            }
        }
        Cmd::Serve { port, host, scenarios, sessions } => {
            let engine = match Engine::open(scenarios, sessions, SolveConfig::default()) {
                Ok(e) => Arc::new(e),
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(1);
                }
            };
            let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
            let result: std::io::Result<()> = runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
                eprintln!("listening on {}", listener.local_addr()?);
                axum::serve(listener, http::router(engine)).await
            });
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
            }
        }
        Cmd::Check { scenario } => match load_scenario(&scenario) {
            Ok(s) => {
                let inst = &s.world.instance;
                println!(
                    "{}: ok ({} agents, {} orders, {} tasks, horizon {})",
                    s.path.display(),
                    inst.agents.len(),
                    s.spec.orders.len(),
                    inst.tasks.len(),
                    s.spec.horizon
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(1)
            }
        },
    }
}
