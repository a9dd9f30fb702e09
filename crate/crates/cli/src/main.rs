use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use litelfuzz::{
    emit_report_plot_data, emit_trace_plot_data, export_trace, load_scenario, read_trace,
    run_executions, summarize, CampaignError, CampaignReport,
};
use litelfuzz_core::fuzz::Scheme;

#[derive(Parser)]
#[command(name = "litelfuzz", version, about = "Robustness-guided fuzzing of drone swarm missions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a fuzzing campaign and write one report per scheme.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated list of sa, ma, random, target-only.
        #[arg(long, value_delimiter = ',', default_value = "sa")]
        scheme: Vec<Scheme>,
        #[arg(long, default_value_t = 100)]
        executions: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also write every execution's trace as JSON Lines.
        #[arg(long)]
        traces: bool,
    },
    /// Print the failure-taxonomy table of one or more reports.
    Summarize { reports: Vec<PathBuf> },
    /// Turn a trace into per-step robustness CSV, or reports into per-scheme CSV.
    Plot {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn read_report(path: &Path) -> Result<CampaignReport, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            scenario,
            scheme,
            executions,
            seed,
            workers,
            out,
            traces,
        } => {
            if executions == 0 {
                return Err(Failure::Config("--executions must be at least 1".into()));
            }
            let workers = workers.unwrap_or_else(|| {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            });
            let sc = load_scenario(&scenario).map_err(|e| Failure::Config(e.to_string()))?;
            std::fs::create_dir_all(&out)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
            for s in scheme {
                tracing::info!(scheme = %s, executions, seed, workers, "starting campaign");
                let runs = run_executions(&sc, s, executions, seed, workers, traces).map_err(|e| match e {
                    CampaignError::Config(m) => Failure::Config(m),
                    other => Failure::Runtime(other.to_string()),
                })?;
                if traces {
                    let dir = out.join("traces");
                    std::fs::create_dir_all(&dir)
                        .map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
                    for (rec, trace) in &runs {
                        if let Some(trace) = trace {
                            let path = dir.join(format!("{s}-{}.jsonl", rec.seed));
                            export_trace(trace, &path).map_err(|e| Failure::Runtime(e.to_string()))?;
                        }
                    }
                }
                let records = runs.into_iter().map(|(r, _)| r).collect();
                let report = CampaignReport::from_records(&sc.name, s, seed, records);
                let path = out.join(format!("report-{s}.json"));
                std::fs::write(&path, report.to_json())
                    .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
                print!("{}", summarize(&report));
                println!("report written to {}\n", path.display());
            }
            Ok(())
        }
        Command::Summarize { reports } => {
            if reports.is_empty() {
                return Err(Failure::Config("no report given".into()));
            }
            for p in reports {
                print!("{}", summarize(&read_report(&p)?));
            }
            Ok(())
        }
        Command::Plot { inputs, out } => {
            let Some(first) = inputs.first() else {
                return Err(Failure::Config("no input given".into()));
            };
            let is_trace = first.extension().is_some_and(|e| e == "jsonl");
            if is_trace {
                let lines = read_trace(first).map_err(|e| Failure::Config(e.to_string()))?;
                emit_trace_plot_data(&lines, &out).map_err(|e| Failure::Runtime(e.to_string()))?;
            } else {
                let reports = inputs.iter().map(|p| read_report(p)).collect::<Result<Vec<_>, _>>()?;
                emit_report_plot_data(&reports, &out).map_err(|e| Failure::Runtime(e.to_string()))?;
            }
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let filter = EnvFilter::try_from_env("LITELFUZZ_LOG").unwrap_or_else(|_| EnvFilter::new("warn"));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::FAILURE
        }
    }
}
