//! Command-line front end: batch runs, suites, transition tables and the
//! live-teaching server.

pub mod server;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mbmf::experiment::{run_condition, run_suite, CostMode, ExperimentConfig, SuiteFile};
use mbmf::human::InteractionMode;
use mbmf::meta::ControllerKind;
use mbmf::tidy::{TaskKind, TidyTask};

#[derive(Debug, Parser)]
#[command(name = "mbmf", version, about = "Model-based / model-free arbitration experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Runs one condition and writes its run logs and aggregate.
    Run(RunArgs),
    /// Runs every condition of a JSON suite file.
    Suite {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run the seeds of a condition one after another.
        #[arg(long)]
        serial: bool,
    },
    /// Prints the full transition table of a task as CSV.
    DumpTransitions {
        #[arg(long, default_value = "tidy1")]
        task: TaskKind,
        /// Write to a file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serves live-teaching sessions over WebSocket (`/ws`) and the UI bundle.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory of static files served on every other path.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        /// How long a proposal waits for a takeover while a cube is held.
        #[arg(long, default_value_t = 5000)]
        takeover_window_ms: u64,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value = "tidy1")]
    pub task: TaskKind,
    #[arg(long, default_value = "ec")]
    pub controller: ControllerKind,
    #[arg(long, default_value = "none")]
    pub interaction: InteractionMode,
    #[arg(long)]
    pub budget: Option<u32>,
    /// Learning steps after babbling.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "units")]
    pub cost_mode: CostMode,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub serial: bool,
}

impl RunArgs {
    pub fn config(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(self.task, self.controller, self.interaction);
        c.budget = self.budget;
        c.steps = self.steps;
        c.runs = self.runs;
        c.master_seed = self.seed;
        c.cost_mode = self.cost_mode;
        c
    }
}

pub fn load_suite(path: &std::path::Path) -> Result<SuiteFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let config = args.config();
            let (summary, _) = run_condition(&config, &args.out, !args.serial)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Suite { config, out, serial } => {
            let suite = load_suite(&config)?;
            let report = run_suite(&suite.configs, &out, !serial)?;
            for c in &report.conditions {
                println!(
                    "{:<40} reward {:>8.1}  work {:>12.0}",
                    c.label, c.median_final_reward, c.median_final_work_units
                );
            }
        }
        Command::DumpTransitions { task, out } => {
            let task = TidyTask::new(task);
            match out {
                Some(path) => {
                    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    task.write_transitions_csv(file)?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    task.write_transitions_csv(&mut lock)?;
                    lock.flush()?;
                }
            }
        }
        Command::Serve {
            port,
            host,
            static_dir,
            takeover_window_ms,
        } => {
            let options = server::ServeOptions {
                static_dir,
                takeover_window: Duration::from_millis(takeover_window_ms),
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port))
                    .await
                    .with_context(|| format!("binding {host}:{port}"))?;
                server::serve(listener, options).await?;
                anyhow::Ok(())
            })?;
        }
    }
    Ok(())
}
