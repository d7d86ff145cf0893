mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Warehouse layout optimization: search, repair, simulate.
#[derive(Parser, Debug)]
#[command(name = "whlayout", version)]
struct Cli {
    /// Log progress (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// Experiment config file (TOML).
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Named setup: 1, 2, 3, 4 or desk. Overrides the file's `setup`.
    #[arg(long)]
    pub setup: Option<String>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Solver adapter command. Falls back to $WAREHOUSE_SOLVER, then the
    /// config file, then the built-in HiGHS backend.
    #[arg(long)]
    pub solver: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run MAP-Elites or the surrogate-assisted search and write the archive.
    Optimize {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Evaluation budget.
        #[arg(long)]
        budget: Option<usize>,
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
        /// Stop after this many completed iterations (the checkpoint stays
        /// resumable).
        #[arg(long, hide = true)]
        stop_after: Option<usize>,
    },
    /// Simulate a layout and report throughput, success rate and tile usage.
    Evaluate {
        layout: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Simulation runs (default: the config's eval_runs).
        #[arg(long)]
        runs: Option<usize>,
        /// Timesteps per run (default: the config's eval_horizon).
        #[arg(long)]
        horizon: Option<u32>,
        #[arg(long)]
        agents: Option<usize>,
        /// Agent counts for a throughput sweep, comma separated.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Repair a layout with the MILP.
    Repair {
        layout: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_parser = parse_scenario)]
        scenario: Option<warehouse_layout::Scenario>,
        /// Target shelf count.
        #[arg(long)]
        shelves: Option<usize>,
        /// Seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Write the repaired layout here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the repair outcome as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write the human-style layout for a setup.
    GenHumanLayout {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Print archive statistics for a run directory or archive file.
    Stats { path: PathBuf },
    /// Write heatmap.csv and heatmap.svg for an archive.
    ExportHeatmap {
        path: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve an LP file with HiGHS under the solver adapter contract:
    /// `name value` lines on stdout, exit code 0 optimal, 1 feasible,
    /// 2 infeasible, 3 timeout.
    SolveLp { lp: PathBuf, time_limit: f64 },
}

fn parse_scenario(s: &str) -> Result<warehouse_layout::Scenario, String> {
    match s {
        "workstation" => Ok(warehouse_layout::Scenario::Workstation),
        "home" | "home_location" => Ok(warehouse_layout::Scenario::HomeLocation),
        _ => Err(format!("unknown scenario {s:?}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Optimize {
            cfg,
            output,
            budget,
            resume,
            stop_after,
        } => commands::optimize(&cfg, output, budget, resume, stop_after),
        Command::Evaluate {
            layout,
            cfg,
            runs,
            horizon,
            agents,
            sweep,
            output,
        } => commands::evaluate(&layout, &cfg, runs, horizon, agents, &sweep, output),
        Command::Repair {
            layout,
            cfg,
            scenario,
            shelves,
            time_limit,
            output,
            report,
        } => commands::repair(&layout, &cfg, scenario, shelves, time_limit, output, report),
        Command::GenHumanLayout { cfg, output, json } => {
            commands::gen_human_layout(&cfg, output, json)
        }
        Command::Stats { path } => commands::stats(&path),
        Command::ExportHeatmap { path, output } => commands::export_heatmap(&path, output),
        Command::SolveLp { lp, time_limit } => return commands::solve_lp(&lp, time_limit),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
