//! `adaptive-ensemble`: synthetic panels, backtests, campaigns, robustness
//! checks and reports.
//!
//! Exit codes: 0 success, 2 usage, 3 data, 4 numerical (including a
//! campaign with failed cells unless `--allow-partial`), 5 verification.

mod backtest_cmd;
mod campaign_cmd;
mod config;
mod error;
mod manifest;
mod report_cmd;
mod svg;
mod synth_cmd;
mod verify_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

use crate::error::CliResult;

#[derive(Parser)]
#[command(name = "adaptive-ensemble", version, about = "Adaptive robust linear ensembles for forecast combination")]
struct Cli {
    /// TOML file with a table per subcommand supplying flag defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic forecast panel.
    Synth(synth_cmd::SynthArgs),
    /// Select, refit and evaluate combination methods on a panel.
    Backtest(backtest_cmd::BacktestArgs),
    /// Seed-replicated synthetic experiments over one varied dimension.
    Campaign(campaign_cmd::CampaignArgs),
    /// Check the robustness equivalence on random instances.
    Verify(verify_cmd::VerifyArgs),
    /// Tabulate (and optionally plot) a campaign or backtest directory.
    Report(report_cmd::ReportArgs),
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let file = cli.config.as_deref().map(config::load).transpose()?;
    let file = file.as_ref();
    match &cli.command {
        Command::Synth(a) => synth_cmd::run(&config::merge(a, file, "synth")?),
        Command::Backtest(a) => backtest_cmd::run(&config::merge(a, file, "backtest")?),
        Command::Campaign(a) => campaign_cmd::run(&config::merge(a, file, "campaign")?),
        Command::Verify(a) => verify_cmd::run(&config::merge(a, file, "verify")?),
        Command::Report(a) => report_cmd::run(&config::merge(a, file, "report")?),
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
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
