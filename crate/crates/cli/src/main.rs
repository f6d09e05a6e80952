use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semrelay::cli::{self, CommonArgs};
use semrelay::config::Format;
use semrelay::scenarios::{parse_modes, BaselineMode};

#[derive(Parser)]
#[command(name = "semrelay", version, about = "Sum-rate optimisation for satellite-UAV semantic relay networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance; writes report.json and allocation.csv.
    Solve(Common),
    /// Sweep one budget; writes series.csv.
    Sweep(Common),
    /// Satellite ground-track sweep; writes series.csv.
    Trajectory(Common),
    /// User-mix comparison; writes series.csv.
    Scenarios(Common),
    /// Compare the solver with the brute-force oracle on a tiny instance.
    OracleCheck(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: output.dir from the config, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for instance generation and solver initialisation.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated list: joint,fixed-b,fixed-p,fixed-l.
    #[arg(long, value_parser = modes)]
    modes: Option<ModeList>,
    #[arg(long, value_parser = format)]
    format: Option<Format>,
}

#[derive(Clone)]
struct ModeList(Vec<BaselineMode>);

fn modes(s: &str) -> Result<ModeList, String> {
    parse_modes(s).map(ModeList).map_err(|e| e.to_string())
}

fn format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: semrelay::Error| e.to_string())
}

impl From<Common> for CommonArgs {
    fn from(c: Common) -> Self {
        CommonArgs { config: c.config, out: c.out, seed: c.seed, modes: c.modes.map(|m| m.0), format: c.format }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { cli::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match cli.command {
        Command::Solve(c) => cli::cmd_solve(&c.into()),
        Command::Sweep(c) => cli::cmd_sweep(&c.into()),
        Command::Trajectory(c) => cli::cmd_trajectory(&c.into()),
        Command::Scenarios(c) => cli::cmd_scenarios(&c.into()),
        Command::OracleCheck(c) => cli::cmd_oracle_check(&c.into()),
    };
    ExitCode::from(code as u8)
}
