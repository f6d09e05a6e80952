//! Command implementations behind the `semrelay` binary. Each returns the
//! process exit code after printing diagnostics to stderr.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::{Error, Result};
use crate::netmodel::NetworkInstance;
use crate::oracle;
use crate::output;
use crate::scenarios::{self, BaselineMode, SeriesRow};
use crate::solver::SolveReport;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;
pub const EXIT_DISAGREE: i32 = 4;

/// Relative objective gap tolerated by `oracle-check`.
pub const AGREEMENT_TOL: f64 = 0.02;

#[derive(Debug, Clone, Default)]
pub struct CommonArgs {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub modes: Option<Vec<BaselineMode>>,
    pub format: Option<Format>,
}

struct Run {
    cfg: RunConfig,
    out: PathBuf,
    format: Format,
}

fn prepare(args: &CommonArgs) -> Result<Run> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    if let Some(m) = &args.modes {
        if m.is_empty() {
            return Err(Error::config("--modes", "mode list is empty"));
        }
        cfg.modes = m.clone();
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let format = args.format.unwrap_or(cfg.output.format);
    Ok(Run { cfg, out, format })
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    match e {
        Error::Refused(_) => EXIT_REFUSED,
        _ => EXIT_CONFIG,
    }
}

#[derive(Serialize)]
struct SolveFile<'a> {
    mode: BaselineMode,
    seed: u64,
    #[serde(flatten)]
    report: &'a SolveReport,
}

pub fn cmd_solve(args: &CommonArgs) -> i32 {
    match solve(args) {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

fn solve(args: &CommonArgs) -> Result<i32> {
    let run = prepare(args)?;
    let inst = run.cfg.instance()?;
    let mode = run.cfg.modes[0];
    let mut report = scenarios::run_baseline(&inst, mode, &run.cfg.solver)?;
    if !run.cfg.output.record_timing {
        report.wall_ms = 0.0;
    }
    let file = SolveFile { mode, seed: run.cfg.scenario.seed, report: &report };
    let json = serde_json::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))?;
    output::write(&run.out.join("report.json"), &json)?;
    output::write(&run.out.join("allocation.csv"), &output::allocation_csv(&inst, &report.allocation))?;
    println!("mode {mode} objective {} bps iterations {}", output::num(report.objective), report.iterations);
    Ok(status(&[&report]))
}

fn status(reports: &[&SolveReport]) -> i32 {
    let mut code = EXIT_OK;
    for r in reports {
        if let Some(w) = &r.warning {
            eprintln!("warning: {w}");
        }
        if !r.converged {
            code = EXIT_NOT_CONVERGED;
        } else if !r.feasible {
            eprintln!("warning: final point violates a budget beyond tolerance");
            code = EXIT_NOT_CONVERGED;
        }
    }
    code
}

fn emit(run: &Run, rows: &[SeriesRow]) -> Result<i32> {
    let timing = run.cfg.output.record_timing;
    match run.format {
        Format::Csv => output::write(&run.out.join("series.csv"), &output::series_csv(rows, timing))?,
        Format::Json => output::write(&run.out.join("series.json"), &output::series_json(rows, timing)?)?,
    }
    let bad = rows.iter().filter(|r| !(r.converged && r.feasible)).count();
    if bad > 0 {
        eprintln!("warning: {bad} of {} points did not converge to a feasible point", rows.len());
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(EXIT_OK)
}

pub fn cmd_sweep(args: &CommonArgs) -> i32 {
    let go = || -> Result<i32> {
        let run = prepare(args)?;
        let inst = run.cfg.instance()?;
        let s = &run.cfg.sweep;
        let rows = scenarios::sweep(s.axis, &s.values, &inst, &run.cfg.modes, &run.cfg.solver)?;
        emit(&run, &rows)
    };
    go().unwrap_or_else(|e| fail(&e))
}

pub fn cmd_trajectory(args: &CommonArgs) -> i32 {
    let go = || -> Result<i32> {
        let run = prepare(args)?;
        let rows =
            scenarios::trajectory_sweep(&run.cfg.trajectory, &run.cfg.spec(), &run.cfg.modes, &run.cfg.solver)?;
        emit(&run, &rows)
    };
    go().unwrap_or_else(|e| fail(&e))
}

pub fn cmd_scenarios(args: &CommonArgs) -> i32 {
    let go = || -> Result<i32> {
        let run = prepare(args)?;
        let rows =
            scenarios::scenario_sweep(&run.cfg.spec(), &run.cfg.scenarios.mixes, &run.cfg.modes, &run.cfg.solver)?;
        emit(&run, &rows)
    };
    go().unwrap_or_else(|e| fail(&e))
}

/// Outcome of comparing the solver with the grid oracle.
#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub solver_objective: f64,
    pub oracle_objective: f64,
    pub relative_gap: f64,
    pub solver_feasible: bool,
    pub oracle_feasible: bool,
    pub agree: bool,
    pub oracle: oracle::OracleResult,
}

pub fn oracle_check(inst: &NetworkInstance, run: &RunConfig) -> Result<OracleCheck> {
    let o = oracle::grid_search(inst, &run.oracle)?;
    let r = scenarios::run_baseline(inst, BaselineMode::Joint, &run.solver)?;
    let sf = oracle::feasible(inst, &r.allocation)?.feasible;
    let of = oracle::feasible(inst, &o.allocation)?.feasible;
    let scale = r.objective.abs().max(o.objective.abs()).max(f64::MIN_POSITIVE);
    let gap = (r.objective - o.objective).abs() / scale;
    Ok(OracleCheck {
        solver_objective: r.objective,
        oracle_objective: o.objective,
        relative_gap: gap,
        solver_feasible: sf,
        oracle_feasible: of,
        agree: sf && of && gap <= AGREEMENT_TOL,
        oracle: o,
    })
}

pub fn cmd_oracle_check(args: &CommonArgs) -> i32 {
    let go = || -> Result<i32> {
        let run = prepare(args)?;
        let inst = run.cfg.instance()?;
        let c = oracle_check(&inst, &run.cfg)?;
        println!("solver objective {} bps", output::num(c.solver_objective));
        println!("oracle objective {} bps", output::num(c.oracle_objective));
        println!(
            "relative gap {} solver feasible {} oracle feasible {}",
            output::num(c.relative_gap),
            c.solver_feasible,
            c.oracle_feasible
        );
        write_oracle(&run.out, &inst, &c)?;
        Ok(if c.agree { EXIT_OK } else { EXIT_DISAGREE })
    };
    go().unwrap_or_else(|e| fail(&e))
}

fn write_oracle(out: &Path, inst: &NetworkInstance, c: &OracleCheck) -> Result<()> {
    let json = serde_json::to_string_pretty(c).map_err(|e| Error::Parse(e.to_string()))?;
    output::write(&out.join("oracle.json"), &json)?;
    output::write(&out.join("oracle_allocation.csv"), &output::allocation_csv(inst, &c.oracle.allocation))
}
