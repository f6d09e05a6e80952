use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TINY: &str = r#"
[[clusters]]
users = [
    { kind = "sem", position = [-200.0, 100.0] },
    { kind = "con", position = [300.0, -150.0] },
]
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semrelay"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_writes_report_and_allocation() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "tiny.toml", TINY);
    let out = d.path().join("out");
    let o = run(&["solve", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["objective"].as_f64().unwrap() > 5e7);
    assert_eq!(report["mode"], "joint");
    assert_eq!(report["converged"], true);
    let csv = std::fs::read_to_string(out.join("allocation.csv")).unwrap();
    assert!(csv.starts_with("cluster,link,kind,b_s2r,p_s2r,uav_x,uav_y,bandwidth,power\n"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "capped.toml", &format!("[solver]\nouter_max_iters = 1\n{TINY}"));
    let o = run(&["solve", "--config", s(&cfg), "--out", s(&d.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_budget_is_a_config_error_naming_the_field() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "bad.toml", "[budgets]\nuav_power = -1.0\n");
    let o = run(&["solve", "--config", s(&cfg), "--out", s(&d.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budgets.uav_power"));
}

#[test]
fn unknown_key_and_bad_flags_exit_one() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "typo.toml", "[solver]\nouter_max_iter = 3\n");
    let o = run(&["solve", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("outer_max_iter"));
    let ok = write(d.path(), "tiny.toml", TINY);
    assert_eq!(run(&["solve", "--config", s(&ok), "--modes", "joint,nope"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--config", s(&ok), "--format", "xml"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--config", s(&d.path().join("missing.toml"))]).status.code(), Some(1));
}

#[test]
fn oracle_check_agrees_on_tiny_instance() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "tiny.toml", TINY);
    let out = d.path().join("o");
    let o = run(&["oracle-check", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("oracle.json").exists());
    assert!(out.join("oracle_allocation.csv").exists());
}

#[test]
fn oracle_check_flags_disagreement() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "capped.toml", &format!("[solver]\nouter_max_iters = 1\n{TINY}"));
    let o = run(&["oracle-check", "--config", s(&cfg), "--out", s(&d.path().join("o"))]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn oracle_check_refuses_large_instances() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "big.toml", "[scenario]\nclusters = 3\nn_sem = 1\nn_con = 1\n");
    let o = run(&["oracle-check", "--config", s(&cfg), "--out", s(&d.path().join("o"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sweep_csv_is_byte_identical_across_runs() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "sweep.toml", "[scenario]\nclusters = 2\n[sweep]\naxis = \"uav_bandwidth\"\nvalues = [2e6, 10e6]\n");
    let go = |name: &str| {
        let out = d.path().join(name);
        let o = run(&["sweep", "--config", s(&cfg), "--out", s(&out), "--seed", "4", "--modes", "joint,fixed-l"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out.join("series.csv")).unwrap()
    };
    let a = go("a");
    let b = go("b");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("axis,mode,sum_rate_bps,iters,max_residual,wall_ms"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("2000000.0,joint,"));
    assert!(rows[1].starts_with("2000000.0,fixed-l,"));
    // numbers are shortest round-trip decimals
    let rate: f64 = rows[0].split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(format!("{rate:?}"), rows[0].split(',').nth(2).unwrap());
}

#[test]
fn json_format_and_scenarios_command() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "mix.toml",
        "[scenario]\nclusters = 2\nusers_per_cluster = 4\n[scenarios]\nmixes = [\"sem-only\", \"con-only\"]\n",
    );
    let out = d.path().join("o");
    let o = run(&["scenarios", "--config", s(&cfg), "--out", s(&out), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("series.json")).unwrap()).unwrap();
    let axes: Vec<&str> = rows.as_array().unwrap().iter().map(|r| r["axis"].as_str().unwrap()).collect();
    assert_eq!(axes, ["sem-only", "con-only"]);
}

#[test]
fn trajectory_command_writes_one_row_per_step() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "traj.toml", "[scenario]\nn_sem = 1\nn_con = 1\n[trajectory]\nsteps = 5\n");
    let out = d.path().join("o");
    let o = run(&["trajectory", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().nth(3).unwrap().starts_with("7.0,joint,"));
}
