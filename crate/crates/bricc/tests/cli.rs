//! End-to-end checks of the command-line interface against the bundled
//! corpus: exit codes, report determinism and the export commands.

use std::path::PathBuf;
use std::process::Command;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

fn bricc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bricc"))
}

#[test]
fn passing_script_exits_zero() {
    let out = bricc()
        .args(["check"])
        .arg(corpus("t_family.iop"))
        .output()
        .expect("runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("11 passed"));
}

#[test]
fn failing_assertions_exit_one() {
    let out = bricc()
        .args(["check"])
        .arg(corpus("healthcare_assertions.iop"))
        .output()
        .expect("runs");
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("echo.out.timeout"));
}

#[test]
fn unknown_name_exits_two() {
    let dir = std::env::temp_dir().join("bricc_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.iop");
    std::fs::write(&path, "channel c\nassert deadlock free NO_SUCH\n").unwrap();
    let out = bricc().args(["check"]).arg(&path).output().expect("runs");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn structured_reports_are_byte_identical_across_runs() {
    let run = || {
        bricc()
            .args(["check", "--report", "structured"])
            .arg(corpus("t_family.iop"))
            .output()
            .expect("runs")
            .stdout
    };
    let a = run();
    let b = run();
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let parsed: serde_json::Value = serde_json::from_slice(&a).expect("valid structured report");
    assert_eq!(parsed["summary"]["failed"], 0);
}

#[test]
fn serialize_command_prints_the_table() {
    let out = bricc()
        .args(["serialize"])
        .arg(corpus("t_family.iop"))
        .arg("T")
        .output()
        .expect("runs");
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("(start, <c.in.v.1, c.in.v.2>, 0)"));
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn lts_command_exports_graphs() {
    let out = bricc()
        .args(["lts"])
        .arg(corpus("t_family.iop"))
        .arg("T")
        .output()
        .expect("runs");
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("lts T"));
    assert!(text.contains("edge 0 c.in.v.1"));

    let out = bricc()
        .args(["lts", "--normalized"])
        .arg(corpus("t_family.iop"))
        .arg("T")
        .output()
        .expect("runs");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("normlts T"));
    assert!(text.contains("acceptances"));
}

#[test]
fn exhausted_state_budget_is_a_tool_error() {
    let dir = std::env::temp_dir().join("bricc_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("budget.iop");
    std::fs::write(
        &path,
        "nametype V = {1..2}\ndatatype D = v.V\nsubtype IOD = in.D | out.D\nchannel c : IOD\n         P = c.in.v.1 -> c.out.v.1 -> c.in.v.2 -> c.out.v.2 -> P\nassert deadlock free P\n",
    )
    .unwrap();
    let out = bricc()
        .args(["check", "--max-states", "2"])
        .arg(&path)
        .output()
        .expect("runs");
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("E_STATE_BUDGET"), "{text}");
}
