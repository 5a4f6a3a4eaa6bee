//! Command-line behavior: error reporting with source locations, exit
//! codes, suite selection precedence, output-format round-trips, and the
//! bundled negative-control scenarios.

use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use hopfstar_cli::report::{emit_records, parse_machine, Record};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hopfstar")
}

fn scenario(name: &str) -> String {
    format!("{}/scenarios/{}", env!("CARGO_MANIFEST_DIR"), name)
}

fn run_with<F: FnOnce(&mut Command)>(args: &[&str], configure: F) -> (i32, String, String) {
    let mut cmd = Command::new(bin());
    cmd.args(args).env_remove("HOPFSTAR_SUITE");
    configure(&mut cmd);
    let out = cmd.output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).expect("stdout is utf-8"),
        String::from_utf8(out.stderr).expect("stderr is utf-8"),
    )
}

fn run(args: &[&str]) -> (i32, String, String) {
    run_with(args, |_| {})
}

/// Writes scenario text to a unique temp file and returns its path.
fn temp_scenario(text: &str) -> PathBuf {
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    let path = std::env::temp_dir().join(format!(
        "hopfstar-cli-test-{}-{n}.scn",
        std::process::id()
    ));
    std::fs::write(&path, text).expect("temp scenario written");
    path
}

/// Runs `check` on inline scenario text, expecting a load-time error:
/// asserts exit code 2 and returns stderr.
fn expect_rejection(text: &str) -> String {
    let path = temp_scenario(text);
    let (code, out, err) = run(&["check", path.to_str().unwrap()]);
    std::fs::remove_file(&path).ok();
    assert_eq!(code, 2, "expected rejection, got:\n{out}{err}");
    err
}

const MINIMAL_MOYAL: &str = "[scenario]\nname = t\norder = 1\nprobe-degree = 1\nseed = 0\n\n[hopf.abelian]\ngenerators = X1 X2\n";

#[test]
fn syntax_error_reports_line_and_column() {
    let err = expect_rejection("[scenario]\nname = t\norder 1\n");
    assert!(err.contains(":3:"), "missing line number: {err}");
    assert!(err.contains("syntax error"), "missing kind: {err}");
}

#[test]
fn unexpected_character_is_a_syntax_error() {
    let text = format!("{MINIMAL_MOYAL}\n[twist]\nf = exp(h*X1 ? X2)\nfinv = 1 (x) 1\n");
    let err = expect_rejection(&text);
    assert!(err.contains("syntax error"), "missing kind: {err}");
    assert!(err.contains('?'), "should quote the offending character: {err}");
}

#[test]
fn unknown_name_is_an_unresolved_reference_error() {
    let text =
        format!("{MINIMAL_MOYAL}\n[twist]\nf = exp(h*X1 (x) X9)\nfinv = exp(-h*X1 (x) X9)\n");
    let err = expect_rejection(&text);
    assert!(
        err.contains("unresolved reference error"),
        "missing kind: {err}"
    );
    assert!(err.contains("X9"), "should name the unknown symbol: {err}");
    assert!(err.contains(":11:"), "missing line number: {err}");
}

#[test]
fn deformation_parameter_beyond_order_is_an_order_mismatch() {
    let text = "[scenario]\nname = t\norder = 0\nprobe-degree = 1\nseed = 0\n\n[hopf.abelian]\ngenerators = X1\n\n[twist]\nf = 1 (x) 1 + h*X1 (x) X1\nfinv = 1 (x) 1 - h*X1 (x) X1\n";
    let err = expect_rejection(text);
    assert!(err.contains("order mismatch error"), "missing kind: {err}");
    assert!(
        err.contains("truncation order 0"),
        "should state the order bound: {err}"
    );
}

#[test]
fn unknown_check_name_is_rejected_before_running() {
    let text = format!("{MINIMAL_MOYAL}\n[checks]\nrun = nosuch.check\n");
    let err = expect_rejection(&text);
    assert!(err.contains("scenario error"), "missing kind: {err}");
    assert!(err.contains("nosuch.check"), "should name the check: {err}");
}

#[test]
fn unknown_check_parameter_is_rejected() {
    let text = format!("{MINIMAL_MOYAL}\n[checks]\nrun = hopf.axioms bogus=1\n");
    let err = expect_rejection(&text);
    assert!(
        err.contains("does not take a parameter `bogus`"),
        "should name the parameter: {err}"
    );
}

#[test]
fn unknown_fault_value_is_rejected() {
    let text = format!(
        "{}\n[algebra]\nkind = poly\nvars = x1 x2\n\n[twist]\nf = exp(h*X1 (x) X2)\nfinv = exp(-h*X1 (x) X2)\n\n[bimodule.V]\nbasis = e1\n\n[bimodule.W]\nbasis = f1\n\n[checks]\nrun = conn.diagram fault=bogus\n",
        MINIMAL_MOYAL
    );
    let err = expect_rejection(&text);
    assert!(err.contains("unknown fault `bogus`"), "got: {err}");
}

#[test]
fn missing_file_exits_with_usage_error() {
    let (code, _out, err) = run(&["check", "/nonexistent/path.scn"]);
    assert_eq!(code, 2);
    assert!(err.contains("cannot read scenario"), "got: {err}");
}

#[test]
fn suite_comes_from_env_when_no_flag_is_given() {
    let (code, out, err) = run_with(
        &["check", &scenario("klein.scn"), "--format", "machine"],
        |cmd| {
            cmd.env("HOPFSTAR_SUITE", "hopf");
        },
    );
    assert_eq!(code, 0, "{out}{err}");
    let records = parse_machine(&out).expect("machine output parses");
    let report = records.iter().find(|r| r.kind == "report").expect("header");
    assert_eq!(report.field("suite"), Some("hopf"));
    assert_eq!(report.field("suite-source"), Some("env"));
    assert!(records
        .iter()
        .filter(|r| r.kind == "check")
        .all(|r| r.field("name").is_some_and(|n| n.starts_with("hopf."))));
}

#[test]
fn suite_flag_overrides_env() {
    let (code, out, err) = run_with(
        &[
            "check",
            &scenario("klein.scn"),
            "--suite",
            "twist.props",
            "--format",
            "machine",
        ],
        |cmd| {
            cmd.env("HOPFSTAR_SUITE", "hopf");
        },
    );
    assert_eq!(code, 0, "{out}{err}");
    let records = parse_machine(&out).expect("machine output parses");
    let report = records.iter().find(|r| r.kind == "report").expect("header");
    assert_eq!(report.field("suite"), Some("twist.props"));
    assert_eq!(report.field("suite-source"), Some("flag"));
}

#[test]
fn machine_output_round_trips_byte_for_byte() {
    // The fault scenario's report carries witnesses whose values contain
    // spaces, `=`, and parentheses, stressing the quoting rules.
    let (code, out, _err) = run(&[
        "check",
        &scenario("moyal2d_n2_faults.scn"),
        "--format",
        "machine",
    ]);
    assert_eq!(code, 1);
    let records: Vec<Record> = parse_machine(&out).expect("machine output parses");
    assert!(records.iter().any(|r| r.kind == "witness"));
    assert_eq!(emit_records(&records), out, "emit/parse/emit must be stable");
}

fn check_status<'a>(records: &'a [Record], name: &str) -> &'a str {
    records
        .iter()
        .find(|r| r.kind == "check" && r.field("name") == Some(name))
        .and_then(|r| r.field("status"))
        .unwrap_or_else(|| panic!("check {name} missing"))
}

#[test]
fn bad_cocycle_control_fails_only_the_cocycle_law() {
    let (code, out, _err) = run(&[
        "check",
        &scenario("moyal2d_badtwist.scn"),
        "--format",
        "machine",
    ]);
    assert_eq!(code, 1);
    let records = parse_machine(&out).expect("machine output parses");
    assert_eq!(check_status(&records, "twist.props.cocycle"), "fail");
    assert_eq!(check_status(&records, "twist.props.invertible"), "pass");
    assert_eq!(check_status(&records, "twist.props.normalization"), "pass");
}

#[test]
fn bad_inverse_control_fails_only_invertibility() {
    let (code, out, _err) = run(&[
        "check",
        &scenario("moyal2d_badfinv.scn"),
        "--format",
        "machine",
    ]);
    assert_eq!(code, 1);
    let records = parse_machine(&out).expect("machine output parses");
    assert_eq!(check_status(&records, "twist.props.invertible"), "fail");
    assert_eq!(check_status(&records, "twist.props.cocycle"), "pass");
    assert_eq!(check_status(&records, "twist.props.normalization"), "pass");
}

#[test]
fn bad_antipode_control_fails_only_the_antipode_laws() {
    let (code, out, _err) = run(&[
        "check",
        &scenario("klein_badantipode.scn"),
        "--format",
        "machine",
    ]);
    assert_eq!(code, 1);
    let records = parse_machine(&out).expect("machine output parses");
    for name in [
        "hopf.axioms.antipode.left",
        "hopf.axioms.antipode.right",
        "hopf.axioms.antipode.antihom",
    ] {
        assert_eq!(check_status(&records, name), "fail", "{name}");
    }
    for name in [
        "hopf.axioms.coassoc",
        "hopf.axioms.counit.left",
        "hopf.axioms.counit.right",
        "hopf.axioms.product.assoc",
        "hopf.axioms.coproduct.hom",
    ] {
        assert_eq!(check_status(&records, name), "pass", "{name}");
    }
}
