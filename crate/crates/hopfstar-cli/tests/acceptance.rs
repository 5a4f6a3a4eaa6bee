//! End-to-end acceptance suite, driven entirely through the `hopfstar`
//! binary.  Each criterion prints one `criterion N: PASS/FAIL` line
//! (visible under `cargo test -- --nocapture`) and fails the test on any
//! violated assertion.
//!
//! The expensive full runs of the flagship scenario are executed once per
//! test process (twice, for the determinism comparison) and shared.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use hopfstar_cli::report::{parse_machine, Record};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hopfstar")
}

fn scenario(name: &str) -> String {
    format!("{}/scenarios/{}", env!("CARGO_MANIFEST_DIR"), name)
}

/// Runs the binary and returns (exit code, stdout, stderr).
fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin())
        .args(args)
        .env_remove("HOPFSTAR_SUITE")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).expect("stdout is utf-8"),
        String::from_utf8(out.stderr).expect("stderr is utf-8"),
    )
}

/// Two identically seeded machine-format runs of the flagship scenario.
/// Criteria 2-5 read the first; criterion 7 compares the two byte-wise.
fn flagship_runs() -> &'static (String, String) {
    static RUNS: OnceLock<(String, String)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let args = [
            "check",
            &scenario("moyal2d.scn"),
            "--seed",
            "7",
            "--format",
            "machine",
        ];
        let (code_a, out_a, err_a) = run(&args);
        assert_eq!(code_a, 0, "flagship run failed:\n{out_a}{err_a}");
        let (code_b, out_b, err_b) = run(&args);
        assert_eq!(code_b, 0, "flagship rerun failed:\n{out_b}{err_b}");
        (out_a, out_b)
    })
}

fn flagship_records() -> Vec<Record> {
    parse_machine(&flagship_runs().0).expect("flagship machine output parses")
}

fn checks(records: &[Record]) -> Vec<&Record> {
    records.iter().filter(|r| r.kind == "check").collect()
}

fn find_check<'a>(records: &'a [Record], name: &str) -> &'a Record {
    records
        .iter()
        .find(|r| r.kind == "check" && r.field("name") == Some(name))
        .unwrap_or_else(|| panic!("check {name} missing from report"))
}

fn assert_pass(records: &[Record], name: &str) {
    let rec = find_check(records, name);
    assert_eq!(
        rec.field("status"),
        Some("pass"),
        "check {name} did not pass: {rec:?}"
    );
}

fn probes(records: &[Record], name: &str) -> u64 {
    find_check(records, name)
        .field("probes")
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| panic!("check {name} has no probe count"))
}

/// All checks whose name starts with `prefix`; asserts the family is nonempty
/// and every member passed.
fn assert_family_passes(records: &[Record], prefix: &str) -> usize {
    let members: Vec<&Record> = checks(records)
        .into_iter()
        .filter(|r| r.field("name").is_some_and(|n| n.starts_with(prefix)))
        .collect();
    assert!(!members.is_empty(), "no checks under {prefix}");
    for rec in &members {
        assert_eq!(
            rec.field("status"),
            Some("pass"),
            "check under {prefix} did not pass: {rec:?}"
        );
    }
    members.len()
}

fn info_usize(records: &[Record], name: &str, key: &str) -> usize {
    records
        .iter()
        .find(|r| {
            r.kind == "info" && r.field("name") == Some(name) && r.field("key") == Some(key)
        })
        .and_then(|r| r.field("value"))
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| panic!("info {name} {key} missing"))
}

fn witness<'a>(records: &'a [Record], name: &str) -> &'a Record {
    records
        .iter()
        .find(|r| r.kind == "witness" && r.field("name") == Some(name))
        .unwrap_or_else(|| panic!("no witness recorded for {name}"))
}

/// Prints the criterion verdict line whether the body passes or panics.
fn criterion(n: usize, desc: &str, body: impl FnOnce()) {
    let result = catch_unwind(AssertUnwindSafe(body));
    match &result {
        Ok(()) => println!("criterion {n}: PASS - {desc}"),
        Err(_) => println!("criterion {n}: FAIL - {desc}"),
    }
    if let Err(cause) = result {
        std::panic::resume_unwind(cause);
    }
}

#[test]
fn criterion_1_structure_suites_complete_quickly() {
    criterion(
        1,
        "Hopf, twist, and R-matrix suites pass on both scenarios in under 60 s",
        || {
            let start = Instant::now();
            for scn in ["moyal2d.scn", "klein.scn"] {
                let (code, out, err) = run(&[
                    "check",
                    &scenario(scn),
                    "--suite",
                    "hopf,twist,rmatrix",
                    "--format",
                    "machine",
                ]);
                assert_eq!(code, 0, "{scn} structure suites failed:\n{out}{err}");
                let records = parse_machine(&out).expect("machine output parses");
                for prefix in ["hopf.axioms.", "twist.props.", "rmatrix.props."] {
                    assert_family_passes(&records, prefix);
                }
                assert_family_passes(&records, "twist.deform.");
                assert_family_passes(&records, "twist.dequantize.");
                let summary = records
                    .iter()
                    .find(|r| r.kind == "summary")
                    .expect("summary record");
                assert_eq!(summary.field("failed"), Some("0"));
                assert_eq!(summary.field("skipped"), Some("0"));
            }
            let elapsed = start.elapsed();
            assert!(
                elapsed.as_secs() < 60,
                "structure suites took {elapsed:?}, budget is 60 s"
            );
        },
    );
}

#[test]
fn criterion_2_star_products_with_negative_control() {
    criterion(
        2,
        "star products associative, covariant, braided-commutative; trivial-R control fails at order h",
        || {
            let records = flagship_records();
            assert_pass(&records, "star.algebra.assoc");
            let triples = probes(&records, "star.algebra.assoc");
            assert!(
                triples >= 4000,
                "associativity swept only {triples} probe triples"
            );
            assert_pass(&records, "star.algebra.covariance");
            assert_pass(&records, "star.quasicomm");
            assert_pass(&records, "module.quasicomm.V");
            assert_pass(&records, "module.quasicomm.W");
            assert_family_passes(&records, "module.props.");

            let (code, out, err) =
                run(&["check", &scenario("moyal2d_trivial_r.scn"), "--format", "machine"]);
            assert_eq!(code, 1, "trivial-R control should exit 1:\n{out}{err}");
            let control = parse_machine(&out).expect("control output parses");
            assert_family_passes(&control, "star.algebra.");
            let quasicomm = find_check(&control, "star.quasicomm");
            assert_eq!(quasicomm.field("status"), Some("fail"));
            let w = witness(&control, "star.quasicomm");
            let lhs = w.field("lhs").expect("witness lhs");
            let rhs = w.field("rhs").expect("witness rhs");
            assert_ne!(lhs, rhs, "witness sides must disagree");
            assert!(
                lhs.contains('h') || rhs.contains('h'),
                "discrepancy should involve the deformation parameter: {lhs} vs {rhs}"
            );
        },
    );
}

#[test]
fn criterion_3_deformed_operators() {
    criterion(
        3,
        "operator deformation laws hold across at least 20 operators",
        || {
            let records = flagship_records();
            let operators = info_usize(&records, "homdef.df", "operators");
            assert!(operators >= 20, "only {operators} operators probed");
            assert_family_passes(&records, "homdef.df.");
            assert_family_passes(&records, "homdef.adjoint.");
            assert_family_passes(&records, "homdef.dual.");
        },
    );
}

#[test]
fn criterion_4_quantization_map_and_deformed_calculus() {
    criterion(
        4,
        "quantization isomorphism respects the quotient on 50+ probes; deformed calculus laws hold",
        || {
            let records = flagship_records();
            let relation_probes = info_usize(&records, "homdef.phi", "relation-probes");
            assert!(
                relation_probes >= 50,
                "only {relation_probes} quotient relation probes"
            );
            assert_family_passes(&records, "homdef.phi.");
            let calculus_entries = assert_family_passes(&records, "calc.props.");
            assert!(calculus_entries >= 7, "calculus law families missing");
        },
    );
}

#[test]
fn criterion_5_connections() {
    criterion(
        5,
        "connection laws: Leibniz over 10+ connections, one-form extension, braided Leibniz, braided sums",
        || {
            let records = flagship_records();
            let connections = info_usize(&records, "conn.leibniz", "connections");
            assert!(connections >= 10, "only {connections} connections probed");
            assert_pass(&records, "conn.leibniz");
            assert_family_passes(&records, "conn.dtilde.");
            assert_pass(&records, "conn.braidedleibniz");
            assert_pass(&records, "conn.oplus.leibniz");
            assert_pass(&records, "conn.oplus.equivariant");
            assert_pass(&records, "conn.oplus.assoc");
        },
    );
}

#[test]
fn criterion_6_naturality_diagrams_with_fault_injection() {
    criterion(
        6,
        "tensor-product naturality diagrams commute at order 2 and break under injected faults",
        || {
            let (code, out, err) =
                run(&["check", &scenario("moyal2d_n2.scn"), "--format", "machine"]);
            assert_eq!(code, 0, "order-2 diagram scenario failed:\n{out}{err}");
            let records = parse_machine(&out).expect("machine output parses");
            let report = records.iter().find(|r| r.kind == "report").expect("header");
            assert_eq!(report.field("order"), Some("2"));
            assert_pass(&records, "rtensor.diagram.overK");
            assert_pass(&records, "rtensor.diagram.overA");
            assert_pass(&records, "conn.diagram");

            for (file, failing) in [
                (
                    "moyal2d_n2_faults.scn",
                    &["rtensor.diagram.overK", "rtensor.diagram.overA", "conn.diagram"][..],
                ),
                (
                    "moyal2d_n2_faults2.scn",
                    &["rtensor.diagram.overK", "rtensor.diagram.overA"][..],
                ),
            ] {
                let (code, out, err) = run(&["check", &scenario(file), "--format", "machine"]);
                assert_eq!(code, 1, "{file} should exit 1:\n{out}{err}");
                let records = parse_machine(&out).expect("machine output parses");
                for name in failing {
                    let rec = find_check(&records, name);
                    assert_eq!(
                        rec.field("status"),
                        Some("fail"),
                        "{file}: {name} should fail under fault injection"
                    );
                    let w = witness(&records, name);
                    let lhs = w.field("lhs").expect("witness lhs");
                    let rhs = w.field("rhs").expect("witness rhs");
                    assert_ne!(lhs, rhs, "{file}: {name} witness sides must disagree");
                    assert!(
                        w.field("input").is_some_and(|i| !i.is_empty()),
                        "{file}: {name} witness should name the probe input"
                    );
                }
            }
        },
    );
}

#[test]
fn criterion_7_determinism() {
    criterion(
        7,
        "two identically seeded machine-format runs are byte-identical",
        || {
            let (first, second) = flagship_runs();
            assert!(!first.is_empty());
            assert_eq!(first, second, "same-seed runs differ");
            let records = parse_machine(first).expect("machine output parses");
            let summary = records
                .iter()
                .find(|r| r.kind == "summary")
                .expect("summary record");
            assert_eq!(summary.field("failed"), Some("0"));
        },
    );
}
