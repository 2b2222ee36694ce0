use std::process::Command;

fn pdmatch(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pdmatch"))
        .args(args)
        .output()
        .expect("spawn")
}

#[test]
fn run_is_byte_identical_across_invocations() {
    let args = [
        "run", "--algo", "ab", "--model", "ab", "--trials", "200", "--seed", "3", "--format", "csv",
    ];
    let a = pdmatch(&args);
    let b = pdmatch(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).starts_with("trial,primal,dual,opt,ratio\n"));
}

#[test]
fn trace_bundle_round_trips_through_audit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = pdmatch(&[
        "run",
        "--algo",
        "fd",
        "--upper-triangular",
        "4",
        "--trials",
        "50",
        "--trace",
        "--out",
        out,
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    for f in ["trials.csv", "report.json", "trace.jsonl", "bundle.json"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let bundle = dir.path().join("bundle.json");
    let audit = pdmatch(&["audit", "--bundle", bundle.to_str().unwrap()]);
    assert!(
        audit.status.success(),
        "{}",
        String::from_utf8_lossy(&audit.stderr)
    );
}

#[test]
fn bad_arguments_exit_with_error() {
    let out = pdmatch(&["run", "--algo", "kvv", "--model", "ab", "--trials", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn ratio_sweep_reports_each_value() {
    let out = pdmatch(&[
        "ratio", "--algo", "fd", "--param", "n", "--values", "2,3", "--trials", "100", "--format",
        "csv",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");
}
