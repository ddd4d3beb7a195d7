use std::path::Path;

use relcrypt::protocols::pi3_cases_with_reveal_delay;
use relcrypt_cli::{commands, main_with, EXIT_OK, EXIT_USAGE};

fn run(args: &[&str], out: &Path) -> i32 {
    let mut v = vec!["relcrypt".to_string()];
    v.extend(args.iter().map(|s| s.to_string()));
    v.push("--out".into());
    v.push(out.display().to_string());
    main_with(v)
}

#[test]
fn perfect_construction_exits_cleanly_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["construct", "pi1"], dir.path()), EXIT_OK);
    let text = std::fs::read_to_string(dir.path().join("construct-pi1.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["config"]["target"], "pi1");
    assert!(json["records"].as_array().unwrap().iter().all(|r| r["verdict"] == true));
}

#[test]
fn bad_parameters_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["construct", "pi4", "--k", "0"], dir.path()), EXIT_USAGE);
    assert_eq!(run(&["construct", "pi9"], dir.path()), EXIT_USAGE);
    assert_eq!(run(&["attack", "rabin", "--p", "3/2"], dir.path()), EXIT_USAGE);
    assert_eq!(run(&["construct", "--mode", "guess"], dir.path()), EXIT_USAGE);
    assert_eq!(run(&["trace"], dir.path()), EXIT_USAGE);
}

#[test]
fn traces_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(run(&["trace", "pi3.honest", "--seed", "7"], d.path()), EXIT_OK);
    }
    let name = "trace-pi3.honest-seed7.json";
    let ta = std::fs::read_to_string(a.path().join(name)).unwrap();
    let tb = std::fs::read_to_string(b.path().join(name)).unwrap();
    // only the output directory differs
    assert_eq!(ta.replace(&a.path().display().to_string(), ""), tb.replace(&b.path().display().to_string(), ""));
}

#[test]
fn csv_reports_have_one_row_per_record() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["attack", "and", "--format", "csv"], dir.path()), EXIT_OK);
    let mut r = csv::Reader::from_path(dir.path().join("attack-and.csv")).unwrap();
    let head = r.headers().unwrap().clone();
    assert!(head.iter().any(|h| h == "verdict") && head.iter().any(|h| h == "config"));
    assert_eq!(r.records().count(), 3);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "target = \"pi3.honest\"\nseed = 3\n").unwrap();
    let code = run(&["trace", "--config", cfg.to_str().unwrap(), "--seed", "5"], dir.path());
    assert_eq!(code, EXIT_OK);
    assert!(dir.path().join("trace-pi3.honest-seed5.json").exists());
    assert!(!dir.path().join("trace-pi3.honest-seed3.json").exists());
}

#[test]
fn early_reveal_fails_the_trace_audit() {
    let broken = pi3_cases_with_reveal_delay(0.5).unwrap().remove(0);
    let tr = commands::trace_case(&broken, 1).unwrap();
    assert!(!tr.audit_ok);
    let fine = pi3_cases_with_reveal_delay(2.0).unwrap().remove(0);
    assert!(commands::trace_case(&fine, 1).unwrap().audit_ok);
}

#[test]
fn bounds_table_holds() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["bounds", "--k", "2", "--n", "12"], dir.path()), EXIT_OK);
}
