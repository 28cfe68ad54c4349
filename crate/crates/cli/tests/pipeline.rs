//! End-to-end runs of the compiled binary: parameter scans, the
//! encode/damage/repair/verify round trip, audit failures, and transcript
//! aggregation.

use std::path::Path;
use std::process::{Command, Output};

fn rackcode(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rackcode"))
        .args(args)
        .current_dir(dir)
        .env_remove("RACKCODE_BUDGET")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        stdout(out),
        stderr(out)
    );
}

#[test]
fn params_scans_the_smallest_array_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = rackcode(
        dir.path(),
        &[
            "params", "--kind", "array", "--racks", "4", "--rack-size", "3", "--k", "7",
            "--helpers", "3",
        ],
    );
    assert_ok(&out);
    let bundle: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(bundle["q"], 13);
    assert_eq!(bundle["radix"], 2);
    assert_eq!(bundle["rows"], 16);
    assert_eq!(bundle["k_racks"], 2);
    assert_eq!(bundle["k_rem"], 1);
    assert_eq!(bundle["parity"], 5);
}

#[test]
fn params_names_the_violated_constraint() {
    let dir = tempfile::tempdir().unwrap();
    // rack_size 2 with an even repair radix breaks the coprimality
    // requirement regardless of the field, so the scan must surface it.
    let out = rackcode(
        dir.path(),
        &[
            "params", "--kind", "array", "--racks", "3", "--rack-size", "2", "--k", "3",
            "--helpers", "2",
        ],
    );
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("coprime"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn params_scans_the_rs_prime_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let out = rackcode(
        dir.path(),
        &[
            "params", "--kind", "rs", "--racks", "3", "--rack-size", "2", "--k", "3",
            "--helpers", "2",
        ],
    );
    assert_ok(&out);
    let bundle: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(bundle["q"], 3);
    assert_eq!(bundle["span"], 2);
    assert_eq!(bundle["ell"], 210);
    assert_eq!(bundle["primes"], serde_json::json!([3, 5, 7]));
    assert_eq!(bundle["co_degrees"], serde_json::json!([35, 21, 15]));
}

#[test]
fn rs_round_trip_restores_the_original_file() {
    let dir = tempfile::tempdir().unwrap();
    let shape = [
        "--kind", "rs", "--racks", "2", "--rack-size", "2", "--k", "3", "--helpers", "1",
        "--seed", "11",
    ];
    let mut encode = vec!["encode"];
    encode.extend_from_slice(&shape);
    encode.extend_from_slice(&["--out", "word.json"]);
    assert_ok(&rackcode(dir.path(), &encode));
    assert_ok(&rackcode(
        dir.path(),
        &["damage", "--in", "word.json", "--fail", "1", "--out", "damaged.json"],
    ));
    let repair = rackcode(
        dir.path(),
        &[
            "repair", "--in", "damaged.json", "--helpers", "1", "--out", "repaired.json",
        ],
    );
    assert_ok(&repair);
    let transcript: serde_json::Value = serde_json::from_str(&stdout(&repair)).unwrap();
    assert_eq!(transcript["downloaded_symbols"], 15);
    assert_eq!(transcript["accessed_symbols"], 30);
    let verify = rackcode(dir.path(), &["verify", "--in", "repaired.json"]);
    assert_ok(&verify);
    let original = std::fs::read(dir.path().join("word.json")).unwrap();
    let repaired = std::fs::read(dir.path().join("repaired.json")).unwrap();
    assert_eq!(original, repaired);
}

#[test]
fn array_repair_localizes_a_lying_helper() {
    let dir = tempfile::tempdir().unwrap();
    let out = rackcode(
        dir.path(),
        &[
            "encode", "--kind", "array", "--racks", "6", "--rack-size", "3", "--k", "4",
            "--helpers", "4", "--errors", "1", "--seed", "2", "--out", "a.json",
        ],
    );
    assert_ok(&out);
    assert_ok(&rackcode(
        dir.path(),
        &["damage", "--in", "a.json", "--fail", "0", "--out", "ad.json"],
    ));
    let repair = rackcode(
        dir.path(),
        &[
            "repair", "--in", "ad.json", "--helpers", "1,2,3,4", "--corrupt", "2", "--seed",
            "9", "--out", "ar.json",
        ],
    );
    assert_ok(&repair);
    let transcript: serde_json::Value = serde_json::from_str(&stdout(&repair)).unwrap();
    assert_eq!(transcript["corrupted_detected"], serde_json::json!([2]));
    assert_eq!(transcript["downloaded_symbols"], 128);
    let original = std::fs::read(dir.path().join("a.json")).unwrap();
    let repaired = std::fs::read(dir.path().join("ar.json")).unwrap();
    assert_eq!(original, repaired);
}

#[test]
fn repair_rejects_an_undamaged_file() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&rackcode(
        dir.path(),
        &[
            "encode", "--kind", "rs", "--racks", "2", "--rack-size", "2", "--k", "3",
            "--helpers", "1", "--out", "word.json",
        ],
    ));
    let out = rackcode(
        dir.path(),
        &["repair", "--in", "word.json", "--helpers", "1", "--out", "x.json"],
    );
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("nothing to repair"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn unbudgeted_corruption_fails_the_audit() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&rackcode(
        dir.path(),
        &[
            "encode", "--kind", "rs", "--racks", "2", "--rack-size", "2", "--k", "3",
            "--helpers", "1", "--seed", "11", "--out", "word.json",
        ],
    ));
    assert_ok(&rackcode(
        dir.path(),
        &["damage", "--in", "word.json", "--fail", "1", "--out", "damaged.json"],
    ));
    // Zero error budget: the lie cannot be detected during repair, but the
    // repaired word fails the parity audit, so the exit status still trips.
    let out = rackcode(
        dir.path(),
        &[
            "repair", "--in", "damaged.json", "--helpers", "1", "--corrupt", "1", "--seed",
            "4", "--out", "poisoned.json",
        ],
    );
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("audit failed"),
        "stderr: {}",
        stderr(&out)
    );
    let verify = rackcode(dir.path(), &["verify", "--in", "poisoned.json"]);
    assert!(!verify.status.success());
    let result: serde_json::Value = serde_json::from_str(&stdout(&verify)).unwrap();
    assert_eq!(result["consistent"], false);
}

#[test]
fn budget_env_overrides_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&rackcode(
        dir.path(),
        &[
            "encode", "--kind", "array", "--racks", "4", "--rack-size", "3", "--k", "7",
            "--helpers", "3", "--out", "a.json",
        ],
    ));
    let out = Command::new(env!("CARGO_BIN_EXE_rackcode"))
        .args(["verify", "--in", "a.json", "--budget", "99999"])
        .current_dir(dir.path())
        .env("RACKCODE_BUDGET", "7")
        .output()
        .expect("binary runs");
    assert_ok(&out);
    let result: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(result["erasure_sweep"]["checked"], 7);
    assert_eq!(result["erasure_sweep"]["exhaustive"], false);
}

#[test]
fn report_emits_one_row_per_transcript() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&rackcode(
        dir.path(),
        &[
            "encode", "--kind", "rs", "--racks", "2", "--rack-size", "2", "--k", "3",
            "--helpers", "1", "--seed", "11", "--out", "word.json",
        ],
    ));
    std::fs::create_dir(dir.path().join("sweep")).unwrap();
    for (i, fail) in ["0", "1"].iter().enumerate() {
        assert_ok(&rackcode(
            dir.path(),
            &["damage", "--in", "word.json", "--fail", fail, "--out", "d.json"],
        ));
        let transcript = format!("sweep/t{i}.json");
        assert_ok(&rackcode(
            dir.path(),
            &[
                "repair", "--in", "d.json", "--helpers", "1", "--out", "r.json",
                "--transcript", &transcript,
            ],
        ));
    }
    let out = rackcode(dir.path(), &["report", "--in", "sweep"]);
    assert_ok(&out);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(
        lines[0],
        "id,host,failed,helpers,corrupted,downloaded,bound,ratio,ok"
    );
    assert!(lines.iter().skip(1).all(|l| l.ends_with("true")));
}
