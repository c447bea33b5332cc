use std::process::{Command, Output};

use serde_json::Value;

fn necklace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_necklace"))
        .args(args)
        .env_remove("NECKLACE_WORKERS")
        .output()
        .unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = out.to_str().unwrap();
    assert_eq!(necklace(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(necklace(&["gen-substrate", "--n", "10", "--bogus", "--out", out]).status.code(), Some(2));
    assert_eq!(necklace(&["necklace", "--shape", "cone", "--n", "10", "--out", out]).status.code(), Some(2));
    assert_eq!(necklace(&["gen-substrate", "--n", "1", "--out", out]).status.code(), Some(2));
    // three nodes cannot meet the interpolation tolerance
    assert_eq!(necklace(&["wulff-profile", "--j2", "5", "--k2", "1", "--nodes", "3", "--out", out]).status.code(), Some(3));
    assert_eq!(necklace(&["--help"]).status.code(), Some(0));
}

#[test]
fn artifacts_carry_metadata_and_summary_is_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("neck.csv");
    let run = necklace(&[
        "necklace", "--shape", "parabola", "--lambda", "0.1", "--n", "1000", "--seed", "7", "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    let summary: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(summary["status"], "ok");

    for path in [csv.clone(), dir.path().join("neck.envelope.csv")] {
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        let meta: Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
        assert_eq!(meta["seed"], 7);
        assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(meta["config"]["shape"]["lambda"], 0.1);
        assert!(meta["schema_version"].is_number());
        let header = lines.next().unwrap();
        assert!(header == "n,b,h" || header == "x,I", "{header}");
    }

    let json = dir.path().join("d.json");
    let run = necklace(&[
        "density-scan", "--shape", "cone", "--lambda", "0.05", "--n", "100000", "--samples", "5", "--seed", "42",
        "--out", json.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let row = &doc["results"][0];
    for key in ["p_hat", "se", "exact", "upper", "lower"] {
        assert!(row[key].is_number(), "{key}");
    }
}
