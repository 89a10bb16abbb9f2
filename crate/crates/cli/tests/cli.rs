use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn grnbat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grnbat")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = grnbat(dir, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

const SMALL: &str = "
name = \"small\"
[inference.bat]
population = 15
iterations = 30
[sweep]
parameter = \"iterations\"
values = [5, 10]
repetitions = 2
[sos]
runs = 2
";

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    ok(dir.path(), &["generate", "--config", "small.toml", "--seed", "2024", "--out", "data"]);
    dir
}

#[test]
fn reruns_are_byte_identical() {
    let dir = setup();
    let d = dir.path();
    for out in ["a", "b"] {
        ok(
            d,
            &[
                "infer",
                "--config",
                "small.toml",
                "--manifest",
                "data/manifest.json",
                "--seeds",
                "1,2",
                "--truth",
                "table1",
                "--out",
                out,
            ],
        );
    }
    for f in
        ["seed-1/params.csv", "seed-2/history.csv", "seed-1/structure.csv", "summary.csv", "summary.json"]
    {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
    for out in ["s1", "s2"] {
        ok(d, &["sweep", "--config", "small.toml", "--out", out, "--format", "json-lines"]);
    }
    assert_eq!(
        fs::read(d.join("s1/sweep_iterations.jsonl")).unwrap(),
        fs::read(d.join("s2/sweep_iterations.jsonl")).unwrap()
    );
    let rows = fs::read_to_string(d.join("s1/sweep_iterations.jsonl")).unwrap();
    assert_eq!(rows.lines().count(), 4);
    assert!(rows.lines().all(|l| l.contains("\"config_digest\"") && l.contains("\"seed\"")));
}

#[test]
fn noise_and_eval() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["noise", "--manifest", "data/manifest.json", "--percent", "5", "--seed", "9", "--out", "noisy"]);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("noisy/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["noise_percent"], 5.0);
    assert_eq!(m["noise_seed"], 9);
    assert_eq!(m["series"].as_array().unwrap().len(), 6);

    ok(d, &["infer", "--config", "small.toml", "--manifest", "noisy/manifest.json", "--out", "run"]);
    let text = ok(d, &["eval", "--truth", "table1", "--report", "run/seed-1/run.json", "--out", "ev"]);
    assert!(text.contains("sensitivity"));
    let metrics = fs::read_to_string(d.join("ev/metrics.csv")).unwrap();
    assert!(metrics.starts_with("format_version,report,truth,threshold,sign_strict,tp,fp,tn,fn"));
}

#[test]
fn one_gene_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("truth.json"), r#"{"weights": [[2.0]]}"#).unwrap();
    fs::write(d.join("report.json"), r#"{"weights": [[1.5]]}"#).unwrap();
    let text = ok(
        d,
        &[
            "eval",
            "--truth",
            "truth.json",
            "--report",
            "report.json",
            "--out",
            "ev",
            "--format",
            "json-lines",
        ],
    );
    assert!(text.contains("tp 1  fp 0  tn 0  fn 0"), "{text}");
    let row: serde_json::Value =
        serde_json::from_str(fs::read_to_string(d.join("ev/metrics.jsonl")).unwrap().trim()).unwrap();
    assert_eq!(row["ipe"], 0.5);
    assert_eq!(row["sensitivity"], 1.0);
    assert!(row["specificity"].is_null());

    fs::write(d.join("zero.json"), r#"{"weights": [[0.0]]}"#).unwrap();
    ok(d, &["eval", "--truth", "truth.json", "--report", "zero.json", "--out", "ev0"]);
    let csv = fs::read_to_string(d.join("ev0/metrics.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",0,0,0,1,0.0,,2.0"), "{csv}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.toml"), "bogus = 1\n").unwrap();
    assert_eq!(grnbat(d, &["generate", "--config", "bad.toml"]).status.code(), Some(3));
    assert_eq!(grnbat(d, &["generate", "--config", "missing.toml"]).status.code(), Some(4));
    assert_eq!(grnbat(d, &["infer", "--manifest", "missing.json"]).status.code(), Some(4));
    fs::write(d.join("neg.toml"), "[data]\nsamples = 0\n").unwrap();
    assert_eq!(grnbat(d, &["generate", "--config", "neg.toml"]).status.code(), Some(3));
    fs::write(d.join("three.tsv"), "a\tb\tc\n1\t2\t3\n2\t3\t4\n").unwrap();
    assert_eq!(grnbat(d, &["sos", "--input", "three.tsv"]).status.code(), Some(5));
    fs::write(d.join("x.tsv"), "a\n1\n").unwrap();
    let o = grnbat(d, &["sos", "--input", "x.tsv", "--sha256", "00"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sha256"));
    assert_eq!(grnbat(d, &["sweep"]).status.code(), Some(3));
    assert_eq!(grnbat(d, &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn bundled_sos_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("s.toml"), "[inference.bat]\npopulation = 10\niterations = 10\n[sos]\nruns = 3\n")
        .unwrap();
    let text = ok(d, &["sos", "--config", "s.toml", "--seeds", "1,2", "--out", "sos"]);
    assert!(text.contains("of 9 known regulations"));
    let m = fs::read_to_string(d.join("sos/seed-1/structure.tsv")).unwrap();
    assert_eq!(m.lines().count(), 9);
    assert!(m.lines().all(|l| l.split('\t').count() == 9));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("sos/seed-2/run.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["known_total"], 9);
    assert_eq!(report["result"]["runs"], 3);
}
