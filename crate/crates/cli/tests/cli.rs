use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn golden(file: &str) -> PathBuf {
    root().join("crates/core/tests/fixtures/golden").join(file)
}

const GOLDEN_AGGREGATE: &str =
    "group,cls_acc,cls_f1,skill_acc,avg_gt_min,avg_vram_time,n\nASI,0.667,0.667,0.667,0.040,2.880,3\n";

fn skillbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skillbench"))
        .args(args)
        .current_dir(root())
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn golden_run_args(out: &Path) -> Vec<String> {
    [
        "run",
        "--strategy",
        "ASI",
        "--dataset",
        golden("tasks.jsonl").to_str().unwrap(),
        "--skills-dir",
        "data/demo-skills",
        "--backend",
        "mock",
        "--script",
        golden("script.json").to_str().unwrap(),
        "--n-distractors",
        "2",
        "--seed",
        "42",
        "--vram-gb",
        "72",
        "--out",
        out.to_str().unwrap(),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn help_and_version_exit_zero() {
    assert!(skillbench(&["--help"]).status.success());
    assert!(skillbench(&["--version"]).status.success());
    assert_eq!(skillbench(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(skillbench(&[]).status.code(), Some(1));
}

#[test]
fn validate_demo_hub() {
    let o = skillbench(&["validate", "data/demo-skills"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("OK ")).count(), 6);
    assert!(text.contains("EDGE financial-ner -> sales-analytics"));
    assert!(text.contains("EDGE langgraph-docs -> sales-analytics"));
}

#[test]
fn validate_reports_bad_files_and_missing_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good");
    fs::create_dir(&good).unwrap();
    fs::write(
        good.join("SKILL.md"),
        "---\nname: good\ndescription: Does good things.\n---\nBody.\n",
    )
    .unwrap();
    let bad = dir.path().join("bad");
    fs::create_dir(&bad).unwrap();
    fs::write(bad.join("SKILL.md"), "no front matter here\n").unwrap();

    let o = skillbench(&["validate", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("OK good"));
    assert!(text.lines().any(|l| l.starts_with("ERR ") && l.contains("bad")));

    let missing = dir.path().join("nope");
    assert_eq!(
        skillbench(&["validate", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn run_matches_golden_files() {
    let out = tempfile::tempdir().unwrap();
    let args = golden_run_args(out.path());
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = skillbench(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for file in ["records.jsonl", "transcripts.jsonl"] {
        let actual = fs::read_to_string(out.path().join(file)).unwrap();
        let expected = fs::read_to_string(golden(file)).unwrap();
        assert_eq!(actual, expected, "{file}");
    }
    assert_eq!(stdout(&o), GOLDEN_AGGREGATE);
    assert_eq!(
        fs::read_to_string(out.path().join("aggregate.csv")).unwrap(),
        GOLDEN_AGGREGATE
    );
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = dir.path().join("run.json");
    let body = serde_json::json!({
        "strategy": "ASI",
        "dataset": golden("tasks.jsonl"),
        "skills_dir": root().join("data/demo-skills"),
        "backend": "mock",
        "script": golden("script.json"),
        "n_distractors": 2,
        "seed": 42,
        "vram_gb": 72,
    });
    fs::write(&config, body.to_string()).unwrap();
    let o = skillbench(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read_to_string(out.join("records.jsonl")).unwrap(),
        fs::read_to_string(golden("records.jsonl")).unwrap()
    );

    fs::write(&config, r#"{"strategy": "ASI"}"#).unwrap();
    let o = skillbench(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--backend"));
}

#[test]
fn run_rejects_bad_values() {
    let o = skillbench(&["run", "--strategy", "XYZ"]);
    assert_eq!(o.status.code(), Some(1));
    let o = skillbench(&[
        "run",
        "--strategy",
        "DI",
        "--backend",
        "http",
        "--dataset",
        golden("tasks.jsonl").to_str().unwrap(),
        "--skills-dir",
        "data/demo-skills",
    ]);
    assert_eq!(o.status.code(), Some(1), "http without endpoint");
}

#[test]
fn report_regroups_records() {
    let o = skillbench(&[
        "report",
        golden("records.jsonl").to_str().unwrap(),
        "--group-by",
        "strategy",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), GOLDEN_AGGREGATE);

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    assert_eq!(skillbench(&["report", empty.to_str().unwrap()]).status.code(), Some(1));
    let missing = dir.path().join("missing.jsonl");
    assert_eq!(
        skillbench(&["report", missing.to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn fit_prints_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    fs::write(&csv, "N,skill_acc\n5,1\n10,1\n50,0.99\n100,0.99\n").unwrap();
    let o = skillbench(&["fit", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let fit: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((fit["lambda"].as_f64().unwrap() - 0.0372693).abs() < 1e-6);
    assert!((fit["c"].as_f64().unwrap() - 0.989074).abs() < 1e-6);

    fs::write(&csv, "N,skill_acc\n5,oops\n").unwrap();
    assert_eq!(skillbench(&["fit", csv.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn pomdp_grid() {
    let o = skillbench(&["pomdp", "--model", "data/toy-pomdp.json", "--steps", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines,
        [
            "b0,b1,value,action",
            "1,0,1,execute-0",
            "0.5,0.5,0.7,reveal",
            "0,1,1,execute-1"
        ]
    );
    let o = skillbench(&["pomdp", "--model", "data/toy-pomdp.json", "--steps", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_over_demo_hub() {
    let o = skillbench(&[
        "sweep",
        "--counts",
        "2,4,6",
        "--dataset",
        golden("tasks.jsonl").to_str().unwrap(),
        "--skills-dir",
        "data/demo-skills",
        "--backend",
        "heuristic",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,skill_acc");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("2,"));

    let o = skillbench(&[
        "sweep",
        "--counts",
        "7",
        "--dataset",
        golden("tasks.jsonl").to_str().unwrap(),
        "--skills-dir",
        "data/demo-skills",
        "--backend",
        "heuristic",
    ]);
    assert_eq!(o.status.code(), Some(1), "hub smaller than requested count");
}
