//! Runs the `spe` binary against small hand-written inputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn spe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spe"))
        .args(args)
        .output()
        .expect("spawn spe")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn lm(index: u32, x: f64, y: f64, z: f64, v: f64) -> String {
    format!(r#"{{"index":{index},"x":{x},"y":{y},"z":{z},"visibility":{v}}}"#)
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn three_records(dir: &TempDir) -> PathBuf {
    let lines = [
        format!(
            r#"{{"image_id":"frontal","landmarks":[{},{}]}}"#,
            lm(11, 0.7, 0.5, 0.0, 1.0),
            lm(12, 0.3, 0.5, 0.0, 1.0)
        ),
        format!(
            r#"{{"image_id":"turned","source":"unit","landmarks":[{},{}]}}"#,
            lm(11, 0.65, 0.5, 0.3, 0.9),
            lm(12, 0.35, 0.5, 0.0, 0.9)
        ),
        format!(
            r#"{{"image_id":"cropped","landmarks":[{}]}}"#,
            lm(11, 0.7, 0.5, 0.0, 1.0)
        ),
    ];
    write(dir, "records.jsonl", &(lines.join("\n") + "\n"))
}

#[test]
fn score_writes_rows_in_input_order() {
    let dir = TempDir::new().unwrap();
    let input = three_records(&dir);
    let out = dir.path().join("scores.csv");
    let o = spe(&[
        "score",
        "--input",
        path_str(&input),
        "--output",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1], "frontal,1,1,1,0,0,ok");
    let turned: Vec<&str> = rows[2].split(',').collect();
    assert_eq!(turned[0], "turned");
    assert!((turned[1].parse::<f64>().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    assert!((turned[4].parse::<f64>().unwrap() - 45.0).abs() < 1e-9);
    assert_eq!(rows[3], "cropped,0,0,0,90,90,missing_landmarks");
}

#[test]
fn unreadable_input_exits_1_without_output() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("scores.csv");
    let o = spe(&[
        "score",
        "--input",
        "/nonexistent/records.jsonl",
        "--output",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn malformed_input_exits_2_without_output() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "bad.jsonl",
        "{\"image_id\":\"a\",\"landmarks\":[{\"index\":11}]}\n",
    );
    let out = dir.path().join("scores.csv");
    let o = spe(&[
        "score",
        "--input",
        path_str(&input),
        "--output",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    assert!(!out.exists());
    let leftovers: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn invalid_threshold_exits_2() {
    let dir = TempDir::new().unwrap();
    let input = three_records(&dir);
    let out = dir.path().join("scores.csv");
    let o = spe(&[
        "score",
        "--input",
        path_str(&input),
        "--output",
        path_str(&out),
        "--min-visibility",
        "1.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn perfect_agreement_report() {
    let dir = TempDir::new().unwrap();
    let input = three_records(&dir);
    let labels = write(
        &dir,
        "labels.csv",
        &format!(
            "image_id,label\nfrontal,1.0\nturned,{}\ncropped,0.0\nghost,0.5\n",
            std::f64::consts::FRAC_1_SQRT_2
        ),
    );
    let report = dir.path().join("report.json");
    let o = spe(&[
        "evaluate",
        "--input",
        path_str(&input),
        "--labels",
        path_str(&labels),
        "--output",
        path_str(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("off the 0.1 grid"));
    assert!(stderr.contains("1 label(s) without a record: ghost"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["n"], 3);
    assert!((v["pearson_r"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["fnr"].as_f64(), Some(0.0));
    assert_eq!(v["fpr"].as_f64(), Some(0.0));
}

#[test]
fn empty_join_exits_2() {
    let dir = TempDir::new().unwrap();
    let input = three_records(&dir);
    let labels = write(&dir, "labels.csv", "image_id,label\nother,1.0\n");
    let o = spe(&[
        "evaluate",
        "--input",
        path_str(&input),
        "--labels",
        path_str(&labels),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn edc_without_labels_flag_exits_2() {
    let dir = TempDir::new().unwrap();
    let input = three_records(&dir);
    let o = spe(&[
        "edc",
        "--input",
        path_str(&input),
        "--output",
        "/tmp/e.csv",
        "--oracle-output",
        "/tmp/o.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn edc_without_false_negatives_is_flat_zero() {
    let dir = TempDir::new().unwrap();
    let input = three_records(&dir);
    let labels = write(
        &dir,
        "labels.csv",
        "image_id,label\nfrontal,1.0\nturned,0.7\ncropped,0.0\n",
    );
    let emp = dir.path().join("emp.csv");
    let ora = dir.path().join("ora.csv");
    let chart = dir.path().join("edc.svg");
    let o = spe(&[
        "edc",
        "--input",
        path_str(&input),
        "--labels",
        path_str(&labels),
        "--output",
        path_str(&emp),
        "--oracle-output",
        path_str(&ora),
        "--chart",
        path_str(&chart),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for p in [&emp, &ora] {
        let text = fs::read_to_string(p).unwrap();
        let fnrs: Vec<&str> = text
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap())
            .collect();
        assert_eq!(fnrs, ["0", "0", "0"]);
    }
    assert!(fs::read_to_string(&chart).unwrap().starts_with("<svg"));
}

#[test]
fn render_rejects_malformed_and_empty_inputs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("chart.svg");
    let bad = write(&dir, "bad.csv", "not,a,curve\n");
    let empty_curve = write(
        &dir,
        "empty.csv",
        "discarded_count,discard_fraction,fnr_remaining\n",
    );
    let o = spe(&[
        "render",
        "edc",
        "--input",
        path_str(&bad),
        "--oracle",
        path_str(&bad),
        "--output",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = spe(&[
        "render",
        "edc",
        "--input",
        path_str(&empty_curve),
        "--oracle",
        path_str(&empty_curve),
        "--output",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = spe(&[
        "render",
        "edc",
        "--input",
        path_str(&empty_curve),
        "--output",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn synth_is_idempotent() {
    let dir = TempDir::new().unwrap();
    let run = |tag: &str| {
        let r = dir.path().join(format!("r{tag}.jsonl"));
        let l = dir.path().join(format!("l{tag}.csv"));
        let o = spe(&[
            "synth",
            "--seed",
            "5",
            "--count",
            "30",
            "--output",
            path_str(&r),
            "--labels",
            path_str(&l),
        ]);
        assert!(o.status.success());
        (fs::read(r).unwrap(), fs::read(l).unwrap())
    };
    assert_eq!(run("a"), run("b"));
    let o = spe(&[
        "synth", "--count", "0", "--output", "/tmp/x", "--labels", "/tmp/y",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
