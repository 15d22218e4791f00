use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wordverify::corpus_io::{load_attempts, load_predictions, read_features, read_posteriorgrams};
use wordverify_cli::commands::LatencyReport;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wordverify"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &'static str {
    path.to_str().unwrap().to_owned().leak()
}

struct Corpus {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

impl Corpus {
    fn new(patients: &str, words: &str) -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        ok(&[
            "synth", "--out-dir", p(&root.join("corpus")), "--seed", "21",
            "--patients", patients, "--words", words,
            "--model-out", p(&root.join("model.bin")),
        ]);
        Self { _tmp: tmp, root }
    }

    fn file(&self, name: &str) -> PathBuf {
        self.root.join("corpus").join(name)
    }

    fn out(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn verify(&self, out: &str, extra: &[&str]) -> PathBuf {
        let dir = self.out(out);
        let mut args = vec![
            "verify",
            "--synthetic", p(&self.file("synthetic.json")),
            "--templates", p(&self.file("templates.csv")),
            "--attempts", p(&self.file("attempts.csv")),
            "--out-dir", p(&dir),
        ];
        args.extend_from_slice(extra);
        ok(&args);
        dir
    }
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn cloned_attempts_verify_perfectly_and_deterministically() {
    let c = Corpus::new("1", "30");
    let a = c.verify("a", &["--threshold", "0.5"]);
    let b = c.verify("b", &["--threshold", "0.5", "--threads", "4"]);
    for f in ["results.csv", "summary.json", "predictions.csv"] {
        assert_eq!(read(a.join(f)), read(b.join(f)).replace(p(&b), p(&a)), "{f}");
    }
    // A second run reads the posteriorgram cache and must not change a byte.
    let again = c.verify("a", &["--threshold", "0.5"]);
    assert_eq!(read(again.join("results.csv")), read(b.join("results.csv")));

    let summary: serde_json::Value = serde_json::from_str(&read(a.join("summary.json"))).unwrap();
    assert_eq!(summary["pooled"]["accuracy"], 1.0);
    assert_eq!(summary["attempts"], 30);

    let table = load_predictions(a.join("predictions.csv")).unwrap();
    assert_eq!(table.rows.len(), 30);
    assert_eq!(table.systems, ["system"]);
}

#[test]
fn one_row_per_attempt_for_a_full_session() {
    let c = Corpus::new("1", "220");
    assert_eq!(load_attempts(c.file("attempts.csv")).unwrap().len(), 220);
    let dir = c.verify("v", &["--threshold", "0.5"]);
    let results = read(dir.join("results.csv"));
    let mut lines = results.lines();
    assert_eq!(
        lines.next(),
        Some("patient_id,target_word,template_distances,combined_distance,threshold,verdict,ground_truth")
    );
    assert_eq!(lines.count(), 220);
}

#[test]
fn missing_template_is_reported() {
    let c = Corpus::new("1", "5");
    let templates = read(c.file("templates.csv"));
    let kept: Vec<&str> = templates.lines().filter(|l| !l.starts_with("word002")).collect();
    std::fs::write(c.file("templates.csv"), kept.join("\n") + "\n").unwrap();
    let out = bin(&[
        "verify", "--synthetic", p(&c.file("synthetic.json")),
        "--templates", p(&c.file("templates.csv")), "--attempts", p(&c.file("attempts.csv")),
        "--threshold", "0.5", "--out-dir", p(&c.out("v")),
    ]);
    assert_eq!(out.status.code(), Some(15));
    assert!(String::from_utf8_lossy(&out.stderr).contains("word002"));
}

#[test]
fn threshold_source_must_be_unique() {
    let c = Corpus::new("1", "3");
    let common = [
        "verify", "--synthetic", p(&c.file("synthetic.json")),
        "--templates", p(&c.file("templates.csv")), "--attempts", p(&c.file("attempts.csv")),
        "--out-dir", p(&c.out("v")),
    ];
    assert_eq!(bin(&common).status.code(), Some(2));
    let mut both = common.to_vec();
    both.extend(["--threshold", "0.5", "--calibration", "x.json"]);
    assert_eq!(bin(&both).status.code(), Some(2));
    let mut no_source = vec!["verify", "--threshold", "0.5"];
    no_source.extend(&common[3..]);
    assert_eq!(bin(&no_source).status.code(), Some(2));
}

#[test]
fn model_source_extract_infer_enroll() {
    let c = Corpus::new("1", "4");
    let model = c.out("model.bin");
    ok(&["extract", "--attempts", p(&c.file("attempts.csv")), "--out-dir", p(&c.out("ex"))]);
    let index = read(c.out("ex").join("features.csv"));
    assert_eq!(index.lines().count(), 5);
    let first: Vec<&str> = index.lines().nth(1).unwrap().split(',').collect();
    let feats = read_features(c.out("ex").join(first[1])).unwrap();
    assert_eq!(feats.frames.len().to_string(), first[2]);

    ok(&[
        "infer", "--model", p(&model), "--attempts", p(&c.file("attempts.csv")),
        "--out-dir", p(&c.out("inf")), "--dump-features",
    ]);
    let index = read(c.out("inf").join("posteriorgrams.csv"));
    let row: Vec<&str> = index.lines().nth(1).unwrap().split(',').collect();
    let pg = read_posteriorgrams(c.out("inf").join(row[1]), "m").unwrap();
    assert_eq!(pg.len().to_string(), row[2]);
    assert!(pg.max_stochastic_error() < 1e-5);
    assert!(c.out("inf").join("features").read_dir().unwrap().count() > 0);

    ok(&["enroll", "--model", p(&model), "--templates", p(&c.file("templates.csv")), "--out-dir", p(&c.out("en"))]);
    assert_eq!(read(c.out("en").join("enrolled.csv")).lines().count(), 9);

    let dir = c.out("mv");
    ok(&[
        "verify", "--model", p(&model), "--templates", p(&c.file("templates.csv")),
        "--attempts", p(&c.file("attempts.csv")), "--threshold", "2.0", "--out-dir", p(&dir),
    ]);
    assert_eq!(read(dir.join("results.csv")).lines().count(), 5);
}

#[test]
fn corrupt_model_has_model_exit_code() {
    let c = Corpus::new("1", "2");
    std::fs::write(c.out("bad.bin"), b"NOTAMODEL").unwrap();
    let out = bin(&[
        "verify", "--model", p(&c.out("bad.bin")), "--templates", p(&c.file("templates.csv")),
        "--attempts", p(&c.file("attempts.csv")), "--threshold", "1", "--out-dir", p(&c.out("v")),
    ]);
    assert_eq!(out.status.code(), Some(12));
}

fn write_results(path: &Path, rows: &[(&str, f64, &str)]) {
    let mut text = String::from(
        "patient_id,target_word,template_distances,combined_distance,threshold,verdict,ground_truth\n",
    );
    for (i, (pid, d, truth)) in rows.iter().enumerate() {
        text += &format!("{pid},w{i},{d},{d},1,correct,{truth}\n");
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn fixed_and_adapted_calibration() {
    let tmp = tempfile::tempdir().unwrap();
    let scores = tmp.path().join("results.csv");
    let mut rows = Vec::new();
    for i in 0..30 {
        let j = i as f64 * 0.001;
        rows.push(("P1", 0.8 + j, "correct"));
        rows.push(("P1", 1.0 + j, "incorrect"));
        rows.push(("P4", 0.2 + j, "correct"));
        rows.push(("P4", 0.4 + j, "incorrect"));
    }
    rows.extend((0..20).map(|i| ("P1", 0.7 + i as f64 * 0.001, "correct")));
    write_results(&scores, &rows);

    let thresholds = |mode: &str| -> serde_json::Value {
        let out = tmp.path().join(mode);
        ok(&["calibrate", "--scores", p(&scores), "--mode", mode, "--out-dir", p(&out)]);
        let v: serde_json::Value = serde_json::from_str(&read(out.join("calibration.json"))).unwrap();
        assert_eq!(v["objective"], "pearson_r");
        assert_eq!(v["mode"], mode);
        assert!(read(out.join("roc.csv")).lines().count() > 3);
        v["thresholds"].clone()
    };
    let fixed = thresholds("fixed");
    let adapted = thresholds("adapted");
    assert_eq!(fixed["P1"], fixed["P4"]);
    assert_ne!(adapted["P1"], adapted["P4"]);
    assert!(adapted["P4"].as_f64().unwrap() < 0.4 && adapted["P4"].as_f64().unwrap() > 0.23);
}

#[test]
fn cv_on_separable_patient() {
    let tmp = tempfile::tempdir().unwrap();
    let scores = tmp.path().join("results.csv");
    let rows: Vec<(&str, f64, &str)> = (0..40)
        .map(|i| if i % 2 == 0 { ("P1", 0.3 + i as f64 * 0.001, "correct") } else { ("P1", 0.9, "incorrect") })
        .collect();
    write_results(&scores, &rows);
    let out = tmp.path().join("cv");
    ok(&["cv", "--scores", p(&scores), "--folds", "10", "--seed", "3", "--out-dir", p(&out)]);
    let text = read(out.join("cv.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "Patient,Statistic,Accuracy,False Positives,False Negatives,F1-Score,Pearson's r");
    assert_eq!(lines[1], "P1,Mean,1,0,0,1,1");
    assert_eq!(lines[2], "P1,SD,0,0,0,0,0");
    assert_eq!(read(out.join("folds.csv")).lines().count(), 11);
    // Folds need a seed.
    assert_eq!(bin(&["cv", "--scores", p(&scores), "--out-dir", p(&out)]).status.code(), Some(2));
}

#[test]
fn stats_with_identical_systems() {
    let tmp = tempfile::tempdir().unwrap();
    let preds = tmp.path().join("predictions.csv");
    let mut text = String::from("patient_id,target_word,ground_truth,fixed,adapted\n");
    for i in 0..40 {
        let truth = if i % 3 == 0 { "incorrect" } else { "correct" };
        let sys = if i % 5 == 0 { "incorrect" } else { "correct" };
        text += &format!("P{},w{i},{truth},{sys},{sys}\n", 1 + i % 2);
    }
    std::fs::write(&preds, text).unwrap();
    let out = tmp.path().join("st");
    ok(&["stats", "--predictions", p(&preds), "--out-dir", p(&out)]);

    let sig = read(out.join("significance.csv"));
    let mut rdr = csv::Reader::from_reader(sig.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(&r[7], "NS");
        if &r[1] == "Cochran's Q" {
            assert_eq!(&r[5], "1");
        }
    }
    let levels = read(out.join("agreement_levels.csv"));
    assert!(levels.starts_with("Agreement between,P1,P2,All\n"));
    assert_eq!(levels.lines().count(), 3);
    assert_eq!(read(out.join("metrics.csv")).lines().count(), 7);
    let membership = read(out.join("agreement_membership.csv"));
    assert_eq!(membership.lines().count(), 1 + 2 * 3 * 6);
    let json: serde_json::Value = serde_json::from_str(&read(out.join("stats.json"))).unwrap();
    assert_eq!(json["significance"]["All"]["cochran"]["p"], 1.0);
}

#[test]
fn bench_report_and_comparison() {
    let c = Corpus::new("1", "5");
    let run = |out: &str, extra: &[&str]| -> PathBuf {
        let dir = c.out(out);
        let mut args = vec![
            "bench", "--synthetic", p(&c.file("synthetic.json")),
            "--templates", p(&c.file("templates.csv")),
            "--attempts", p(&c.file("attempts.csv")),
            "--repeats", "10", "--warmup", "1", "--out-dir", p(&dir),
        ];
        args.extend_from_slice(extra);
        ok(&args);
        dir
    };
    let a = run("b1", &[]);
    let report: LatencyReport = serde_json::from_str(&read(a.join("latency.json"))).unwrap();
    assert_eq!(report.per_attempt_s.len(), 50);
    let s = report.per_attempt;
    assert!(s.min <= s.mean && s.mean <= s.max);
    assert_eq!(s.range, s.max - s.min);

    let timings = a.join("timings.csv");
    let b = run("b2", &["--compare", p(&timings)]);
    let w: serde_json::Value = serde_json::from_str(&read(b.join("wilcoxon.json"))).unwrap();
    let pval = w["p"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&pval));
    assert_eq!(w["n"], 50);
}

#[test]
fn per_speech_second_arithmetic() {
    let r = LatencyReport::new(vec![0.8], &[2.0]);
    assert!((r.per_speech_second_s[0] - 0.4).abs() < 1e-12);
}

#[test]
fn synth_is_reproducible() {
    let a = Corpus::new("2", "6");
    let b = Corpus::new("2", "6");
    for f in ["attempts.csv", "templates.csv", "synthetic.json", "audio/P2_word003.wav"] {
        assert_eq!(std::fs::read(a.file(f)).unwrap(), std::fs::read(b.file(f)).unwrap(), "{f}");
    }
    assert_eq!(std::fs::read(a.out("model.bin")).unwrap(), std::fs::read(b.out("model.bin")).unwrap());
}
