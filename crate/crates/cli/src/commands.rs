use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use wordverify::calibration::{
    calibrate, cross_validate, roc, CalibrationResult, MetricSummaries, ScoredAttempt, Summary,
};
use wordverify::corpus_io::{
    load_attempts, load_predictions, load_templates, write_features, write_predictions,
    PredictionRow, PredictionTable,
};
use wordverify::matcher::{decide, score};
use wordverify::stats::{
    confusion, gwet_ac1, metrics, wilcoxon_signed_rank, ConfusionCounts, MetricsReport,
    SignificanceReport, BENCHMARK_LEVELS,
};
use wordverify::Label;

use crate::args::*;
use crate::error::{CliError, Result};
use crate::scoring::{enroll, load_results, pool, score_attempts, Manifests, ScoredRow, RESULTS_HEADER};
use crate::source::{Clip, Engine, Source};

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

struct CsvOut {
    path: PathBuf,
    w: csv::Writer<std::fs::File>,
}

impl CsvOut {
    fn create(path: PathBuf, header: &[&str]) -> Result<Self> {
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
        w.write_record(header).map_err(|e| CliError::io(&path, e))?;
        Ok(Self { path, w })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).map_err(|e| CliError::io(&self.path, e))
    }

    fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

fn write_json(path: PathBuf, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
}

fn open_source(s: &SourceArgs) -> Result<Source> {
    Source::open(s.model.as_deref(), s.synthetic.as_deref())
}

/// `audio/P1_w.wav` -> `audio__P1_w`.
fn flat_name(rel: &str) -> String {
    let stem = rel.strip_suffix(".wav").unwrap_or(rel);
    stem.replace(['/', '\\'], "__")
}

fn manifest_clips(templates: Option<&Path>, attempts: Option<&Path>) -> Result<Vec<(PathBuf, String)>> {
    if templates.is_none() && attempts.is_none() {
        return Err(CliError::Usage("give --templates and/or --attempts".into()));
    }
    let mut clips = Vec::new();
    if let Some(t) = templates {
        let dir = crate::scoring::base_dir(t);
        clips.extend(load_templates(t)?.into_iter().map(|r| (dir.clone(), r.audio_path)));
    }
    if let Some(a) = attempts {
        let dir = crate::scoring::base_dir(a);
        clips.extend(load_attempts(a)?.into_iter().map(|r| (dir.clone(), r.audio_path)));
    }
    Ok(clips)
}

pub fn extract(args: &ExtractArgs) -> Result<()> {
    let clips = manifest_clips(args.templates.as_deref(), args.attempts.as_deref())?;
    let dir = args.out_dir.join("features");
    create_dir(&dir)?;
    let config = wordverify::FrontendConfig::default();
    let mut index = CsvOut::create(args.out_dir.join("features.csv"), &["audio_path", "feature_file", "frames"])?;
    for (base, rel) in clips {
        let clip = Clip::load(&base, &rel)?;
        let f = wordverify::frontend::extract_features(&clip.audio, &config)?;
        let name = format!("features/{}.ft", flat_name(&rel));
        write_features(args.out_dir.join(&name), &f)?;
        index.row([rel, name, f.frames.len().to_string()])?;
    }
    index.finish()
}

pub fn infer(args: &InferArgs) -> Result<()> {
    let clips = manifest_clips(args.templates.as_deref(), args.attempts.as_deref())?;
    let engine = Engine::new(open_source(&args.source)?)
        .with_cache(Some(args.out_dir.join("cache")))
        .with_feature_dump(args.dump_features.then(|| args.out_dir.join("features")));
    create_dir(&args.out_dir.join("cache"))?;
    if args.dump_features {
        create_dir(&args.out_dir.join("features"))?;
    }
    let frames = pool(args.threads)?.install(|| {
        clips
            .par_iter()
            .map(|(base, rel)| {
                let clip = Clip::load(base, rel)?;
                let pg = engine.posteriorgram(&clip)?;
                let file = engine.cache_path(&clip).expect("cache enabled");
                Ok((rel.clone(), file, pg.len()))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut index = CsvOut::create(args.out_dir.join("posteriorgrams.csv"), &["audio_path", "cache_file", "frames"])?;
    for (rel, file, n) in frames {
        let name = file.strip_prefix(&args.out_dir).unwrap_or(&file).display().to_string();
        index.row([rel, name, n.to_string()])?;
    }
    index.finish()
}

pub fn enroll_cmd(args: &EnrollArgs) -> Result<()> {
    let records = load_templates(&args.templates)?;
    let dir = crate::scoring::base_dir(&args.templates);
    let engine = Engine::new(open_source(&args.source)?).with_cache(Some(args.out_dir.join("cache")));
    create_dir(&args.out_dir.join("cache"))?;
    let mut index = CsvOut::create(
        args.out_dir.join("enrolled.csv"),
        &["target_word", "speaker_id", "audio_path", "cache_file", "frames"],
    )?;
    for r in records {
        let clip = Clip::load(&dir, &r.audio_path)?;
        let pg = engine.posteriorgram(&clip)?;
        let file = engine.cache_path(&clip).expect("cache enabled");
        let name = file.strip_prefix(&args.out_dir).unwrap_or(&file).display().to_string();
        index.row([r.target_word, r.speaker_id, r.audio_path, name, pg.len().to_string()])?;
    }
    index.finish()
}

/// The subset of calibration.json that `verify` reads back.
#[derive(Debug, Deserialize)]
struct CalibrationFile {
    thresholds: BTreeMap<String, f64>,
}

enum Thresholds {
    Value(f64),
    PerPatient(BTreeMap<String, f64>),
}

impl Thresholds {
    fn for_patient(&self, p: &str) -> Result<f64> {
        match self {
            Thresholds::Value(t) => Ok(*t),
            Thresholds::PerPatient(m) => m.get(p).copied().ok_or_else(|| {
                wordverify::calibration::CalibrationError::MissingPatientData(p.to_string()).into()
            }),
        }
    }
}

fn metrics_json(c: &ConfusionCounts) -> serde_json::Value {
    let m = metrics(c);
    json!({
        "n": c.n(), "tp": c.tp, "fp": c.fp, "fn": c.fn_, "tn": c.tn,
        "accuracy": m.accuracy, "fp_rate": m.fp_rate, "fn_rate": m.fn_rate,
        "f1": m.f1, "pearson_r": m.pearson_r,
    })
}

pub fn verify(args: &VerifyArgs) -> Result<()> {
    let thresholds = match (args.threshold, &args.calibration) {
        (Some(t), None) => {
            if !(t > 0.0) {
                return Err(wordverify::matcher::MatchError::InvalidThreshold(t).into());
            }
            Thresholds::Value(t)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let file: CalibrationFile = serde_json::from_str(&text).map_err(|e| CliError::format(path, e))?;
            Thresholds::PerPatient(file.thresholds)
        }
        _ => {
            return Err(CliError::Usage(
                "exactly one of --threshold or --calibration is required".into(),
            ))
        }
    };
    let manifests = Manifests::load(&args.manifests.templates, &args.manifests.attempts)?;
    manifests.check_coverage()?;
    for a in &manifests.attempts {
        thresholds.for_patient(&a.patient_id)?;
    }
    create_dir(&args.out_dir.join("cache"))?;
    if args.dump_features {
        create_dir(&args.out_dir.join("features"))?;
    }
    let engine = Engine::new(open_source(&args.source)?)
        .with_cache(Some(args.out_dir.join("cache")))
        .with_feature_dump(args.dump_features.then(|| args.out_dir.join("features")));
    let pool = pool(args.threads)?;
    let sets = enroll(&engine, &manifests.templates, &manifests.templates_dir, &pool)?;
    let rows = score_attempts(&engine, &manifests, &sets, args.combiner, &pool)?;

    let mut results = CsvOut::create(args.out_dir.join("results.csv"), &RESULTS_HEADER)?;
    let mut pred_rows = Vec::with_capacity(rows.len());
    let mut pooled = ConfusionCounts::default();
    let mut per_patient: BTreeMap<String, ConfusionCounts> = BTreeMap::new();
    for r in &rows {
        let t = thresholds.for_patient(&r.patient_id)?;
        let verdict = decide(r.combined, t);
        let dists: Vec<String> = r.distances.iter().map(f64::to_string).collect();
        results.row([
            r.patient_id.clone(),
            r.target_word.clone(),
            dists.join(";"),
            r.combined.to_string(),
            t.to_string(),
            verdict.as_str().to_string(),
            r.truth.as_str().to_string(),
        ])?;
        pooled.add(r.truth, verdict);
        per_patient.entry(r.patient_id.clone()).or_default().add(r.truth, verdict);
        pred_rows.push(PredictionRow {
            patient_id: r.patient_id.clone(),
            target_word: r.target_word.clone(),
            ground_truth: r.truth,
            predictions: vec![verdict],
        });
    }
    results.finish()?;
    write_predictions(
        args.out_dir.join("predictions.csv"),
        &PredictionTable {
            systems: vec![args.system_name.clone()],
            rows: pred_rows,
        },
    )?;
    let patients: BTreeMap<&String, serde_json::Value> =
        per_patient.iter().map(|(p, c)| (p, metrics_json(c))).collect();
    write_json(
        args.out_dir.join("summary.json"),
        &json!({
            "system": args.system_name,
            "combiner": args.combiner.to_string(),
            "threshold_source": match thresholds { Thresholds::Value(_) => "value", Thresholds::PerPatient(_) => "calibration" },
            "source": engine.source_id(),
            "attempts": rows.len(),
            "pooled": metrics_json(&pooled),
            "patients": patients,
        }),
    )?;
    println!(
        "{} attempts, accuracy {:.4}",
        rows.len(),
        metrics(&pooled).accuracy
    );
    Ok(())
}

fn scored_input(input: &ScoreInput) -> Result<Vec<ScoredAttempt>> {
    if let Some(path) = &input.scores {
        return load_results(path);
    }
    let (Some(t), Some(a)) = (&input.templates, &input.attempts) else {
        return Err(CliError::Usage(
            "give --scores, or --templates and --attempts with a source".into(),
        ));
    };
    let manifests = Manifests::load(t, a)?;
    let engine = Engine::new(Source::open(input.model.as_deref(), input.synthetic.as_deref())?);
    let pool = pool(input.threads)?;
    let sets = enroll(&engine, &manifests.templates, &manifests.templates_dir, &pool)?;
    let rows = score_attempts(&engine, &manifests, &sets, input.combiner, &pool)?;
    Ok(rows.iter().map(ScoredRow::to_scored_attempt).collect())
}

fn by_patient(attempts: &[ScoredAttempt]) -> BTreeMap<String, Vec<ScoredAttempt>> {
    let mut m: BTreeMap<String, Vec<ScoredAttempt>> = BTreeMap::new();
    for a in attempts {
        m.entry(a.patient_id.clone()).or_default().push(a.clone());
    }
    m
}

#[derive(Debug, Serialize)]
struct CalibrationReport<'a> {
    mode: String,
    objective: &'static str,
    objective_value: f64,
    in_sample: bool,
    thresholds: &'a BTreeMap<String, f64>,
    sweep: Vec<(f64, f64)>,
    patient_sweeps: BTreeMap<&'a String, Vec<(f64, f64)>>,
    auc: BTreeMap<String, f64>,
}

pub fn calibrate_cmd(args: &CalibrateArgs) -> Result<()> {
    let attempts = scored_input(&args.input)?;
    create_dir(&args.out_dir)?;
    let result: CalibrationResult = calibrate(&attempts, args.mode)?;

    let mut rocs = CsvOut::create(args.out_dir.join("roc.csv"), &["patient_id", "fpr", "tpr"])?;
    let mut auc = BTreeMap::new();
    let mut groups: Vec<(String, Vec<ScoredAttempt>)> = by_patient(&attempts).into_iter().collect();
    groups.push(("All".to_string(), attempts.clone()));
    for (p, group) in &groups {
        // Single-class groups have no ROC.
        if let Ok(curve) = roc(group) {
            for (x, y) in &curve.points {
                rocs.row([p.clone(), x.to_string(), y.to_string()])?;
            }
            auc.insert(p.clone(), curve.auc);
        }
    }
    rocs.finish()?;

    let pairs = |s: &[wordverify::calibration::SweepPoint]| -> Vec<(f64, f64)> {
        s.iter().map(|p| (p.threshold, p.pearson_r)).collect()
    };
    write_json(
        args.out_dir.join("calibration.json"),
        &CalibrationReport {
            mode: result.mode.to_string(),
            objective: "pearson_r",
            objective_value: result.objective_value,
            in_sample: result.in_sample,
            thresholds: &result.thresholds,
            sweep: pairs(&result.sweep),
            patient_sweeps: result.patient_sweeps.iter().map(|(p, s)| (p, pairs(s))).collect(),
            auc,
        },
    )?;
    for (p, t) in &result.thresholds {
        println!("{p}\t{t}");
    }
    Ok(())
}

pub const CV_HEADER: [&str; 7] = [
    "Patient",
    "Statistic",
    "Accuracy",
    "False Positives",
    "False Negatives",
    "F1-Score",
    "Pearson's r",
];

fn summary_row(patient: &str, stat: &str, s: &MetricSummaries, pick: fn(&Summary) -> f64) -> Vec<String> {
    let mut row = vec![patient.to_string(), stat.to_string()];
    for m in [&s.accuracy, &s.fp_rate, &s.fn_rate, &s.f1, &s.pearson_r] {
        row.push(pick(m).to_string());
    }
    row
}

const STATISTICS: [(&str, fn(&Summary) -> f64); 5] = [
    ("Mean", |s| s.mean),
    ("SD", |s| s.sd),
    ("Min", |s| s.min),
    ("Max", |s| s.max),
    ("Range", |s| s.range),
];

pub fn cv(args: &CvArgs) -> Result<()> {
    let attempts = scored_input(&args.input)?;
    create_dir(&args.out_dir)?;
    let mut table = CsvOut::create(args.out_dir.join("cv.csv"), &CV_HEADER)?;
    let mut folds = CsvOut::create(
        args.out_dir.join("folds.csv"),
        &["patient_id", "fold", "threshold", "test_size", "accuracy", "fp_rate", "fn_rate", "f1", "pearson_r"],
    )?;
    let mut means: Vec<MetricsReport> = Vec::new();
    let mut report = BTreeMap::new();
    for (p, group) in by_patient(&attempts) {
        let cv = cross_validate(&group, args.folds, args.seed, args.stratified)?;
        for (stat, pick) in &STATISTICS[..2] {
            table.row(summary_row(&p, stat, &cv.summary, *pick))?;
        }
        for f in &cv.folds {
            let m = &f.metrics;
            folds.row([
                p.clone(),
                f.fold.to_string(),
                f.threshold.to_string(),
                f.test_size.to_string(),
                m.accuracy.to_string(),
                m.fp_rate.to_string(),
                m.fn_rate.to_string(),
                m.f1.to_string(),
                m.pearson_r.to_string(),
            ])?;
        }
        let s = &cv.summary;
        means.push(MetricsReport {
            accuracy: s.accuracy.mean,
            fp_rate: s.fp_rate.mean,
            fn_rate: s.fn_rate.mean,
            f1: s.f1.mean,
            pearson_r: s.pearson_r.mean,
        });
        report.insert(p, cv);
    }
    // Across-patient rows summarise the per-patient means.
    let across = MetricSummaries::of(&means);
    for (stat, pick) in STATISTICS {
        table.row(summary_row("All", stat, &across, pick))?;
    }
    table.finish()?;
    folds.finish()?;
    write_json(
        args.out_dir.join("cv.json"),
        &json!({ "folds": args.folds, "seed": args.seed, "stratified": args.stratified,
                 "patients": report, "across_patients": across }),
    )
}

pub const METRICS_HEADER: [&str; 8] = [
    "System",
    "Patient",
    "N",
    "Accuracy",
    "False Positives",
    "False Negatives",
    "F1-Score",
    "Pearson's r",
];

pub fn stats(args: &StatsArgs) -> Result<()> {
    let table = load_predictions(&args.predictions)?;
    if table.rows.is_empty() {
        return Err(wordverify::stats::StatsError::Empty.into());
    }
    create_dir(&args.out_dir)?;
    let mut groups = table.by_patient();
    groups.push(("All".to_string(), table.clone()));

    let mut metrics_out = CsvOut::create(args.out_dir.join("metrics.csv"), &METRICS_HEADER)?;
    let mut agreement_out = CsvOut::create(
        args.out_dir.join("agreement.csv"),
        &["Agreement between", "Patient", "PA", "Gwet's AC1", "StdErr", "CI low", "CI high", "Level of Agreement", "Level"],
    )?;
    let mut levels_header = vec!["Agreement between".to_string()];
    levels_header.extend(groups.iter().map(|g| g.0.clone()));
    let levels_header: Vec<&str> = levels_header.iter().map(String::as_str).collect();
    let mut levels_out = CsvOut::create(args.out_dir.join("agreement_levels.csv"), &levels_header)?;
    let mut membership_out = CsvOut::create(
        args.out_dir.join("agreement_membership.csv"),
        &["Agreement between", "Patient", "Level", "Name", "Membership", "Cumulative"],
    )?;

    let mut json_systems = BTreeMap::new();
    for (s, name) in table.systems.iter().enumerate() {
        let pair = format!("{name} & ground_truth");
        let mut level_row = vec![pair.clone()];
        let mut per_group = BTreeMap::new();
        for (p, g) in &groups {
            let truth = g.truth();
            let pred = g.column(s);
            let c = confusion(&truth, &pred)?;
            let m = metrics(&c);
            metrics_out.row([
                name.clone(),
                p.clone(),
                c.n().to_string(),
                m.accuracy.to_string(),
                m.fp_rate.to_string(),
                m.fn_rate.to_string(),
                m.f1.to_string(),
                m.pearson_r.to_string(),
            ])?;
            let a = gwet_ac1(&pred, &truth)?;
            agreement_out.row([
                pair.clone(),
                p.clone(),
                a.pa.to_string(),
                a.ac1.to_string(),
                a.std_err.to_string(),
                a.ci95.0.to_string(),
                a.ci95.1.to_string(),
                a.level_name.clone(),
                a.level_code.to_string(),
            ])?;
            for (i, lvl) in BENCHMARK_LEVELS.iter().enumerate() {
                membership_out.row([
                    pair.clone(),
                    p.clone(),
                    lvl.code.to_string(),
                    lvl.name.to_string(),
                    a.membership[i].to_string(),
                    a.cumulative[i].to_string(),
                ])?;
            }
            level_row.push(a.level_code.to_string());
            per_group.insert(p.clone(), json!({ "metrics": m, "counts": c, "agreement": a }));
        }
        levels_out.row(level_row)?;
        json_systems.insert(name.clone(), per_group);
    }
    metrics_out.finish()?;
    agreement_out.finish()?;
    levels_out.finish()?;
    membership_out.finish()?;

    let mut significance = BTreeMap::new();
    if table.systems.len() >= 2 {
        let mut sig_out = CsvOut::create(
            args.out_dir.join("significance.csv"),
            &["Patient", "Test", "Comparison", "Statistic", "df", "p", "Holm p", "Significance"],
        )?;
        for (p, g) in &groups {
            // Outcome per item and system: did the system match the ground truth?
            let matrix: Vec<Vec<bool>> = g
                .rows
                .iter()
                .map(|r| r.predictions.iter().map(|&x| x == r.ground_truth).collect())
                .collect();
            let rep = SignificanceReport::compute(&matrix, &table.systems)?;
            let q = &rep.cochran;
            sig_out.row([
                p.clone(),
                "Cochran's Q".into(),
                table.systems.join(" / "),
                q.q.to_string(),
                q.df.to_string(),
                q.p.to_string(),
                String::new(),
                wordverify::stats::Stars::from_p(q.p).to_string(),
            ])?;
            for c in &rep.pairwise {
                sig_out.row([
                    p.clone(),
                    "Dunn".into(),
                    format!("{} vs {}", c.system_a, c.system_b),
                    c.z.to_string(),
                    String::new(),
                    c.raw_p.to_string(),
                    c.holm_p.to_string(),
                    c.stars.to_string(),
                ])?;
            }
            significance.insert(p.clone(), rep);
        }
        sig_out.finish()?;
    }
    write_json(
        args.out_dir.join("stats.json"),
        &json!({ "systems": json_systems, "significance": significance }),
    )
}

/// Per-attempt latency and its per-speech-second derivation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub per_attempt_s: Vec<f64>,
    pub per_speech_second_s: Vec<f64>,
    pub per_attempt: Summary,
    pub per_speech_second: Summary,
}

impl LatencyReport {
    pub fn new(per_attempt_s: Vec<f64>, durations_s: &[f64]) -> Self {
        let per_speech_second_s: Vec<f64> = per_attempt_s
            .iter()
            .zip(durations_s)
            .map(|(t, d)| t / d)
            .collect();
        Self {
            per_attempt: Summary::of(&per_attempt_s),
            per_speech_second: Summary::of(&per_speech_second_s),
            per_attempt_s,
            per_speech_second_s,
        }
    }
}

pub const TIMINGS_HEADER: [&str; 6] = [
    "repeat",
    "patient_id",
    "target_word",
    "duration_s",
    "per_attempt_s",
    "per_speech_second_s",
];

fn load_timings(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::format(path, e))?;
        out.push(rec[4].parse().map_err(|e| CliError::format(path, e))?);
    }
    Ok(out)
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    if args.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    let manifests = Manifests::load(&args.manifests.templates, &args.manifests.attempts)?;
    manifests.check_coverage()?;
    let engine = Engine::new(open_source(&args.source)?);
    // Templates are enrolled offline; only the attempt path is timed.
    let sets = enroll(&engine, &manifests.templates, &manifests.templates_dir, &pool(1)?)?;
    let clips = manifests
        .attempts
        .iter()
        .map(|a| Clip::load(&manifests.attempts_dir, &a.audio_path))
        .collect::<Result<Vec<_>>>()?;

    let run_one = |clip: &Clip, word: &str| -> Result<Label> {
        let pg = engine.compute(clip)?;
        let (_, combined) = score(&pg, &sets[word], args.combiner)?;
        Ok(decide(combined, args.threshold))
    };
    for _ in 0..args.warmup {
        for (a, clip) in manifests.attempts.iter().zip(&clips) {
            std::hint::black_box(run_one(clip, &a.target_word)?);
        }
    }
    create_dir(&args.out_dir)?;
    let mut timings = CsvOut::create(args.out_dir.join("timings.csv"), &TIMINGS_HEADER)?;
    let mut per_attempt = Vec::new();
    let mut durations = Vec::new();
    for r in 0..args.repeats {
        for (a, clip) in manifests.attempts.iter().zip(&clips) {
            let t0 = Instant::now();
            std::hint::black_box(run_one(clip, &a.target_word)?);
            let dt = t0.elapsed().as_secs_f64();
            let dur = clip.audio.duration_s();
            timings.row([
                r.to_string(),
                a.patient_id.clone(),
                a.target_word.clone(),
                dur.to_string(),
                dt.to_string(),
                (dt / dur).to_string(),
            ])?;
            per_attempt.push(dt);
            durations.push(dur);
        }
    }
    timings.finish()?;
    let report = LatencyReport::new(per_attempt, &durations);

    let mut table = CsvOut::create(
        args.out_dir.join("latency.csv"),
        &["Statistic", "Time per attempt (s)", "Time per speech second (s)"],
    )?;
    for (stat, pick) in STATISTICS {
        table.row([
            stat.to_string(),
            pick(&report.per_attempt).to_string(),
            pick(&report.per_speech_second).to_string(),
        ])?;
    }
    table.finish()?;
    write_json(args.out_dir.join("latency.json"), &report)?;

    if let Some(other) = &args.compare {
        let theirs = load_timings(other)?;
        let w = wilcoxon_signed_rank(&report.per_attempt_s, &theirs)?;
        let mean_theirs = theirs.iter().sum::<f64>() / theirs.len() as f64;
        write_json(
            args.out_dir.join("wilcoxon.json"),
            &json!({
                "n": theirs.len(),
                "statistic": w.statistic,
                "z": w.z,
                "p": w.p,
                "mean_ratio": mean_theirs / report.per_attempt.mean,
            }),
        )?;
    }
    println!(
        "per attempt {:.6} s (sd {:.6}), per speech second {:.6} s",
        report.per_attempt.mean, report.per_attempt.sd, report.per_speech_second.mean
    );
    Ok(())
}
