use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use wordverify::calibration::ScoredAttempt;
use wordverify::corpus_io::{load_attempts, load_templates, AttemptRecord, TemplateRecord};
use wordverify::matcher::score;
use wordverify::{Combiner, Label, TemplateSet};

use crate::error::{CliError, Result};
use crate::source::{Clip, Engine};

/// Audio paths in a manifest are relative to the manifest's directory.
pub fn base_dir(manifest: &Path) -> PathBuf {
    match manifest.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    if threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))
}

pub struct Manifests {
    pub attempts: Vec<AttemptRecord>,
    pub attempts_dir: PathBuf,
    pub templates: Vec<TemplateRecord>,
    pub templates_dir: PathBuf,
}

impl Manifests {
    pub fn load(templates: &Path, attempts: &Path) -> Result<Self> {
        Ok(Self {
            attempts: load_attempts(attempts)?,
            attempts_dir: base_dir(attempts),
            templates: load_templates(templates)?,
            templates_dir: base_dir(templates),
        })
    }

    /// Fails on the first attempted word that has no template.
    pub fn check_coverage(&self) -> Result<()> {
        for a in &self.attempts {
            if !self.templates.iter().any(|t| t.target_word == a.target_word) {
                return Err(CliError::MissingTemplate(a.target_word.clone()));
            }
        }
        Ok(())
    }
}

/// Template posteriorgrams grouped by word, speakers in manifest order.
pub fn enroll(
    engine: &Engine,
    templates: &[TemplateRecord],
    dir: &Path,
    pool: &rayon::ThreadPool,
) -> Result<BTreeMap<String, TemplateSet>> {
    let pgs = pool.install(|| {
        templates
            .par_iter()
            .map(|t| engine.posteriorgram(&Clip::load(dir, &t.audio_path)?))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut sets: BTreeMap<String, TemplateSet> = BTreeMap::new();
    for (t, pg) in templates.iter().zip(pgs) {
        sets.entry(t.target_word.clone())
            .or_insert_with(|| TemplateSet {
                word: t.target_word.clone(),
                templates: Vec::new(),
            })
            .templates
            .push(pg);
    }
    Ok(sets)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRow {
    pub patient_id: String,
    pub target_word: String,
    pub distances: Vec<f64>,
    pub combined: f64,
    pub truth: Label,
    pub duration_s: f64,
}

impl ScoredRow {
    pub fn to_scored_attempt(&self) -> ScoredAttempt {
        ScoredAttempt {
            patient_id: self.patient_id.clone(),
            word: self.target_word.clone(),
            distance: self.combined,
            truth: self.truth,
        }
    }
}

/// Scores every attempt; the output follows manifest order whatever the
/// thread count.
pub fn score_attempts(
    engine: &Engine,
    manifests: &Manifests,
    sets: &BTreeMap<String, TemplateSet>,
    combiner: Combiner,
    pool: &rayon::ThreadPool,
) -> Result<Vec<ScoredRow>> {
    manifests.check_coverage()?;
    pool.install(|| {
        manifests
            .attempts
            .par_iter()
            .map(|a| {
                let clip = Clip::load(&manifests.attempts_dir, &a.audio_path)?;
                let pg = engine.posteriorgram(&clip)?;
                let set = &sets[&a.target_word];
                let (distances, combined) = score(&pg, set, combiner)?;
                Ok(ScoredRow {
                    patient_id: a.patient_id.clone(),
                    target_word: a.target_word.clone(),
                    distances,
                    combined,
                    truth: a.slt1_binary,
                    duration_s: clip.audio.duration_s(),
                })
            })
            .collect()
    })
}

pub const RESULTS_HEADER: [&str; 7] = [
    "patient_id",
    "target_word",
    "template_distances",
    "combined_distance",
    "threshold",
    "verdict",
    "ground_truth",
];

/// Reads the distances and labels back from a `verify` results.csv.
pub fn load_results(path: &Path) -> Result<Vec<ScoredAttempt>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let header = rdr.headers().map_err(|e| CliError::format(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != RESULTS_HEADER {
        return Err(CliError::format(path, "not a results.csv header"));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::format(path, e))?;
        let bad = |what: &str| CliError::format(path, format!("row {}: bad {what}", i + 1));
        out.push(ScoredAttempt {
            patient_id: rec[0].to_string(),
            word: rec[1].to_string(),
            distance: rec[3].parse().map_err(|_| bad("combined_distance"))?,
            truth: rec[6].parse().map_err(|_| bad("ground_truth"))?,
        });
    }
    Ok(out)
}
