use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Binary naming verdict. `Correct` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Correct,
    Incorrect,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Correct => "correct",
            Label::Incorrect => "incorrect",
        }
    }

    pub fn is_correct(self) -> bool {
        self == Label::Correct
    }

    pub fn from_bool(correct: bool) -> Self {
        if correct {
            Label::Correct
        } else {
            Label::Incorrect
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "correct" => Ok(Label::Correct),
            "incorrect" => Ok(Label::Incorrect),
            other => Err(format!("expected correct|incorrect, got {other:?}")),
        }
    }
}

/// Six-way therapist scoring of a naming attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    Correct,
    NoResponse,
    Filler,
    PhonologicalError,
    Circumlocution,
    Other,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Correct,
        Category::NoResponse,
        Category::Filler,
        Category::PhonologicalError,
        Category::Circumlocution,
        Category::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Correct => "Correct",
            Category::NoResponse => "No Response",
            Category::Filler => "Filler",
            Category::PhonologicalError => "Phonological Error",
            Category::Circumlocution => "Circumlocution",
            Category::Other => "Other",
        }
    }

    /// Accepts the display names and their snake/camel-case spellings.
    pub fn parse(s: &str) -> Option<Self> {
        let key: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
            .flat_map(char::to_lowercase)
            .collect();
        Some(match key.as_str() {
            "correct" => Category::Correct,
            "noresponse" => Category::NoResponse,
            "filler" => Category::Filler,
            "phonologicalerror" => Category::PhonologicalError,
            "circumlocution" => Category::Circumlocution,
            "other" => Category::Other,
            _ => return None,
        })
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Collapses the six scoring categories to the binary ground truth.
pub fn relabel_binary(category: Category) -> Label {
    match category {
        Category::Correct => Label::Correct,
        Category::NoResponse
        | Category::Filler
        | Category::PhonologicalError
        | Category::Circumlocution
        | Category::Other => Label::Incorrect,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub patient_id: String,
    pub target_word: String,
    pub audio_path: String,
    pub slt1_category: Category,
    pub slt1_binary: Label,
    pub slt2_binary: Option<Label>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateRecord {
    pub target_word: String,
    pub speaker_id: String,
    pub audio_path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub patient_id: String,
    pub target_word: String,
    pub ground_truth: Label,
    /// One verdict per system, in `PredictionTable::systems` order.
    pub predictions: Vec<Label>,
}

/// Ground truth plus the matched binary output of every evaluated system.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PredictionTable {
    pub systems: Vec<String>,
    pub rows: Vec<PredictionRow>,
}

impl PredictionTable {
    pub fn system_index(&self, name: &str) -> Option<usize> {
        self.systems.iter().position(|s| s == name)
    }

    /// Column for one system.
    pub fn column(&self, system: usize) -> Vec<Label> {
        self.rows.iter().map(|r| r.predictions[system]).collect()
    }

    pub fn truth(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.ground_truth).collect()
    }

    /// Rows grouped by patient, preserving first-seen patient order.
    pub fn by_patient(&self) -> Vec<(String, PredictionTable)> {
        let mut order: Vec<String> = Vec::new();
        let mut groups: BTreeMap<String, Vec<PredictionRow>> = BTreeMap::new();
        for row in &self.rows {
            if !groups.contains_key(&row.patient_id) {
                order.push(row.patient_id.clone());
            }
            groups
                .entry(row.patient_id.clone())
                .or_default()
                .push(row.clone());
        }
        order
            .into_iter()
            .map(|p| {
                let rows = groups.remove(&p).unwrap_or_default();
                (
                    p,
                    PredictionTable {
                        systems: self.systems.clone(),
                        rows,
                    },
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifestKind {
    Attempts,
    Templates,
    Predictions,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Manifest {
    Attempts(Vec<AttemptRecord>),
    Templates(Vec<TemplateRecord>),
    Predictions(PredictionTable),
}

pub const ATTEMPTS_HEADER: [&str; 6] = [
    "patient_id",
    "target_word",
    "audio_path",
    "slt1_category",
    "slt1_binary",
    "slt2_binary",
];
pub const TEMPLATES_HEADER: [&str; 3] = ["target_word", "speaker_id", "audio_path"];
pub const PREDICTIONS_FIXED: [&str; 3] = ["patient_id", "target_word", "ground_truth"];

pub fn load_manifest(path: impl AsRef<Path>, kind: ManifestKind) -> Result<Manifest, CorpusError> {
    Ok(match kind {
        ManifestKind::Attempts => Manifest::Attempts(load_attempts(path)?),
        ManifestKind::Templates => Manifest::Templates(load_templates(path)?),
        ManifestKind::Predictions => Manifest::Predictions(load_predictions(path)?),
    })
}

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>, CorpusError> {
    let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn headers(reader: &mut csv::Reader<std::fs::File>) -> Result<Vec<String>, CorpusError> {
    let h = reader
        .headers()
        .map_err(|e| CorpusError::SchemaMismatch(e.to_string()))?;
    Ok(h.iter().map(str::to_string).collect())
}

fn expect_header(found: &[String], expected: &[&str]) -> Result<(), CorpusError> {
    if found.len() != expected.len() || found.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(CorpusError::SchemaMismatch(format!(
            "expected header {}, found {}",
            expected.join(","),
            found.join(",")
        )));
    }
    Ok(())
}

fn records(
    reader: &mut csv::Reader<std::fs::File>,
) -> impl Iterator<Item = (usize, Result<csv::StringRecord, CorpusError>)> + '_ {
    reader.records().enumerate().map(|(i, r)| {
        let row = i + 1;
        (
            row,
            r.map_err(|e| CorpusError::SchemaMismatch(format!("row {row}: {e}"))),
        )
    })
}

fn label_at(row: usize, column: &str, value: &str) -> Result<Label, CorpusError> {
    value
        .parse()
        .map_err(|e| CorpusError::SchemaMismatch(format!("row {row}, column {column}: {e}")))
}

pub fn load_attempts(path: impl AsRef<Path>) -> Result<Vec<AttemptRecord>, CorpusError> {
    let mut reader = open(path.as_ref())?;
    expect_header(&headers(&mut reader)?, &ATTEMPTS_HEADER)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (row, rec) in records(&mut reader) {
        let rec = rec?;
        let category_raw = &rec[3];
        let slt1_category = Category::parse(category_raw).ok_or(CorpusError::UnknownCategory {
            row,
            value: category_raw.to_string(),
        })?;
        let slt1_binary = label_at(row, "slt1_binary", &rec[4])?;
        if relabel_binary(slt1_category) != slt1_binary {
            return Err(CorpusError::SchemaMismatch(format!(
                "row {row}: category {slt1_category} is inconsistent with slt1_binary {slt1_binary}"
            )));
        }
        let slt2_binary = if rec[5].is_empty() {
            None
        } else {
            Some(label_at(row, "slt2_binary", &rec[5])?)
        };
        let key = (rec[0].to_string(), rec[1].to_string());
        if !seen.insert(key.clone()) {
            return Err(CorpusError::DuplicateKey {
                row,
                key: format!("{}/{}", key.0, key.1),
            });
        }
        out.push(AttemptRecord {
            patient_id: key.0,
            target_word: key.1,
            audio_path: rec[2].to_string(),
            slt1_category,
            slt1_binary,
            slt2_binary,
        });
    }
    Ok(out)
}

pub fn load_templates(path: impl AsRef<Path>) -> Result<Vec<TemplateRecord>, CorpusError> {
    let mut reader = open(path.as_ref())?;
    expect_header(&headers(&mut reader)?, &TEMPLATES_HEADER)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (row, rec) in records(&mut reader) {
        let rec = rec?;
        let key = (rec[0].to_string(), rec[1].to_string());
        if !seen.insert(key.clone()) {
            return Err(CorpusError::DuplicateKey {
                row,
                key: format!("{}/{}", key.0, key.1),
            });
        }
        out.push(TemplateRecord {
            target_word: key.0,
            speaker_id: key.1,
            audio_path: rec[2].to_string(),
        });
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<PredictionTable, CorpusError> {
    let mut reader = open(path.as_ref())?;
    let header = headers(&mut reader)?;
    if header.len() < 4 || header[..3] != PREDICTIONS_FIXED {
        return Err(CorpusError::SchemaMismatch(format!(
            "expected header {},<system>...; found {}",
            PREDICTIONS_FIXED.join(","),
            header.join(",")
        )));
    }
    let systems: Vec<String> = header[3..].to_vec();
    let mut unique = HashSet::new();
    if let Some(dup) = systems.iter().find(|s| s.is_empty() || !unique.insert(*s)) {
        return Err(CorpusError::SchemaMismatch(format!(
            "empty or repeated system column {dup:?}"
        )));
    }
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for (row, rec) in records(&mut reader) {
        let rec = rec?;
        let key = (rec[0].to_string(), rec[1].to_string());
        if !seen.insert(key.clone()) {
            return Err(CorpusError::DuplicateKey {
                row,
                key: format!("{}/{}", key.0, key.1),
            });
        }
        let ground_truth = label_at(row, "ground_truth", &rec[2])?;
        let predictions = systems
            .iter()
            .enumerate()
            .map(|(i, name)| label_at(row, name, &rec[3 + i]))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(PredictionRow {
            patient_id: key.0,
            target_word: key.1,
            ground_truth,
            predictions,
        });
    }
    Ok(PredictionTable { systems, rows })
}

pub fn write_predictions(path: impl AsRef<Path>, table: &PredictionTable) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CorpusError::io(path, std::io::Error::other(e)))?;
    let mut header: Vec<&str> = PREDICTIONS_FIXED.to_vec();
    header.extend(table.systems.iter().map(String::as_str));
    let wrap = |e: csv::Error| CorpusError::io(path, std::io::Error::other(e));
    w.write_record(&header).map_err(wrap)?;
    for row in &table.rows {
        let mut rec = vec![
            row.patient_id.as_str(),
            row.target_word.as_str(),
            row.ground_truth.as_str(),
        ];
        rec.extend(row.predictions.iter().map(|l| l.as_str()));
        w.write_record(&rec).map_err(wrap)?;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        p
    }

    #[test]
    fn relabel_maps_only_correct_to_correct() {
        assert_eq!(relabel_binary(Category::Correct), Label::Correct);
        assert_eq!(relabel_binary(Category::Filler), Label::Incorrect);
        assert_eq!(relabel_binary(Category::PhonologicalError), Label::Incorrect);
        let n_correct = Category::ALL
            .iter()
            .filter(|&&c| relabel_binary(c) == Label::Correct)
            .count();
        assert_eq!(n_correct, 1);
    }

    #[test]
    fn category_spellings() {
        for c in Category::ALL {
            assert_eq!(Category::parse(c.as_str()), Some(c));
        }
        assert_eq!(Category::parse("phonological_error"), Some(Category::PhonologicalError));
        assert_eq!(Category::parse("NoResponse"), Some(Category::NoResponse));
        assert_eq!(Category::parse("Fillr"), None);
    }

    #[test]
    fn attempts_220_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = ATTEMPTS_HEADER.join(",") + "\n";
        for i in 0..220 {
            let (cat, bin) = if i % 3 == 0 {
                ("Correct", "correct")
            } else {
                ("No Response", "incorrect")
            };
            body += &format!("P1,word{i},audio/{i}.wav,{cat},{bin},\n");
        }
        let p = write(&dir, "attempts.csv", &body);
        let recs = load_attempts(&p).unwrap();
        assert_eq!(recs.len(), 220);
        assert_eq!(recs[5].target_word, "word5");
        assert_eq!(recs[0].slt2_binary, None);
        match load_manifest(&p, ManifestKind::Attempts).unwrap() {
            Manifest::Attempts(r) => assert_eq!(r, recs),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn header_only_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", &(ATTEMPTS_HEADER.join(",") + "\n"));
        assert!(load_attempts(&p).unwrap().is_empty());
        let p = write(&dir, "t.csv", &(TEMPLATES_HEADER.join(",") + "\n"));
        assert!(load_templates(&p).unwrap().is_empty());
    }

    #[test]
    fn unknown_category_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let body = ATTEMPTS_HEADER.join(",")
            + "\nP1,cat,a.wav,Correct,correct,correct\nP1,dog,b.wav,Fillr,incorrect,\n";
        let p = write(&dir, "a.csv", &body);
        match load_attempts(&p) {
            Err(CorpusError::UnknownCategory { row, value }) => {
                assert_eq!(row, 2);
                assert_eq!(value, "Fillr");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_and_schema_errors() {
        let dir = tempfile::tempdir().unwrap();
        let body = ATTEMPTS_HEADER.join(",")
            + "\nP1,cat,a.wav,Correct,correct,\nP1,cat,b.wav,Other,incorrect,\n";
        let p = write(&dir, "a.csv", &body);
        assert!(matches!(
            load_attempts(&p),
            Err(CorpusError::DuplicateKey { row: 2, .. })
        ));
        let p = write(&dir, "b.csv", "patient,word\nP1,cat\n");
        assert!(matches!(load_attempts(&p), Err(CorpusError::SchemaMismatch(_))));
        let body = ATTEMPTS_HEADER.join(",") + "\nP1,cat,a.wav,Filler,correct,\n";
        let p = write(&dir, "c.csv", &body);
        assert!(matches!(load_attempts(&p), Err(CorpusError::SchemaMismatch(_))));
    }

    #[test]
    fn predictions_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let body = "patient_id,target_word,ground_truth,fixed,SLT2\n\
                    P1,cat,correct,correct,correct\nP1,dog,incorrect,correct,incorrect\n";
        let p = write(&dir, "p.csv", body);
        let table = load_predictions(&p).unwrap();
        assert_eq!(table.systems, vec!["fixed", "SLT2"]);
        assert_eq!(table.column(0), vec![Label::Correct, Label::Correct]);
        let q = dir.path().join("q.csv");
        write_predictions(&q, &table).unwrap();
        assert_eq!(load_predictions(&q).unwrap(), table);
        assert_eq!(std::fs::read_to_string(&q).unwrap(), body);
    }

    #[test]
    fn predictions_require_every_cell() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "p.csv",
            "patient_id,target_word,ground_truth,a,b\nP1,cat,correct,correct,\n",
        );
        assert!(matches!(load_predictions(&p), Err(CorpusError::SchemaMismatch(_))));
        let p = write(&dir, "q.csv", "patient_id,target_word,ground_truth\n");
        assert!(matches!(load_predictions(&p), Err(CorpusError::SchemaMismatch(_))));
    }
}
