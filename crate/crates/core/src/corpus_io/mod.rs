//! Audio, manifest and binary container I/O.

mod container;
mod manifest;
mod wav;

pub use container::{
    content_key, read_features, read_posteriorgrams, write_features, write_posteriorgrams,
    FEATURE_MAGIC, POSTERIORGRAM_MAGIC,
};
pub use manifest::{
    load_attempts, load_manifest, load_predictions, load_templates, relabel_binary,
    write_predictions, AttemptRecord, Category, Label, Manifest, ManifestKind, PredictionRow,
    ATTEMPTS_HEADER, PREDICTIONS_FIXED, TEMPLATES_HEADER,
    PredictionTable, TemplateRecord,
};
pub use wav::{load_wav, load_wav_with, parse_wav, wav_bytes, write_wav, AudioClip};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed wav: {0}")]
    MalformedWav(String),
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("unsupported sample rate {0} Hz (expected 16000)")]
    UnsupportedRate(u32),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("duplicate key at row {row}: {key}")]
    DuplicateKey { row: usize, key: String },
    #[error("unknown category {value:?} at row {row}")]
    UnknownCategory { row: usize, value: String },
    #[error("malformed container: {0}")]
    MalformedContainer(String),
}

impl CorpusError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
