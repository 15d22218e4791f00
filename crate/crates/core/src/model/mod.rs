//! Acoustic model: features to phone posteriorgrams.

mod classes;
mod gru;
mod synth;

pub use classes::{class_index, class_list_hash, class_names, SILENCE};
pub use gru::{gru_cell, load_model, parse_model, BiGruLayer, GruCell, GruModel, MODEL_MAGIC};
pub use synth::synthesize_posteriorgrams;

use thiserror::Error;

use crate::N_CLASSES;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("model/input dimension error: {0}")]
    ModelDimensionError(String),
    #[error("bad magic: not a GRU weight file")]
    BadMagic,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite weight in tensor {tensor}")]
    NonFiniteWeight { tensor: usize },
    #[error("peak {0} outside (1/45, 1]")]
    InvalidPeak(f64),
    #[error("class index {0} outside [0, 45)")]
    InvalidClass(usize),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

/// Per-frame posterior distributions over the 45 phone classes.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorgramSequence {
    pub frames: Vec<[f64; N_CLASSES]>,
    /// Model identifier, or `"synthetic"`.
    pub source_id: String,
}

impl PosteriorgramSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Largest deviation of any row from a probability vector: distance of a
    /// row sum from 1, or of an entry outside [0, 1].
    pub fn max_stochastic_error(&self) -> f64 {
        self.frames
            .iter()
            .map(|row| {
                let sum_err = (row.iter().sum::<f64>() - 1.0).abs();
                let range_err = row
                    .iter()
                    .map(|&p| if p < 0.0 { -p } else if p > 1.0 { p - 1.0 } else { 0.0 })
                    .fold(0.0, f64::max);
                sum_err.max(range_err)
            })
            .fold(0.0, f64::max)
    }
}
