//! Template-based verification of single-word naming attempts.
//!
//! An attempt is converted to a phone posteriorgram sequence (MFCC front end
//! followed by a bidirectional GRU acoustic model), aligned against healthy
//! speaker templates of the target word with dynamic time warping, and
//! accepted when the combined alignment distance falls below a calibrated
//! threshold. The crate also carries the statistics used to evaluate such a
//! verifier against human raters.

pub mod calibration;
pub mod corpus_io;
pub mod frontend;
pub mod matcher;
pub mod model;
pub mod stats;

pub use corpus_io::{AudioClip, Category, Label};
pub use frontend::{FeatureSequence, FrontendConfig};
pub use matcher::{Combiner, TemplateSet, VerificationResult};
pub use model::{GruModel, PosteriorgramSequence};

/// Number of phone classes in a posteriorgram (44 phones plus silence).
pub const N_CLASSES: usize = 45;

/// Number of acoustic features per frame.
pub const N_FEATURES: usize = 26;

/// Sample rate the pipeline accepts.
pub const SAMPLE_RATE_HZ: u32 = 16_000;
