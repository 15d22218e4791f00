//! Little-endian matrix containers: a 7-byte magic, `u32` rows, `u32` columns,
//! then row-major `f32` values.

use std::path::Path;

use sha2::{Digest, Sha256};

use super::CorpusError;
use crate::frontend::FeatureSequence;
use crate::model::PosteriorgramSequence;
use crate::{N_CLASSES, N_FEATURES};

pub const POSTERIORGRAM_MAGIC: &[u8; 7] = b"NUVAPG1";
pub const FEATURE_MAGIC: &[u8; 7] = b"NUVAFT1";

/// Cache key for a posteriorgram: SHA-256 over the audio bytes and the
/// identifier of the model that produced it, hex encoded.
pub fn content_key(audio_bytes: &[u8], model_id: &str) -> String {
    let mut h = Sha256::new();
    h.update(audio_bytes);
    h.update([0u8]);
    h.update(model_id.as_bytes());
    hex::encode(h.finalize())
}

fn encode<const C: usize>(magic: &[u8; 7], rows: &[[f64; C]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(15 + rows.len() * C * 4);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    out.extend_from_slice(&(C as u32).to_le_bytes());
    for row in rows {
        for &v in row {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

fn decode<const C: usize>(magic: &[u8; 7], bytes: &[u8]) -> Result<Vec<[f64; C]>, CorpusError> {
    let bad = |m: String| CorpusError::MalformedContainer(m);
    if bytes.len() < 15 || &bytes[..7] != magic {
        return Err(bad(format!(
            "missing magic {}",
            String::from_utf8_lossy(magic)
        )));
    }
    let rows = u32::from_le_bytes(bytes[7..11].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[11..15].try_into().unwrap()) as usize;
    if cols != C {
        return Err(bad(format!("expected {C} columns, found {cols}")));
    }
    let body = &bytes[15..];
    if body.len() != rows * C * 4 {
        return Err(bad(format!(
            "expected {} payload bytes, found {}",
            rows * C * 4,
            body.len()
        )));
    }
    let mut out = Vec::with_capacity(rows);
    for chunk in body.chunks_exact(C * 4) {
        let mut row = [0.0; C];
        for (slot, b) in row.iter_mut().zip(chunk.chunks_exact(4)) {
            let v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            if !v.is_finite() {
                return Err(bad("non-finite value".into()));
            }
            *slot = v as f64;
        }
        out.push(row);
    }
    Ok(out)
}

fn write_bytes(path: &Path, bytes: Vec<u8>) -> Result<(), CorpusError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CorpusError::io(parent, e))?;
        }
    }
    std::fs::write(path, bytes).map_err(|e| CorpusError::io(path, e))
}

pub fn write_posteriorgrams(
    path: impl AsRef<Path>,
    seq: &PosteriorgramSequence,
) -> Result<(), CorpusError> {
    write_bytes(path.as_ref(), encode(POSTERIORGRAM_MAGIC, &seq.frames))
}

pub fn read_posteriorgrams(
    path: impl AsRef<Path>,
    source_id: &str,
) -> Result<PosteriorgramSequence, CorpusError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    let frames = decode::<N_CLASSES>(POSTERIORGRAM_MAGIC, &bytes)?;
    Ok(PosteriorgramSequence {
        frames,
        source_id: source_id.to_string(),
    })
}

pub fn write_features(path: impl AsRef<Path>, seq: &FeatureSequence) -> Result<(), CorpusError> {
    write_bytes(path.as_ref(), encode(FEATURE_MAGIC, &seq.frames))
}

/// Reads a feature dump. Frame times assume the default 10 ms hop.
pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureSequence, CorpusError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    let frames = decode::<N_FEATURES>(FEATURE_MAGIC, &bytes)?;
    let frame_times_s = (0..frames.len()).map(|t| t as f64 * 0.010).collect();
    Ok(FeatureSequence {
        frames,
        frame_times_s,
    })
}
