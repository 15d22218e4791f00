use std::path::Path;

use super::CorpusError;
use crate::SAMPLE_RATE_HZ;

/// Mono 16-bit PCM audio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioClip {
    pub samples: Vec<i16>,
    pub sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<i16>, sample_rate_hz: u32) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Samples scaled to [-1, 1).
    pub fn normalized(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| s as f64 / 32768.0).collect()
    }
}

/// Loads a mono PCM16 16 kHz WAV file.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip, CorpusError> {
    load_wav_with(path, false)
}

/// Like [`load_wav`], but `allow_any_rate` skips the 16 kHz check. No
/// resampling is performed.
pub fn load_wav_with(path: impl AsRef<Path>, allow_any_rate: bool) -> Result<AudioClip, CorpusError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    parse_wav(&bytes, allow_any_rate)
}

fn u16_at(b: &[u8], off: usize) -> u16 {
    u16::from_le_bytes([b[off], b[off + 1]])
}

fn u32_at(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

pub fn parse_wav(bytes: &[u8], allow_any_rate: bool) -> Result<AudioClip, CorpusError> {
    let malformed = |m: &str| CorpusError::MalformedWav(m.to_string());
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE header"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    let mut off = 12;
    while off + 8 <= bytes.len() {
        let id = &bytes[off..off + 4];
        let size = u32_at(bytes, off + 4) as usize;
        let body_start = off + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| malformed("chunk extends past end of file"))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(malformed("fmt chunk too short"));
                }
                fmt = Some((
                    u16_at(body, 0),
                    u16_at(body, 2),
                    u32_at(body, 4),
                    u16_at(body, 14),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word aligned
        off = body_end + (size & 1);
    }

    let (format_tag, channels, rate, bits) = fmt.ok_or_else(|| malformed("no fmt chunk"))?;
    let data = data.ok_or_else(|| malformed("no data chunk"))?;
    if format_tag != 1 {
        return Err(CorpusError::UnsupportedEncoding(format!(
            "format tag {format_tag} (only PCM is supported)"
        )));
    }
    if bits != 16 {
        return Err(CorpusError::UnsupportedEncoding(format!(
            "{bits}-bit samples (only 16-bit is supported)"
        )));
    }
    if channels != 1 {
        return Err(CorpusError::UnsupportedEncoding(format!(
            "{channels} channels (only mono is supported)"
        )));
    }
    if rate == 0 {
        return Err(malformed("zero sample rate"));
    }
    if rate != SAMPLE_RATE_HZ && !allow_any_rate {
        return Err(CorpusError::UnsupportedRate(rate));
    }
    if data.len() % 2 != 0 {
        return Err(malformed("odd-sized PCM16 data chunk"));
    }
    if data.is_empty() {
        return Err(malformed("no samples"));
    }
    let samples = data
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]))
        .collect();
    Ok(AudioClip::new(samples, rate))
}

/// Canonical 44-byte-header encoding of a clip.
pub fn wav_bytes(clip: &AudioClip) -> Vec<u8> {
    let data_len = (clip.samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate_hz * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in &clip.samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip) -> Result<(), CorpusError> {
    let path = path.as_ref();
    std::fs::write(path, wav_bytes(clip)).map_err(|e| CorpusError::io(path, e))
}
