//! MFCC front end: pre-emphasis, framing, Hamming window, 1024-point power
//! spectrum, 26-band mel filterbank, DCT-II, sinusoidal liftering, log frame
//! energy and first-order deltas.
//!
//! Each 30 ms frame (10 ms hop at 16 kHz) yields 26 values: 12 liftered
//! cepstra (c1..c12, c0 is dropped), log energy, and the deltas of those 13.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::corpus_io::AudioClip;
use crate::N_FEATURES;

/// Static coefficients per frame: 12 MFCC + log energy.
pub const N_STATIC: usize = 13;

#[derive(Debug, Error, PartialEq)]
pub enum FrontendError {
    #[error("invalid front-end configuration: {0}")]
    InvalidConfig(String),
    #[error("clip of {samples} samples is shorter than one {frame_samples}-sample frame")]
    EmptyOutput { samples: usize, frame_samples: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontendConfig {
    pub frame_len_ms: f64,
    pub hop_ms: f64,
    pub fft_len_ms: f64,
    pub preemphasis: f64,
    pub n_mfcc: usize,
    pub lifter_coeff: usize,
    pub n_mel_filters: usize,
    pub delta_window: usize,
    pub log_floor: f64,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            frame_len_ms: 30.0,
            hop_ms: 10.0,
            fft_len_ms: 64.0,
            preemphasis: 0.95,
            n_mfcc: 12,
            lifter_coeff: 23,
            n_mel_filters: 26,
            delta_window: 2,
            log_floor: 1e-10,
        }
    }
}

impl FrontendConfig {
    pub fn validate(&self) -> Result<(), FrontendError> {
        let bad = |m: &str| Err(FrontendError::InvalidConfig(m.to_string()));
        if !(self.hop_ms > 0.0 && self.hop_ms <= self.frame_len_ms) {
            return bad("hop must be positive and no longer than the frame");
        }
        if self.frame_len_ms > self.fft_len_ms {
            return bad("frame longer than the FFT");
        }
        if self.n_mfcc == 0 || self.n_mfcc >= self.n_mel_filters {
            return bad("n_mfcc must be in 1..n_mel_filters");
        }
        if !(0.0..1.0).contains(&self.preemphasis) {
            return bad("pre-emphasis coefficient must be in [0, 1)");
        }
        if self.lifter_coeff == 0 || self.delta_window == 0 {
            return bad("lifter coefficient and delta window must be positive");
        }
        if !(self.log_floor > 0.0) {
            return bad("log floor must be positive");
        }
        Ok(())
    }
}

/// Per-frame 26-dimensional acoustic features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub frames: Vec<[f64; N_FEATURES]>,
    pub frame_times_s: Vec<f64>,
}

impl FeatureSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// `y[0] = x[0]`, `y[n] = x[n] - alpha * x[n-1]`.
pub fn preemphasize(samples: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut prev = None;
    for &x in samples {
        out.push(match prev {
            None => x,
            Some(p) => x - alpha * p,
        });
        prev = Some(x);
    }
    out
}

/// Number of complete frames in `n` samples.
pub fn frame_count(n: usize, frame_samples: usize, hop_samples: usize) -> usize {
    if n < frame_samples {
        0
    } else {
        (n - frame_samples) / hop_samples + 1
    }
}

/// Full frames `[t*hop, t*hop + frame)`; the trailing partial frame is dropped.
pub fn frame_signal(samples: &[f64], frame_samples: usize, hop_samples: usize) -> Vec<&[f64]> {
    (0..frame_count(samples.len(), frame_samples, hop_samples))
        .map(|t| &samples[t * hop_samples..t * hop_samples + frame_samples])
        .collect()
}

pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Sinusoidal lifter weight for cepstral index `k` (1-based).
pub fn lifter_weight(k: usize, l: usize) -> f64 {
    1.0 + (l as f64 / 2.0) * (PI * k as f64 / l as f64).sin()
}

/// Regression deltas over `±window` frames with edge replication, appended
/// after the static columns.
pub fn append_deltas(statics: &[[f64; N_STATIC]], window: usize) -> Vec<[f64; N_FEATURES]> {
    let t_len = statics.len();
    let denom: f64 = 2.0 * (1..=window).map(|d| (d * d) as f64).sum::<f64>();
    let at = |t: isize| -> &[f64; N_STATIC] {
        let clamped = t.clamp(0, t_len as isize - 1) as usize;
        &statics[clamped]
    };
    (0..t_len)
        .map(|t| {
            let mut row = [0.0; N_FEATURES];
            row[..N_STATIC].copy_from_slice(&statics[t]);
            for d in 1..=window {
                let next = at(t as isize + d as isize);
                let prev = at(t as isize - d as isize);
                for c in 0..N_STATIC {
                    row[N_STATIC + c] += d as f64 * (next[c] - prev[c]);
                }
            }
            for v in &mut row[N_STATIC..] {
                *v /= denom;
            }
            row
        })
        .collect()
}

/// Precomputed window, FFT plan, filterbank and lifter for one sample rate.
#[derive(Clone)]
pub struct Frontend {
    config: FrontendConfig,
    frame_samples: usize,
    hop_samples: usize,
    fft_len: usize,
    window: Vec<f64>,
    /// Per filter: first FFT bin and its weights.
    filters: Vec<(usize, Vec<f64>)>,
    centers_hz: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Frontend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Frontend")
            .field("config", &self.config)
            .field("frame_samples", &self.frame_samples)
            .field("hop_samples", &self.hop_samples)
            .field("fft_len", &self.fft_len)
            .finish()
    }
}

impl Frontend {
    pub fn new(config: FrontendConfig, sample_rate_hz: u32) -> Result<Self, FrontendError> {
        config.validate()?;
        let sr = sample_rate_hz as f64;
        let to_samples = |ms: f64| (ms * sr / 1000.0).round() as usize;
        let frame_samples = to_samples(config.frame_len_ms);
        let hop_samples = to_samples(config.hop_ms);
        let fft_len = to_samples(config.fft_len_ms);
        if hop_samples == 0 || frame_samples == 0 {
            return Err(FrontendError::InvalidConfig(
                "frame or hop rounds to zero samples".into(),
            ));
        }

        let n_bins = fft_len / 2 + 1;
        let nyquist = sr / 2.0;
        let mel_hi = hz_to_mel(nyquist);
        let edges: Vec<f64> = (0..config.n_mel_filters + 2)
            .map(|i| mel_to_hz(mel_hi * i as f64 / (config.n_mel_filters + 1) as f64))
            .collect();
        let bin_hz = sr / fft_len as f64;
        let mut filters = Vec::with_capacity(config.n_mel_filters);
        for m in 0..config.n_mel_filters {
            let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            let mut first = None;
            let mut weights = Vec::new();
            for k in 0..n_bins {
                let f = k as f64 * bin_hz;
                let w = if f > lo && f <= center {
                    (f - lo) / (center - lo)
                } else if f > center && f < hi {
                    (hi - f) / (hi - center)
                } else {
                    0.0
                };
                if w > 0.0 {
                    first.get_or_insert(k);
                    weights.push(w);
                } else if first.is_some() {
                    break;
                }
            }
            filters.push((first.unwrap_or(0), weights));
        }

        let fft = FftPlanner::new().plan_fft_forward(fft_len);
        Ok(Self {
            window: hamming(frame_samples),
            centers_hz: edges[1..=config.n_mel_filters].to_vec(),
            config,
            frame_samples,
            hop_samples,
            fft_len,
            filters,
            fft,
        })
    }

    pub fn config(&self) -> &FrontendConfig {
        &self.config
    }

    pub fn frame_samples(&self) -> usize {
        self.frame_samples
    }

    pub fn hop_samples(&self) -> usize {
        self.hop_samples
    }

    pub fn fft_len(&self) -> usize {
        self.fft_len
    }

    pub fn filter_centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    fn windowed(&self, frame: &[f64]) -> Vec<f64> {
        frame.iter().zip(&self.window).map(|(x, w)| x * w).collect()
    }

    /// Mel filterbank energies (before the log) of one raw frame.
    pub fn filterbank_energies(&self, frame: &[f64]) -> Vec<f64> {
        self.filterbank_of_windowed(&self.windowed(frame))
    }

    fn filterbank_of_windowed(&self, windowed: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = windowed
            .iter()
            .map(|&x| Complex::new(x, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(self.fft_len)
            .collect();
        self.fft.process(&mut buf);
        let power: Vec<f64> = buf[..self.fft_len / 2 + 1]
            .iter()
            .map(|c| c.norm_sqr())
            .collect();
        self.filters
            .iter()
            .map(|(start, w)| {
                w.iter()
                    .zip(&power[*start..])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .collect()
    }

    /// `n_mfcc` liftered cepstra followed by log energy for one frame of
    /// `frame_samples` pre-emphasized samples.
    pub fn mfcc_frame(&self, frame: &[f64]) -> Vec<f64> {
        assert_eq!(frame.len(), self.frame_samples, "frame length");
        let windowed = self.windowed(frame);
        let floor = self.config.log_floor;
        let log_fb: Vec<f64> = self
            .filterbank_of_windowed(&windowed)
            .into_iter()
            .map(|e| e.max(floor).ln())
            .collect();

        // Non-DC DCT basis vectors sum to zero, so removing the mean leaves
        // c1.. unchanged and makes a flat spectrum give exact zeros.
        let m = log_fb.len();
        let flat = log_fb.iter().all(|&v| v == log_fb[0]);
        let mean = if flat { log_fb[0] } else { log_fb.iter().sum::<f64>() / m as f64 };
        let scale = (2.0 / m as f64).sqrt();
        let l = self.config.lifter_coeff;
        let mut out: Vec<f64> = (1..=self.config.n_mfcc)
            .map(|k| {
                let c: f64 = log_fb
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| (v - mean) * (PI * k as f64 * (j as f64 + 0.5) / m as f64).cos())
                    .sum();
                scale * c * lifter_weight(k, l)
            })
            .collect();

        let energy: f64 = windowed.iter().map(|x| x * x).sum();
        out.push(energy.max(floor).ln());
        out
    }

    pub fn extract(&self, clip: &AudioClip) -> Result<FeatureSequence, FrontendError> {
        if self.config.n_mfcc + 1 != N_STATIC {
            return Err(FrontendError::InvalidConfig(format!(
                "the {N_FEATURES}-feature layout needs n_mfcc = {}",
                N_STATIC - 1
            )));
        }
        let emphasized = preemphasize(&clip.normalized(), self.config.preemphasis);
        let frames = frame_signal(&emphasized, self.frame_samples, self.hop_samples);
        if frames.is_empty() {
            return Err(FrontendError::EmptyOutput {
                samples: clip.samples.len(),
                frame_samples: self.frame_samples,
            });
        }
        let statics: Vec<[f64; N_STATIC]> = frames
            .iter()
            .map(|f| {
                let v = self.mfcc_frame(f);
                let mut row = [0.0; N_STATIC];
                row.copy_from_slice(&v);
                row
            })
            .collect();
        let sr = clip.sample_rate_hz as f64;
        Ok(FeatureSequence {
            frame_times_s: (0..statics.len())
                .map(|t| (t * self.hop_samples) as f64 / sr)
                .collect(),
            frames: append_deltas(&statics, self.config.delta_window),
        })
    }
}

/// One-shot feature extraction with a fresh [`Frontend`].
pub fn extract_features(
    clip: &AudioClip,
    config: &FrontendConfig,
) -> Result<FeatureSequence, FrontendError> {
    Frontend::new(config.clone(), clip.sample_rate_hz)?.extract(clip)
}
