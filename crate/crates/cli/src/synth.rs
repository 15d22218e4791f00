//! Synthetic corpus: tone WAVs whose frame counts match per-clip phone
//! segments, plus the manifests and the spec that maps clips to
//! posteriorgrams.
//!
//! Correct attempts copy one template's segments. Incorrect attempts copy
//! one and replace at least half of its phone segments with phones absent
//! from the word. Every random draw is independent of the peaks, so the
//! same seed at a lower attempt peak yields the same corpus with flatter
//! attempt posteriorgrams.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wordverify::corpus_io::{write_wav, ATTEMPTS_HEADER, TEMPLATES_HEADER};
use wordverify::model::{class_index, SILENCE};
use wordverify::{AudioClip, Category, GruModel, N_CLASSES, N_FEATURES};

use crate::args::SynthArgs;
use crate::error::{CliError, Result};
use crate::source::{SynthClip, SyntheticSpec};

const FRAME: usize = 480;
const HOP: usize = 160;

/// Samples needed for exactly `frames` analysis frames.
pub fn samples_for_frames(frames: usize) -> usize {
    FRAME + (frames - 1) * HOP
}

fn tone(segments: &[(usize, usize)], noise_seed: u64) -> AudioClip {
    let frames: usize = segments.iter().map(|s| s.1).sum();
    let total = samples_for_frames(frames);
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let mut samples = Vec::with_capacity(total);
    let mut seg = 0;
    let mut seg_end = segments[0].1 * HOP;
    for i in 0..total {
        while i >= seg_end && seg + 1 < segments.len() {
            seg += 1;
            seg_end += segments[seg].1 * HOP;
        }
        let class = segments[seg].0;
        let f = 150.0 + 40.0 * class as f64;
        let t = i as f64 / 16000.0;
        let v = 8000.0 * (2.0 * std::f64::consts::PI * f * t).sin() + rng.gen_range(-200.0..200.0);
        samples.push(v as i16);
    }
    AudioClip::new(samples, 16000)
}

struct Word {
    name: String,
    phones: Vec<usize>,
    templates: Vec<Vec<(usize, usize)>>,
}

fn word_segments(rng: &mut ChaCha8Rng, phones: &[usize], sil: usize) -> Vec<(usize, usize)> {
    let mut segs = vec![(sil, rng.gen_range(3..7))];
    segs.extend(phones.iter().map(|&p| (p, rng.gen_range(4..10))));
    segs.push((sil, rng.gen_range(3..7)));
    segs
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn run(args: &SynthArgs) -> Result<()> {
    for (name, p) in [("--template-peak", args.template_peak), ("--attempt-peak", args.attempt_peak)] {
        if !(p > 1.0 / N_CLASSES as f64 && p <= 1.0) {
            return Err(CliError::Usage(format!("{name} must lie in (1/45, 1]")));
        }
    }
    if args.words == 0 || args.patients == 0 || args.templates_per_word == 0 {
        return Err(CliError::Usage("--words, --patients and --templates-per-word must be positive".into()));
    }
    if !(0.0..=1.0).contains(&args.correct_rate) {
        return Err(CliError::Usage("--correct-rate must lie in [0, 1]".into()));
    }
    let audio = args.out_dir.join("audio");
    std::fs::create_dir_all(&audio).map_err(|e| CliError::io(&audio, e))?;

    let sil = class_index(SILENCE).expect("silence class");
    let inventory: Vec<usize> = (0..N_CLASSES).filter(|&c| c != sil).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut spec = SyntheticSpec::default();

    let words: Vec<Word> = (0..args.words)
        .map(|w| {
            let n = rng.gen_range(3..6);
            let phones: Vec<usize> = inventory.choose_multiple(&mut rng, n).copied().collect();
            let templates = (0..args.templates_per_word)
                .map(|_| word_segments(&mut rng, &phones, sil))
                .collect();
            Word {
                name: format!("word{w:03}"),
                phones,
                templates,
            }
        })
        .collect();

    let mut template_rows = Vec::new();
    for w in &words {
        for (s, segs) in w.templates.iter().enumerate() {
            let rel = format!("audio/{}_h{}.wav", w.name, s + 1);
            let seed = rng.gen();
            write_wav(args.out_dir.join(&rel), &tone(segs, seed))?;
            spec.clips.insert(
                rel.clone(),
                SynthClip {
                    segments: segs.clone(),
                    peak: args.template_peak,
                    seed,
                },
            );
            template_rows.push(vec![w.name.clone(), format!("H{}", s + 1), rel]);
        }
    }

    let wrong = [
        Category::NoResponse,
        Category::Filler,
        Category::PhonologicalError,
        Category::Circumlocution,
        Category::Other,
    ];
    let mut attempt_rows = Vec::new();
    for p in 0..args.patients {
        let patient = format!("P{}", p + 1);
        for w in &words {
            let correct = rng.gen_bool(args.correct_rate);
            let source = rng.gen_range(0..w.templates.len());
            let mut segs = w.templates[source].clone();
            let category = if correct {
                Category::Correct
            } else {
                let phone_slots: Vec<usize> = (1..segs.len() - 1).collect();
                let k = phone_slots.len().div_ceil(2) + rng.gen_range(0..=phone_slots.len() / 2);
                let absent: Vec<usize> = inventory
                    .iter()
                    .copied()
                    .filter(|c| !w.phones.contains(c))
                    .collect();
                for &slot in phone_slots.choose_multiple(&mut rng, k) {
                    segs[slot].0 = *absent.choose(&mut rng).expect("inventory larger than word");
                }
                *wrong.choose(&mut rng).expect("non-empty")
            };
            let label = if correct { "correct" } else { "incorrect" };
            // Second rater disagrees on about 3% of attempts.
            let flip = rng.gen_bool(0.03);
            let slt2 = if flip == correct { "incorrect" } else { "correct" };
            let rel = format!("audio/{patient}_{}.wav", w.name);
            let seed = rng.gen();
            write_wav(args.out_dir.join(&rel), &tone(&segs, seed))?;
            spec.clips.insert(
                rel.clone(),
                SynthClip {
                    segments: segs,
                    peak: args.attempt_peak,
                    seed,
                },
            );
            attempt_rows.push(vec![
                patient.clone(),
                w.name.clone(),
                rel,
                category.as_str().to_string(),
                label.to_string(),
                slt2.to_string(),
            ]);
        }
    }

    write_csv(&args.out_dir.join("templates.csv"), &TEMPLATES_HEADER, &template_rows)?;
    write_csv(&args.out_dir.join("attempts.csv"), &ATTEMPTS_HEADER, &attempt_rows)?;
    spec.save(&args.out_dir.join("synthetic.json"))?;

    if let Some(path) = &args.model_out {
        GruModel::random(2, 8, N_FEATURES, N_CLASSES, 0.5, args.seed).save(path)?;
    }
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "wrote {} templates and {} attempts to {}",
        template_rows.len(),
        attempt_rows.len(),
        args.out_dir.display()
    );
    Ok(())
}

