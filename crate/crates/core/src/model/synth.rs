use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ModelError, PosteriorgramSequence};
use crate::N_CLASSES;

/// Builds a posteriorgram sequence from `(class, n_frames)` segments. The
/// named class of each frame gets `peak`; the remaining mass is spread over
/// the other 44 classes with seeded multiplicative jitter.
///
/// The jitter draws do not depend on `peak` (for peaks above ~0.07), so
/// the same seed at a lower peak scales the off-class mass uniformly.
pub fn synthesize_posteriorgrams(
    segments: &[(usize, usize)],
    peak: f64,
    seed: u64,
) -> Result<PosteriorgramSequence, ModelError> {
    if !(peak > 1.0 / N_CLASSES as f64 && peak <= 1.0) {
        return Err(ModelError::InvalidPeak(peak));
    }
    if let Some(&(c, _)) = segments.iter().find(|(c, _)| *c >= N_CLASSES) {
        return Err(ModelError::InvalidClass(c));
    }

    // Jitter amplitude keeps every off-class entry strictly below `peak`:
    // (1+j)/(1-j) < 44 * peak / (1 - peak).
    let ratio = (N_CLASSES - 1) as f64 * peak / (1.0 - peak).max(f64::MIN_POSITIVE);
    let jitter = 0.5f64.min(0.9 * (ratio - 1.0) / (ratio + 1.0));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: usize = segments.iter().map(|s| s.1).sum();
    let mut frames = Vec::with_capacity(total);
    for &(class, n) in segments {
        for _ in 0..n {
            let mut row = [0.0; N_CLASSES];
            let mut weight_sum = 0.0;
            for (i, slot) in row.iter_mut().enumerate() {
                let u: f64 = rng.gen();
                if i != class {
                    *slot = 1.0 + jitter * (2.0 * u - 1.0);
                    weight_sum += *slot;
                }
            }
            let rest = 1.0 - peak;
            for (i, slot) in row.iter_mut().enumerate() {
                *slot = if i == class {
                    peak
                } else {
                    rest * *slot / weight_sum
                };
            }
            frames.push(row);
        }
    }
    Ok(PosteriorgramSequence {
        frames,
        source_id: "synthetic".to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_hot_at_full_peak() {
        let seq = synthesize_posteriorgrams(&[(3, 2), (44, 1)], 1.0, 9).unwrap();
        assert_eq!(seq.len(), 3);
        for (t, row) in seq.frames.iter().enumerate() {
            let hot = if t < 2 { 3 } else { 44 };
            for (i, &p) in row.iter().enumerate() {
                assert_eq!(p, if i == hot { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synthesize_posteriorgrams(&[(1, 5), (7, 4)], 0.8, 42).unwrap();
        let b = synthesize_posteriorgrams(&[(1, 5), (7, 4)], 0.8, 42).unwrap();
        let c = synthesize_posteriorgrams(&[(1, 5), (7, 4)], 0.8, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn half_peak_rows() {
        for seed in 0..20 {
            let seq = synthesize_posteriorgrams(&[(10, 3), (20, 3)], 0.5, seed).unwrap();
            for (t, row) in seq.frames.iter().enumerate() {
                let hot = if t < 3 { 10 } else { 20 };
                assert_eq!(row[hot], 0.5);
                assert!(row.iter().enumerate().all(|(i, &p)| i == hot || p < 0.5));
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn low_peak_still_argmax() {
        let seq = synthesize_posteriorgrams(&[(0, 50)], 0.03, 1).unwrap();
        for row in &seq.frames {
            assert!(row[1..].iter().all(|&p| p < row[0]));
        }
        assert!(seq.max_stochastic_error() < 1e-6);
    }

    #[test]
    fn lower_peak_scales_off_class_mass() {
        let hi = synthesize_posteriorgrams(&[(4, 6), (9, 6)], 0.95, 5).unwrap();
        let lo = synthesize_posteriorgrams(&[(4, 6), (9, 6)], 0.4, 5).unwrap();
        for (t, (a, b)) in hi.frames.iter().zip(&lo.frames).enumerate() {
            let hot = if t < 6 { 4 } else { 9 };
            for i in (0..N_CLASSES).filter(|&i| i != hot) {
                assert!((b[i] / a[i] - 0.6 / 0.05).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn validation() {
        assert_eq!(
            synthesize_posteriorgrams(&[(0, 1)], 1.0 / 45.0, 0),
            Err(ModelError::InvalidPeak(1.0 / 45.0))
        );
        assert!(synthesize_posteriorgrams(&[(0, 1)], 1.01, 0).is_err());
        assert_eq!(
            synthesize_posteriorgrams(&[(45, 1)], 0.9, 0),
            Err(ModelError::InvalidClass(45))
        );
    }
}
