//! Time-domain masking augmentation: zero out randomly placed spans.

use alloc::format;
use alloc::vec::Vec;

use crate::encoder::{AudioWave, FeatureSequence, ImuStream};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// Draws `n_masks` independent spans over `0..len`: width uniform in
/// `[0, max_width]`, start uniform over the valid placements. Spans may
/// overlap.
pub fn mask_spans(
    len: usize,
    n_masks: usize,
    max_width: usize,
    rng: &mut SeededRng,
) -> Result<Vec<(usize, usize)>> {
    if max_width > len {
        return Err(Error::config(format!(
            "mask width bound {max_width} exceeds the sequence length {len}"
        )));
    }
    let mut spans = Vec::with_capacity(n_masks);
    for _ in 0..n_masks {
        let width = rng.range_inclusive(0, max_width);
        let start = rng.below(len - width + 1);
        spans.push((start, width));
    }
    Ok(spans)
}

/// Zeroes masked samples of a waveform.
pub fn time_mask_wave(
    w: &AudioWave,
    n_masks: usize,
    max_width: usize,
    rng: &mut SeededRng,
) -> Result<AudioWave> {
    let mut samples = w.samples.clone();
    for (start, width) in mask_spans(samples.len(), n_masks, max_width, rng)? {
        for s in &mut samples[start..start + width] {
            *s = 0.0;
        }
    }
    Ok(AudioWave { samples, sample_rate: w.sample_rate })
}

/// Zeroes whole rows (time steps) of a row-per-step tensor.
pub fn time_mask_rows(
    t: &Tensor,
    n_masks: usize,
    max_width: usize,
    rng: &mut SeededRng,
) -> Result<Tensor> {
    if t.rank() != 2 {
        return Err(Error::shape(format!("time masking expects T×D, got {:?}", t.shape())));
    }
    let mut out = t.clone();
    for (start, width) in mask_spans(t.rows(), n_masks, max_width, rng)? {
        for r in start..start + width {
            for v in out.row_mut(r) {
                *v = 0.0;
            }
        }
    }
    Ok(out)
}

/// Zeroes masked frames of a feature sequence.
pub fn time_mask_features(
    f: &FeatureSequence,
    n_masks: usize,
    max_width: usize,
    rng: &mut SeededRng,
) -> Result<FeatureSequence> {
    let frames = time_mask_rows(&f.frames, n_masks, max_width, rng)?;
    FeatureSequence::new(frames, f.frame_period_ms, f.modality)
}

/// Zeroes masked samples (all six channels) of an inertial stream.
pub fn time_mask_imu(
    s: &ImuStream,
    n_masks: usize,
    max_width: usize,
    rng: &mut SeededRng,
) -> Result<ImuStream> {
    let channels = time_mask_rows(&s.channels, n_masks, max_width, rng)?;
    Ok(ImuStream { channels, sample_rate: s.sample_rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::Modality;
    use alloc::vec;

    #[test]
    fn zero_masks_leave_the_input_alone() {
        let mut rng = SeededRng::new(92, 0);
        let w = AudioWave { samples: vec![1.0, 2.0, 3.0], sample_rate: 1600 };
        let masked = time_mask_wave(&w, 0, 2, &mut rng).unwrap();
        assert_eq!(masked.samples, w.samples);
    }

    #[test]
    fn a_full_width_span_can_zero_everything() {
        // With max_width == length, keep drawing until the full span comes
        // up; it must then cover the whole signal.
        let mut rng = SeededRng::new(92, 1);
        let w = AudioWave { samples: vec![1.0; 8], sample_rate: 1600 };
        loop {
            let spans = mask_spans(8, 1, 8, &mut rng).unwrap();
            if spans[0].1 == 8 {
                assert_eq!(spans[0].0, 0, "a full span has one placement");
                break;
            }
        }
        // And through the wave interface, masking everything zeroes it all.
        let mut rng2 = SeededRng::new(92, 2);
        loop {
            let masked = time_mask_wave(&w, 1, 8, &mut rng2).unwrap();
            if masked.samples.iter().all(|&v| v == 0.0) {
                break;
            }
        }
    }

    #[test]
    fn masked_fraction_matches_expectation() {
        // One span: expected masked fraction is exactly
        // (max_width/2) / length. Two spans overlap occasionally, which
        // shaves off ~n·(max_width/2/length)/2; keep spans short relative
        // to the sequence so that stays well inside the 5% tolerance.
        let mut rng = SeededRng::new(92, 3);
        for (n, len, mw) in [(1usize, 200usize, 40usize), (2, 200, 10)] {
            let mut masked = 0usize;
            let draws = 10_000;
            for _ in 0..draws {
                let mut covered = vec![false; len];
                for (start, width) in mask_spans(len, n, mw, &mut rng).unwrap() {
                    for c in &mut covered[start..start + width] {
                        *c = true;
                    }
                }
                masked += covered.iter().filter(|&&c| c).count();
            }
            let got = masked as f64 / (draws * len) as f64;
            let expect = n as f64 * (mw as f64 / 2.0) / len as f64;
            let rel = (got - expect).abs() / expect;
            assert!(rel < 0.05, "n={n}: fraction {got:.4} vs {expect:.4} ({rel:.3} rel)");
        }
    }

    #[test]
    fn row_masking_zeroes_whole_frames() {
        let mut rng = SeededRng::new(92, 4);
        let f = FeatureSequence::new(Tensor::full([10, 3], 1.5), 20.0, Modality::Audio).unwrap();
        let masked = time_mask_features(&f, 2, 4, &mut rng).unwrap();
        assert_eq!(masked.frames.shape(), &[10, 3]);
        assert_eq!(masked.frame_period_ms, 20.0);
        for r in 0..10 {
            let row = masked.frames.row(r);
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            assert!(zeros == 0 || zeros == 3, "row {r} partially masked");
        }
    }

    #[test]
    fn oversized_width_bound_is_rejected() {
        let mut rng = SeededRng::new(92, 5);
        assert!(mask_spans(4, 1, 5, &mut rng).is_err());
    }
}
