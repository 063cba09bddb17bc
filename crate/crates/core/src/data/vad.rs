//! Voice-activity labels from audio loudness, and clip segmentation for
//! training the inertial detector.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::encoder::{AudioWave, ImuStream};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Default loudness threshold as a fraction of the loudest frame.
pub const VAD_REL_THRESHOLD: f64 = 0.05;

/// Label frame hop in milliseconds, matching the encoder frame period.
pub const VAD_FRAME_MS: f64 = 20.0;

/// Duration of one training clip in seconds.
pub const VAD_CLIP_SECONDS: f64 = 5.0;

/// One fixed-length inertial training clip with per-frame voicing labels.
#[derive(Debug, Clone, PartialEq)]
pub struct VadExample {
    /// Exactly `clip_seconds` of inertial samples (zero-padded tail).
    pub imu: ImuStream,
    /// One binary label per 20 ms frame.
    pub labels: Vec<u8>,
}

/// Binary voicing labels, one per `frame_ms` window: a frame is voiced iff
/// its root-mean-square loudness exceeds `rel_threshold` times the loudest
/// frame of the recording. A silent recording gets all-zero labels. The
/// partial tail window (if any) is dropped.
pub fn vad_labels_from_audio(
    w: &AudioWave,
    rel_threshold: f64,
    frame_ms: f64,
) -> Result<Vec<u8>> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::config(format!(
            "relative threshold must be in (0, 1), got {rel_threshold}"
        )));
    }
    let per_frame = w.sample_rate as f64 * frame_ms / 1000.0;
    if per_frame < 1.0 || libm::floor(per_frame) != per_frame {
        return Err(Error::config(format!(
            "{frame_ms} ms frames do not hold a whole number of samples at {} Hz",
            w.sample_rate
        )));
    }
    let per_frame = per_frame as usize;
    let n_frames = w.samples.len() / per_frame;
    let mut rms = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let frame = &w.samples[f * per_frame..(f + 1) * per_frame];
        let power = frame.iter().map(|&x| x * x).sum::<f64>() / per_frame as f64;
        rms.push(libm::sqrt(power));
    }
    let max_rms = rms.iter().copied().fold(0.0, f64::max);
    if max_rms == 0.0 {
        return Ok(vec![0; n_frames]);
    }
    let threshold = rel_threshold * max_rms;
    Ok(rms.iter().map(|&r| u8::from(r > threshold)).collect())
}

/// Cuts an inertial stream and its aligned 20 ms labels into consecutive
/// non-overlapping clips of `clip_seconds`; the last clip is zero-padded
/// (labels padded unvoiced).
pub fn segment_clips(
    imu: &ImuStream,
    labels: &[u8],
    clip_seconds: f64,
) -> Result<Vec<VadExample>> {
    let rate = imu.sample_rate as f64;
    let samples_per_frame = rate * VAD_FRAME_MS / 1000.0;
    if samples_per_frame < 1.0 || libm::floor(samples_per_frame) != samples_per_frame {
        return Err(Error::config(format!(
            "20 ms label frames do not hold a whole number of samples at {} Hz",
            imu.sample_rate
        )));
    }
    let samples_per_frame = samples_per_frame as usize;
    let n = imu.channels.rows();
    if n == 0 {
        return Err(Error::Degenerate("cannot segment an empty stream".into()));
    }
    if labels.len() != n / samples_per_frame {
        return Err(Error::shape(format!(
            "{} samples imply {} label frames, got {}",
            n,
            n / samples_per_frame,
            labels.len()
        )));
    }
    let clip_samples = rate * clip_seconds;
    if clip_samples < 1.0 || libm::floor(clip_samples) != clip_samples {
        return Err(Error::config(format!(
            "{clip_seconds} s clips do not hold a whole number of samples at {} Hz",
            imu.sample_rate
        )));
    }
    let clip_samples = clip_samples as usize;
    let clip_frames = clip_samples / samples_per_frame;
    let n_clips = n.div_ceil(clip_samples);
    let cols = imu.channels.cols();
    let mut out = Vec::with_capacity(n_clips);
    for c in 0..n_clips {
        let start = c * clip_samples;
        let take = clip_samples.min(n - start);
        let mut channels = Tensor::zeros([clip_samples, cols]);
        for r in 0..take {
            channels.row_mut(r).copy_from_slice(imu.channels.row(start + r));
        }
        let label_start = c * clip_frames;
        let mut clip_labels = vec![0u8; clip_frames];
        let frames_here = clip_frames.min(labels.len().saturating_sub(label_start));
        clip_labels[..frames_here]
            .copy_from_slice(&labels[label_start..label_start + frames_here]);
        out.push(VadExample {
            imu: ImuStream { channels, sample_rate: imu.sample_rate },
            labels: clip_labels,
        });
    }
    Ok(out)
}
