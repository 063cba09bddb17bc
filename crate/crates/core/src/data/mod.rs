//! Synthetic multimodal data: generation, signal-to-noise mixing, time
//! masking, voice-activity labeling, clip segmentation, and the annotated
//! transcript grammar.
//!
//! Everything here is in-memory and deterministic; file formats live in
//! the companion command-line crate.

use alloc::format;
use alloc::string::String;
use core::str::FromStr;

use crate::encoder::{AudioWave, ImuStream, VideoFrames};
use crate::error::{Error, Result};

pub mod annot;
pub mod mask;
pub mod mix;
pub mod synth;
pub mod vad;

pub use annot::{parse_annotation, render_annotation, AnnotItem, AnnotatedTranscript, ErrorKind, ErrorRecord};
pub use mask::{mask_spans, time_mask_features, time_mask_imu, time_mask_rows, time_mask_wave};
pub use mix::{mean_power, measured_snr_db, mix_at_snr, tile_to_length};
pub use synth::{synth_generate, SplitCounts, SynthSpec};
pub use vad::{
    segment_clips, vad_labels_from_audio, VadExample, VAD_CLIP_SECONDS, VAD_FRAME_MS,
    VAD_REL_THRESHOLD,
};

/// Dataset partition a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::Parse(format!("unknown split {other:?}"))),
        }
    }
}

/// One synchronized utterance across the three capture streams.
#[derive(Debug, Clone, PartialEq)]
pub struct MultimodalSample {
    pub id: String,
    pub audio: AudioWave,
    pub video: VideoFrames,
    pub imu: ImuStream,
    pub transcript: String,
    /// Structured interference track for signal-to-noise mixing (an
    /// accompaniment stand-in). Same rate as `audio`.
    pub noise: Option<AudioWave>,
    pub split: Split,
}

impl MultimodalSample {
    /// Checks the synchronization contract: all stream durations agree
    /// within one 40 ms video frame.
    pub fn validate(&self) -> Result<()> {
        let a = self.audio.seconds();
        let v = self.video.frames.rows() as f64 / self.video.frame_rate as f64;
        let i = self.imu.channels.rows() as f64 / self.imu.sample_rate as f64;
        for (name, d) in [("video", v), ("inertial", i)] {
            if (d - a).abs() > 0.040 + 1e-9 {
                return Err(Error::shape(format!(
                    "{name} stream lasts {d:.3}s but audio lasts {a:.3}s (over one video frame apart)"
                )));
            }
        }
        if let Some(n) = &self.noise {
            if n.sample_rate != self.audio.sample_rate {
                return Err(Error::shape("noise track must share the audio sample rate"));
            }
        }
        Ok(())
    }

    /// Duration of the audio track in milliseconds.
    pub fn duration_ms(&self) -> f64 {
        self.audio.seconds() * 1000.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn split_names_round_trip() {
        for s in Split::ALL {
            assert_eq!(s.name().parse::<Split>().unwrap(), s);
        }
        assert!("dev".parse::<Split>().is_err());
    }

    #[test]
    fn stream_durations_must_agree_within_one_video_frame() {
        let sample = |video_frames: usize| MultimodalSample {
            id: "s".to_string(),
            audio: AudioWave { samples: vec![0.0; 1600], sample_rate: 1600 },
            video: VideoFrames { frames: Tensor::zeros([video_frames, 4]), frame_rate: 25 },
            imu: ImuStream { channels: Tensor::zeros([100, 6]), sample_rate: 100 },
            transcript: "la".to_string(),
            noise: None,
            split: Split::Train,
        };
        sample(25).validate().unwrap();
        sample(26).validate().unwrap(); // 40 ms over: still within one frame
        assert!(sample(28).validate().is_err());
    }
}
