//! Temporal alignment and residual cross-attention fusion of the three
//! modality feature streams.
//!
//! [`align`] brings audio, video, and inertial features onto a common
//! 20 ms frame grid and width: video is upsampled ×2 and both non-audio
//! streams are padded or truncated to the audio frame count, then inertial
//! features are projected from width 120 to the model width.
//!
//! [`rca`] mixes the aligned streams with three residual cross-attention
//! blocks — each modality serves as the source once, attended to by the
//! other two — and sums their outputs into one fused sequence.

pub mod align;
pub mod rca;

use alloc::format;

use crate::encoder::FeatureSequence;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub use align::{pad_or_truncate, pad_or_truncate_bwd, upsample_repeat, upsample_repeat_bwd, Aligner, AlignerCache, ImuProjector};
pub use rca::{AttentionMaps, RcaBlock, RcaFusion, RcaFusionCache};

/// Ablation mode of the residual cross-attention blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcaMode {
    /// Self-attention and both cross-attention branches.
    Full,
    /// Cross-attention branches removed.
    NoCa,
    /// Self-attention branch removed.
    NoSa,
}

impl RcaMode {
    /// Canonical lowercase name, as used in configuration files.
    pub fn name(self) -> &'static str {
        match self {
            RcaMode::Full => "full",
            RcaMode::NoCa => "no_ca",
            RcaMode::NoSa => "no_sa",
        }
    }
}

impl core::str::FromStr for RcaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(RcaMode::Full),
            "no_ca" => Ok(RcaMode::NoCa),
            "no_sa" => Ok(RcaMode::NoSa),
            other => Err(Error::config(format!(
                "unknown fusion mode {other:?} (expected full, no_ca, or no_sa)"
            ))),
        }
    }
}

/// Three feature streams on the same frame grid: equal frame counts, equal
/// widths, equal frame periods.
#[derive(Debug, Clone)]
pub struct AlignedTriple {
    pub f_a: FeatureSequence,
    pub f_v: FeatureSequence,
    pub f_i: FeatureSequence,
}

impl AlignedTriple {
    pub fn new(f_a: FeatureSequence, f_v: FeatureSequence, f_i: FeatureSequence) -> Result<Self> {
        let (t, d) = (f_a.len(), f_a.dim());
        for (name, f) in [("video", &f_v), ("inertial", &f_i)] {
            if f.len() != t || f.dim() != d {
                return Err(Error::shape(format!(
                    "aligned triple mismatch: audio {t}×{d}, {name} {}×{}",
                    f.len(),
                    f.dim()
                )));
            }
            if (f.frame_period_ms - f_a.frame_period_ms).abs() > 1e-9 {
                return Err(Error::shape(format!(
                    "aligned triple frame periods differ: audio {} ms, {name} {} ms",
                    f_a.frame_period_ms, f.frame_period_ms
                )));
            }
        }
        Ok(AlignedTriple { f_a, f_v, f_i })
    }

    /// Common frame count.
    pub fn len(&self) -> usize {
        self.f_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Common feature width.
    pub fn dim(&self) -> usize {
        self.f_a.dim()
    }

    /// The three frame tensors in fixed (audio, video, inertial) order.
    pub fn frames(&self) -> [&Tensor; 3] {
        [&self.f_a.frames, &self.f_v.frames, &self.f_i.frames]
    }
}
