//! Modality encoders.
//!
//! Three encoders turn raw synchronized signals into frame-level feature
//! sequences:
//!
//! * [`audio::AudioEncoder`] — strided 1-D convolutions over the raw
//!   waveform followed by transformer blocks; emits 20 ms frames.
//! * [`video::VideoEncoder`] — per-frame linear embedding followed by
//!   transformer blocks; emits 40 ms frames.
//! * [`imu::ImuEncoder`] — a convolutional-recurrent network over
//!   accelerometer/gyroscope channels; emits 20 ms frames of width 120 and
//!   doubles as the voice-activity-detection backbone via [`imu::VadHead`].
//!
//! All encoders read their weights from a [`ParamStore`] and return caches
//! sufficient for their hand-written backward passes.

pub mod audio;
pub mod imu;
pub mod video;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::layers::{sinusoidal_pe, TransformerBlock, TransformerCache};
use crate::param::{ParamGroup, ParamStore};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

pub use audio::{AudioEncoder, AudioEncoderCache, AudioEncoderConfig, AUDIO_DOWNSAMPLE};
pub use imu::{
    augment_channels, bce_with_logits, ImuEncoder, ImuEncoderCache, ImuEncoderConfig, VadHead,
    IMU_AUG_CHANNELS, IMU_FEATURE_DIM, IMU_GRU_HIDDEN, IMU_RAW_CHANNELS,
};
pub use video::{VideoEncoder, VideoEncoderCache, VideoEncoderConfig};

/// Which signal a feature sequence was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Audio,
    Video,
    Imu,
    /// Post-fusion features (all modalities mixed).
    Fused,
    /// Output of the shared encoder MLP feeding the recognition heads.
    Encoded,
}

/// A `T×D` sequence of feature frames with a fixed frame period.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    /// `T×D` feature frames, one row per frame.
    pub frames: Tensor,
    /// Duration of one frame in milliseconds.
    pub frame_period_ms: f64,
    /// Provenance tag.
    pub modality: Modality,
}

impl FeatureSequence {
    pub fn new(frames: Tensor, frame_period_ms: f64, modality: Modality) -> Result<Self> {
        if frames.rank() != 2 {
            return Err(Error::shape(format!(
                "feature sequence must be T×D, got rank {}",
                frames.rank()
            )));
        }
        if !(frame_period_ms > 0.0) {
            return Err(Error::config(format!(
                "frame period must be positive, got {frame_period_ms} ms"
            )));
        }
        Ok(FeatureSequence { frames, frame_period_ms, modality })
    }

    /// Number of frames `T`.
    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Feature width `D`.
    pub fn dim(&self) -> usize {
        self.frames.cols()
    }
}

/// Raw mono waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioWave {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

/// Default waveform sample rate (Hz).
pub const DEFAULT_AUDIO_RATE: u32 = 1600;

impl AudioWave {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::config("audio sample rate must be positive"));
        }
        Ok(AudioWave { samples, sample_rate })
    }

    /// Duration in seconds.
    pub fn seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Per-frame visual feature vectors (a stand-in for lip-region crops).
#[derive(Debug, Clone, PartialEq)]
pub struct VideoFrames {
    /// `T_v × D_vin` feature rows.
    pub frames: Tensor,
    pub frame_rate: u32,
}

/// Default video frame rate (Hz).
pub const DEFAULT_VIDEO_RATE: u32 = 25;

impl VideoFrames {
    pub fn new(frames: Tensor, frame_rate: u32) -> Result<Self> {
        if frames.rank() != 2 {
            return Err(Error::shape("video frames must be T×D"));
        }
        if frame_rate == 0 {
            return Err(Error::config("video frame rate must be positive"));
        }
        Ok(VideoFrames { frames, frame_rate })
    }
}

/// Inertial sensor stream: 3 accelerometer + 3 gyroscope channels per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ImuStream {
    /// `T_i × 6` rows: `[ax, ay, az, gx, gy, gz]`.
    pub channels: Tensor,
    pub sample_rate: u32,
}

/// Default inertial sample rate (Hz).
pub const DEFAULT_IMU_RATE: u32 = 100;

impl ImuStream {
    pub fn new(channels: Tensor, sample_rate: u32) -> Result<Self> {
        if channels.rank() != 2 || channels.cols() != IMU_RAW_CHANNELS {
            return Err(Error::shape(format!(
                "inertial stream must be T×{IMU_RAW_CHANNELS}, got {:?}",
                channels.shape()
            )));
        }
        if sample_rate == 0 {
            return Err(Error::config("inertial sample rate must be positive"));
        }
        Ok(ImuStream { channels, sample_rate })
    }
}

/// A stack of pre-norm transformer blocks with sinusoidal positions added to
/// the input: the shared "context network" of the audio and video encoders.
#[derive(Debug, Clone)]
pub struct TransformerStack {
    pub blocks: Vec<TransformerBlock>,
    pub d: usize,
}

impl TransformerStack {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        n_blocks: usize,
        d: usize,
        heads: usize,
        ffn_hidden: usize,
        group: ParamGroup,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let mut blocks = Vec::with_capacity(n_blocks);
        for i in 0..n_blocks {
            blocks.push(TransformerBlock::new(
                store,
                &format!("{name}.block{i}"),
                d,
                heads,
                ffn_hidden,
                group,
                rng,
            )?);
        }
        Ok(TransformerStack { blocks, d })
    }

    /// `x: T×D` → `T×D`; positions are added before the first block.
    pub fn forward(
        &self,
        store: &ParamStore,
        x: &Tensor,
    ) -> Result<(Tensor, Vec<TransformerCache>)> {
        if x.cols() != self.d {
            return Err(Error::shape(format!(
                "transformer stack expects width {}, got {}",
                self.d,
                x.cols()
            )));
        }
        let mut h = x.add(&sinusoidal_pe(x.rows(), self.d))?;
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (next, cache) = block.forward(store, &h)?;
            h = next;
            caches.push(cache);
        }
        Ok((h, caches))
    }

    /// Accumulates parameter gradients and returns the input gradient
    /// (position addition is gradient-transparent).
    pub fn backward(
        &self,
        store: &mut ParamStore,
        caches: &[TransformerCache],
        dy: &Tensor,
    ) -> Result<Tensor> {
        let mut grad = dy.clone();
        for (block, cache) in self.blocks.iter().zip(caches).rev() {
            grad = block.backward(store, cache, &grad)?;
        }
        Ok(grad)
    }

    /// Attention maps (averaged over heads) of every block, in order.
    pub fn attention_maps(caches: &[TransformerCache]) -> Vec<Tensor> {
        caches.iter().map(|c| c.attention_map()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{finite_diff_grad, max_rel_error};

    fn rand(rng: &mut SeededRng, shape: &[usize]) -> Tensor {
        let n: usize = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| 0.5 * rng.normal()).collect::<Vec<_>>())
            .unwrap()
    }

    #[test]
    fn stream_constructors_validate_shapes() {
        assert!(AudioWave::new(alloc::vec![0.0; 4], 0).is_err());
        assert!(VideoFrames::new(Tensor::from_slice(&[1.0]), 25).is_err());
        assert!(ImuStream::new(Tensor::zeros([5, 4]), 100).is_err());
        assert!(ImuStream::new(Tensor::zeros([5, 6]), 100).is_ok());
        let w = AudioWave::new(alloc::vec![0.0; 800], 1600).unwrap();
        assert!((w.seconds() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn feature_sequence_accessors() {
        let f =
            FeatureSequence::new(Tensor::zeros([4, 3]), 20.0, Modality::Audio).unwrap();
        assert_eq!(f.len(), 4);
        assert_eq!(f.dim(), 3);
        assert!(FeatureSequence::new(Tensor::zeros([4]), 20.0, Modality::Audio).is_err());
        assert!(FeatureSequence::new(Tensor::zeros([4, 3]), 0.0, Modality::Audio).is_err());
    }

    #[test]
    fn stack_positions_make_identical_rows_distinct() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(5, 1);
        let stack =
            TransformerStack::new(&mut store, "ctx", 1, 8, 2, 16, ParamGroup::Encoder, &mut rng)
                .unwrap();
        // Two identical input rows: only position information can separate them.
        let x = Tensor::from_rows(2, 8, alloc::vec![0.3; 16]).unwrap();
        let (y, _) = stack.forward(&store, &x).unwrap();
        assert_ne!(y.row(0), y.row(1));
    }

    #[test]
    fn stack_gradients_check() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(6, 2);
        let stack =
            TransformerStack::new(&mut store, "ctx", 2, 6, 2, 10, ParamGroup::Encoder, &mut rng)
                .unwrap();
        let x = rand(&mut rng, &[3, 6]);
        let w = rand(&mut rng, &[3, 6]);
        let (_, caches) = stack.forward(&store, &x).unwrap();
        let mut g_store = store.clone();
        let dx = stack
            .backward(&mut g_store, &caches, &w)
            .unwrap();
        let nx = finite_diff_grad(&x, 1e-6, |t| {
            stack.forward(&store, t).unwrap().0.hadamard(&w).unwrap().sum()
        });
        assert!(max_rel_error(&dx, &nx) < 1e-5);
        // Parameters of both blocks take gradient.
        for id in g_store.ids() {
            let g = g_store.grad(id);
            assert!(g.data().iter().any(|&v| v != 0.0), "zero grad on a stack parameter");
        }
    }

    #[test]
    fn stack_rejects_width_mismatch() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(7, 3);
        let stack =
            TransformerStack::new(&mut store, "ctx", 1, 8, 2, 16, ParamGroup::Encoder, &mut rng)
                .unwrap();
        assert!(stack.forward(&store, &Tensor::zeros([3, 5])).is_err());
    }
}
