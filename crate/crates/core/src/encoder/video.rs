//! Video encoder: per-frame linear embedding + transformer context network.
//!
//! Input frames are already feature vectors (one per 40 ms video frame), so
//! the frontend is a single learned affine map with GELU; the transformer
//! stack then mixes information across time. Frame count is preserved.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::layers::{Linear, TransformerCache};
use crate::ops::act::{activation, activation_bwd, Activation};
use crate::param::{ParamGroup, ParamStore};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

use super::{FeatureSequence, Modality, TransformerStack, VideoFrames, DEFAULT_VIDEO_RATE};

/// Shape hyperparameters of the video encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoEncoderConfig {
    /// Width of the incoming per-frame feature vectors.
    pub d_in: usize,
    /// Width of the embedded frames and transformer blocks.
    pub d_model: usize,
    /// Attention heads per transformer block (must divide `d_model`).
    pub heads: usize,
    /// Hidden width of each transformer feed-forward sublayer.
    pub ffn_hidden: usize,
    /// Number of transformer blocks.
    pub n_blocks: usize,
    /// Expected video frame rate; inputs at any other rate are rejected.
    pub frame_rate: u32,
}

impl Default for VideoEncoderConfig {
    fn default() -> Self {
        VideoEncoderConfig {
            d_in: 16,
            d_model: 64,
            heads: 4,
            ffn_hidden: 256,
            n_blocks: 2,
            frame_rate: DEFAULT_VIDEO_RATE,
        }
    }
}

/// Per-frame visual features → embedded 40 ms feature frames.
#[derive(Debug, Clone)]
pub struct VideoEncoder {
    embed: Linear,
    stack: TransformerStack,
    config: VideoEncoderConfig,
}

/// Saved intermediates for [`VideoEncoder::backward`].
#[derive(Debug, Clone)]
pub struct VideoEncoderCache {
    /// Encoder input, `T×D_in`.
    x: Tensor,
    /// Pre-GELU embedding, `T×D_model`.
    embed_pre: Tensor,
    stack: Vec<TransformerCache>,
}

impl VideoEncoderCache {
    /// Per-block self-attention maps averaged over heads.
    pub fn attention_maps(&self) -> Vec<Tensor> {
        TransformerStack::attention_maps(&self.stack)
    }
}

impl VideoEncoder {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        config: &VideoEncoderConfig,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        if config.d_in == 0 || config.d_model == 0 {
            return Err(Error::config("video encoder widths must be positive"));
        }
        let embed = Linear::new(
            store,
            &format!("{name}.embed"),
            config.d_in,
            config.d_model,
            true,
            ParamGroup::Encoder,
            rng,
        )?;
        let stack = TransformerStack::new(
            store,
            &format!("{name}.ctx"),
            config.n_blocks,
            config.d_model,
            config.heads,
            config.ffn_hidden,
            ParamGroup::Encoder,
            rng,
        )?;
        Ok(VideoEncoder { embed, stack, config: config.clone() })
    }

    /// Milliseconds per frame at the configured rate.
    pub fn frame_period_ms(&self) -> f64 {
        1000.0 / self.config.frame_rate as f64
    }

    pub fn forward(
        &self,
        store: &ParamStore,
        video: &VideoFrames,
    ) -> Result<(FeatureSequence, VideoEncoderCache)> {
        if video.frame_rate != self.config.frame_rate {
            return Err(Error::config(format!(
                "video encoder configured for {} Hz, got {} Hz",
                self.config.frame_rate, video.frame_rate
            )));
        }
        if video.frames.cols() != self.config.d_in {
            return Err(Error::shape(format!(
                "video encoder expects {}-dim frames, got {}",
                self.config.d_in,
                video.frames.cols()
            )));
        }
        let embed_pre = self.embed.forward(store, &video.frames)?;
        let embedded = activation(&embed_pre, Activation::Gelu);
        let (y, stack_caches) = self.stack.forward(store, &embedded)?;
        let seq = FeatureSequence::new(y, self.frame_period_ms(), Modality::Video)?;
        Ok((seq, VideoEncoderCache { x: video.frames.clone(), embed_pre, stack: stack_caches }))
    }

    /// Accumulates parameter gradients; returns the gradient on the input
    /// frames, `T×D_in`.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &VideoEncoderCache,
        dy: &Tensor,
    ) -> Result<Tensor> {
        let dembedded = self.stack.backward(store, &cache.stack, dy)?;
        let dembed_pre = activation_bwd(&cache.embed_pre, Activation::Gelu, &dembedded)?;
        self.embed.backward(store, &cache.x, &dembed_pre)
    }
}
