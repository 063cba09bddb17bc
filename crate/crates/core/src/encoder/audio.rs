//! Audio encoder: strided convolutional frontend + transformer context
//! network over the raw waveform.
//!
//! The frontend is four blocks of `conv1d → layer norm → GELU` with kernel
//! sizes `{8,4,4,4}` and strides `{4,2,2,2}`. The total stride is 32, so a
//! 1600 Hz waveform comes out at 50 feature frames per second (20 ms per
//! frame). Same-style padding `(k−s)/2` keeps the frame count at exactly
//! `⌊T/32⌋` for inputs no shorter than 32 samples.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::layers::{Conv1d, LayerNorm, TransformerCache};
use crate::ops::act::{activation, activation_bwd, Activation, LayerNormCache};
use crate::ops::conv::conv1d_out_len;
use crate::param::{ParamGroup, ParamStore};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

use super::{AudioWave, FeatureSequence, Modality, TransformerStack, DEFAULT_AUDIO_RATE};

/// Kernel sizes of the four frontend blocks.
const KERNELS: [usize; 4] = [8, 4, 4, 4];
/// Strides of the four frontend blocks.
const STRIDES: [usize; 4] = [4, 2, 2, 2];

/// Total downsampling factor of the frontend: waveform samples per frame.
pub const AUDIO_DOWNSAMPLE: usize = 32;

/// Shape hyperparameters of the audio encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioEncoderConfig {
    /// Feature width of the frontend output and the transformer blocks.
    pub d_model: usize,
    /// Attention heads per transformer block (must divide `d_model`).
    pub heads: usize,
    /// Hidden width of each transformer feed-forward sublayer.
    pub ffn_hidden: usize,
    /// Number of transformer blocks.
    pub n_blocks: usize,
    /// Expected waveform sample rate; inputs at any other rate are rejected.
    pub sample_rate: u32,
}

impl Default for AudioEncoderConfig {
    fn default() -> Self {
        AudioEncoderConfig {
            d_model: 64,
            heads: 4,
            ffn_hidden: 256,
            n_blocks: 2,
            sample_rate: DEFAULT_AUDIO_RATE,
        }
    }
}

/// One frontend block: convolution, then per-frame layer norm and GELU.
#[derive(Debug, Clone)]
struct ConvBlock {
    conv: Conv1d,
    ln: LayerNorm,
}

#[derive(Debug, Clone)]
struct ConvBlockCache {
    /// Block input, `Cin×T`.
    x: Tensor,
    ln_cache: LayerNormCache,
    /// Layer-norm output (= GELU input), `T'×Cout`.
    ln_out: Tensor,
}

impl ConvBlock {
    fn new(
        store: &mut ParamStore,
        name: &str,
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let padding = (k - stride) / 2;
        Ok(ConvBlock {
            conv: Conv1d::new(
                store,
                &format!("{name}.conv"),
                cin,
                cout,
                k,
                stride,
                padding,
                ParamGroup::Encoder,
                rng,
            )?,
            ln: LayerNorm::new(store, &format!("{name}.ln"), cout, ParamGroup::Encoder)?,
        })
    }

    /// `x: Cin×T` → `Cout×T'`.
    fn forward(&self, store: &ParamStore, x: &Tensor) -> Result<(Tensor, ConvBlockCache)> {
        let c = self.conv.forward(store, x)?;
        let (ln_out, ln_cache) = self.ln.forward(store, &c.transposed()?)?;
        let y = activation(&ln_out, Activation::Gelu);
        Ok((y.transposed()?, ConvBlockCache { x: x.clone(), ln_cache, ln_out }))
    }

    fn backward(
        &self,
        store: &mut ParamStore,
        cache: &ConvBlockCache,
        dy: &Tensor,
    ) -> Result<Tensor> {
        let dact = activation_bwd(&cache.ln_out, Activation::Gelu, &dy.transposed()?)?;
        let dct = self.ln.backward(store, &cache.ln_cache, &dact)?;
        self.conv.backward(store, &cache.x, &dct.transposed()?)
    }
}

/// Waveform → 20 ms feature frames.
#[derive(Debug, Clone)]
pub struct AudioEncoder {
    frontend: Vec<ConvBlock>,
    stack: TransformerStack,
    config: AudioEncoderConfig,
}

/// Saved intermediates for [`AudioEncoder::backward`].
#[derive(Debug, Clone)]
pub struct AudioEncoderCache {
    conv: Vec<ConvBlockCache>,
    stack: Vec<TransformerCache>,
}

impl AudioEncoderCache {
    /// Per-block self-attention maps averaged over heads.
    pub fn attention_maps(&self) -> Vec<Tensor> {
        TransformerStack::attention_maps(&self.stack)
    }
}

impl AudioEncoder {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        config: &AudioEncoderConfig,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        if config.d_model == 0 {
            return Err(Error::config("audio encoder width must be positive"));
        }
        let mut frontend = Vec::with_capacity(KERNELS.len());
        for (i, (&k, &s)) in KERNELS.iter().zip(&STRIDES).enumerate() {
            let cin = if i == 0 { 1 } else { config.d_model };
            frontend.push(ConvBlock::new(
                store,
                &format!("{name}.frontend{i}"),
                cin,
                config.d_model,
                k,
                s,
                rng,
            )?);
        }
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
        Ok(AudioEncoder { frontend, stack, config: config.clone() })
    }

    /// Number of output frames for a waveform of `samples` samples, or an
    /// error if the input is shorter than the frontend's receptive field.
    pub fn frames_for(samples: usize) -> Result<usize> {
        let mut t = samples;
        for (&k, &s) in KERNELS.iter().zip(&STRIDES) {
            let padding = (k - s) / 2;
            if t + 2 * padding < k {
                return Err(Error::shape(format!(
                    "waveform of {samples} samples is shorter than the frontend receptive field"
                )));
            }
            t = conv1d_out_len(t, k, s, padding);
        }
        Ok(t)
    }

    /// Milliseconds per output frame at the configured sample rate.
    pub fn frame_period_ms(&self) -> f64 {
        AUDIO_DOWNSAMPLE as f64 * 1000.0 / self.config.sample_rate as f64
    }

    pub fn forward(
        &self,
        store: &ParamStore,
        wave: &AudioWave,
    ) -> Result<(FeatureSequence, AudioEncoderCache)> {
        if wave.sample_rate != self.config.sample_rate {
            return Err(Error::config(format!(
                "audio encoder configured for {} Hz, got {} Hz",
                self.config.sample_rate, wave.sample_rate
            )));
        }
        Self::frames_for(wave.samples.len())?;
        let mut h = Tensor::from_rows(1, wave.samples.len(), wave.samples.clone())?;
        let mut conv_caches = Vec::with_capacity(self.frontend.len());
        for block in &self.frontend {
            let (next, cache) = block.forward(store, &h)?;
            h = next;
            conv_caches.push(cache);
        }
        let (y, stack_caches) = self.stack.forward(store, &h.transposed()?)?;
        let seq = FeatureSequence::new(y, self.frame_period_ms(), Modality::Audio)?;
        Ok((seq, AudioEncoderCache { conv: conv_caches, stack: stack_caches }))
    }

    /// Accumulates parameter gradients; returns the waveform gradient `1×T`.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &AudioEncoderCache,
        dy: &Tensor,
    ) -> Result<Tensor> {
        let dlatent = self.stack.backward(store, &cache.stack, dy)?;
        let mut grad = dlatent.transposed()?;
        for (block, c) in self.frontend.iter().zip(&cache.conv).rev() {
            grad = block.backward(store, c, &grad)?;
        }
        Ok(grad)
    }
}
