//! Recognition backend: vocabulary, CTC branch, and the attention
//! sequence-to-sequence branch trained jointly with it.

pub mod ctc;
pub mod s2s;
pub mod vocab;

pub use ctc::{ctc_collapse, ctc_log_prob, ctc_loss, min_frames};
pub use s2s::{S2sConfig, S2sDecoder, S2sState, S2sStepCache, S2sTrace};
pub use vocab::{Vocabulary, N_CHAR_TARGETS, N_TOKENS};

use alloc::format;

use crate::error::{Error, Result};
use crate::layers::{Ffn, FfnCache, Linear};
use crate::ops::act::{log_softmax_rows, log_softmax_rows_bwd, Activation};
use crate::param::{ParamGroup, ParamStore};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// Breakdown of the joint training objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub l_ctc: f64,
    pub l_s2s: f64,
    /// `(1−α)·l_s2s + α·l_ctc`, computed exactly in that form.
    pub l_joint: f64,
    pub alpha: f64,
}

/// Combines the two branch losses with interpolation weight `alpha` on the
/// CTC side.
pub fn joint_loss(l_ctc: f64, l_s2s: f64, alpha: f64) -> Result<LossParts> {
    if !(alpha.is_finite() && (0.0..=1.0).contains(&alpha)) {
        return Err(Error::config(format!(
            "loss interpolation weight must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(LossParts { l_ctc, l_s2s, l_joint: (1.0 - alpha) * l_s2s + alpha * l_ctc, alpha })
}

/// Shared recognition encoder over fused features: two linear layers with a
/// GELU between, frame count preserved.
#[derive(Debug, Clone)]
pub struct MlpEncoder {
    ffn: Ffn,
}

/// Saved intermediates for [`MlpEncoder::backward`].
#[derive(Debug, Clone)]
pub struct MlpEncoderCache(FfnCache);

impl MlpEncoder {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d_model: usize,
        group: ParamGroup,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        Ok(MlpEncoder {
            ffn: Ffn::new(store, name, d_model, d_model, Activation::Gelu, group, rng)?,
        })
    }

    /// `x: T×D` fused features → `T×D` encodings.
    pub fn forward(&self, store: &ParamStore, x: &Tensor) -> Result<(Tensor, MlpEncoderCache)> {
        let (y, cache) = self.ffn.forward(store, x)?;
        Ok((y, MlpEncoderCache(cache)))
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &MlpEncoderCache,
        dy: &Tensor,
    ) -> Result<Tensor> {
        self.ffn.backward(store, &cache.0, dy)
    }
}

/// Per-frame CTC output head: linear projection followed by log-softmax
/// over the token-plus-blank classes.
#[derive(Debug, Clone)]
pub struct CtcHead {
    lin: Linear,
}

/// Saved intermediates for [`CtcHead::backward`].
#[derive(Debug, Clone)]
pub struct CtcHeadCache {
    x: Tensor,
    logp: Tensor,
}

impl CtcHead {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d_model: usize,
        ctc_dim: usize,
        group: ParamGroup,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        Ok(CtcHead { lin: Linear::new(store, name, d_model, ctc_dim, true, group, rng)? })
    }

    /// `x: T×D` → per-frame log-probabilities `T×ctc_dim`.
    pub fn forward(&self, store: &ParamStore, x: &Tensor) -> Result<(Tensor, CtcHeadCache)> {
        let logits = self.lin.forward(store, x)?;
        let logp = log_softmax_rows(&logits)?;
        Ok((logp.clone(), CtcHeadCache { x: x.clone(), logp }))
    }

    /// Maps `dL/dlogp` back to the input features.
    pub fn backward(&self, store: &mut ParamStore, cache: &CtcHeadCache, dlogp: &Tensor) -> Result<Tensor> {
        let dlogits = log_softmax_rows_bwd(&cache.logp, dlogp)?;
        self.lin.backward(store, &cache.x, &dlogits)
    }
}
