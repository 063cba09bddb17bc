//! Residual cross-attention fusion.
//!
//! One block per source modality: the source stream passes through
//! self-attention and is attended to by each of the two reference streams
//! (the reference provides queries; the source provides keys and values).
//! All branch outputs are added onto the source residually, normalized,
//! passed through a feed-forward sublayer with another residual, and
//! normalized again:
//!
//! ```text
//! f′    = LN₁(f_src + MHSA(f_src) + MHCA(f_src, f_ref1) + MHCA(f_src, f_ref2))
//! f_out = LN₂(FFN(f′) + f′)
//! ```
//!
//! The `no_ca` ablation drops both MHCA terms, `no_sa` drops the MHSA term.
//! Three blocks — one per modality as source, references in fixed
//! (audio, video, inertial) order — are summed into the fused sequence.

use alloc::format;

use crate::encoder::{FeatureSequence, Modality};
use crate::error::{Error, Result};
use crate::layers::{Ffn, FfnCache, LayerNorm, MhaCache, MultiHeadAttention};
use crate::ops::act::{Activation, LayerNormCache};
use crate::param::{ParamGroup, ParamStore};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

use super::{AlignedTriple, RcaMode};

/// Head-averaged attention weights of one block; branches that were ablated
/// away are `None`.
#[derive(Debug, Clone)]
pub struct AttentionMaps {
    /// Self-attention weights, `T×T`.
    pub self_attn: Option<Tensor>,
    /// First cross branch (queries from the first reference).
    pub cross1: Option<Tensor>,
    /// Second cross branch.
    pub cross2: Option<Tensor>,
}

/// One residual cross-attention block.
#[derive(Debug, Clone)]
pub struct RcaBlock {
    pub sa: MultiHeadAttention,
    pub ca1: MultiHeadAttention,
    pub ca2: MultiHeadAttention,
    pub ln1: LayerNorm,
    pub ffn: Ffn,
    pub ln2: LayerNorm,
    pub d: usize,
}

/// Saved intermediates for [`RcaBlock::backward`].
#[derive(Debug, Clone)]
pub struct RcaBlockCache {
    sa: Option<MhaCache>,
    ca1: Option<MhaCache>,
    ca2: Option<MhaCache>,
    ln1: LayerNormCache,
    f_prime: Tensor,
    ffn: FfnCache,
    ln2: LayerNormCache,
}

impl RcaBlockCache {
    /// Attention weights of the branches that ran.
    pub fn maps(&self) -> AttentionMaps {
        AttentionMaps {
            self_attn: self.sa.as_ref().map(MhaCache::mean_attention),
            cross1: self.ca1.as_ref().map(MhaCache::mean_attention),
            cross2: self.ca2.as_ref().map(MhaCache::mean_attention),
        }
    }

    /// The normalized pre-FFN features `f′`.
    pub fn f_prime(&self) -> &Tensor {
        &self.f_prime
    }
}

impl RcaBlock {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d: usize,
        heads: usize,
        ffn_hidden: usize,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let group = ParamGroup::Head;
        Ok(RcaBlock {
            sa: MultiHeadAttention::new(store, &format!("{name}.sa"), d, heads, group, rng)?,
            ca1: MultiHeadAttention::new(store, &format!("{name}.ca1"), d, heads, group, rng)?,
            ca2: MultiHeadAttention::new(store, &format!("{name}.ca2"), d, heads, group, rng)?,
            ln1: LayerNorm::new(store, &format!("{name}.ln1"), d, group)?,
            ffn: Ffn::new(store, &format!("{name}.ffn"), d, ffn_hidden, Activation::Gelu, group, rng)?,
            ln2: LayerNorm::new(store, &format!("{name}.ln2"), d, group)?,
            d,
        })
    }

    fn check_aligned(&self, f_src: &Tensor, f_ref1: &Tensor, f_ref2: &Tensor) -> Result<()> {
        for f in [f_ref1, f_ref2] {
            if f.shape() != f_src.shape() {
                return Err(Error::shape(format!(
                    "cross-attention inputs must be aligned: source {:?}, reference {:?}",
                    f_src.shape(),
                    f.shape()
                )));
            }
        }
        if f_src.cols() != self.d {
            return Err(Error::shape(format!(
                "block width {} but input width {}",
                self.d,
                f_src.cols()
            )));
        }
        Ok(())
    }

    pub fn forward(
        &self,
        store: &ParamStore,
        f_src: &Tensor,
        f_ref1: &Tensor,
        f_ref2: &Tensor,
        mode: RcaMode,
    ) -> Result<(Tensor, RcaBlockCache)> {
        self.check_aligned(f_src, f_ref1, f_ref2)?;
        let mut sum = f_src.clone();
        let sa = if mode != RcaMode::NoSa {
            let (y, cache) = self.sa.forward(store, f_src, f_src)?;
            sum = sum.add(&y)?;
            Some(cache)
        } else {
            None
        };
        let (ca1, ca2) = if mode != RcaMode::NoCa {
            let (y1, c1) = self.ca1.forward(store, f_ref1, f_src)?;
            sum = sum.add(&y1)?;
            let (y2, c2) = self.ca2.forward(store, f_ref2, f_src)?;
            sum = sum.add(&y2)?;
            (Some(c1), Some(c2))
        } else {
            (None, None)
        };
        let (f_prime, ln1) = self.ln1.forward(store, &sum)?;
        let (ffn_out, ffn) = self.ffn.forward(store, &f_prime)?;
        let (out, ln2) = self.ln2.forward(store, &ffn_out.add(&f_prime)?)?;
        Ok((out, RcaBlockCache { sa, ca1, ca2, ln1, f_prime, ffn, ln2 }))
    }

    /// Accumulates parameter gradients; returns
    /// `(df_src, df_ref1, df_ref2)`.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &RcaBlockCache,
        dy: &Tensor,
    ) -> Result<(Tensor, Tensor, Tensor)> {
        let dresidual = self.ln2.backward(store, &cache.ln2, dy)?;
        let dffn_in = self.ffn.backward(store, &cache.ffn, &dresidual)?;
        let df_prime = dffn_in.add(&dresidual)?;
        let dsum = self.ln1.backward(store, &cache.ln1, &df_prime)?;

        let mut df_src = dsum.clone();
        let mut df_ref1 = Tensor::zeros(dsum.shape().to_vec());
        let mut df_ref2 = Tensor::zeros(dsum.shape().to_vec());
        if let Some(sa) = &cache.sa {
            let (dq, dkv) = self.sa.backward(store, sa, &dsum)?;
            df_src = df_src.add(&dq)?.add(&dkv)?;
        }
        if let Some(ca1) = &cache.ca1 {
            let (dq, dkv) = self.ca1.backward(store, ca1, &dsum)?;
            df_ref1 = df_ref1.add(&dq)?;
            df_src = df_src.add(&dkv)?;
        }
        if let Some(ca2) = &cache.ca2 {
            let (dq, dkv) = self.ca2.backward(store, ca2, &dsum)?;
            df_ref2 = df_ref2.add(&dq)?;
            df_src = df_src.add(&dkv)?;
        }
        Ok((df_src, df_ref1, df_ref2))
    }
}

/// The full fusion stage: three blocks, one per source modality, outputs
/// summed.
#[derive(Debug, Clone)]
pub struct RcaFusion {
    pub block_a: RcaBlock,
    pub block_v: RcaBlock,
    pub block_i: RcaBlock,
}

/// Per-block caches of one fusion pass.
#[derive(Debug, Clone)]
pub struct RcaFusionCache {
    pub block_a: RcaBlockCache,
    pub block_v: RcaBlockCache,
    pub block_i: RcaBlockCache,
}

impl RcaFusionCache {
    /// Attention maps in fixed source order (audio, video, inertial).
    pub fn maps(&self) -> [AttentionMaps; 3] {
        [self.block_a.maps(), self.block_v.maps(), self.block_i.maps()]
    }
}

impl RcaFusion {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d: usize,
        heads: usize,
        ffn_hidden: usize,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        Ok(RcaFusion {
            block_a: RcaBlock::new(store, &format!("{name}.src_a"), d, heads, ffn_hidden, rng)?,
            block_v: RcaBlock::new(store, &format!("{name}.src_v"), d, heads, ffn_hidden, rng)?,
            block_i: RcaBlock::new(store, &format!("{name}.src_i"), d, heads, ffn_hidden, rng)?,
        })
    }

    /// Fuses an aligned triple; the fused sequence keeps the triple's frame
    /// period.
    pub fn forward(
        &self,
        store: &ParamStore,
        triple: &AlignedTriple,
        mode: RcaMode,
    ) -> Result<(FeatureSequence, RcaFusionCache)> {
        let [a, v, i] = triple.frames();
        let (ya, ca) = self.block_a.forward(store, a, v, i, mode)?;
        let (yv, cv) = self.block_v.forward(store, v, a, i, mode)?;
        let (yi, ci) = self.block_i.forward(store, i, a, v, mode)?;
        let fused = ya.add(&yv)?.add(&yi)?;
        let seq = FeatureSequence::new(fused, triple.f_a.frame_period_ms, Modality::Fused)?;
        Ok((seq, RcaFusionCache { block_a: ca, block_v: cv, block_i: ci }))
    }

    /// Accumulates parameter gradients; returns gradients on the aligned
    /// `(f_a, f_v, f_i)` streams.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &RcaFusionCache,
        dy: &Tensor,
    ) -> Result<(Tensor, Tensor, Tensor)> {
        let (da_src, da_v, da_i) = self.block_a.backward(store, &cache.block_a, dy)?;
        let (dv_src, dv_a, dv_i) = self.block_v.backward(store, &cache.block_v, dy)?;
        let (di_src, di_a, di_v) = self.block_i.backward(store, &cache.block_i, dy)?;
        let df_a = da_src.add(&dv_a)?.add(&di_a)?;
        let df_v = dv_src.add(&da_v)?.add(&di_v)?;
        let df_i = di_src.add(&da_i)?.add(&dv_i)?;
        Ok((df_a, df_v, df_i))
    }
}
