//! Parameterized layers: thin wrappers that bind [`crate::ops`] kernels to
//! named tensors in a [`ParamStore`].
//!
//! Construction registers parameters (deterministically initialized from a
//! [`SeededRng`] substream) and keeps only [`ParamId`] handles; `forward`
//! reads values through the store and returns whatever cache its paired
//! `backward` needs. `backward` accumulates parameter gradients into the
//! store and returns the input gradient.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::ops::act::{activation, activation_bwd, layer_norm, layer_norm_bwd, Activation, LayerNormCache};
use crate::ops::attention::{mh_attention, mh_attention_bwd, AttnCache, AttnProj};
use crate::ops::conv::{conv1d, conv1d_bwd};
use crate::ops::gru::{gru_seq, gru_seq_bwd, GruCache, GruWeights};
use crate::ops::linalg::{add_bias, add_bias_bwd, matmul, matmul_bwd};
use crate::param::{uniform_init, xavier_uniform, ParamGroup, ParamId, ParamStore};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// Fully connected layer computing `x·W (+ b)` with `W: Din×Dout`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
    pub din: usize,
    pub dout: usize,
}

impl Linear {
    /// Registers a Xavier-initialized weight (and zero bias) under
    /// `{name}.w` / `{name}.b`.
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        din: usize,
        dout: usize,
        bias: bool,
        group: ParamGroup,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let w = store.add(
            format!("{name}.w"),
            xavier_uniform(rng, &[din, dout], din, dout),
            group,
        )?;
        let b = if bias {
            Some(store.add(format!("{name}.b"), Tensor::zeros([dout]), group)?)
        } else {
            None
        };
        Ok(Linear { w, b, din, dout })
    }

    /// `y = x·W (+ b)` for `x: T×Din`.
    pub fn forward(&self, store: &ParamStore, x: &Tensor) -> Result<Tensor> {
        let y = matmul(x, store.value(self.w))?;
        match self.b {
            Some(b) => add_bias(&y, store.value(b)),
            None => Ok(y),
        }
    }

    /// Accumulates `dW`/`db` and returns `dx`.
    pub fn backward(&self, store: &mut ParamStore, x: &Tensor, dy: &Tensor) -> Result<Tensor> {
        let (dx, dw) = matmul_bwd(x, store.value(self.w), dy)?;
        store.accum_grad(self.w, &dw)?;
        if let Some(b) = self.b {
            store.accum_grad(b, &add_bias_bwd(dy))?;
        }
        Ok(dx)
    }
}

/// Layer normalization with learned scale/shift.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub eps: f64,
}

impl LayerNorm {
    /// Registers `{name}.gamma` (ones) and `{name}.beta` (zeros).
    pub fn new(store: &mut ParamStore, name: &str, d: usize, group: ParamGroup) -> Result<Self> {
        let gamma = store.add(format!("{name}.gamma"), Tensor::full([d], 1.0), group)?;
        let beta = store.add(format!("{name}.beta"), Tensor::zeros([d]), group)?;
        Ok(LayerNorm { gamma, beta, eps: 1e-5 })
    }

    pub fn forward(&self, store: &ParamStore, x: &Tensor) -> Result<(Tensor, LayerNormCache)> {
        layer_norm(x, store.value(self.gamma), store.value(self.beta), self.eps)
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &LayerNormCache,
        dy: &Tensor,
    ) -> Result<Tensor> {
        let (dx, dgamma, dbeta) = layer_norm_bwd(cache, store.value(self.gamma), dy)?;
        store.accum_grad(self.gamma, &dgamma)?;
        store.accum_grad(self.beta, &dbeta)?;
        Ok(dx)
    }
}

/// Two-layer position-wise feed-forward network.
#[derive(Debug, Clone)]
pub struct Ffn {
    pub lin1: Linear,
    pub lin2: Linear,
    pub act: Activation,
}

/// Saved intermediates for [`Ffn::backward`].
#[derive(Debug, Clone)]
pub struct FfnCache {
    x: Tensor,
    h_pre: Tensor,
    h_act: Tensor,
}

impl Ffn {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d: usize,
        hidden: usize,
        act: Activation,
        group: ParamGroup,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let lin1 = Linear::new(store, &format!("{name}.fc1"), d, hidden, true, group, rng)?;
        let lin2 = Linear::new(store, &format!("{name}.fc2"), hidden, d, true, group, rng)?;
        Ok(Ffn { lin1, lin2, act })
    }

    pub fn forward(&self, store: &ParamStore, x: &Tensor) -> Result<(Tensor, FfnCache)> {
        let h_pre = self.lin1.forward(store, x)?;
        let h_act = activation(&h_pre, self.act);
        let y = self.lin2.forward(store, &h_act)?;
        Ok((y, FfnCache { x: x.clone(), h_pre, h_act }))
    }

    pub fn backward(&self, store: &mut ParamStore, cache: &FfnCache, dy: &Tensor) -> Result<Tensor> {
        let dh_act = self.lin2.backward(store, &cache.h_act, dy)?;
        let dh_pre = activation_bwd(&cache.h_pre, self.act, &dh_act)?;
        self.lin1.backward(store, &cache.x, &dh_pre)
    }
}

/// Multi-head attention layer owning its four projections.
#[derive(Debug, Clone)]
pub struct MultiHeadAttention {
    pub heads: usize,
    pub wq: ParamId,
    pub bq: ParamId,
    pub wk: ParamId,
    pub bk: ParamId,
    pub wv: ParamId,
    pub bv: ParamId,
    pub wo: ParamId,
    pub bo: ParamId,
}

/// Saved inputs and kernel cache for [`MultiHeadAttention::backward`].
#[derive(Debug, Clone)]
pub struct MhaCache {
    q_in: Tensor,
    kv_in: Tensor,
    inner: AttnCache,
}

impl MhaCache {
    /// Attention weights averaged across heads (`Tq×Tk`), for export.
    pub fn mean_attention(&self) -> Tensor {
        self.inner.mean_attention()
    }
}

impl MultiHeadAttention {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d: usize,
        heads: usize,
        group: ParamGroup,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let proj = |store: &mut ParamStore, rng: &mut SeededRng, suffix: &str| {
            store.add(
                format!("{name}.{suffix}.w"),
                xavier_uniform(rng, &[d, d], d, d),
                group,
            )
        };
        let wq = proj(store, rng, "q")?;
        let bq = store.add(format!("{name}.q.b"), Tensor::zeros([d]), group)?;
        let wk = proj(store, rng, "k")?;
        let bk = store.add(format!("{name}.k.b"), Tensor::zeros([d]), group)?;
        let wv = proj(store, rng, "v")?;
        let bv = store.add(format!("{name}.v.b"), Tensor::zeros([d]), group)?;
        let wo = proj(store, rng, "o")?;
        let bo = store.add(format!("{name}.o.b"), Tensor::zeros([d]), group)?;
        Ok(MultiHeadAttention { heads, wq, bq, wk, bk, wv, bv, wo, bo })
    }

    fn proj<'a>(&self, store: &'a ParamStore) -> AttnProj<'a> {
        AttnProj {
            wq: store.value(self.wq),
            bq: store.value(self.bq),
            wk: store.value(self.wk),
            bk: store.value(self.bk),
            wv: store.value(self.wv),
            bv: store.value(self.bv),
            wo: store.value(self.wo),
            bo: store.value(self.bo),
        }
    }

    /// Queries from `q_in`, keys and values from `kv_in`.
    pub fn forward(
        &self,
        store: &ParamStore,
        q_in: &Tensor,
        kv_in: &Tensor,
    ) -> Result<(Tensor, MhaCache)> {
        let (y, inner) = mh_attention(q_in, kv_in, &self.proj(store), self.heads)?;
        Ok((y, MhaCache { q_in: q_in.clone(), kv_in: kv_in.clone(), inner }))
    }

    /// Returns `(dq_in, dkv_in)`; parameter gradients are accumulated.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &MhaCache,
        dy: &Tensor,
    ) -> Result<(Tensor, Tensor)> {
        let (dq_in, dkv_in, g) =
            mh_attention_bwd(&cache.q_in, &cache.kv_in, &self.proj(store), &cache.inner, dy)?;
        store.accum_grad(self.wq, &g.dwq)?;
        store.accum_grad(self.bq, &g.dbq)?;
        store.accum_grad(self.wk, &g.dwk)?;
        store.accum_grad(self.bk, &g.dbk)?;
        store.accum_grad(self.wv, &g.dwv)?;
        store.accum_grad(self.bv, &g.dbv)?;
        store.accum_grad(self.wo, &g.dwo)?;
        store.accum_grad(self.bo, &g.dbo)?;
        Ok((dq_in, dkv_in))
    }
}

/// Pre-norm transformer encoder block:
/// `x + SA(LN(x))` followed by `· + FFN(LN(·))`.
#[derive(Debug, Clone)]
pub struct TransformerBlock {
    pub ln1: LayerNorm,
    pub attn: MultiHeadAttention,
    pub ln2: LayerNorm,
    pub ffn: Ffn,
}

/// Saved intermediates for [`TransformerBlock::backward`].
#[derive(Debug, Clone)]
pub struct TransformerCache {
    ln1_cache: LayerNormCache,
    attn_cache: MhaCache,
    ln2_cache: LayerNormCache,
    ffn_cache: FfnCache,
}

impl TransformerCache {
    /// Self-attention weights averaged across heads (`T×T`), for export.
    pub fn attention_map(&self) -> Tensor {
        self.attn_cache.mean_attention()
    }
}

impl TransformerBlock {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d: usize,
        heads: usize,
        ffn_hidden: usize,
        group: ParamGroup,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        Ok(TransformerBlock {
            ln1: LayerNorm::new(store, &format!("{name}.ln1"), d, group)?,
            attn: MultiHeadAttention::new(store, &format!("{name}.attn"), d, heads, group, rng)?,
            ln2: LayerNorm::new(store, &format!("{name}.ln2"), d, group)?,
            ffn: Ffn::new(store, &format!("{name}.ffn"), d, ffn_hidden, Activation::Gelu, group, rng)?,
        })
    }

    pub fn forward(&self, store: &ParamStore, x: &Tensor) -> Result<(Tensor, TransformerCache)> {
        let (normed1, ln1_cache) = self.ln1.forward(store, x)?;
        let (attn_out, attn_cache) = self.attn.forward(store, &normed1, &normed1)?;
        let mid = x.add(&attn_out)?;
        let (normed2, ln2_cache) = self.ln2.forward(store, &mid)?;
        let (ffn_out, ffn_cache) = self.ffn.forward(store, &normed2)?;
        let y = mid.add(&ffn_out)?;
        Ok((y, TransformerCache { ln1_cache, attn_cache, ln2_cache, ffn_cache }))
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &TransformerCache,
        dy: &Tensor,
    ) -> Result<Tensor> {
        // y = mid + ffn(ln2(mid))
        let dffn_in = self.ffn.backward(store, &cache.ffn_cache, dy)?;
        let dmid_from_ffn = self.ln2.backward(store, &cache.ln2_cache, &dffn_in)?;
        let dmid = dy.add(&dmid_from_ffn)?;
        // mid = x + attn(ln1(x), ln1(x))
        let (dq, dkv) = self.attn.backward(store, &cache.attn_cache, &dmid)?;
        let dnormed1 = dq.add(&dkv)?;
        let dx_from_attn = self.ln1.backward(store, &cache.ln1_cache, &dnormed1)?;
        dmid.add(&dx_from_attn)
    }
}

/// 1-D convolution layer over `Cin×T` signals.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub w: ParamId,
    pub b: ParamId,
    pub stride: usize,
    pub padding: usize,
}

impl Conv1d {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        padding: usize,
        group: ParamGroup,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let w = store.add(
            format!("{name}.w"),
            xavier_uniform(rng, &[cout, cin, k], cin * k, cout * k),
            group,
        )?;
        let b = store.add(format!("{name}.b"), Tensor::zeros([cout]), group)?;
        Ok(Conv1d { w, b, stride, padding })
    }

    pub fn forward(&self, store: &ParamStore, x: &Tensor) -> Result<Tensor> {
        conv1d(x, store.value(self.w), store.value(self.b), self.stride, self.padding)
    }

    pub fn backward(&self, store: &mut ParamStore, x: &Tensor, dy: &Tensor) -> Result<Tensor> {
        let (dx, dw, db) = conv1d_bwd(x, store.value(self.w), self.stride, self.padding, dy)?;
        store.accum_grad(self.w, &dw)?;
        store.accum_grad(self.b, &db)?;
        Ok(dx)
    }
}

/// One GRU direction with store-registered weights.
#[derive(Debug, Clone)]
pub struct GruLayer {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub b_ih: ParamId,
    pub b_hh: ParamId,
    pub hidden: usize,
    pub reverse: bool,
}

impl GruLayer {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        din: usize,
        hidden: usize,
        reverse: bool,
        group: ParamGroup,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let bound = 1.0 / libm::sqrt(hidden as f64);
        let w_ih = store.add(format!("{name}.w_ih"), uniform_init(rng, &[3 * hidden, din], bound), group)?;
        let w_hh = store.add(format!("{name}.w_hh"), uniform_init(rng, &[3 * hidden, hidden], bound), group)?;
        let b_ih = store.add(format!("{name}.b_ih"), uniform_init(rng, &[3 * hidden], bound), group)?;
        let b_hh = store.add(format!("{name}.b_hh"), uniform_init(rng, &[3 * hidden], bound), group)?;
        Ok(GruLayer { w_ih, w_hh, b_ih, b_hh, hidden, reverse })
    }

    fn weights<'a>(&self, store: &'a ParamStore) -> GruWeights<'a> {
        GruWeights {
            w_ih: store.value(self.w_ih),
            w_hh: store.value(self.w_hh),
            b_ih: store.value(self.b_ih),
            b_hh: store.value(self.b_hh),
        }
    }

    /// Runs over `x: T×Din` from a zero initial state.
    pub fn forward(&self, store: &ParamStore, x: &Tensor) -> Result<(Tensor, GruCache)> {
        let h0 = alloc::vec![0.0; self.hidden];
        gru_seq(x, &self.weights(store), &h0, self.reverse)
    }

    /// Runs over `x: T×Din` from an explicit initial state (used when the
    /// layer acts as a stepwise cell).
    pub fn forward_from(
        &self,
        store: &ParamStore,
        x: &Tensor,
        h0: &[f64],
    ) -> Result<(Tensor, GruCache)> {
        gru_seq(x, &self.weights(store), h0, self.reverse)
    }

    /// Like [`GruLayer::backward`] but also returns the gradient with
    /// respect to the initial state.
    pub fn backward_with_h0(
        &self,
        store: &mut ParamStore,
        x: &Tensor,
        cache: &GruCache,
        dy: &Tensor,
    ) -> Result<(Tensor, Vec<f64>)> {
        let (dx, grads) = gru_seq_bwd(x, &self.weights(store), cache, dy)?;
        store.accum_grad(self.w_ih, &grads.dw_ih)?;
        store.accum_grad(self.w_hh, &grads.dw_hh)?;
        store.accum_grad(self.b_ih, &grads.db_ih)?;
        store.accum_grad(self.b_hh, &grads.db_hh)?;
        Ok((dx, grads.dh0))
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        x: &Tensor,
        cache: &GruCache,
        dy: &Tensor,
    ) -> Result<Tensor> {
        let (dx, grads) = gru_seq_bwd(x, &self.weights(store), cache, dy)?;
        store.accum_grad(self.w_ih, &grads.dw_ih)?;
        store.accum_grad(self.w_hh, &grads.dw_hh)?;
        store.accum_grad(self.b_ih, &grads.db_ih)?;
        store.accum_grad(self.b_hh, &grads.db_hh)?;
        Ok(dx)
    }
}

/// Bidirectional GRU: forward and reverse passes concatenated per frame.
#[derive(Debug, Clone)]
pub struct BiGru {
    pub fwd: GruLayer,
    pub bwd: GruLayer,
}

/// Caches from both directions.
#[derive(Debug, Clone)]
pub struct BiGruCache {
    fwd: GruCache,
    bwd: GruCache,
}

impl BiGru {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        din: usize,
        hidden: usize,
        group: ParamGroup,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        Ok(BiGru {
            fwd: GruLayer::new(store, &format!("{name}.fwd"), din, hidden, false, group, rng)?,
            bwd: GruLayer::new(store, &format!("{name}.rev"), din, hidden, true, group, rng)?,
        })
    }

    /// Output width (2 × hidden).
    pub fn dout(&self) -> usize {
        2 * self.fwd.hidden
    }

    pub fn forward(&self, store: &ParamStore, x: &Tensor) -> Result<(Tensor, BiGruCache)> {
        let (yf, cf) = self.fwd.forward(store, x)?;
        let (yb, cb) = self.bwd.forward(store, x)?;
        Ok((yf.concat_cols(&yb)?, BiGruCache { fwd: cf, bwd: cb }))
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        x: &Tensor,
        cache: &BiGruCache,
        dy: &Tensor,
    ) -> Result<Tensor> {
        let h = self.fwd.hidden;
        let t = dy.rows();
        let mut dyf = Tensor::zeros([t, h]);
        let mut dyb = Tensor::zeros([t, h]);
        for i in 0..t {
            dyf.row_mut(i).copy_from_slice(&dy.row(i)[..h]);
            dyb.row_mut(i).copy_from_slice(&dy.row(i)[h..]);
        }
        let dx_f = self.fwd.backward(store, x, &cache.fwd, &dyf)?;
        let dx_b = self.bwd.backward(store, x, &cache.bwd, &dyb)?;
        dx_f.add(&dx_b)
    }
}

/// Token embedding table.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub table: ParamId,
    pub dim: usize,
    pub rows: usize,
}

impl Embedding {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        rows: usize,
        dim: usize,
        group: ParamGroup,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let bound = 1.0 / libm::sqrt(dim as f64);
        let table = store.add(format!("{name}.table"), uniform_init(rng, &[rows, dim], bound), group)?;
        Ok(Embedding { table, dim, rows })
    }

    /// Embedding row for one token id.
    pub fn lookup<'a>(&self, store: &'a ParamStore, id: usize) -> &'a [f64] {
        store.value(self.table).row(id)
    }

    /// Accumulates gradient into one table row.
    pub fn backward_row(&self, store: &mut ParamStore, id: usize, drow: &[f64]) -> Result<()> {
        let mut g = Tensor::zeros([self.rows, self.dim]);
        g.row_mut(id).copy_from_slice(drow);
        store.accum_grad(self.table, &g)
    }
}

/// Sinusoidal positional encodings, `T×D` (deterministic, not learned).
pub fn sinusoidal_pe(t: usize, d: usize) -> Tensor {
    let mut pe = Tensor::zeros([t, d]);
    for pos in 0..t {
        let row = pe.row_mut(pos);
        for i in 0..d / 2 {
            let freq = libm::pow(10000.0, -((2 * i) as f64) / d as f64);
            let angle = pos as f64 * freq;
            row[2 * i] = libm::sin(angle);
            if 2 * i + 1 < d {
                row[2 * i + 1] = libm::cos(angle);
            }
        }
    }
    pe
}

/// Convenience: joins a dotted name path.
pub fn scoped(prefix: &str, leaf: &str) -> String {
    let mut s = String::with_capacity(prefix.len() + 1 + leaf.len());
    s.push_str(prefix);
    s.push('.');
    s.push_str(leaf);
    s
}
