//! Attention-based sequence-to-sequence decoder head.
//!
//! A single-layer GRU decoder with location-aware additive attention over
//! the fused encoder features. Each step convolves the previous attention
//! weights (so the mechanism can track monotonic progress), scores every
//! encoder frame with `vᵀ tanh(W_s s + W_e e_t + W_f f_t)`, forms a context
//! vector, updates the GRU state from `[embed(y_prev); ctx]`, and emits a
//! log-distribution over the target tokens plus end-of-sequence from
//! `[s; ctx]`.
//!
//! Teacher-forced training and stepwise decoding share the same `step`;
//! the backward pass runs truncation-free BPTT over the whole utterance.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::layers::{Conv1d, Embedding, GruLayer, Linear};
use crate::ops::act::{log_softmax_slice, softmax_slice, softmax_slice_bwd};
use crate::ops::gru::GruCache;
use crate::param::{uniform_init, ParamGroup, ParamId, ParamStore};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// Decoder dimensions. `n_targets` counts the token ids that may appear in
/// a transcript; the output adds one end-of-sequence slot and the input
/// embedding adds one begin-of-sequence row.
#[derive(Debug, Clone, Copy)]
pub struct S2sConfig {
    /// Width of the encoder features attended over.
    pub d_enc: usize,
    /// Number of target token ids (dense from 0).
    pub n_targets: usize,
    /// GRU state width.
    pub hidden: usize,
    /// Token embedding width.
    pub embed_dim: usize,
    /// Additive-attention projection width.
    pub att_dim: usize,
    /// Channels of the attention-history convolution.
    pub att_filters: usize,
    /// Kernel width of the attention-history convolution (odd).
    pub att_kernel: usize,
}

/// Decoder state carried between steps.
#[derive(Debug, Clone)]
pub struct S2sState {
    /// GRU hidden state.
    pub h: Vec<f64>,
    /// Previous attention weights over encoder frames.
    pub alpha: Vec<f64>,
}

/// Everything one step must remember for BPTT.
#[derive(Debug, Clone)]
pub struct S2sStepCache {
    embed_row: usize,
    conv_in: Tensor,
    loc_feats: Tensor,
    tanh_vals: Tensor,
    alpha: Vec<f64>,
    h_prev_row: Tensor,
    u: Tensor,
    gru_cache: GruCache,
    out_in: Tensor,
    logp: Vec<f64>,
}

/// Teacher-forced forward trace: per-step caches plus the scored slots.
#[derive(Debug, Clone)]
pub struct S2sTrace {
    caches: Vec<S2sStepCache>,
    slots: Vec<usize>,
}

/// GRU decoder with location-aware attention.
#[derive(Debug, Clone)]
pub struct S2sDecoder {
    pub cfg: S2sConfig,
    embed: Embedding,
    gru: GruLayer,
    w_state: Linear,
    w_enc: Linear,
    w_loc: Linear,
    v: ParamId,
    conv: Conv1d,
    out: Linear,
}

impl S2sDecoder {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        cfg: S2sConfig,
        group: ParamGroup,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        if cfg.att_kernel % 2 == 0 {
            return Err(Error::config("attention-history kernel width must be odd"));
        }
        let embed = Embedding::new(
            store,
            &alloc::format!("{name}.embed"),
            cfg.n_targets + 1, // one extra row embeds begin-of-sequence
            cfg.embed_dim,
            group,
            rng,
        )?;
        let gru = GruLayer::new(
            store,
            &alloc::format!("{name}.gru"),
            cfg.embed_dim + cfg.d_enc,
            cfg.hidden,
            false,
            group,
            rng,
        )?;
        let w_state =
            Linear::new(store, &alloc::format!("{name}.att_state"), cfg.hidden, cfg.att_dim, false, group, rng)?;
        let w_enc =
            Linear::new(store, &alloc::format!("{name}.att_enc"), cfg.d_enc, cfg.att_dim, true, group, rng)?;
        let w_loc =
            Linear::new(store, &alloc::format!("{name}.att_loc"), cfg.att_filters, cfg.att_dim, false, group, rng)?;
        let v = store.add(
            alloc::format!("{name}.att_v"),
            uniform_init(rng, &[cfg.att_dim], 1.0 / libm::sqrt(cfg.att_dim as f64)),
            group,
        )?;
        let conv = Conv1d::new(
            store,
            &alloc::format!("{name}.att_conv"),
            1,
            cfg.att_filters,
            cfg.att_kernel,
            1,
            (cfg.att_kernel - 1) / 2,
            group,
            rng,
        )?;
        let out = Linear::new(
            store,
            &alloc::format!("{name}.out"),
            cfg.hidden + cfg.d_enc,
            cfg.n_targets + 1,
            true,
            group,
            rng,
        )?;
        Ok(S2sDecoder { cfg, embed, gru, w_state, w_enc, w_loc, v, conv, out })
    }

    /// Output slot count: targets plus end-of-sequence.
    pub fn n_out(&self) -> usize {
        self.cfg.n_targets + 1
    }

    /// Slot index of end-of-sequence in the output distribution.
    pub fn eos_slot(&self) -> usize {
        self.cfg.n_targets
    }

    /// Precomputes `W_e·enc + b` once per utterance (`T×att_dim`).
    pub fn project_encodings(&self, store: &ParamStore, enc: &Tensor) -> Result<Tensor> {
        self.w_enc.forward(store, enc)
    }

    /// Fresh state: zero GRU state, uniform attention over `t` frames.
    pub fn init_state(&self, t: usize) -> S2sState {
        S2sState { h: vec![0.0; self.cfg.hidden], alpha: vec![1.0 / t as f64; t] }
    }

    /// One decoding step. `y_prev = None` embeds begin-of-sequence.
    ///
    /// Returns the log-distribution over output slots, the next state, and
    /// the cache for BPTT.
    pub fn step(
        &self,
        store: &ParamStore,
        enc: &Tensor,
        enc_proj: &Tensor,
        state: &S2sState,
        y_prev: Option<u16>,
    ) -> Result<(Vec<f64>, S2sState, S2sStepCache)> {
        let t = enc.rows();
        let d = self.cfg.d_enc;
        if enc.cols() != d {
            return Err(Error::shape(alloc::format!(
                "decoder expects {d}-wide encodings, got {:?}",
                enc.shape()
            )));
        }
        if state.alpha.len() != t || enc_proj.rows() != t {
            return Err(Error::shape("decoder state does not match encoder length"));
        }
        let a_dim = self.cfg.att_dim;

        // Location features: convolve the previous attention weights.
        let conv_in = Tensor::from_rows(1, t, state.alpha.clone())?;
        let conv_out = self.conv.forward(store, &conv_in)?; // F×T
        let loc_feats = conv_out.transposed()?; // T×F
        let loc_term = self.w_loc.forward(store, &loc_feats)?; // T×A

        // State term, broadcast over frames.
        let h_prev_row = Tensor::from_rows(1, self.cfg.hidden, state.h.clone())?;
        let state_term = self.w_state.forward(store, &h_prev_row)?; // 1×A

        // Additive energies through tanh.
        let vval = store.value(self.v).data();
        let mut tanh_vals = Tensor::zeros([t, a_dim]);
        let mut energies = vec![0.0; t];
        for ti in 0..t {
            let ep = enc_proj.row(ti);
            let lt = loc_term.row(ti);
            let st = state_term.row(0);
            let tv = tanh_vals.row_mut(ti);
            let mut e = 0.0;
            for a in 0..a_dim {
                let th = libm::tanh(ep[a] + lt[a] + st[a]);
                tv[a] = th;
                e += vval[a] * th;
            }
            energies[ti] = e;
        }
        let mut alpha = energies;
        softmax_slice(&mut alpha);

        // Context vector.
        let mut ctx = vec![0.0; d];
        for ti in 0..t {
            let w = alpha[ti];
            if w != 0.0 {
                for (c, &e) in ctx.iter_mut().zip(enc.row(ti)) {
                    *c += w * e;
                }
            }
        }

        // GRU update from [embed(y_prev); ctx].
        let embed_row = match y_prev {
            Some(y) => y as usize,
            None => self.cfg.n_targets,
        };
        if embed_row > self.cfg.n_targets {
            return Err(Error::Vocab(alloc::format!("token id {embed_row} outside decoder inputs")));
        }
        let mut u_data = Vec::with_capacity(self.cfg.embed_dim + d);
        u_data.extend_from_slice(self.embed.lookup(store, embed_row));
        u_data.extend_from_slice(&ctx);
        let u = Tensor::from_rows(1, self.cfg.embed_dim + d, u_data)?;
        let (h_new_t, gru_cache) = self.gru.forward_from(store, &u, &state.h)?;
        let h_new = h_new_t.row(0).to_vec();

        // Output distribution from [state; ctx].
        let mut out_data = Vec::with_capacity(self.cfg.hidden + d);
        out_data.extend_from_slice(&h_new);
        out_data.extend_from_slice(&ctx);
        let out_in = Tensor::from_rows(1, self.cfg.hidden + d, out_data)?;
        let logits = self.out.forward(store, &out_in)?;
        let mut logp = logits.row(0).to_vec();
        log_softmax_slice(&mut logp);

        let next = S2sState { h: h_new, alpha: alpha.clone() };
        let cache = S2sStepCache {
            embed_row,
            conv_in,
            loc_feats,
            tanh_vals,
            alpha,
            h_prev_row,
            u,
            gru_cache,
            out_in,
            logp: logp.clone(),
        };
        Ok((logp, next, cache))
    }

    /// Teacher-forced negative log-likelihood of `target` followed by
    /// end-of-sequence. Returns the loss and the trace for [`Self::backward`].
    pub fn loss(&self, store: &ParamStore, enc: &Tensor, target: &[u16]) -> Result<(f64, S2sTrace)> {
        for &y in target {
            if (y as usize) >= self.cfg.n_targets {
                return Err(Error::Vocab(alloc::format!("target id {y} outside decoder outputs")));
            }
        }
        let enc_proj = self.project_encodings(store, enc)?;
        let mut state = self.init_state(enc.rows());
        let mut caches = Vec::with_capacity(target.len() + 1);
        let mut slots = Vec::with_capacity(target.len() + 1);
        let mut loss = 0.0;
        for i in 0..=target.len() {
            let y_prev = if i == 0 { None } else { Some(target[i - 1]) };
            let (logp, next, cache) = self.step(store, enc, &enc_proj, &state, y_prev)?;
            let slot = if i < target.len() { target[i] as usize } else { self.eos_slot() };
            loss -= logp[slot];
            caches.push(cache);
            slots.push(slot);
            state = next;
        }
        Ok((loss, S2sTrace { caches, slots }))
    }

    /// Log-probability of emitting exactly `seq` then end-of-sequence
    /// (no caches kept; used by search and scoring).
    pub fn score_sequence(&self, store: &ParamStore, enc: &Tensor, seq: &[u16]) -> Result<f64> {
        let enc_proj = self.project_encodings(store, enc)?;
        let mut state = self.init_state(enc.rows());
        let mut total = 0.0;
        for i in 0..=seq.len() {
            let y_prev = if i == 0 { None } else { Some(seq[i - 1]) };
            let (logp, next, _) = self.step(store, enc, &enc_proj, &state, y_prev)?;
            let slot = if i < seq.len() { seq[i] as usize } else { self.eos_slot() };
            total += logp[slot];
            state = next;
        }
        Ok(total)
    }

    /// BPTT through a teacher-forced trace. Accumulates parameter
    /// gradients scaled by `scale` and returns `scale · dL/denc`.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        enc: &Tensor,
        trace: &S2sTrace,
        scale: f64,
    ) -> Result<Tensor> {
        let t = enc.rows();
        let d = self.cfg.d_enc;
        let a_dim = self.cfg.att_dim;
        let h_dim = self.cfg.hidden;
        let e_dim = self.cfg.embed_dim;

        let mut denc = Tensor::zeros([t, d]);
        let mut denc_proj = Tensor::zeros([t, a_dim]);
        let mut dh_next = vec![0.0; h_dim];
        let mut dalpha_next = vec![0.0; t];

        for (cache, &slot) in trace.caches.iter().zip(&trace.slots).rev() {
            // Cross-entropy through the log-softmax: d logits.
            let n_out = self.n_out();
            let mut dlogits = vec![0.0; n_out];
            // dL/dlogp[slot] = −scale; log-softmax backward folds to
            // dlogits[j] = dlogp[j] − exp(logp[j])·Σ dlogp.
            for (j, dl) in dlogits.iter_mut().enumerate() {
                let dlogp_j = if j == slot { -scale } else { 0.0 };
                *dl = dlogp_j - libm::exp(cache.logp[j]) * (-scale);
            }
            let dlogits_t = Tensor::from_rows(1, n_out, dlogits)?;
            let dout_in = self.out.backward(store, &cache.out_in, &dlogits_t)?;

            // Split into state and context parts; add the carried state grad.
            let mut dh_total = Tensor::zeros([1, h_dim]);
            for j in 0..h_dim {
                dh_total.set(0, j, dout_in.at(0, j) + dh_next[j]);
            }
            let mut dctx = vec![0.0; d];
            for j in 0..d {
                dctx[j] = dout_in.at(0, h_dim + j);
            }

            // GRU cell.
            let (du, dh_prev_gru) =
                self.gru.backward_with_h0(store, &cache.u, &cache.gru_cache, &dh_total)?;
            for j in 0..d {
                dctx[j] += du.at(0, e_dim + j);
            }
            let dembed: Vec<f64> = (0..e_dim).map(|j| du.at(0, j)).collect();
            self.embed.backward_row(store, cache.embed_row, &dembed)?;

            // Context = Σ α_t enc_t.
            let mut dalpha = vec![0.0; t];
            for ti in 0..t {
                let er = enc.row(ti);
                let mut acc = 0.0;
                for j in 0..d {
                    acc += dctx[j] * er[j];
                }
                dalpha[ti] = acc + dalpha_next[ti];
                let w = cache.alpha[ti];
                if w != 0.0 {
                    let dr = denc.row_mut(ti);
                    for j in 0..d {
                        dr[j] += w * dctx[j];
                    }
                }
            }

            // Softmax over energies.
            let mut de = vec![0.0; t];
            softmax_slice_bwd(&cache.alpha, &dalpha, &mut de);

            // Energies e_t = v · tanh_vals_t.
            let vval = store.value(self.v).data().to_vec();
            let mut dv = vec![0.0; a_dim];
            let mut darg = Tensor::zeros([t, a_dim]);
            for ti in 0..t {
                let tv = cache.tanh_vals.row(ti);
                let det = de[ti];
                let dar = darg.row_mut(ti);
                for a in 0..a_dim {
                    dv[a] += det * tv[a];
                    dar[a] = det * vval[a] * (1.0 - tv[a] * tv[a]);
                }
            }
            store.accum_grad(self.v, &Tensor::from_slice(&dv))?;

            // darg feeds three branches: encoder projection (accumulated
            // across steps), location features, and the state term.
            denc_proj.add_assign(&darg)?;
            let dloc_feats = self.w_loc.backward(store, &cache.loc_feats, &darg)?;
            let mut dstate_row = Tensor::zeros([1, a_dim]);
            for ti in 0..t {
                for a in 0..a_dim {
                    let v = dstate_row.at(0, a) + darg.at(ti, a);
                    dstate_row.set(0, a, v);
                }
            }
            let dh_prev_att = self.w_state.backward(store, &cache.h_prev_row, &dstate_row)?;

            // Attention-history convolution back to the previous weights.
            let dconv_out = dloc_feats.transposed()?; // F×T
            let dconv_in = self.conv.backward(store, &cache.conv_in, &dconv_out)?; // 1×T

            for j in 0..h_dim {
                dh_next[j] = dh_prev_gru[j] + dh_prev_att.at(0, j);
            }
            for ti in 0..t {
                dalpha_next[ti] = dconv_in.at(0, ti);
            }
        }

        // The per-utterance encoder projection used by every step.
        let denc_from_proj = self.w_enc.backward(store, enc, &denc_proj)?;
        denc.add_assign(&denc_from_proj)?;
        Ok(denc)
    }
}
