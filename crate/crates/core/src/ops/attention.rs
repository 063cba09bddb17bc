//! Multi-head scaled dot-product attention.
//!
//! One kernel serves both self-attention (`q_in` and `kv_in` are the same
//! sequence) and cross-attention (queries from one stream, keys/values from
//! another). Scores are scaled by `1/√d_head`; all heads share the input
//! projections' column blocks and are concatenated before the output
//! projection.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ops::act::{softmax_slice, softmax_slice_bwd};
use crate::ops::linalg::{add_bias, add_bias_bwd, matmul, matmul_bwd};
use crate::tensor::Tensor;

/// Borrowed projection parameters: four `D×D` matrices and their biases.
#[derive(Clone, Copy)]
pub struct AttnProj<'a> {
    pub wq: &'a Tensor,
    pub bq: &'a Tensor,
    pub wk: &'a Tensor,
    pub bk: &'a Tensor,
    pub wv: &'a Tensor,
    pub bv: &'a Tensor,
    pub wo: &'a Tensor,
    pub bo: &'a Tensor,
}

/// Gradients aligned with [`AttnProj`].
#[derive(Debug, Clone)]
pub struct AttnProjGrads {
    pub dwq: Tensor,
    pub dbq: Tensor,
    pub dwk: Tensor,
    pub dbk: Tensor,
    pub dwv: Tensor,
    pub dbv: Tensor,
    pub dwo: Tensor,
    pub dbo: Tensor,
}

/// Intermediates kept for the backward pass and for attention-map export.
#[derive(Debug, Clone)]
pub struct AttnCache {
    q: Tensor,
    k: Tensor,
    v: Tensor,
    /// Per-head attention weights, each `Tq×Tk`.
    attn: Vec<Tensor>,
    /// Concatenated per-head context before the output projection, `Tq×D`.
    ctx: Tensor,
}

impl AttnCache {
    /// Attention weights averaged across heads, `Tq×Tk`.
    pub fn mean_attention(&self) -> Tensor {
        let h = self.attn.len();
        let mut acc = Tensor::zeros(self.attn[0].shape().to_vec());
        for a in &self.attn {
            acc.add_assign(a).expect("per-head maps share a shape");
        }
        acc.scale(1.0 / h as f64)
    }
}

fn check_proj(d: usize, p: &AttnProj<'_>) -> Result<()> {
    for (name, w) in [("wq", p.wq), ("wk", p.wk), ("wv", p.wv), ("wo", p.wo)] {
        if w.shape() != [d, d] {
            return Err(Error::shape(format!("attention {name} must be {d}x{d}, got {:?}", w.shape())));
        }
    }
    for (name, b) in [("bq", p.bq), ("bk", p.bk), ("bv", p.bv), ("bo", p.bo)] {
        if b.len() != d {
            return Err(Error::shape(format!("attention {name} must have length {d}")));
        }
    }
    Ok(())
}

/// Multi-head attention forward: `q_in: Tq×D`, `kv_in: Tk×D` → `Tq×D`.
pub fn mh_attention(
    q_in: &Tensor,
    kv_in: &Tensor,
    p: &AttnProj<'_>,
    heads: usize,
) -> Result<(Tensor, AttnCache)> {
    if q_in.rank() != 2 || kv_in.rank() != 2 || q_in.cols() != kv_in.cols() {
        return Err(Error::shape(format!(
            "attention inputs must be rank-2 with equal width: {:?} vs {:?}",
            q_in.shape(),
            kv_in.shape()
        )));
    }
    let d = q_in.cols();
    if heads == 0 || d % heads != 0 {
        return Err(Error::config(format!("model dim {d} not divisible by {heads} heads")));
    }
    check_proj(d, p)?;
    let dh = d / heads;
    let scale = 1.0 / libm::sqrt(dh as f64);
    let (tq, tk) = (q_in.rows(), kv_in.rows());

    let q = add_bias(&matmul(q_in, p.wq)?, p.bq)?;
    let k = add_bias(&matmul(kv_in, p.wk)?, p.bk)?;
    let v = add_bias(&matmul(kv_in, p.wv)?, p.bv)?;

    let mut ctx = Tensor::zeros([tq, d]);
    let mut attn = Vec::with_capacity(heads);
    for h in 0..heads {
        let off = h * dh;
        let mut a = Tensor::zeros([tq, tk]);
        for i in 0..tq {
            let qrow = &q.row(i)[off..off + dh];
            let arow = a.row_mut(i);
            for j in 0..tk {
                let krow = &k.row(j)[off..off + dh];
                let mut s = 0.0;
                for dd in 0..dh {
                    s += qrow[dd] * krow[dd];
                }
                arow[j] = s * scale;
            }
            softmax_slice(arow);
        }
        for i in 0..tq {
            let arow = a.row(i);
            for j in 0..tk {
                let aij = arow[j];
                if aij == 0.0 {
                    continue;
                }
                let vrow = &v.row(j)[off..off + dh];
                let crow = &mut ctx.row_mut(i)[off..off + dh];
                for dd in 0..dh {
                    crow[dd] += aij * vrow[dd];
                }
            }
        }
        attn.push(a);
    }
    let out = add_bias(&matmul(&ctx, p.wo)?, p.bo)?;
    debug_assert!(out.all_finite());
    Ok((out, AttnCache { q, k, v, attn, ctx }))
}

/// Backward of [`mh_attention`]: returns `(dq_in, dkv_in, parameter grads)`.
pub fn mh_attention_bwd(
    q_in: &Tensor,
    kv_in: &Tensor,
    p: &AttnProj<'_>,
    cache: &AttnCache,
    dy: &Tensor,
) -> Result<(Tensor, Tensor, AttnProjGrads)> {
    let d = q_in.cols();
    let heads = cache.attn.len();
    let dh = d / heads;
    let scale = 1.0 / libm::sqrt(dh as f64);
    let (tq, tk) = (q_in.rows(), kv_in.rows());
    if dy.shape() != [tq, d] {
        return Err(Error::shape(format!("attention dy {:?} vs [{tq}, {d}]", dy.shape())));
    }

    // Output projection.
    let (dctx, dwo) = matmul_bwd(&cache.ctx, p.wo, dy)?;
    let dbo = add_bias_bwd(dy);

    let mut dq = Tensor::zeros([tq, d]);
    let mut dk = Tensor::zeros([tk, d]);
    let mut dv = Tensor::zeros([tk, d]);
    let mut ds_row = vec![0.0; tk];
    let mut da_row = vec![0.0; tk];
    for h in 0..heads {
        let off = h * dh;
        let a = &cache.attn[h];
        for i in 0..tq {
            let dctx_row = &dctx.row(i)[off..off + dh];
            let arow = a.row(i);
            // dA[i,j] = dCtx_i · V_j ; dV_j += A[i,j] · dCtx_i
            for j in 0..tk {
                let vrow = &cache.v.row(j)[off..off + dh];
                let mut acc = 0.0;
                for dd in 0..dh {
                    acc += dctx_row[dd] * vrow[dd];
                }
                da_row[j] = acc;
            }
            for j in 0..tk {
                let aij = arow[j];
                if aij != 0.0 {
                    let dvrow = &mut dv.row_mut(j)[off..off + dh];
                    for dd in 0..dh {
                        dvrow[dd] += aij * dctx_row[dd];
                    }
                }
            }
            softmax_slice_bwd(arow, &da_row, &mut ds_row);
            // dQ_i += scale · Σ_j dS[i,j] K_j ; dK_j += scale · dS[i,j] Q_i
            let qrow: Vec<f64> = cache.q.row(i)[off..off + dh].to_vec();
            let dqrow = &mut dq.row_mut(i)[off..off + dh];
            for j in 0..tk {
                let g = ds_row[j] * scale;
                if g == 0.0 {
                    continue;
                }
                let krow = &cache.k.row(j)[off..off + dh];
                for dd in 0..dh {
                    dqrow[dd] += g * krow[dd];
                }
                let dkrow = &mut dk.row_mut(j)[off..off + dh];
                for dd in 0..dh {
                    dkrow[dd] += g * qrow[dd];
                }
            }
        }
    }

    let (dq_in, dwq) = matmul_bwd(q_in, p.wq, &dq)?;
    let dbq = add_bias_bwd(&dq);
    let (dkv_k, dwk) = matmul_bwd(kv_in, p.wk, &dk)?;
    let dbk = add_bias_bwd(&dk);
    let (dkv_v, dwv) = matmul_bwd(kv_in, p.wv, &dv)?;
    let dbv = add_bias_bwd(&dv);
    let dkv_in = dkv_k.add(&dkv_v)?;

    Ok((dq_in, dkv_in, AttnProjGrads { dwq, dbq, dwk, dbk, dwv, dbv, dwo, dbo }))
}
