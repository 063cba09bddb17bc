//! Gated recurrent unit over a sequence, with full backpropagation
//! through time.
//!
//! Gate math follows the common convention with separate input and hidden
//! biases and the reset gate applied inside the candidate's hidden term:
//!
//! ```text
//! r = σ(W_ir x + b_ir + W_hr h + b_hr)
//! z = σ(W_iz x + b_iz + W_hz h + b_hz)
//! n = tanh(W_in x + b_in + r ⊙ (W_hn h + b_hn))
//! h' = (1 − z) ⊙ n + z ⊙ h
//! ```
//!
//! Weight rows are stacked `[r; z; n]`, so `w_ih: 3H×Din` and `w_hh: 3H×H`.
//! With all-zero weights every gate sits at σ(0) = ½ and the candidate at
//! tanh(0) = 0, so the state halves each step — a handy closed-form check.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ops::act::sigmoid;
use crate::tensor::Tensor;

/// Borrowed parameter set for one GRU direction.
#[derive(Clone, Copy)]
pub struct GruWeights<'a> {
    /// Input-to-hidden weights, `3H×Din`.
    pub w_ih: &'a Tensor,
    /// Hidden-to-hidden weights, `3H×H`.
    pub w_hh: &'a Tensor,
    /// Input bias, `3H`.
    pub b_ih: &'a Tensor,
    /// Hidden bias, `3H`.
    pub b_hh: &'a Tensor,
}

/// Gradients for one GRU direction, aligned with [`GruWeights`].
#[derive(Debug, Clone)]
pub struct GruGrads {
    pub dw_ih: Tensor,
    pub dw_hh: Tensor,
    pub db_ih: Tensor,
    pub db_hh: Tensor,
    /// Gradient with respect to the initial hidden state.
    pub dh0: Vec<f64>,
}

/// Intermediate state captured by [`gru_seq`] for the backward pass.
#[derive(Debug, Clone)]
pub struct GruCache {
    /// Hidden states in processing order; row 0 is `h0`, row `p+1` is the
    /// state after processing step `p`.
    hs: Tensor,
    /// Reset gates per processing step, `T×H`.
    r: Tensor,
    /// Update gates per processing step, `T×H`.
    z: Tensor,
    /// Candidate states per processing step, `T×H`.
    n: Tensor,
    /// Hidden-side candidate pre-activations `W_hn h + b_hn`, `T×H`.
    gh_n: Tensor,
    reverse: bool,
}

fn check_gru_shapes(x: &Tensor, w: &GruWeights<'_>, h0: &[f64]) -> Result<(usize, usize, usize)> {
    if x.rank() != 2 {
        return Err(Error::shape(format!("gru_seq expects x rank 2, got {:?}", x.shape())));
    }
    let (t, din) = (x.shape()[0], x.shape()[1]);
    if w.w_ih.rank() != 2 || w.w_ih.shape()[0] % 3 != 0 {
        return Err(Error::shape(format!("gru_seq w_ih must be 3H×Din, got {:?}", w.w_ih.shape())));
    }
    let h = w.w_ih.shape()[0] / 3;
    if w.w_ih.shape()[1] != din {
        return Err(Error::shape(format!(
            "gru_seq input dim {} vs w_ih {:?}",
            din,
            w.w_ih.shape()
        )));
    }
    if w.w_hh.shape() != [3 * h, h] {
        return Err(Error::shape(format!("gru_seq w_hh must be {:?}, got {:?}", [3 * h, h], w.w_hh.shape())));
    }
    if w.b_ih.len() != 3 * h || w.b_hh.len() != 3 * h {
        return Err(Error::shape("gru_seq biases must be length 3H"));
    }
    if h0.len() != h {
        return Err(Error::shape(format!("gru_seq h0 len {} vs hidden {h}", h0.len())));
    }
    Ok((t, din, h))
}

/// Runs a GRU over `x: T×Din`, returning outputs `T×H` in original time
/// order (for `reverse = true` the sequence is processed back to front but
/// outputs stay aligned with their input positions).
pub fn gru_seq(
    x: &Tensor,
    w: &GruWeights<'_>,
    h0: &[f64],
    reverse: bool,
) -> Result<(Tensor, GruCache)> {
    let (t, _din, h) = check_gru_shapes(x, w, h0)?;
    let mut hs = Tensor::zeros([t + 1, h]);
    hs.row_mut(0).copy_from_slice(h0);
    let mut r_all = Tensor::zeros([t, h]);
    let mut z_all = Tensor::zeros([t, h]);
    let mut n_all = Tensor::zeros([t, h]);
    let mut ghn_all = Tensor::zeros([t, h]);
    let mut y = Tensor::zeros([t, h]);

    let wih = w.w_ih.data();
    let whh = w.w_hh.data();
    let bih = w.b_ih.data();
    let bhh = w.b_hh.data();
    let din = x.cols();

    let mut gi = vec![0.0; 3 * h];
    let mut gh = vec![0.0; 3 * h];
    for p in 0..t {
        let ti = if reverse { t - 1 - p } else { p };
        let xrow = x.row(ti);
        // gi = W_ih x + b_ih ; gh = W_hh h + b_hh
        for j in 0..3 * h {
            let wrow = &wih[j * din..(j + 1) * din];
            let mut acc = bih[j];
            for (wv, xv) in wrow.iter().zip(xrow) {
                acc += wv * xv;
            }
            gi[j] = acc;
        }
        {
            let hprev = hs.row(p);
            for j in 0..3 * h {
                let wrow = &whh[j * h..(j + 1) * h];
                let mut acc = bhh[j];
                for (wv, hv) in wrow.iter().zip(hprev) {
                    acc += wv * hv;
                }
                gh[j] = acc;
            }
        }
        for j in 0..h {
            let rj = sigmoid(gi[j] + gh[j]);
            let zj = sigmoid(gi[h + j] + gh[h + j]);
            let ghn = gh[2 * h + j];
            let nj = libm::tanh(gi[2 * h + j] + rj * ghn);
            let hprev_j = hs.at(p, j);
            let hj = (1.0 - zj) * nj + zj * hprev_j;
            r_all.set(p, j, rj);
            z_all.set(p, j, zj);
            n_all.set(p, j, nj);
            ghn_all.set(p, j, ghn);
            hs.set(p + 1, j, hj);
            y.set(ti, j, hj);
        }
    }
    debug_assert!(y.all_finite());
    Ok((y, GruCache { hs, r: r_all, z: z_all, n: n_all, gh_n: ghn_all, reverse }))
}

/// Backward of [`gru_seq`]: maps `dy` (aligned with the forward output) to
/// the input gradient and parameter gradients.
pub fn gru_seq_bwd(
    x: &Tensor,
    w: &GruWeights<'_>,
    cache: &GruCache,
    dy: &Tensor,
) -> Result<(Tensor, GruGrads)> {
    let (t, din, h) = check_gru_shapes(x, w, &vec![0.0; w.w_hh.shape()[1]])?;
    if dy.shape() != [t, h] {
        return Err(Error::shape(format!("gru_seq_bwd dy {:?} vs [{t}, {h}]", dy.shape())));
    }
    let wih = w.w_ih.data();
    let whh = w.w_hh.data();

    let mut dx = Tensor::zeros([t, din]);
    let mut dw_ih = Tensor::zeros([3 * h, din]);
    let mut dw_hh = Tensor::zeros([3 * h, h]);
    let mut db_ih = Tensor::zeros([3 * h]);
    let mut db_hh = Tensor::zeros([3 * h]);

    let mut dh = vec![0.0; h]; // gradient wrt the state flowing backward
    let mut dgi = vec![0.0; 3 * h];
    let mut dgh = vec![0.0; 3 * h];
    for p in (0..t).rev() {
        let ti = if cache.reverse { t - 1 - p } else { p };
        let dyrow = dy.row(ti);
        let hprev = cache.hs.row(p);
        let xrow = x.row(ti);
        for j in 0..h {
            let dtotal = dh[j] + dyrow[j];
            let rj = cache.r.at(p, j);
            let zj = cache.z.at(p, j);
            let nj = cache.n.at(p, j);
            let ghn = cache.gh_n.at(p, j);
            let dz = dtotal * (hprev[j] - nj);
            let dn = dtotal * (1.0 - zj);
            let dgn = dn * (1.0 - nj * nj);
            let dr = dgn * ghn;
            let dghn = dgn * rj;
            let dgr = dr * rj * (1.0 - rj);
            let dgz = dz * zj * (1.0 - zj);
            dgi[j] = dgr;
            dgi[h + j] = dgz;
            dgi[2 * h + j] = dgn;
            dgh[j] = dgr;
            dgh[h + j] = dgz;
            dgh[2 * h + j] = dghn;
            dh[j] = dtotal * zj; // carry through the z ⊙ h path
        }
        // Parameter and input gradients from this step.
        {
            let dxr = dx.row_mut(ti);
            for j in 0..3 * h {
                let g = dgi[j];
                if g == 0.0 {
                    continue;
                }
                let wrow = &wih[j * din..(j + 1) * din];
                for (dv, wv) in dxr.iter_mut().zip(wrow) {
                    *dv += g * wv;
                }
            }
        }
        for j in 0..3 * h {
            let g = dgi[j];
            db_ih.data_mut()[j] += g;
            if g != 0.0 {
                let wrow = dw_ih.row_mut(j);
                for (dv, xv) in wrow.iter_mut().zip(xrow) {
                    *dv += g * xv;
                }
            }
            let gh = dgh[j];
            db_hh.data_mut()[j] += gh;
            if gh != 0.0 {
                let wrow = dw_hh.row_mut(j);
                for (dv, hv) in wrow.iter_mut().zip(hprev) {
                    *dv += gh * hv;
                }
                let whrow = &whh[j * h..(j + 1) * h];
                for (dv, wv) in dh.iter_mut().zip(whrow) {
                    *dv += gh * wv;
                }
            }
        }
    }
    Ok((dx, GruGrads { dw_ih, dw_hh, db_ih, db_hh, dh0: dh }))
}
