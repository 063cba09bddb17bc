//! 1-D convolution and max pooling over channel-major sequences.
//!
//! Layout convention: signals are `C×T` (channels × time). Zero padding is
//! symmetric; output length is `(T + 2·pad − K) / stride + 1` (truncating),
//! matching the usual framing arithmetic.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Output length of a 1-D convolution or pooling window sweep.
pub fn conv1d_out_len(t: usize, k: usize, stride: usize, padding: usize) -> usize {
    (t + 2 * padding).saturating_sub(k) / stride + 1
}

/// 1-D convolution: `x: Cin×T`, `w: Cout×Cin×K`, `b: Cout` → `Cout×T'`.
pub fn conv1d(x: &Tensor, w: &Tensor, b: &Tensor, stride: usize, padding: usize) -> Result<Tensor> {
    if x.rank() != 2 || w.rank() != 3 {
        return Err(Error::shape(format!(
            "conv1d expects x rank 2 and w rank 3, got {:?} and {:?}",
            x.shape(),
            w.shape()
        )));
    }
    let (cin, t) = (x.shape()[0], x.shape()[1]);
    let (cout, wcin, k) = (w.shape()[0], w.shape()[1], w.shape()[2]);
    if wcin != cin {
        return Err(Error::shape(format!(
            "conv1d channel mismatch: x has {cin}, kernel expects {wcin}"
        )));
    }
    if b.len() != cout {
        return Err(Error::shape(format!("conv1d bias len {} vs {cout} filters", b.len())));
    }
    if stride == 0 {
        return Err(Error::config("conv1d stride must be positive"));
    }
    if t + 2 * padding < k {
        return Err(Error::shape(format!(
            "conv1d window {k} longer than padded input {}",
            t + 2 * padding
        )));
    }
    let t_out = conv1d_out_len(t, k, stride, padding);
    let xd = x.data();
    let wd = w.data();
    let bd = b.data();
    let mut out = vec![0.0; cout * t_out];
    for co in 0..cout {
        for ot in 0..t_out
        {
            let start = (ot * stride) as isize - padding as isize;
            let mut acc = bd[co];
            for ci in 0..cin {
                let xrow = &xd[ci * t..(ci + 1) * t];
                let wrow = &wd[(co * cin + ci) * k..(co * cin + ci + 1) * k];
                for kk in 0..k {
                    let ti = start + kk as isize;
                    if ti >= 0 && (ti as usize) < t {
                        acc += wrow[kk] * xrow[ti as usize];
                    }
                }
            }
            out[co * t_out + ot] = acc;
        }
    }
    let y = Tensor::new([cout, t_out], out)?;
    debug_assert!(y.all_finite());
    Ok(y)
}

/// Backward of [`conv1d`]: returns `(dx, dw, db)`.
pub fn conv1d_bwd(
    x: &Tensor,
    w: &Tensor,
    stride: usize,
    padding: usize,
    dy: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let (cin, t) = (x.shape()[0], x.shape()[1]);
    let (cout, _, k) = (w.shape()[0], w.shape()[1], w.shape()[2]);
    let t_out = conv1d_out_len(t, k, stride, padding);
    if dy.shape() != [cout, t_out] {
        return Err(Error::shape(format!(
            "conv1d_bwd: dy {:?} vs expected [{cout}, {t_out}]",
            dy.shape()
        )));
    }
    let xd = x.data();
    let wd = w.data();
    let dyd = dy.data();
    let mut dx = vec![0.0; cin * t];
    let mut dw = vec![0.0; cout * cin * k];
    let mut db = vec![0.0; cout];
    for co in 0..cout {
        let dyrow = &dyd[co * t_out..(co + 1) * t_out];
        db[co] += dyrow.iter().sum::<f64>();
        for ot in 0..t_out {
            let g = dyrow[ot];
            if g == 0.0 {
                continue;
            }
            let start = (ot * stride) as isize - padding as isize;
            for ci in 0..cin {
                let xrow = &xd[ci * t..(ci + 1) * t];
                let woff = (co * cin + ci) * k;
                for kk in 0..k {
                    let ti = start + kk as isize;
                    if ti >= 0 && (ti as usize) < t {
                        dw[woff + kk] += g * xrow[ti as usize];
                        dx[ci * t + ti as usize] += g * wd[woff + kk];
                    }
                }
            }
        }
    }
    Ok((
        Tensor::new([cin, t], dx)?,
        Tensor::new([cout, cin, k], dw)?,
        Tensor::from_slice(&db),
    ))
}

/// Max pooling over time: `x: C×T` → `(C×T', argmax indices)`.
///
/// No padding; trailing elements that do not fill a window are dropped.
pub fn maxpool1d(x: &Tensor, k: usize, stride: usize) -> Result<(Tensor, Vec<usize>)> {
    if x.rank() != 2 {
        return Err(Error::shape(format!("maxpool1d expects rank 2, got {:?}", x.shape())));
    }
    if k == 0 || stride == 0 {
        return Err(Error::config("maxpool1d kernel and stride must be positive"));
    }
    let (c, t) = (x.shape()[0], x.shape()[1]);
    if t < k {
        return Err(Error::shape(format!("maxpool1d window {k} longer than input {t}")));
    }
    let t_out = (t - k) / stride + 1;
    let xd = x.data();
    let mut out = vec![0.0; c * t_out];
    let mut arg = vec![0usize; c * t_out];
    for ci in 0..c {
        let xrow = &xd[ci * t..(ci + 1) * t];
        for ot in 0..t_out {
            let start = ot * stride;
            let mut best = xrow[start];
            let mut best_i = start;
            for ti in start + 1..start + k {
                if xrow[ti] > best {
                    best = xrow[ti];
                    best_i = ti;
                }
            }
            out[ci * t_out + ot] = best;
            arg[ci * t_out + ot] = ci * t + best_i;
        }
    }
    Ok((Tensor::new([c, t_out], out)?, arg))
}

/// Backward of [`maxpool1d`]: routes each output gradient to its argmax.
pub fn maxpool1d_bwd(x_shape: &[usize], indices: &[usize], dy: &Tensor) -> Result<Tensor> {
    if dy.len() != indices.len() {
        return Err(Error::shape(format!(
            "maxpool1d_bwd: {} gradients vs {} indices",
            dy.len(),
            indices.len()
        )));
    }
    let mut dx = Tensor::zeros(x_shape.to_vec());
    let dxd = dx.data_mut();
    for (&idx, &g) in indices.iter().zip(dy.data()) {
        dxd[idx] += g;
    }
    Ok(dx)
}
