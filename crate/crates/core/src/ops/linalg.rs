//! Dense matrix products and bias addition with their backward passes.

use alloc::format;
use alloc::vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `C = A · B` for rank-2 tensors, `A: m×k`, `B: k×n`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rank() != 2 || b.rank() != 2 {
        return Err(Error::shape(format!(
            "matmul requires rank-2 operands, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (m, k) = (a.shape()[0], a.shape()[1]);
    let (kb, n) = (b.shape()[0], b.shape()[1]);
    if k != kb {
        return Err(Error::shape(format!(
            "matmul inner dims differ: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut out = vec![0.0; m * n];
    let ad = a.data();
    let bd = b.data();
    // i-k-j ordering: the inner loop walks contiguous rows of B and C.
    for i in 0..m {
        let crow = &mut out[i * n..(i + 1) * n];
        for kk in 0..k {
            let aik = ad[i * k + kk];
            if aik == 0.0 {
                continue;
            }
            let brow = &bd[kk * n..(kk + 1) * n];
            for j in 0..n {
                crow[j] += aik * brow[j];
            }
        }
    }
    Tensor::new([m, n], out)
}

/// Backward of [`matmul`]: given `dC`, returns `(dA, dB)`.
///
/// `dA = dC · Bᵀ` and `dB = Aᵀ · dC`, computed without materializing the
/// transposes.
pub fn matmul_bwd(a: &Tensor, b: &Tensor, dc: &Tensor) -> Result<(Tensor, Tensor)> {
    let (m, k) = (a.shape()[0], a.shape()[1]);
    let n = b.shape()[1];
    if dc.shape() != [m, n] {
        return Err(Error::shape(format!(
            "matmul_bwd: dC shape {:?} does not match {}x{}",
            dc.shape(),
            m,
            n
        )));
    }
    let ad = a.data();
    let bd = b.data();
    let dcd = dc.data();

    // dA[i,kk] = Σ_j dC[i,j] · B[kk,j]
    let mut da = vec![0.0; m * k];
    for i in 0..m {
        let dcrow = &dcd[i * n..(i + 1) * n];
        for kk in 0..k {
            let brow = &bd[kk * n..(kk + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                acc += dcrow[j] * brow[j];
            }
            da[i * k + kk] = acc;
        }
    }

    // dB[kk,j] = Σ_i A[i,kk] · dC[i,j]
    let mut db = vec![0.0; k * n];
    for i in 0..m {
        let dcrow = &dcd[i * n..(i + 1) * n];
        for kk in 0..k {
            let aik = ad[i * k + kk];
            if aik == 0.0 {
                continue;
            }
            let dbrow = &mut db[kk * n..(kk + 1) * n];
            for j in 0..n {
                dbrow[j] += aik * dcrow[j];
            }
        }
    }

    Ok((Tensor::new([m, k], da)?, Tensor::new([k, n], db)?))
}

/// Adds a length-`D` bias vector to every row of a `T×D` tensor.
pub fn add_bias(x: &Tensor, b: &Tensor) -> Result<Tensor> {
    if x.rank() != 2 || b.rank() != 1 || x.cols() != b.len() {
        return Err(Error::shape(format!(
            "add_bias: x {:?} vs bias {:?}",
            x.shape(),
            b.shape()
        )));
    }
    let mut out = x.clone();
    let bd = b.data();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        for (v, &bb) in row.iter_mut().zip(bd) {
            *v += bb;
        }
    }
    Ok(out)
}

/// Backward of [`add_bias`] with respect to the bias: column sums of `dy`.
pub fn add_bias_bwd(dy: &Tensor) -> Tensor {
    let (rows, cols) = (dy.rows(), dy.cols());
    let mut db = vec![0.0; cols];
    for i in 0..rows {
        for (acc, &g) in db.iter_mut().zip(dy.row(i)) {
            *acc += g;
        }
    }
    Tensor::from_slice(&db)
}
