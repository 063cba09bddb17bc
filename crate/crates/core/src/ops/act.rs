//! Activations, row softmax / log-softmax, and layer normalization.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Pointwise nonlinearities used across the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// Gaussian error linear unit, exact form `x · Φ(x)`.
    Gelu,
    /// Rectified linear unit.
    Relu,
    /// Logistic sigmoid.
    Sigmoid,
    /// Hyperbolic tangent.
    Tanh,
}

/// Standard normal CDF via the error function.
#[inline]
fn phi(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x * core::f64::consts::FRAC_1_SQRT_2))
}

/// Standard normal PDF.
#[inline]
fn phi_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * core::f64::consts::PI)
}

/// Logistic sigmoid.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Scalar activation value.
#[inline]
pub fn act_value(kind: Activation, x: f64) -> f64 {
    match kind {
        Activation::Gelu => x * phi(x),
        Activation::Relu => {
            if x > 0.0 {
                x
            } else {
                0.0
            }
        }
        Activation::Sigmoid => sigmoid(x),
        Activation::Tanh => libm::tanh(x),
    }
}

/// Scalar activation derivative at pre-activation `x`.
#[inline]
pub fn act_deriv(kind: Activation, x: f64) -> f64 {
    match kind {
        Activation::Gelu => phi(x) + x * phi_pdf(x),
        Activation::Relu => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Sigmoid => {
            let s = sigmoid(x);
            s * (1.0 - s)
        }
        Activation::Tanh => {
            let t = libm::tanh(x);
            1.0 - t * t
        }
    }
}

/// Elementwise activation over a tensor.
pub fn activation(x: &Tensor, kind: Activation) -> Tensor {
    x.map(|v| act_value(kind, v))
}

/// Backward of [`activation`]: needs the pre-activation input.
pub fn activation_bwd(x: &Tensor, kind: Activation, dy: &Tensor) -> Result<Tensor> {
    x.zip_map(dy, |v, g| act_deriv(kind, v) * g)
}

/// Numerically stable softmax over a mutable slice (in place).
pub fn softmax_slice(xs: &mut [f64]) {
    let mut hi = f64::NEG_INFINITY;
    for &x in xs.iter() {
        if x > hi {
            hi = x;
        }
    }
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = libm::exp(*x - hi);
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

/// Row-wise softmax of a rank-2 tensor.
pub fn softmax_rows(x: &Tensor) -> Result<Tensor> {
    if x.rank() != 2 {
        return Err(Error::shape(format!("softmax_rows requires rank 2, got {:?}", x.shape())));
    }
    let mut out = x.clone();
    for i in 0..out.rows() {
        softmax_slice(out.row_mut(i));
    }
    debug_assert!(out.all_finite());
    Ok(out)
}

/// Backward of row softmax, given the forward output `y`:
/// `dx = y ⊙ (dy − Σ_j y_j dy_j)` per row.
pub fn softmax_rows_bwd(y: &Tensor, dy: &Tensor) -> Result<Tensor> {
    if y.shape() != dy.shape() {
        return Err(Error::shape(format!(
            "softmax_rows_bwd: {:?} vs {:?}",
            y.shape(),
            dy.shape()
        )));
    }
    let mut dx = Tensor::zeros(y.shape().to_vec());
    for i in 0..y.rows() {
        let yr = y.row(i);
        let dyr = dy.row(i);
        let dot: f64 = yr.iter().zip(dyr).map(|(&a, &b)| a * b).sum();
        let dxr = dx.row_mut(i);
        for j in 0..yr.len() {
            dxr[j] = yr[j] * (dyr[j] - dot);
        }
    }
    Ok(dx)
}

/// Softmax gradient for a single row given output `y` and upstream `dy`.
pub fn softmax_slice_bwd(y: &[f64], dy: &[f64], dx: &mut [f64]) {
    let dot: f64 = y.iter().zip(dy).map(|(&a, &b)| a * b).sum();
    for j in 0..y.len() {
        dx[j] = y[j] * (dy[j] - dot);
    }
}

/// Row-wise log-softmax of a rank-2 tensor (stable via max subtraction).
pub fn log_softmax_rows(x: &Tensor) -> Result<Tensor> {
    if x.rank() != 2 {
        return Err(Error::shape(format!(
            "log_softmax_rows requires rank 2, got {:?}",
            x.shape()
        )));
    }
    let mut out = x.clone();
    for i in 0..out.rows() {
        log_softmax_slice(out.row_mut(i));
    }
    debug_assert!(out.all_finite());
    Ok(out)
}

/// In-place log-softmax over one slice.
pub fn log_softmax_slice(xs: &mut [f64]) {
    let mut hi = f64::NEG_INFINITY;
    for &x in xs.iter() {
        if x > hi {
            hi = x;
        }
    }
    let mut sum = 0.0;
    for &x in xs.iter() {
        sum += libm::exp(x - hi);
    }
    let lse = hi + libm::log(sum);
    for x in xs.iter_mut() {
        *x -= lse;
    }
}

/// Backward of row log-softmax, given the forward output `logy`:
/// `dx = dy − exp(logy) · Σ_j dy_j` per row.
pub fn log_softmax_rows_bwd(logy: &Tensor, dy: &Tensor) -> Result<Tensor> {
    if logy.shape() != dy.shape() {
        return Err(Error::shape(format!(
            "log_softmax_rows_bwd: {:?} vs {:?}",
            logy.shape(),
            dy.shape()
        )));
    }
    let mut dx = Tensor::zeros(logy.shape().to_vec());
    for i in 0..logy.rows() {
        let lr = logy.row(i);
        let dyr = dy.row(i);
        let total: f64 = dyr.iter().sum();
        let dxr = dx.row_mut(i);
        for j in 0..lr.len() {
            dxr[j] = dyr[j] - libm::exp(lr[j]) * total;
        }
    }
    Ok(dx)
}

/// State saved by [`layer_norm`] for its backward pass.
#[derive(Debug, Clone)]
pub struct LayerNormCache {
    /// Normalized rows `(x − μ) / √(σ² + ε)` before the affine transform.
    pub xhat: Tensor,
    /// Per-row `1 / √(σ² + ε)`.
    pub inv_std: Vec<f64>,
}

/// Row-wise layer normalization with learned scale and shift.
///
/// Each row is normalized to zero mean and (population) unit variance, then
/// transformed as `γ ⊙ x̂ + β`.
pub fn layer_norm(
    x: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    eps: f64,
) -> Result<(Tensor, LayerNormCache)> {
    if x.rank() != 2 {
        return Err(Error::shape(format!("layer_norm requires rank 2, got {:?}", x.shape())));
    }
    let d = x.cols();
    if gamma.len() != d || beta.len() != d {
        return Err(Error::shape(format!(
            "layer_norm: feature dim {} vs gamma {} / beta {}",
            d,
            gamma.len(),
            beta.len()
        )));
    }
    let rows = x.rows();
    let mut xhat = Tensor::zeros([rows, d]);
    let mut out = Tensor::zeros([rows, d]);
    let mut inv_std = Vec::with_capacity(rows);
    let g = gamma.data();
    let b = beta.data();
    for i in 0..rows {
        let xr = x.row(i);
        let mean = xr.iter().sum::<f64>() / d as f64;
        let var = xr.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let istd = 1.0 / libm::sqrt(var + eps);
        inv_std.push(istd);
        let xh = xhat.row_mut(i);
        for j in 0..d {
            xh[j] = (xr[j] - mean) * istd;
        }
        let or = out.row_mut(i);
        for j in 0..d {
            or[j] = g[j] * xhat.at(i, j) + b[j];
        }
    }
    debug_assert!(out.all_finite());
    Ok((out, LayerNormCache { xhat, inv_std }))
}

/// Backward of [`layer_norm`]: returns `(dx, dgamma, dbeta)`.
pub fn layer_norm_bwd(
    cache: &LayerNormCache,
    gamma: &Tensor,
    dy: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let rows = cache.xhat.rows();
    let d = cache.xhat.cols();
    if dy.shape() != [rows, d] {
        return Err(Error::shape(format!(
            "layer_norm_bwd: dy {:?} vs cache {}x{}",
            dy.shape(),
            rows,
            d
        )));
    }
    let mut dx = Tensor::zeros([rows, d]);
    let mut dgamma = vec![0.0; d];
    let mut dbeta = vec![0.0; d];
    let g = gamma.data();
    for i in 0..rows {
        let xh = cache.xhat.row(i);
        let dyr = dy.row(i);
        let istd = cache.inv_std[i];
        let mut sum_dxhat = 0.0;
        let mut sum_dxhat_xhat = 0.0;
        for j in 0..d {
            let dxhat = dyr[j] * g[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xh[j];
            dgamma[j] += dyr[j] * xh[j];
            dbeta[j] += dyr[j];
        }
        let dxr = dx.row_mut(i);
        let dn = d as f64;
        for j in 0..d {
            let dxhat = dyr[j] * g[j];
            dxr[j] = istd * (dxhat - sum_dxhat / dn - xh[j] * sum_dxhat_xhat / dn);
        }
    }
    Ok((dx, Tensor::from_slice(&dgamma), Tensor::from_slice(&dbeta)))
}
