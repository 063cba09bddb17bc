//! Inverted dropout.
//!
//! During training each element is zeroed with probability `rate` and the
//! survivors are scaled by `1/(1 − rate)` so the expectation is unchanged;
//! at evaluation time the op is the identity. The returned mask already
//! contains the scale factor, so the backward pass is a single Hadamard
//! product.

use alloc::format;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// Applies dropout. Returns the output and, when training, the scaled
/// keep-mask needed by [`dropout_bwd`].
pub fn dropout(
    x: &Tensor,
    rate: f64,
    training: bool,
    rng: &mut SeededRng,
) -> Result<(Tensor, Option<Tensor>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::config(format!("dropout rate must be in [0, 1), got {rate}")));
    }
    if !training || rate == 0.0 {
        return Ok((x.clone(), None));
    }
    let scale = 1.0 / (1.0 - rate);
    let mut mask = Tensor::zeros(x.shape().to_vec());
    for m in mask.data_mut() {
        if rng.next_f64() >= rate {
            *m = scale;
        }
    }
    let y = x.hadamard(&mask)?;
    Ok((y, Some(mask)))
}

/// Backward of [`dropout`]: `dx = dy ⊙ mask` (identity when no mask).
pub fn dropout_bwd(dy: &Tensor, mask: Option<&Tensor>) -> Result<Tensor> {
    match mask {
        Some(m) => dy.hadamard(m),
        None => Ok(dy.clone()),
    }
}
