//! Central finite-difference gradient checking.
//!
//! Every backward kernel in this crate is validated against these helpers.
//! The comparison uses relative error with an absolute floor so that
//! near-zero gradients are compared absolutely instead of blowing up the
//! ratio.

use alloc::vec::Vec;

use crate::tensor::Tensor;

/// Absolute floor below which a gradient discrepancy counts as zero.
pub const ABS_FLOOR: f64 = 1e-7;

/// Default tolerance on the relative error of analytic vs numeric gradients.
pub const REL_TOL: f64 = 1e-4;

/// Numeric gradient of a scalar function at `x` by central differences.
///
/// Perturbs one element at a time: `(f(x+e) - f(x-e)) / (2e)`.
pub fn finite_diff_grad(x: &Tensor, eps: f64, f: impl Fn(&Tensor) -> f64) -> Tensor {
    let mut grad: Vec<f64> = Vec::with_capacity(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + eps;
        let fp = f(&probe);
        probe.data_mut()[i] = orig - eps;
        let fm = f(&probe);
        probe.data_mut()[i] = orig;
        grad.push((fp - fm) / (2.0 * eps));
    }
    Tensor::new(x.shape().to_vec(), grad).expect("gradient shape follows input shape")
}

/// Discrepancy between one analytic and one numeric gradient value:
/// relative error, floored to zero when the absolute difference is below
/// [`ABS_FLOOR`].
pub fn grad_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff <= ABS_FLOOR {
        0.0
    } else {
        diff / analytic.abs().max(numeric.abs()).max(ABS_FLOOR)
    }
}

/// Maximum elementwise [`grad_error`] between two same-shape gradients.
pub fn max_rel_error(analytic: &Tensor, numeric: &Tensor) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape(), "gradient shapes must match");
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(&a, &n)| grad_error(a, n))
        .fold(0.0, f64::max)
}

/// Central difference for a single coordinate of `x`.
///
/// Cheaper than [`finite_diff_grad`] when only a sample of coordinates is
/// being checked (large recurrent layers).
pub fn finite_diff_at(x: &Tensor, index: usize, eps: f64, f: impl Fn(&Tensor) -> f64) -> f64 {
    let mut probe = x.clone();
    let orig = probe.data()[index];
    probe.data_mut()[index] = orig + eps;
    let fp = f(&probe);
    probe.data_mut()[index] = orig - eps;
    let fm = f(&probe);
    (fp - fm) / (2.0 * eps)
}

/// Up to `n` distinct indices spread evenly over `0..len` (always including
/// the first and last element when possible): deterministic probe points for
/// sampled gradient checks.
pub fn probe_indices(len: usize, n: usize) -> Vec<usize> {
    if len == 0 || n == 0 {
        return Vec::new();
    }
    if n >= len {
        return (0..len).collect();
    }
    let mut out: Vec<usize> = (0..n).map(|i| i * (len - 1) / (n - 1).max(1)).collect();
    out.dedup();
    out
}
