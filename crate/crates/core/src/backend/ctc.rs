//! Connectionist temporal classification: collapse rule, exact loss, and
//! exact gradient via the forward-backward recursion in log space.
//!
//! The loss is `−log Σ_π Π_t p_t(π_t)` over all frame-level paths `π` whose
//! collapse (merge adjacent repeats, then delete blanks) equals the target.
//! The recursion runs over the blank-interleaved extended target
//! `[∅, y₁, ∅, y₂, …, ∅]`; with `α` covering emissions up to and including
//! frame `t` and `β̂` covering emissions strictly after `t`, the path sum
//! factorizes as `P = Σ_s α_t(s)·β̂_t(s)` at every frame, which yields the
//! gradient `∂L/∂log p_t(k) = −(1/P)·Σ_{s: z_s=k} α_t(s)·β̂_t(s)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ops::logmath::log_add;
use crate::tensor::Tensor;

/// Collapses a frame-level path: merge adjacent repeats, then delete the
/// blank. (When the word boundary doubles as the blank, deleting "blanks"
/// deletes boundaries — same rule, different id.)
pub fn ctc_collapse(path: &[u16], blank: usize) -> Vec<u16> {
    let mut out = Vec::new();
    let mut prev: Option<u16> = None;
    for &p in path {
        if prev != Some(p) {
            if (p as usize) != blank {
                out.push(p);
            }
            prev = Some(p);
        }
    }
    out
}

/// Minimum number of frames needed to emit `target`: one per label plus one
/// separating blank between each adjacent repeated pair.
pub fn min_frames(target: &[u16]) -> usize {
    let repeats = target.windows(2).filter(|w| w[0] == w[1]).count();
    target.len() + repeats
}

fn validate(logp: &Tensor, target: &[u16], blank: usize) -> Result<()> {
    if logp.rank() != 2 {
        return Err(Error::shape(format!("ctc: log-probs must be T×C, got {:?}", logp.shape())));
    }
    let c = logp.cols();
    if blank >= c {
        return Err(Error::config(format!("ctc: blank id {blank} outside {c} classes")));
    }
    for &y in target {
        if (y as usize) >= c {
            return Err(Error::Vocab(format!("ctc: target id {y} outside {c} classes")));
        }
        if (y as usize) == blank {
            return Err(Error::Vocab("ctc: blank may not appear in a target".into()));
        }
    }
    let t = logp.rows();
    let need = min_frames(target);
    if t < need {
        return Err(Error::InfeasibleTarget(format!(
            "target of length {} needs at least {need} frames, got {t}",
            target.len()
        )));
    }
    Ok(())
}

/// Blank-interleaved extended target: `[blank, y₁, blank, …, y_S, blank]`.
fn extend(target: &[u16], blank: usize) -> Vec<usize> {
    let mut z = Vec::with_capacity(2 * target.len() + 1);
    z.push(blank);
    for &y in target {
        z.push(y as usize);
        z.push(blank);
    }
    z
}

/// Forward pass of the recursion; returns `(alpha, log P)` with `alpha`
/// holding log values, one row per frame over the extended target.
fn forward_alpha(logp: &Tensor, z: &[usize], blank: usize) -> (Tensor, f64) {
    let t_len = logp.rows();
    let s_len = z.len();
    let mut alpha = Tensor::full([t_len, s_len], f64::NEG_INFINITY);
    alpha.set(0, 0, logp.at(0, z[0]));
    if s_len > 1 {
        alpha.set(0, 1, logp.at(0, z[1]));
    }
    for t in 1..t_len {
        for s in 0..s_len {
            let mut best = alpha.at(t - 1, s);
            if s >= 1 {
                best = log_add(best, alpha.at(t - 1, s - 1));
            }
            // Skip transition allowed when the label differs from the one
            // two slots back (blanks and repeated labels must be stepped
            // through one at a time).
            if s >= 2 && z[s] != blank && z[s] != z[s - 2] {
                best = log_add(best, alpha.at(t - 1, s - 2));
            }
            if best != f64::NEG_INFINITY {
                alpha.set(t, s, best + logp.at(t, z[s]));
            }
        }
    }
    let mut log_p = alpha.at(t_len - 1, s_len - 1);
    if s_len > 1 {
        log_p = log_add(log_p, alpha.at(t_len - 1, s_len - 2));
    }
    (alpha, log_p)
}

/// Log-probability of the target under per-frame log-probs (forward only).
pub fn ctc_log_prob(logp: &Tensor, target: &[u16], blank: usize) -> Result<f64> {
    validate(logp, target, blank)?;
    let z = extend(target, blank);
    let (_, log_p) = forward_alpha(logp, &z, blank);
    Ok(log_p)
}

/// CTC loss and its exact gradient with respect to the per-frame
/// log-probabilities.
///
/// Returns `(−log P(target), dL/dlogp)` where the gradient tensor has the
/// same `T×C` shape as the input.
pub fn ctc_loss(logp: &Tensor, target: &[u16], blank: usize) -> Result<(f64, Tensor)> {
    validate(logp, target, blank)?;
    let z = extend(target, blank);
    let (alpha, log_p) = forward_alpha(logp, &z, blank);
    let t_len = logp.rows();
    let c = logp.cols();
    let s_len = z.len();

    // β̂_t(s): log-probability of completing the extended target using
    // emissions strictly after frame t. At the last frame nothing remains.
    let mut beta = Tensor::full([t_len, s_len], f64::NEG_INFINITY);
    beta.set(t_len - 1, s_len - 1, 0.0);
    if s_len > 1 {
        beta.set(t_len - 1, s_len - 2, 0.0);
    }
    for t in (0..t_len - 1).rev() {
        for s in 0..s_len {
            let mut acc = beta.at(t + 1, s) + logp.at(t + 1, z[s]);
            if s + 1 < s_len {
                acc = log_add(acc, beta.at(t + 1, s + 1) + logp.at(t + 1, z[s + 1]));
            }
            if s + 2 < s_len && z[s + 2] != blank && z[s + 2] != z[s] {
                acc = log_add(acc, beta.at(t + 1, s + 2) + logp.at(t + 1, z[s + 2]));
            }
            beta.set(t, s, acc);
        }
    }

    let mut grad = Tensor::zeros([t_len, c]);
    let mut per_class = vec![f64::NEG_INFINITY; c];
    for t in 0..t_len {
        for v in per_class.iter_mut() {
            *v = f64::NEG_INFINITY;
        }
        for s in 0..s_len {
            let ab = alpha.at(t, s) + beta.at(t, s);
            if ab != f64::NEG_INFINITY {
                per_class[z[s]] = log_add(per_class[z[s]], ab);
            }
        }
        let row = grad.row_mut(t);
        for k in 0..c {
            if per_class[k] != f64::NEG_INFINITY {
                row[k] = -libm::exp(per_class[k] - log_p);
            }
        }
    }
    Ok((-log_p, grad))
}
