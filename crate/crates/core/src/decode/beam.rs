//! Label-synchronous joint beam search.
//!
//! Hypotheses grow one target token per step. Each expansion is scored by
//! the weighted combination of three streams: the collapse-level prefix
//! probability (switched to the exact complete-sequence probability once a
//! hypothesis ends), the attention decoder's cumulative log-probability,
//! and the language model. The end-of-sequence expansion of every live
//! hypothesis enters a finished pool; the search returns the best finished
//! hypothesis under a total order (score, then lexicographically smaller
//! token sequence), so equal-scoring instances decode identically
//! everywhere.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::backend::s2s::{S2sDecoder, S2sState};
use crate::error::{Error, Result};
use crate::param::ParamStore;
use crate::tensor::Tensor;

use super::lm::{LmState, NgramLm};
use super::prefix::CtcPrefixState;
use super::{combine_score, DecodeConfig, DecodeMode};

/// One search hypothesis with its per-stream parts.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    /// Emitted target tokens (end marker excluded).
    pub prefix: Vec<u16>,
    /// Collapse-level recursion state (the blank-/label-ending pair).
    pub ctc: CtcPrefixState,
    /// Collapse-level part: prefix mass while live, complete mass once
    /// finished.
    pub log_ctc: f64,
    /// Attention-decoder cumulative log-probability (end marker included
    /// once finished).
    pub log_s2s: f64,
    /// Language-model cumulative log-probability (0 when the stream is
    /// disabled).
    pub log_lm: f64,
    /// Weighted combination of the three parts.
    pub score: f64,
    pub finished: bool,
    s2s_state: S2sState,
    lm_state: Option<LmState>,
}

impl Hypothesis {
    /// Recombines the stored parts; always equals `score`.
    pub fn recombined(&self, beta: f64, gamma: f64) -> f64 {
        combine_score(beta, gamma, self.log_ctc, self.log_s2s, self.log_lm)
    }

    fn rank_key(&self, length_normalize: bool) -> f64 {
        if length_normalize {
            self.score / self.prefix.len().max(1) as f64
        } else {
            self.score
        }
    }
}

/// Best-first order: higher rank key, then lexicographically smaller
/// prefix.
fn better(a: &Hypothesis, b: &Hypothesis, length_normalize: bool) -> Ordering {
    b.rank_key(length_normalize)
        .total_cmp(&a.rank_key(length_normalize))
        .then_with(|| a.prefix.cmp(&b.prefix))
}

/// What the search returned.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamOutcome {
    pub tokens: Vec<u16>,
    /// Weighted combined score (raw, never length-normalized).
    pub score: f64,
    pub log_ctc: f64,
    pub log_s2s: f64,
    pub log_lm: f64,
    /// True when no hypothesis finished and the longest best live one was
    /// returned instead.
    pub reached_max_len: bool,
}

fn outcome(h: Hypothesis, reached_max_len: bool) -> BeamOutcome {
    BeamOutcome {
        tokens: h.prefix,
        score: h.score,
        log_ctc: h.log_ctc,
        log_s2s: h.log_s2s,
        log_lm: h.log_lm,
        reached_max_len,
    }
}

/// Joint beam search over the encoded sequence `enc` (attended by the
/// decoder) and the per-frame collapse-level log-probs `logp_ctc`.
///
/// Target tokens are `0..n_targets` (the decoder's alphabet); `blank` must
/// lie outside that range. A language model is required exactly when the
/// effective language-model weight is positive.
pub fn joint_beam_search(
    store: &ParamStore,
    decoder: &S2sDecoder,
    enc: &Tensor,
    logp_ctc: &Tensor,
    blank: usize,
    lm: Option<&NgramLm>,
    cfg: &DecodeConfig,
) -> Result<BeamOutcome> {
    cfg.validate()?;
    if cfg.mode == DecodeMode::CtcGreedy {
        return Err(Error::config("greedy decoding is not a beam search mode"));
    }
    let (beta, gamma) = cfg.effective_weights();
    let n_targets = decoder.cfg.n_targets;
    if logp_ctc.rank() != 2 || logp_ctc.cols() < n_targets + 1 {
        return Err(Error::shape(alloc::format!(
            "need per-frame log-probs over at least {} classes, got {:?}",
            n_targets + 1,
            logp_ctc.shape()
        )));
    }
    if blank < n_targets || blank >= logp_ctc.cols() {
        return Err(Error::config(alloc::format!(
            "blank id {blank} must lie outside the {n_targets} target tokens and inside the {} classes",
            logp_ctc.cols()
        )));
    }
    if enc.rows() == 0 || logp_ctc.rows() == 0 {
        return Err(Error::shape("cannot decode an empty sequence"));
    }
    let lm = if gamma != 0.0 {
        match lm {
            Some(lm) => {
                if lm.n_events() != n_targets + 1 {
                    return Err(Error::config(alloc::format!(
                        "language model covers {} events but the decoder has {} targets",
                        lm.n_events(),
                        n_targets
                    )));
                }
                Some(lm)
            }
            None => {
                return Err(Error::config(
                    "a positive language-model weight needs a language model",
                ))
            }
        }
    } else {
        None
    };

    let enc_proj = decoder.project_encodings(store, enc)?;
    let root = Hypothesis {
        prefix: Vec::new(),
        ctc: CtcPrefixState::root(logp_ctc, blank)?,
        log_ctc: 0.0,
        log_s2s: 0.0,
        log_lm: 0.0,
        score: 0.0,
        finished: false,
        s2s_state: decoder.init_state(enc.rows()),
        lm_state: lm.map(NgramLm::start),
    };
    let mut live = alloc::vec![root];
    let mut best_finished: Option<Hypothesis> = None;

    for step in 0..=cfg.max_len {
        let expand_tokens = step < cfg.max_len;
        let mut candidates: Vec<Hypothesis> = Vec::new();
        for hyp in &live {
            let (logp_slots, next_state, _) =
                decoder.step(store, enc, &enc_proj, &hyp.s2s_state, hyp.prefix.last().copied())?;

            // End the hypothesis: the collapse-level part switches from
            // prefix mass to the exact complete-sequence mass.
            let log_ctc = hyp.ctc.log_complete();
            let log_s2s = hyp.log_s2s + logp_slots[decoder.eos_slot()];
            let log_lm = match (&hyp.lm_state, lm) {
                (Some(state), Some(lm)) => hyp.log_lm + lm.logp(state, lm.eos_event())?.0,
                _ => hyp.log_lm,
            };
            let finished = Hypothesis {
                prefix: hyp.prefix.clone(),
                ctc: hyp.ctc.clone(),
                log_ctc,
                log_s2s,
                log_lm,
                score: combine_score(beta, gamma, log_ctc, log_s2s, log_lm),
                finished: true,
                s2s_state: next_state.clone(),
                lm_state: hyp.lm_state.clone(),
            };
            if best_finished
                .as_ref()
                .is_none_or(|b| better(&finished, b, cfg.length_normalize) == Ordering::Less)
            {
                best_finished = Some(finished);
            }

            if !expand_tokens {
                continue;
            }
            for c in 0..n_targets as u16 {
                let ctc = hyp.ctc.extend(logp_ctc, blank, c)?;
                let log_ctc = ctc.log_prefix();
                let log_s2s = hyp.log_s2s + logp_slots[c as usize];
                let (log_lm, lm_state) = match (&hyp.lm_state, lm) {
                    (Some(state), Some(lm)) => {
                        let (lp, next) = lm.logp(state, c)?;
                        (hyp.log_lm + lp, Some(next))
                    }
                    _ => (hyp.log_lm, None),
                };
                let mut prefix = hyp.prefix.clone();
                prefix.push(c);
                candidates.push(Hypothesis {
                    prefix,
                    ctc,
                    log_ctc,
                    log_s2s,
                    log_lm,
                    score: combine_score(beta, gamma, log_ctc, log_s2s, log_lm),
                    finished: false,
                    s2s_state: next_state.clone(),
                    lm_state,
                });
            }
        }
        if candidates.is_empty() {
            break;
        }
        candidates.sort_by(|a, b| better(a, b, cfg.length_normalize));
        candidates.truncate(cfg.beam_size);
        live = candidates;
    }

    match best_finished {
        Some(best) => Ok(outcome(best, false)),
        None => {
            // Unreachable with a well-formed decoder (ending is always an
            // expansion), but specified: fall back to the best live
            // hypothesis and flag it.
            let best = live
                .into_iter()
                .min_by(|a, b| better(a, b, cfg.length_normalize))
                .ok_or_else(|| Error::config("beam search emptied without finishing"))?;
            Ok(outcome(best, true))
        }
    }
}
