//! Character n-gram language model with add-k smoothing.
//!
//! The event space is the target-token alphabet plus the end-of-sequence
//! marker, so a hypothesis pays a language-model cost both per emitted
//! character and for stopping. Contexts are padded with a begin-of-sequence
//! sentinel that never appears as an event. The model sits behind the same
//! score/advance interface a recurrent model would, so swapping one in
//! later only touches construction.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ops::logmath::log_add;

/// Language-model context: the most recent `n−1` events, sentinel-padded.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LmState {
    ctx: Vec<u16>,
}

/// Add-k smoothed n-gram model over target tokens plus end-of-sequence.
#[derive(Debug, Clone)]
pub struct NgramLm {
    n: usize,
    k: f64,
    /// Events are ids `0..n_events`; the last id is end-of-sequence.
    n_events: usize,
    /// Counts of full n-grams (context then event).
    ngrams: BTreeMap<Vec<u16>, u64>,
    /// Counts of contexts (sum of their continuations).
    contexts: BTreeMap<Vec<u16>, u64>,
}

impl NgramLm {
    /// Counts n-grams over `corpus`, where each sequence holds target-token
    /// ids in `0..n_targets` and implicitly ends with end-of-sequence.
    pub fn train(corpus: &[Vec<u16>], n: usize, k: f64, n_targets: usize) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::config("language model needs a nonempty corpus"));
        }
        if n < 1 {
            return Err(Error::config("n-gram order must be ≥ 1"));
        }
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::config(format!("smoothing constant must be finite and ≥ 0, got {k}")));
        }
        if n_targets < 1 {
            return Err(Error::config("language model needs at least one target token"));
        }
        let n_events = n_targets + 1;
        let eos = n_targets as u16;
        let bos = n_events as u16;
        let mut ngrams = BTreeMap::new();
        let mut contexts = BTreeMap::new();
        for seq in corpus {
            for &c in seq {
                if (c as usize) >= n_targets {
                    return Err(Error::Vocab(format!(
                        "corpus token {c} outside {n_targets} target tokens"
                    )));
                }
            }
            let mut ctx = vec![bos; n - 1];
            for &event in seq.iter().chain(core::iter::once(&eos)) {
                *contexts.entry(ctx.clone()).or_insert(0) += 1;
                let mut gram = ctx.clone();
                gram.push(event);
                *ngrams.entry(gram).or_insert(0) += 1;
                ctx.push(event);
                ctx.remove(0);
            }
        }
        Ok(NgramLm { n, k, n_events, ngrams, contexts })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Number of event ids (`n_targets + 1`).
    pub fn n_events(&self) -> usize {
        self.n_events
    }

    /// The end-of-sequence event id (`n_targets`).
    pub fn eos_event(&self) -> u16 {
        (self.n_events - 1) as u16
    }

    /// Context at the start of a sequence (all sentinel).
    pub fn start(&self) -> LmState {
        LmState { ctx: vec![self.n_events as u16; self.n - 1] }
    }

    /// Conditional log-probability of event `c` given the context, and the
    /// advanced context.
    ///
    /// With `k = 0` a context never seen in training yields the uniform
    /// distribution; a seen context gives unseen continuations probability
    /// zero (`−∞` here).
    pub fn logp(&self, state: &LmState, c: u16) -> Result<(f64, LmState)> {
        if (c as usize) >= self.n_events {
            return Err(Error::Vocab(format!(
                "event {c} outside the {}-event language model",
                self.n_events
            )));
        }
        let ctx_total = self.contexts.get(&state.ctx).copied().unwrap_or(0);
        let mut gram = state.ctx.clone();
        gram.push(c);
        let gram_count = self.ngrams.get(&gram).copied().unwrap_or(0);
        let den = ctx_total as f64 + self.k * self.n_events as f64;
        let logp = if den == 0.0 {
            // Unsmoothed and unseen: fall back to uniform.
            -libm::log(self.n_events as f64)
        } else if gram_count == 0 && self.k == 0.0 {
            f64::NEG_INFINITY
        } else {
            libm::log(gram_count as f64 + self.k) - libm::log(den)
        };
        let mut ctx = state.ctx.clone();
        if self.n > 1 {
            ctx.push(c);
            ctx.remove(0);
        }
        Ok((logp, LmState { ctx }))
    }

    /// Chained log-probability of the whole sequence, including the final
    /// end-of-sequence event.
    pub fn score_sequence(&self, seq: &[u16]) -> Result<f64> {
        let mut state = self.start();
        let mut total = 0.0;
        for &c in seq.iter().chain(core::iter::once(&self.eos_event())) {
            let (lp, next) = self.logp(&state, c)?;
            total += lp;
            state = next;
        }
        Ok(total)
    }

    /// Log of the summed conditional distribution for a context (testing
    /// aid; exactly 0 when the distribution is proper).
    pub fn log_mass(&self, state: &LmState) -> Result<f64> {
        let mut mass = f64::NEG_INFINITY;
        for c in 0..self.n_events as u16 {
            let (lp, _) = self.logp(state, c)?;
            mass = log_add(mass, lp);
        }
        Ok(mass)
    }
}
