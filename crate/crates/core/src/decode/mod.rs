//! Inference: greedy collapse decoding, label-synchronous prefix scoring,
//! a character n-gram language model, and the joint beam search that
//! combines all three log-probability streams:
//!
//! ```text
//! score(w) = β·log p_ctc(w) + (1−β)·log p_s2s(w) + γ·log p_lm(w)
//! ```
//!
//! An exhaustive reference decoder enumerates every candidate sequence and
//! scores it through independent code paths, pinning the beam search down
//! exactly on small instances.

use alloc::format;
use core::str::FromStr;

use crate::error::{Error, Result};

pub mod beam;
pub mod exhaustive;
pub mod greedy;
pub mod lm;
pub mod prefix;

pub use beam::{joint_beam_search, BeamOutcome, Hypothesis};
pub use exhaustive::exhaustive_decode;
pub use greedy::greedy_ctc;
pub use lm::{LmState, NgramLm};
pub use prefix::{ctc_prefix_extend, CtcPrefixState};

/// Which decoding rule to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeMode {
    /// Per-frame argmax + collapse; no search.
    CtcGreedy,
    /// Label-synchronous beam over collapse-level prefix probabilities
    /// (the sequence-level weight forced to 1).
    CtcBeam,
    /// Pure attention-decoder beam (sequence-level weight forced to 0,
    /// no language model).
    S2sBeam,
    /// Full weighted combination.
    Joint,
}

impl DecodeMode {
    pub fn name(self) -> &'static str {
        match self {
            DecodeMode::CtcGreedy => "ctc_greedy",
            DecodeMode::CtcBeam => "ctc_beam",
            DecodeMode::S2sBeam => "s2s_beam",
            DecodeMode::Joint => "joint",
        }
    }
}

impl FromStr for DecodeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ctc_greedy" => Ok(DecodeMode::CtcGreedy),
            "ctc_beam" => Ok(DecodeMode::CtcBeam),
            "s2s_beam" => Ok(DecodeMode::S2sBeam),
            "joint" => Ok(DecodeMode::Joint),
            other => Err(Error::config(format!(
                "unknown decode mode {other:?} (expected ctc_greedy, ctc_beam, s2s_beam, or joint)"
            ))),
        }
    }
}

/// Search settings shared by every decoding rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeConfig {
    /// Weight on the collapse-level (CTC) term, in `[0, 1]`; the attention
    /// decoder gets `1−β`.
    pub beta: f64,
    /// Weight on the language-model term, `≥ 0`.
    pub gamma: f64,
    /// Live hypotheses kept per step, `≥ 1`.
    pub beam_size: usize,
    /// Longest sequence the search may emit (tokens, excluding the end
    /// marker).
    pub max_len: usize,
    pub mode: DecodeMode,
    /// Divide final scores by sequence length when ranking finished
    /// hypotheses. Off by default.
    pub length_normalize: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            beta: 0.4,
            gamma: 0.3,
            beam_size: 8,
            max_len: 200,
            mode: DecodeMode::Joint,
            length_normalize: false,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) || !self.beta.is_finite() {
            return Err(Error::config(format!("beta must be in [0, 1], got {}", self.beta)));
        }
        if self.gamma < 0.0 || !self.gamma.is_finite() {
            return Err(Error::config(format!("gamma must be ≥ 0, got {}", self.gamma)));
        }
        if self.beam_size < 1 {
            return Err(Error::config("beam_size must be ≥ 1"));
        }
        if self.max_len < 1 {
            return Err(Error::config("max_len must be ≥ 1"));
        }
        Ok(())
    }

    /// The `(β, γ)` actually applied: the single-stream modes pin the
    /// weights rather than reading them from the config.
    pub fn effective_weights(&self) -> (f64, f64) {
        match self.mode {
            DecodeMode::CtcGreedy | DecodeMode::CtcBeam => (1.0, self.gamma),
            DecodeMode::S2sBeam => (0.0, 0.0),
            DecodeMode::Joint => (self.beta, self.gamma),
        }
    }
}

/// `β·log p_ctc + (1−β)·log p_s2s + γ·log p_lm`, with the convention that a
/// zero-weighted term contributes exactly zero even when its log-prob is
/// `−∞` (so disabling a stream cannot poison the score).
pub fn combine_score(beta: f64, gamma: f64, log_ctc: f64, log_s2s: f64, log_lm: f64) -> f64 {
    let term = |w: f64, lp: f64| if w == 0.0 { 0.0 } else { w * lp };
    term(beta, log_ctc) + term(1.0 - beta, log_s2s) + term(gamma, log_lm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_mode_parses_and_round_trips() {
        for mode in
            [DecodeMode::CtcGreedy, DecodeMode::CtcBeam, DecodeMode::S2sBeam, DecodeMode::Joint]
        {
            assert_eq!(mode.name().parse::<DecodeMode>().unwrap(), mode);
        }
        assert!("viterbi".parse::<DecodeMode>().is_err());
    }

    #[test]
    fn config_bounds_are_enforced() {
        let ok = DecodeConfig::default();
        ok.validate().unwrap();
        assert!(DecodeConfig { beta: -0.1, ..ok }.validate().is_err());
        assert!(DecodeConfig { beta: 1.1, ..ok }.validate().is_err());
        assert!(DecodeConfig { gamma: -0.5, ..ok }.validate().is_err());
        assert!(DecodeConfig { beam_size: 0, ..ok }.validate().is_err());
        assert!(DecodeConfig { max_len: 0, ..ok }.validate().is_err());
    }

    #[test]
    fn single_stream_modes_pin_their_weights() {
        let cfg = DecodeConfig { beta: 0.4, gamma: 0.3, ..DecodeConfig::default() };
        assert_eq!(DecodeConfig { mode: DecodeMode::CtcBeam, ..cfg }.effective_weights(), (1.0, 0.3));
        assert_eq!(DecodeConfig { mode: DecodeMode::S2sBeam, ..cfg }.effective_weights(), (0.0, 0.0));
        assert_eq!(DecodeConfig { mode: DecodeMode::Joint, ..cfg }.effective_weights(), (0.4, 0.3));
    }

    #[test]
    fn zero_weight_terms_never_poison_the_score() {
        let s = combine_score(0.0, 0.0, f64::NEG_INFINITY, -1.0, f64::NEG_INFINITY);
        assert_eq!(s, -1.0);
        let s = combine_score(1.0, 0.0, -2.0, f64::NEG_INFINITY, f64::NEG_INFINITY);
        assert_eq!(s, -2.0);
        let s = combine_score(0.5, 0.1, -2.0, -4.0, f64::NEG_INFINITY);
        assert_eq!(s, f64::NEG_INFINITY);
    }
}
