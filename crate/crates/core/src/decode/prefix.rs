//! Label-synchronous prefix scoring over per-frame collapse-level
//! log-probabilities.
//!
//! A prefix state tracks, for every frame count `t`, the log-probability
//! mass of alignments that collapse to exactly this prefix, split into the
//! pair (last frame was blank, last frame was the final label). Extending
//! the prefix by one label runs one pass of the paired recursion and also
//! yields the *prefix probability*: the mass of complete alignments whose
//! collapse **begins with** the extended prefix, which is the quantity a
//! label-synchronous beam search ranks by.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ops::logmath::log_add;
use crate::tensor::Tensor;

/// Prefix-probability recursion state for one prefix.
#[derive(Debug, Clone)]
pub struct CtcPrefixState {
    /// `log_b[t]`: mass after `t` frames ending in blank (index 0 is the
    /// zero-frame base case).
    log_b: Vec<f64>,
    /// `log_nb[t]`: mass after `t` frames ending in the prefix's last label.
    log_nb: Vec<f64>,
    /// Log prefix probability: mass of full-length alignments whose
    /// collapse starts with this prefix (0 for the empty prefix).
    log_prefix: f64,
    last: Option<u16>,
}

fn validate_frames(logp: &Tensor, blank: usize) -> Result<()> {
    if logp.rank() != 2 || logp.rows() == 0 {
        return Err(Error::shape(format!(
            "prefix scoring expects nonempty T×C log-probs, got {:?}",
            logp.shape()
        )));
    }
    if blank >= logp.cols() {
        return Err(Error::config(format!(
            "blank id {blank} outside {} classes",
            logp.cols()
        )));
    }
    Ok(())
}

impl CtcPrefixState {
    /// State of the empty prefix: all mass sits on the all-blank paths.
    pub fn root(logp: &Tensor, blank: usize) -> Result<Self> {
        validate_frames(logp, blank)?;
        let t_len = logp.rows();
        let mut log_b = vec![f64::NEG_INFINITY; t_len + 1];
        log_b[0] = 0.0;
        for t in 1..=t_len {
            log_b[t] = log_b[t - 1] + logp.at(t - 1, blank);
        }
        Ok(CtcPrefixState {
            log_b,
            log_nb: vec![f64::NEG_INFINITY; t_len + 1],
            log_prefix: 0.0,
            last: None,
        })
    }

    /// Extends the prefix by the non-blank label `c`, rebuilding the pair
    /// over all frame counts and accumulating the new prefix probability.
    pub fn extend(&self, logp: &Tensor, blank: usize, c: u16) -> Result<Self> {
        validate_frames(logp, blank)?;
        let t_len = logp.rows();
        if self.log_b.len() != t_len + 1 {
            return Err(Error::shape(format!(
                "prefix state built over {} frames, extended with {}",
                self.log_b.len() - 1,
                t_len
            )));
        }
        if (c as usize) >= logp.cols() {
            return Err(Error::Vocab(format!(
                "label {c} outside {} classes",
                logp.cols()
            )));
        }
        if (c as usize) == blank {
            return Err(Error::Vocab("cannot extend a prefix by blank".into()));
        }
        let mut log_b = vec![f64::NEG_INFINITY; t_len + 1];
        let mut log_nb = vec![f64::NEG_INFINITY; t_len + 1];
        let mut log_prefix = f64::NEG_INFINITY;
        for t in 1..=t_len {
            // Mass that emits `c` as a *new* label at frame t: the parent
            // ended in blank, or in a different label (a repeated label
            // needs an intervening blank).
            let mut phi = self.log_b[t - 1];
            if self.last != Some(c) {
                phi = log_add(phi, self.log_nb[t - 1]);
            }
            let p_c = logp.at(t - 1, c as usize);
            log_nb[t] = p_c + log_add(phi, log_nb[t - 1]);
            log_b[t] = logp.at(t - 1, blank) + log_add(log_b[t - 1], log_nb[t - 1]);
            log_prefix = log_add(log_prefix, phi + p_c);
        }
        Ok(CtcPrefixState { log_b, log_nb, log_prefix, last: Some(c) })
    }

    /// Log-probability that the collapsed output begins with this prefix.
    pub fn log_prefix(&self) -> f64 {
        self.log_prefix
    }

    /// Log-probability that the collapsed output is exactly this prefix.
    pub fn log_complete(&self) -> f64 {
        let t = self.log_b.len() - 1;
        log_add(self.log_b[t], self.log_nb[t])
    }

    /// The label this prefix ends with (`None` for the empty prefix).
    pub fn last(&self) -> Option<u16> {
        self.last
    }
}

/// Free-function form of [`CtcPrefixState::extend`].
pub fn ctc_prefix_extend(
    state: &CtcPrefixState,
    logp: &Tensor,
    blank: usize,
    c: u16,
) -> Result<CtcPrefixState> {
    state.extend(logp, blank, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ctc::{ctc_log_prob, min_frames};
    use crate::rng::SeededRng;

    /// Random, properly normalized per-frame log-probs.
    fn random_logp(rng: &mut SeededRng, t: usize, c: usize) -> Tensor {
        let mut logp = Tensor::zeros([t, c]);
        for i in 0..t {
            let row = logp.row_mut(i);
            for v in row.iter_mut() {
                *v = rng.normal();
            }
            let lse = crate::ops::logmath::logsumexp(row);
            for v in row.iter_mut() {
                *v -= lse;
            }
        }
        logp
    }

    #[test]
    fn empty_prefix_accumulates_the_all_blank_mass() {
        let mut rng = SeededRng::new(61, 0);
        let logp = random_logp(&mut rng, 4, 3);
        let blank = 2;
        let root = CtcPrefixState::root(&logp, blank).unwrap();
        let all_blank: f64 = (0..4).map(|t| logp.at(t, blank)).sum();
        assert!((root.log_complete() - all_blank).abs() < 1e-12);
        assert_eq!(root.log_prefix(), 0.0);
        let oracle = ctc_log_prob(&logp, &[], blank).unwrap();
        assert!((root.log_complete() - oracle).abs() < 1e-12);
    }

    #[test]
    fn two_uniform_frames_score_a_single_label_at_three_quarters() {
        // Two classes (label 0 and blank 1), both at probability one half,
        // two frames. Exactly three of the four alignments collapse to the
        // single label: 00, 0-, -0.
        let logp = Tensor::full([2, 2], core::f64::consts::LN_2 * -1.0);
        let root = CtcPrefixState::root(&logp, 1).unwrap();
        let one = root.extend(&logp, 1, 0).unwrap();
        let expect = libm::log(0.75);
        assert!((one.log_prefix() - expect).abs() < 1e-12);
        assert!((one.log_complete() - expect).abs() < 1e-12);
    }

    #[test]
    fn chained_extensions_match_the_independent_sequence_probability() {
        let mut rng = SeededRng::new(61, 1);
        let blank = 4usize;
        for case in 0..60 {
            let t_len = 1 + (case % 5);
            let logp = random_logp(&mut rng, t_len, 5);
            // Random target over labels 0..4, length 0..=4; skip infeasible.
            let len = (rng.below(5)) as usize;
            let target: Vec<u16> = (0..len).map(|_| rng.below(4) as u16).collect();
            if min_frames(&target) > t_len {
                continue;
            }
            let mut state = CtcPrefixState::root(&logp, blank).unwrap();
            let mut prefixes = Vec::new();
            for &c in &target {
                state = ctc_prefix_extend(&state, &logp, blank, c).unwrap();
                prefixes.push(state.log_prefix());
            }
            let oracle = ctc_log_prob(&logp, &target, blank).unwrap();
            let got = state.log_complete();
            let rel = (got - oracle).abs() / oracle.abs().max(1e-300);
            assert!(
                rel < 1e-10,
                "case {case}: target {target:?} over {t_len} frames: {got} vs {oracle}"
            );
            // Prefix mass can only shrink as the prefix grows, and the
            // complete mass never exceeds the prefix mass.
            let mut prev = 0.0;
            for &p in &prefixes {
                assert!(p <= prev + 1e-12);
                prev = p;
            }
            assert!(got <= state.log_prefix() + 1e-12);
        }
    }

    #[test]
    fn repeated_labels_require_a_separating_blank() {
        // One frame cannot realize the doubled label at all.
        let logp = Tensor::full([1, 2], core::f64::consts::LN_2 * -1.0);
        let root = CtcPrefixState::root(&logp, 1).unwrap();
        let one = root.extend(&logp, 1, 0).unwrap();
        let two = one.extend(&logp, 1, 0).unwrap();
        assert_eq!(two.log_complete(), f64::NEG_INFINITY);
        assert_eq!(two.log_prefix(), f64::NEG_INFINITY);
        // Three frames: the only alignment for "00" is 0-0.
        let logp3 = Tensor::full([3, 2], core::f64::consts::LN_2 * -1.0);
        let root = CtcPrefixState::root(&logp3, 1).unwrap();
        let two = root.extend(&logp3, 1, 0).unwrap().extend(&logp3, 1, 0).unwrap();
        assert!((two.log_complete() - libm::log(0.125)).abs() < 1e-12);
        let oracle = ctc_log_prob(&logp3, &[0, 0], 1).unwrap();
        assert!((two.log_complete() - oracle).abs() < 1e-12);
    }

    #[test]
    fn invalid_extensions_are_rejected() {
        let logp = Tensor::full([2, 3], -1.0);
        let root = CtcPrefixState::root(&logp, 2).unwrap();
        assert!(root.extend(&logp, 2, 2).is_err(), "blank extension");
        assert!(root.extend(&logp, 2, 3).is_err(), "label outside classes");
        let other = Tensor::full([4, 3], -1.0);
        assert!(root.extend(&other, 2, 0).is_err(), "frame-count mismatch");
        assert!(CtcPrefixState::root(&logp, 3).is_err(), "blank outside classes");
        assert!(CtcPrefixState::root(&Tensor::zeros([0, 3]), 2).is_err(), "empty frames");
    }
}
