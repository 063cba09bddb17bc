//! Exhaustive reference decoder.
//!
//! Enumerates every token sequence up to a length bound, scores each one
//! from scratch through code paths independent of the beam search (the
//! full forward recursion for the collapse-level term, the decoder's
//! sequence scorer, the language model's chained scorer), and returns the
//! argmax under the same total order the beam search uses. Guarded to tiny
//! search spaces; exists to pin the beam search down exactly.

use alloc::vec::Vec;

use crate::backend::ctc::ctc_log_prob;
use crate::backend::s2s::S2sDecoder;
use crate::error::{Error, Result};
use crate::param::ParamStore;
use crate::tensor::Tensor;

use super::beam::BeamOutcome;
use super::lm::NgramLm;
use super::combine_score;

/// Largest admissible `|alphabet|^max_len`.
const SPACE_GUARD: u64 = 100_000;

/// Scores every sequence of length `0..=max_len` over the decoder's token
/// alphabet and returns the best under (score, then lexicographically
/// smaller sequence). Enumeration is depth-first in token order, which is
/// exactly lexicographic order, so keeping the first strict maximum
/// realizes the tie-break.
pub fn exhaustive_decode(
    store: &ParamStore,
    decoder: &S2sDecoder,
    enc: &Tensor,
    logp_ctc: &Tensor,
    blank: usize,
    lm: Option<&NgramLm>,
    beta: f64,
    gamma: f64,
    max_len: usize,
) -> Result<BeamOutcome> {
    if !(0.0..=1.0).contains(&beta) || gamma < 0.0 {
        return Err(Error::config("weights must satisfy 0 ≤ β ≤ 1 and γ ≥ 0"));
    }
    let n_targets = decoder.cfg.n_targets;
    let mut space = 1u64;
    for _ in 0..max_len {
        space = space.saturating_mul(n_targets as u64);
        if space > SPACE_GUARD {
            return Err(Error::SearchSpace(alloc::format!(
                "{n_targets}^{max_len} sequences exceed the exhaustive guard of {SPACE_GUARD}"
            )));
        }
    }
    if gamma != 0.0 && lm.is_none() {
        return Err(Error::config("a positive language-model weight needs a language model"));
    }
    if enc.rows() == 0 || logp_ctc.rows() == 0 {
        return Err(Error::shape("cannot decode an empty sequence"));
    }

    let mut best: Option<BeamOutcome> = None;
    let mut seq: Vec<u16> = Vec::new();
    visit(
        store, decoder, enc, logp_ctc, blank, lm, beta, gamma, max_len, &mut seq, &mut best,
    )?;
    best.ok_or_else(|| Error::config("exhaustive search scored no sequences"))
}

#[allow(clippy::too_many_arguments)]
fn visit(
    store: &ParamStore,
    decoder: &S2sDecoder,
    enc: &Tensor,
    logp_ctc: &Tensor,
    blank: usize,
    lm: Option<&NgramLm>,
    beta: f64,
    gamma: f64,
    budget: usize,
    seq: &mut Vec<u16>,
    best: &mut Option<BeamOutcome>,
) -> Result<()> {
    let log_ctc = match ctc_log_prob(logp_ctc, seq, blank) {
        Ok(lp) => lp,
        // Too few frames for this sequence: probability zero.
        Err(Error::InfeasibleTarget(_)) => f64::NEG_INFINITY,
        Err(e) => return Err(e),
    };
    let log_s2s = decoder.score_sequence(store, enc, seq)?;
    let log_lm = match lm {
        Some(lm) if gamma != 0.0 => lm.score_sequence(seq)?,
        _ => 0.0,
    };
    let score = combine_score(beta, gamma, log_ctc, log_s2s, log_lm);
    // Strict improvement only: lexicographically earlier sequences visit
    // first, so ties keep the smaller sequence.
    if best.as_ref().is_none_or(|b| score > b.score) {
        *best = Some(BeamOutcome {
            tokens: seq.clone(),
            score,
            log_ctc,
            log_s2s,
            log_lm,
            reached_max_len: false,
        });
    }
    if budget == 0 {
        return Ok(());
    }
    for c in 0..decoder.cfg.n_targets as u16 {
        seq.push(c);
        visit(
            store, decoder, enc, logp_ctc, blank, lm, beta, gamma, budget - 1, seq, best,
        )?;
        seq.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::s2s::S2sConfig;
    use crate::decode::{joint_beam_search, DecodeConfig, DecodeMode};
    use crate::param::ParamGroup;
    use crate::rng::SeededRng;
    use alloc::vec;

    const N_TARGETS: usize = 3;
    const BLANK: usize = 3;

    fn small_decoder(store: &mut ParamStore, rng: &mut SeededRng) -> S2sDecoder {
        let cfg = S2sConfig {
            d_enc: 6,
            n_targets: N_TARGETS,
            hidden: 8,
            embed_dim: 5,
            att_dim: 7,
            att_filters: 4,
            att_kernel: 3,
        };
        S2sDecoder::new(store, "dec", cfg, ParamGroup::Head, rng).unwrap()
    }

    fn random_enc(rng: &mut SeededRng, t: usize) -> Tensor {
        let mut enc = Tensor::zeros([t, 6]);
        for v in enc.data_mut() {
            *v = rng.normal();
        }
        enc
    }

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

    struct Instance {
        store: ParamStore,
        decoder: S2sDecoder,
        enc: Tensor,
        logp_ctc: Tensor,
        lm: NgramLm,
    }

    fn instance(seed: u64) -> Instance {
        let mut rng = SeededRng::new(81, seed);
        let mut store = ParamStore::new();
        let decoder = small_decoder(&mut store, &mut rng);
        let enc = random_enc(&mut rng, 4);
        let logp_ctc = random_logp(&mut rng, 4, N_TARGETS + 1);
        let lm = NgramLm::train(&[vec![0, 1, 2], vec![2, 1], vec![0, 0]], 2, 0.5, N_TARGETS)
            .unwrap();
        Instance { store, decoder, enc, logp_ctc, lm }
    }

    #[test]
    fn saturated_beam_matches_exhaustive_search() {
        for seed in 0..3u64 {
            let inst = instance(seed);
            let oracle = exhaustive_decode(
                &inst.store,
                &inst.decoder,
                &inst.enc,
                &inst.logp_ctc,
                BLANK,
                Some(&inst.lm),
                0.4,
                0.3,
                3,
            )
            .unwrap();
            // 27 length-3 sequences exist; a beam of 40 never prunes.
            let cfg = DecodeConfig {
                mode: DecodeMode::Joint,
                beta: 0.4,
                gamma: 0.3,
                beam_size: 40,
                max_len: 3,
                ..DecodeConfig::default()
            };
            let beam = joint_beam_search(
                &inst.store,
                &inst.decoder,
                &inst.enc,
                &inst.logp_ctc,
                BLANK,
                Some(&inst.lm),
                &cfg,
            )
            .unwrap();
            assert_eq!(beam.tokens, oracle.tokens, "seed {seed}");
            let rel = (beam.score - oracle.score).abs() / oracle.score.abs().max(1.0);
            assert!(rel < 1e-10, "seed {seed}: {} vs {}", beam.score, oracle.score);
        }
    }

    #[test]
    fn narrow_beams_never_beat_the_exhaustive_optimum() {
        for seed in 0..4u64 {
            let inst = instance(seed);
            let oracle = exhaustive_decode(
                &inst.store,
                &inst.decoder,
                &inst.enc,
                &inst.logp_ctc,
                BLANK,
                Some(&inst.lm),
                0.4,
                0.3,
                3,
            )
            .unwrap();
            let mut prev = f64::NEG_INFINITY;
            for beam_size in [1, 2, 4, 8, 16, 40] {
                let cfg = DecodeConfig {
                    mode: DecodeMode::Joint,
                    beta: 0.4,
                    gamma: 0.3,
                    beam_size,
                    max_len: 3,
                    ..DecodeConfig::default()
                };
                let got = joint_beam_search(
                    &inst.store,
                    &inst.decoder,
                    &inst.enc,
                    &inst.logp_ctc,
                    BLANK,
                    Some(&inst.lm),
                    &cfg,
                )
                .unwrap();
                assert!(
                    got.score <= oracle.score + 1e-12,
                    "seed {seed} beam {beam_size} beat the oracle"
                );
                assert!(
                    got.score >= prev - 1e-12,
                    "seed {seed}: beam {beam_size} scored below a narrower beam"
                );
                prev = got.score;
            }
            assert!((prev - oracle.score).abs() / oracle.score.abs().max(1.0) < 1e-10);
        }
    }

    #[test]
    fn single_token_space_picks_the_token_when_it_beats_empty() {
        let mut rng = SeededRng::new(82, 0);
        let mut store = ParamStore::new();
        let cfg = S2sConfig {
            d_enc: 6,
            n_targets: 1,
            hidden: 8,
            embed_dim: 5,
            att_dim: 7,
            att_filters: 4,
            att_kernel: 3,
        };
        let decoder = S2sDecoder::new(&mut store, "dec", cfg, ParamGroup::Head, &mut rng).unwrap();
        let enc = random_enc(&mut rng, 1);
        // One frame: the token at 0.9, blank at 0.1.
        let logp_ctc =
            Tensor::from_rows(1, 2, vec![libm::log(0.9), libm::log(0.1)]).unwrap();
        let got =
            exhaustive_decode(&store, &decoder, &enc, &logp_ctc, 1, None, 1.0, 0.0, 1).unwrap();
        assert_eq!(got.tokens, vec![0]);
        assert!((got.score - libm::log(0.9)).abs() < 1e-12);
        // Flipped masses: the empty output wins instead.
        let logp_ctc =
            Tensor::from_rows(1, 2, vec![libm::log(0.1), libm::log(0.9)]).unwrap();
        let got =
            exhaustive_decode(&store, &decoder, &enc, &logp_ctc, 1, None, 1.0, 0.0, 1).unwrap();
        assert_eq!(got.tokens, Vec::<u16>::new());
    }

    #[test]
    fn returned_score_is_recomputable_from_parts() {
        let inst = instance(5);
        let got = exhaustive_decode(
            &inst.store,
            &inst.decoder,
            &inst.enc,
            &inst.logp_ctc,
            BLANK,
            Some(&inst.lm),
            0.4,
            0.3,
            2,
        )
        .unwrap();
        let re = combine_score(0.4, 0.3, got.log_ctc, got.log_s2s, got.log_lm);
        assert!((re - got.score).abs() < 1e-12);
        assert!(!got.reached_max_len);
    }

    #[test]
    fn oversized_spaces_are_refused() {
        let mut rng = SeededRng::new(83, 0);
        let mut store = ParamStore::new();
        let cfg = S2sConfig {
            d_enc: 6,
            n_targets: 30,
            hidden: 8,
            embed_dim: 5,
            att_dim: 7,
            att_filters: 4,
            att_kernel: 3,
        };
        let decoder = S2sDecoder::new(&mut store, "dec", cfg, ParamGroup::Head, &mut rng).unwrap();
        let enc = random_enc(&mut rng, 2);
        let logp_ctc = random_logp(&mut rng, 2, 31);
        // 30^4 = 810 000 sequences: over the guard.
        let err = exhaustive_decode(&store, &decoder, &enc, &logp_ctc, 30, None, 0.5, 0.0, 4);
        assert!(err.is_err());
        // 30^3 = 27 000: admissible.
        let ok = exhaustive_decode(&store, &decoder, &enc, &logp_ctc, 30, None, 0.5, 0.0, 3);
        assert!(ok.is_ok());
    }
}
