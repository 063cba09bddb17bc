//! Training loops: joint-loss epochs for the transcription model and
//! clip-level epochs for the voicing detector, plus shared evaluation
//! helpers. All randomness is drawn from streams derived per purpose,
//! epoch, and sample index, so results do not depend on iteration order
//! and rerunning a fixed seed reproduces every byte.

use alloc::vec::Vec;

use crate::data::{mix_at_snr, time_mask_wave, MultimodalSample, VadExample};
use crate::decode::{DecodeConfig, NgramLm};
use crate::encoder::{bce_with_logits, AudioWave};
use crate::error::{Error, Result};
use crate::metrics::{corpus_wer, ErrorUnit, WerReport};
use crate::model::{ModalitySet, Model, Transcription, VadModel};
use crate::optim::{optimizer_step_grouped, OptimConfig, OptimState};
use crate::param::{ParamGroup, ParamStore};
use crate::rng::SeededRng;

/// Derivation tags for the epoch-level random streams.
const PURPOSE_ORDER: u64 = 0;
const PURPOSE_SNR: u64 = 1;
const PURPOSE_MASK: u64 = 2;
const PURPOSE_DROPOUT: u64 = 3;

/// Per-group learning rates: encoders usually fine-tune slowly while the
/// freshly initialized heads move faster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningRates {
    pub encoder: f64,
    pub head: f64,
}

impl LearningRates {
    pub fn of(self, group: ParamGroup) -> f64 {
        match group {
            ParamGroup::Encoder => self.encoder,
            ParamGroup::Head => self.head,
        }
    }
}

/// Input-side augmentation applied during transcription training.
#[derive(Debug, Clone, PartialEq)]
pub struct Augment {
    /// Interference levels to sample from; one extra "clean" option is
    /// always in the draw, so each utterance is left unmixed with
    /// probability `1 / (snr_list.len() + 1)`.
    pub snr_list: Vec<f64>,
    /// Number of audio spans zeroed per utterance (0 disables masking).
    pub mask_spans: usize,
    /// Longest masked span, in samples.
    pub mask_width: usize,
}

impl Default for Augment {
    fn default() -> Self {
        Augment { snr_list: Vec::new(), mask_spans: 0, mask_width: 0 }
    }
}

/// Aggregates of one training epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub mean_joint: f64,
    pub mean_ctc: f64,
    pub mean_s2s: f64,
    /// Utterances that contributed an update.
    pub n_trained: usize,
    /// Utterances skipped because the label sequence cannot fit the
    /// available frames (alignment-infeasible).
    pub n_skipped: usize,
}

/// Picks this epoch's interference level for one utterance: uniformly one
/// of the configured levels or clean. Returns `None` for clean.
fn draw_snr(aug: &Augment, rng: &mut SeededRng) -> Option<f64> {
    if aug.snr_list.is_empty() {
        return None;
    }
    let k = rng.below(aug.snr_list.len() + 1);
    aug.snr_list.get(k).copied()
}

/// The audio actually fed to the model for one utterance: mixed with the
/// sample's interference track at `snr_db` when given one, clean
/// otherwise (also when the sample carries no track).
fn prepared_audio(sample: &MultimodalSample, snr_db: Option<f64>) -> Result<AudioWave> {
    match (snr_db, &sample.noise) {
        (Some(db), Some(noise)) => mix_at_snr(&sample.audio, noise, db),
        _ => Ok(sample.audio.clone()),
    }
}

/// One pass over `samples` in a fresh shuffled order, with one optimizer
/// update per utterance. `epoch` and `base_rng` determine every random
/// draw; the same pair reproduces the same epoch exactly.
#[allow(clippy::too_many_arguments)]
pub fn train_alt_epoch(
    store: &mut ParamStore,
    model: &Model,
    opt: &mut OptimState,
    opt_cfg: &OptimConfig,
    lr: LearningRates,
    samples: &[MultimodalSample],
    modalities: ModalitySet,
    aug: &Augment,
    epoch: u64,
    base_rng: &SeededRng,
) -> Result<EpochStats> {
    if samples.is_empty() {
        return Err(Error::Degenerate("no training utterances".into()));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    base_rng.derive3(PURPOSE_ORDER, epoch, 0).shuffle(&mut order);

    let mut stats = EpochStats {
        mean_joint: 0.0,
        mean_ctc: 0.0,
        mean_s2s: 0.0,
        n_trained: 0,
        n_skipped: 0,
    };
    for i in order {
        let sample = &samples[i];
        let mut rng_snr = base_rng.derive3(PURPOSE_SNR, epoch, i as u64);
        let mut audio = prepared_audio(sample, draw_snr(aug, &mut rng_snr))?;
        if aug.mask_spans > 0 {
            let mut rng_mask = base_rng.derive3(PURPOSE_MASK, epoch, i as u64);
            audio = time_mask_wave(&audio, aug.mask_spans, aug.mask_width, &mut rng_mask)?;
        }
        let mut rng_drop = base_rng.derive3(PURPOSE_DROPOUT, epoch, i as u64);
        let target = model.vocab.encode(&sample.transcript)?;
        let (enc, cache) = model.encode(
            store,
            &audio,
            &sample.video,
            &sample.imu,
            modalities,
            true,
            &mut rng_drop,
        )?;
        let trace = match model.loss(store, &enc, &target) {
            Ok(t) => t,
            Err(Error::InfeasibleTarget(_)) => {
                stats.n_skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        store.zero_grads();
        model.backward(store, &cache, &trace, &enc)?;
        optimizer_step_grouped(store, opt, opt_cfg, &|g| lr.of(g))?;
        stats.mean_joint += trace.parts.l_joint;
        stats.mean_ctc += trace.parts.l_ctc;
        stats.mean_s2s += trace.parts.l_s2s;
        stats.n_trained += 1;
    }
    if stats.n_trained == 0 {
        return Err(Error::Degenerate(
            "every utterance in the epoch was alignment-infeasible".into(),
        ));
    }
    let n = stats.n_trained as f64;
    stats.mean_joint /= n;
    stats.mean_ctc /= n;
    stats.mean_s2s /= n;
    Ok(stats)
}

/// Decodes one utterance at an optional interference level. Evaluation is
/// deterministic: no dropout, no masking.
pub fn transcribe_sample(
    store: &ParamStore,
    model: &Model,
    sample: &MultimodalSample,
    modalities: ModalitySet,
    snr_db: Option<f64>,
    cfg: &DecodeConfig,
    lm: Option<&NgramLm>,
) -> Result<Transcription> {
    let audio = prepared_audio(sample, snr_db)?;
    let mut rng = SeededRng::new(0, 0);
    let (enc, _) =
        model.encode(store, &audio, &sample.video, &sample.imu, modalities, false, &mut rng)?;
    model.decode(store, &enc, cfg, lm)
}

/// Corpus word error rate of the model over `samples`, decoding each at
/// the given interference level (or clean).
#[allow(clippy::too_many_arguments)]
pub fn eval_wer(
    store: &ParamStore,
    model: &Model,
    samples: &[MultimodalSample],
    modalities: ModalitySet,
    snr_db: Option<f64>,
    cfg: &DecodeConfig,
    lm: Option<&NgramLm>,
    unit: ErrorUnit,
) -> Result<WerReport> {
    let mut hyps = Vec::with_capacity(samples.len());
    for s in samples {
        hyps.push(transcribe_sample(store, model, s, modalities, snr_db, cfg, lm)?.text);
    }
    corpus_wer(
        samples.iter().map(|s| s.transcript.as_str()).zip(hyps.iter().map(|h| h.as_str())),
        unit,
    )
}

/// Mean per-clip binary cross-entropy of the detector over `clips`,
/// without training side effects.
pub fn vad_loss(store: &ParamStore, vad: &VadModel, clips: &[VadExample]) -> Result<f64> {
    if clips.is_empty() {
        return Err(Error::Degenerate("no clips to score".into()));
    }
    let mut rng = SeededRng::new(0, 0);
    let mut total = 0.0;
    for clip in clips {
        let (logits, _) = vad.forward(store, &clip.imu, false, &mut rng)?;
        let labels: Vec<f64> = clip.labels.iter().map(|&l| f64::from(l)).collect();
        let (loss, _) = bce_with_logits(&logits, &labels)?;
        total += loss;
    }
    Ok(total / clips.len() as f64)
}

/// Per-frame voicing probabilities for every clip, concatenated in clip
/// order (matching the concatenation of their label vectors).
pub fn vad_probabilities(
    store: &ParamStore,
    vad: &VadModel,
    clips: &[VadExample],
) -> Result<(Vec<u8>, Vec<f64>)> {
    let mut rng = SeededRng::new(0, 0);
    let mut labels = Vec::new();
    let mut probs = Vec::new();
    for clip in clips {
        let (logits, _) = vad.forward(store, &clip.imu, false, &mut rng)?;
        if logits.len() != clip.labels.len() {
            return Err(Error::shape(alloc::format!(
                "clip yields {} frames but carries {} labels",
                logits.len(),
                clip.labels.len()
            )));
        }
        labels.extend_from_slice(&clip.labels);
        probs.extend(logits.into_iter().map(|z| 1.0 / (1.0 + libm::exp(-z))));
    }
    Ok((labels, probs))
}

/// One pass over `clips` in a fresh shuffled order, one optimizer update
/// per clip. Returns the mean training loss.
#[allow(clippy::too_many_arguments)]
pub fn train_vad_epoch(
    store: &mut ParamStore,
    vad: &VadModel,
    opt: &mut OptimState,
    opt_cfg: &OptimConfig,
    lr: f64,
    clips: &[VadExample],
    epoch: u64,
    base_rng: &SeededRng,
) -> Result<f64> {
    if clips.is_empty() {
        return Err(Error::Degenerate("no training clips".into()));
    }
    let mut order: Vec<usize> = (0..clips.len()).collect();
    base_rng.derive3(PURPOSE_ORDER, epoch, 0).shuffle(&mut order);
    let mut total = 0.0;
    for i in order {
        let clip = &clips[i];
        let mut rng_drop = base_rng.derive3(PURPOSE_DROPOUT, epoch, i as u64);
        let (logits, cache) = vad.forward(store, &clip.imu, true, &mut rng_drop)?;
        let labels: Vec<f64> = clip.labels.iter().map(|&l| f64::from(l)).collect();
        let (loss, dlogits) = bce_with_logits(&logits, &labels)?;
        store.zero_grads();
        vad.backward(store, &cache, &dlogits)?;
        optimizer_step_grouped(store, opt, opt_cfg, &|_| lr)?;
        total += loss;
    }
    Ok(total / clips.len() as f64)
}
