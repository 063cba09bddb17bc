//! Deterministic synthetic dataset generation.
//!
//! Each character of the alphabet owns a per-modality signature: a sinusoid
//! frequency for audio, an embedding vector for video, and a low-frequency
//! oscillation for the inertial channels. Utterances are random lexicon
//! words rendered span-by-span from those signatures plus white noise, and
//! every sample carries a structured interference track (a decoy character
//! stream rendered through the same audio synthesizer) standing in for
//! musical accompaniment. All randomness flows from counter-derived streams
//! of a single seed, so a spec generates the same dataset bit for bit on
//! every run.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::backend::vocab::{Vocabulary, N_CHAR_TARGETS};
use crate::encoder::{AudioWave, ImuStream, VideoFrames};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

use super::{MultimodalSample, Split};

/// Peak amplitude of a rendered character tone.
const TONE_AMPLITUDE: f64 = 0.7;

/// Rng stream id reserved for dataset synthesis.
const STREAM_SYNTH: u64 = 11;

/// Sub-stream purposes under [`STREAM_SYNTH`].
const PURPOSE_SIGNATURES: u64 = 0;
const PURPOSE_TEXT: u64 = 1;
const PURPOSE_RENDER: u64 = 2;
const PURPOSE_DECOY: u64 = 3;

/// Retry budget when sampling a not-yet-used utterance text.
const TEXT_ATTEMPTS: u64 = 1000;

/// Recipe for a synthetic multimodal dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    /// Words (lowercase letters, apostrophe, hyphen, `#`, `@`) to draw from.
    pub lexicon: Vec<String>,
    /// Inclusive range of words per utterance.
    pub words_per_utt: (usize, usize),
    /// Inclusive range of 20 ms frames a single character occupies.
    pub frames_per_char: (usize, usize),
    /// Waveform rate in Hz; must hold a whole number of samples per 20 ms.
    pub audio_rate: u32,
    /// Video frame rate in Hz; must be a multiple of 25 (one per 40 ms).
    pub video_rate: u32,
    /// Inertial rate in Hz; must hold a whole number of samples per 20 ms.
    pub imu_rate: u32,
    /// Width of a video frame embedding.
    pub video_dim: usize,
    /// Standard deviation of the white noise added to every stream.
    pub noise_level: f64,
    /// Master seed; everything else is derived from it.
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            lexicon: Vec::new(),
            words_per_utt: (2, 4),
            frames_per_char: (4, 10),
            audio_rate: 1600,
            video_rate: 25,
            imu_rate: 100,
            video_dim: 16,
            noise_level: 0.01,
            seed: 0,
        }
    }
}

/// Requested number of samples in each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitCounts {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn of(self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Valid => self.valid,
            Split::Test => self.test,
        }
    }

    pub fn total(self) -> usize {
        self.train + self.valid + self.test
    }
}

/// Per-character rendering signatures, a pure function of the spec seed.
struct Signatures {
    /// Audio tone frequency per character id (Hz).
    audio_hz: Vec<f64>,
    /// Video embedding per character id, `N_CHAR_TARGETS × video_dim`.
    video_embed: Tensor,
    /// Inertial oscillation frequency per character id (Hz).
    imu_hz: Vec<f64>,
}

fn build_signatures(spec: &SynthSpec) -> Signatures {
    let mut rng = SeededRng::new(spec.seed, STREAM_SYNTH).derive(PURPOSE_SIGNATURES);
    // Tones 120..642 Hz in 18 Hz steps, assigned to characters in a
    // seed-dependent order; all stay below the 800 Hz Nyquist limit of the
    // default 1600 Hz rate.
    let mut audio_hz: Vec<f64> =
        (0..N_CHAR_TARGETS).map(|i| 120.0 + 18.0 * i as f64).collect();
    rng.shuffle(&mut audio_hz);
    let mut video_embed = Tensor::zeros([N_CHAR_TARGETS, spec.video_dim]);
    for v in video_embed.data_mut() {
        *v = rng.normal();
    }
    // Slow articulation-like oscillations, 2..16.5 Hz.
    let mut imu_hz: Vec<f64> =
        (0..N_CHAR_TARGETS).map(|i| 2.0 + 0.5 * i as f64).collect();
    rng.shuffle(&mut imu_hz);
    Signatures { audio_hz, video_embed, imu_hz }
}

impl SynthSpec {
    /// Audio tone frequency assigned to a character under this spec's seed.
    pub fn audio_signature_hz(&self, c: char) -> Result<f64> {
        let id = Vocabulary::new().char_token(c)?;
        if id as usize >= N_CHAR_TARGETS {
            return Err(Error::Vocab(format!("{c:?} has no tone signature")));
        }
        Ok(build_signatures(self).audio_hz[id as usize])
    }

    fn validate(&self) -> Result<()> {
        if self.lexicon.is_empty() {
            return Err(Error::config("lexicon is empty"));
        }
        let vocab = Vocabulary::new();
        for word in &self.lexicon {
            if word.is_empty()
                || word.chars().any(|c| c.is_whitespace() || c.is_ascii_uppercase())
            {
                return Err(Error::config(format!(
                    "lexicon word {word:?} must be non-empty, lowercase, and whitespace-free"
                )));
            }
            vocab.encode(word)?;
        }
        let (wl, wh) = self.words_per_utt;
        if wl < 1 || wl > wh {
            return Err(Error::config(format!(
                "words-per-utterance range ({wl}, {wh}) is not a valid range from 1"
            )));
        }
        let (fl, fh) = self.frames_per_char;
        if fl < 1 || fl > fh {
            return Err(Error::config(format!(
                "frames-per-char range ({fl}, {fh}) is not a valid range from 1"
            )));
        }
        if self.audio_rate == 0 || self.audio_rate % 50 != 0 {
            return Err(Error::config(format!(
                "audio rate {} Hz does not hold a whole number of samples per 20 ms",
                self.audio_rate
            )));
        }
        if self.imu_rate == 0 || self.imu_rate % 50 != 0 {
            return Err(Error::config(format!(
                "inertial rate {} Hz does not hold a whole number of samples per 20 ms",
                self.imu_rate
            )));
        }
        if self.video_rate == 0 || self.video_rate % 25 != 0 {
            return Err(Error::config(format!(
                "video rate {} Hz is not a whole number of frames per 40 ms",
                self.video_rate
            )));
        }
        if self.video_dim == 0 {
            return Err(Error::config("video embedding width must be at least 1"));
        }
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return Err(Error::config(format!(
                "noise level {} must be finite and non-negative",
                self.noise_level
            )));
        }
        Ok(())
    }
}

/// One rendering span: the active character (`None` = word boundary /
/// silence) and how many 20 ms frames it occupies.
type CharPlan = Vec<(Option<u16>, usize)>;

fn sample_text(spec: &SynthSpec, rng: &mut SeededRng) -> String {
    let n_words = rng.range_inclusive(spec.words_per_utt.0, spec.words_per_utt.1);
    let mut words = Vec::with_capacity(n_words);
    for _ in 0..n_words {
        words.push(spec.lexicon[rng.below(spec.lexicon.len())].clone());
    }
    words.join(" ")
}

/// Assigns a frame span to every character of `text`, bracketed by silent
/// boundary spans, padding the total to an even frame count so the 40 ms
/// video grid divides it exactly.
fn plan_spans(spec: &SynthSpec, text: &str, rng: &mut SeededRng) -> Result<CharPlan> {
    let vocab = Vocabulary::new();
    let (fl, fh) = spec.frames_per_char;
    let mut plan: CharPlan = Vec::with_capacity(text.len() + 2);
    plan.push((None, rng.range_inclusive(fl, fh)));
    for c in text.chars() {
        let id = if c == ' ' { None } else { Some(vocab.char_token(c)?) };
        plan.push((id, rng.range_inclusive(fl, fh)));
    }
    plan.push((None, rng.range_inclusive(fl, fh)));
    let total: usize = plan.iter().map(|&(_, f)| f).sum();
    if total % 2 == 1 {
        plan.last_mut().expect("plan has boundary spans").1 += 1;
    }
    Ok(plan)
}

fn plan_frames(plan: &CharPlan) -> usize {
    plan.iter().map(|&(_, f)| f).sum()
}

/// Expands a span plan to one entry per 20 ms frame.
fn frame_chars(plan: &CharPlan) -> Vec<Option<u16>> {
    let mut out = Vec::with_capacity(plan_frames(plan));
    for &(c, frames) in plan {
        for _ in 0..frames {
            out.push(c);
        }
    }
    out
}

/// Renders the character tones of a plan; no noise is added here.
fn render_tones(spec: &SynthSpec, sig: &Signatures, plan: &CharPlan) -> Vec<f64> {
    let per_frame = (spec.audio_rate / 50) as usize;
    let frames = frame_chars(plan);
    let mut samples = vec![0.0; frames.len() * per_frame];
    for (f, &c) in frames.iter().enumerate() {
        let Some(id) = c else { continue };
        let hz = sig.audio_hz[id as usize];
        for s in f * per_frame..(f + 1) * per_frame {
            let t = s as f64 / spec.audio_rate as f64;
            samples[s] = TONE_AMPLITUDE * libm::sin(2.0 * core::f64::consts::PI * hz * t);
        }
    }
    samples
}

fn render_audio(
    spec: &SynthSpec,
    sig: &Signatures,
    plan: &CharPlan,
    rng: &mut SeededRng,
) -> AudioWave {
    let mut samples = render_tones(spec, sig, plan);
    for s in &mut samples {
        *s += spec.noise_level * rng.normal();
    }
    AudioWave { samples, sample_rate: spec.audio_rate }
}

fn render_video(
    spec: &SynthSpec,
    sig: &Signatures,
    plan: &CharPlan,
    rng: &mut SeededRng,
) -> VideoFrames {
    let frames = frame_chars(plan);
    let per_pair = (spec.video_rate / 25) as usize;
    let t_v = frames.len() / 2 * per_pair;
    let mut out = Tensor::zeros([t_v, spec.video_dim]);
    for v in 0..t_v {
        let pair = v / per_pair;
        let row = out.row_mut(v);
        if let Some(id) = frames[2 * pair] {
            row.copy_from_slice(sig.video_embed.row(id as usize));
        }
        for x in row {
            *x += spec.noise_level * rng.normal();
        }
    }
    VideoFrames { frames: out, frame_rate: spec.video_rate }
}

fn render_imu(
    spec: &SynthSpec,
    sig: &Signatures,
    plan: &CharPlan,
    rng: &mut SeededRng,
) -> ImuStream {
    let per_frame = (spec.imu_rate / 50) as usize;
    let frames = frame_chars(plan);
    let n = frames.len() * per_frame;
    // Raw voiced/unvoiced envelope on the sample grid, then a centered
    // moving average so onsets ramp instead of stepping.
    let raw: Vec<f64> = (0..n)
        .map(|s| if frames[s / per_frame].is_some() { 1.0 } else { 0.0 })
        .collect();
    let half = (spec.imu_rate / 25) as usize / 2; // ±20 ms window
    let mut env = vec![0.0; n];
    for (s, e) in env.iter_mut().enumerate() {
        let lo = s.saturating_sub(half);
        let hi = (s + half).min(n - 1);
        *e = raw[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
    }
    let mut channels = Tensor::zeros([n, 6]);
    for s in 0..n {
        let osc = frames[s / per_frame].map(|id| {
            let hz = sig.imu_hz[id as usize];
            2.0 * core::f64::consts::PI * hz * s as f64 / spec.imu_rate as f64
        });
        let row = channels.row_mut(s);
        for (j, x) in row.iter_mut().enumerate() {
            let part = match osc {
                Some(phase) if j < 3 => {
                    0.5 * libm::sin(phase + j as f64 * core::f64::consts::FRAC_PI_4)
                }
                Some(phase) => {
                    0.3 * libm::sin(
                        phase
                            + core::f64::consts::FRAC_PI_3
                            + j as f64 * core::f64::consts::FRAC_PI_4,
                    )
                }
                None => 0.0,
            };
            let base = if j < 3 { 0.8 * env[s] } else { 0.0 };
            *x = base + env[s] * part + spec.noise_level * rng.normal();
        }
    }
    ImuStream { channels, sample_rate: spec.imu_rate }
}

/// Renders the accompaniment stand-in: a decoy character stream pushed
/// through the same tone synthesizer, truncated to `n_samples`.
fn render_decoy(
    spec: &SynthSpec,
    sig: &Signatures,
    n_samples: usize,
    rng: &mut SeededRng,
) -> Result<AudioWave> {
    let per_frame = (spec.audio_rate / 50) as usize;
    let need_frames = n_samples.div_ceil(per_frame);
    let (fl, fh) = spec.frames_per_char;
    let mut plan: CharPlan = Vec::new();
    let vocab = Vocabulary::new();
    // No leading silence: the decoy starts voiced so any truncation keeps
    // non-zero interference power.
    while plan_frames(&plan) < need_frames {
        let word = &spec.lexicon[rng.below(spec.lexicon.len())];
        for c in word.chars() {
            plan.push((Some(vocab.char_token(c)?), rng.range_inclusive(fl, fh)));
        }
        plan.push((None, rng.range_inclusive(fl, fh)));
    }
    let mut samples = render_tones(spec, sig, &plan);
    samples.truncate(n_samples);
    Ok(AudioWave { samples, sample_rate: spec.audio_rate })
}

/// Generates `counts` samples per split, texts disjoint across the whole
/// dataset, every stream deterministic in `(spec, seed)`.
pub fn synth_generate(spec: &SynthSpec, counts: SplitCounts) -> Result<Vec<MultimodalSample>> {
    spec.validate()?;
    let sig = build_signatures(spec);
    let base = SeededRng::new(spec.seed, STREAM_SYNTH);
    let mut used = BTreeSet::new();
    let mut out = Vec::with_capacity(counts.total());
    let mut global = 0u64;
    for &split in &Split::ALL {
        for i in 0..counts.of(split) {
            let mut text = None;
            for attempt in 0..TEXT_ATTEMPTS {
                let mut rng = base.derive3(PURPOSE_TEXT, global, attempt);
                let candidate = sample_text(spec, &mut rng);
                if used.insert(candidate.clone()) {
                    text = Some(candidate);
                    break;
                }
            }
            let Some(text) = text else {
                return Err(Error::config(format!(
                    "lexicon cannot produce {} distinct utterance texts \
                     (gave up after {TEXT_ATTEMPTS} attempts on sample {global})",
                    counts.total()
                )));
            };
            let mut render_rng = base.derive3(PURPOSE_RENDER, global, 0);
            let plan = plan_spans(spec, &text, &mut render_rng)?;
            let audio = render_audio(spec, &sig, &plan, &mut render_rng);
            let video = render_video(spec, &sig, &plan, &mut render_rng);
            let imu = render_imu(spec, &sig, &plan, &mut render_rng);
            let mut decoy_rng = base.derive3(PURPOSE_DECOY, global, 0);
            let noise = render_decoy(spec, &sig, audio.samples.len(), &mut decoy_rng)?;
            let sample = MultimodalSample {
                id: format!("{}-{i:04}", split.name()),
                audio,
                video,
                imu,
                transcript: text,
                noise: Some(noise),
                split,
            };
            sample.validate()?;
            out.push(sample);
            global += 1;
        }
    }
    Ok(out)
}
