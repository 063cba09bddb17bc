//! Full transcription model: three modality encoders, frame alignment,
//! residual cross-attention fusion, a shared MLP encoder, and the two
//! recognition branches (CTC head, attention decoder).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::backend::{
    ctc_log_prob, ctc_loss, joint_loss, CtcHead, CtcHeadCache, LossParts, MlpEncoder,
    MlpEncoderCache, S2sConfig, S2sDecoder, S2sTrace, Vocabulary,
};
use crate::decode::{greedy_ctc, joint_beam_search, DecodeConfig, DecodeMode, NgramLm};
use crate::encoder::{
    AudioEncoder, AudioEncoderCache, AudioEncoderConfig, AudioWave, FeatureSequence, ImuEncoder,
    ImuEncoderCache, ImuEncoderConfig, ImuStream, Modality, VideoEncoder, VideoEncoderCache,
    VideoEncoderConfig, VideoFrames, IMU_FEATURE_DIM,
};
use crate::error::{Error, Result};
use crate::fusion::{Aligner, AlignerCache, AttentionMaps, RcaFusion, RcaFusionCache, RcaMode};
use crate::param::{ParamGroup, ParamStore};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// Which input streams carry real features; the others are fed as zero
/// tensors of identical shape so the fusion topology never changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModalitySet {
    pub audio: bool,
    pub video: bool,
    pub imu: bool,
}

impl ModalitySet {
    pub const ALL: ModalitySet = ModalitySet { audio: true, video: true, imu: true };
    pub const AUDIO_ONLY: ModalitySet = ModalitySet { audio: true, video: false, imu: false };

    pub fn validate(self) -> Result<()> {
        if !(self.audio || self.video || self.imu) {
            return Err(Error::config("at least one modality must be enabled"));
        }
        Ok(())
    }

    /// Compact label, e.g. `"avi"` or `"a"`, used in reports.
    pub fn label(self) -> String {
        let mut s = String::new();
        if self.audio {
            s.push('a');
        }
        if self.video {
            s.push('v');
        }
        if self.imu {
            s.push('i');
        }
        s
    }

    /// Parses labels like `"avi"`, `"a"`, or comma/plus-separated full
    /// names like `"audio+imu"`.
    pub fn parse(text: &str) -> Result<ModalitySet> {
        let mut set = ModalitySet { audio: false, video: false, imu: false };
        let compact = text.chars().all(|c| matches!(c, 'a' | 'v' | 'i'));
        if compact && !text.is_empty() {
            for c in text.chars() {
                match c {
                    'a' => set.audio = true,
                    'v' => set.video = true,
                    _ => set.imu = true,
                }
            }
        } else {
            for part in text.split([',', '+']) {
                match part.trim() {
                    "audio" => set.audio = true,
                    "video" => set.video = true,
                    "imu" | "inertial" => set.imu = true,
                    other => {
                        return Err(Error::Parse(format!("unknown modality {other:?}")));
                    }
                }
            }
        }
        set.validate()?;
        Ok(set)
    }
}

/// Architecture hyperparameters; everything that determines tensor shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Shared feature width across encoders, fusion, and the backend.
    pub d_model: usize,
    /// Attention heads in the transformer and fusion blocks.
    pub heads: usize,
    /// Transformer blocks in the audio and video encoders.
    pub blocks: usize,
    /// Feed-forward hidden width inside transformer and fusion blocks.
    pub ffn_hidden: usize,
    /// Width of the incoming per-frame video features.
    pub video_dim: usize,
    pub audio_rate: u32,
    pub video_rate: u32,
    pub imu_rate: u32,
    /// Channels of the two inertial convolutions.
    pub imu_conv1: usize,
    pub imu_conv2: usize,
    /// Attention decoder embedding width.
    pub s2s_embed: usize,
    /// Attention decoder energy-projection width.
    pub s2s_att_dim: usize,
    /// Attention-history convolution filters.
    pub att_filters: usize,
    /// Attention-history convolution kernel width (odd).
    pub att_kernel: usize,
    /// Fusion block variant.
    pub rca_mode: RcaMode,
    /// CTC weight in the joint loss.
    pub alpha: f64,
    /// Treat the word boundary as the CTC blank (literal-collapse mode).
    pub boundary_as_blank: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_model: 64,
            heads: 4,
            blocks: 2,
            ffn_hidden: 256,
            video_dim: 16,
            audio_rate: 1600,
            video_rate: 25,
            imu_rate: 100,
            imu_conv1: 128,
            imu_conv2: 200,
            s2s_embed: 32,
            s2s_att_dim: 32,
            att_filters: 8,
            att_kernel: 11,
            rca_mode: RcaMode::Full,
            alpha: 0.3,
            boundary_as_blank: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 {
            return Err(Error::config("model width must be positive"));
        }
        if self.heads == 0 || self.d_model % self.heads != 0 {
            return Err(Error::config(format!(
                "{} attention heads must evenly divide width {}",
                self.heads, self.d_model
            )));
        }
        if !(self.alpha.is_finite() && (0.0..=1.0).contains(&self.alpha)) {
            return Err(Error::config(format!(
                "loss interpolation weight must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        // The aligner needs 40 ms video frames against 20 ms audio frames:
        // the conv frontend downsamples audio 32× and the inertial encoder
        // pools 2×, so the rates are locked together.
        if self.audio_rate != 64 * self.video_rate {
            return Err(Error::config(format!(
                "audio rate {} and video rate {} break the 2:1 frame alignment",
                self.audio_rate, self.video_rate
            )));
        }
        if self.audio_rate != 16 * self.imu_rate {
            return Err(Error::config(format!(
                "audio rate {} and inertial rate {} break the frame alignment",
                self.audio_rate, self.imu_rate
            )));
        }
        Ok(())
    }

    /// FNV-1a digest over every architecture field, written into
    /// checkpoints so a mismatched load can be flagged.
    pub fn digest(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        fn eat(h: &mut u64, bytes: &[u8]) {
            for &b in bytes {
                *h = (*h ^ b as u64).wrapping_mul(PRIME);
            }
        }
        let mut h = OFFSET;
        eat(&mut h, b"model-config-v1");
        for v in [
            self.d_model as u64,
            self.heads as u64,
            self.blocks as u64,
            self.ffn_hidden as u64,
            self.video_dim as u64,
            self.audio_rate as u64,
            self.video_rate as u64,
            self.imu_rate as u64,
            self.imu_conv1 as u64,
            self.imu_conv2 as u64,
            self.s2s_embed as u64,
            self.s2s_att_dim as u64,
            self.att_filters as u64,
            self.att_kernel as u64,
            self.alpha.to_bits(),
            self.boundary_as_blank as u64,
        ] {
            eat(&mut h, &v.to_le_bytes());
        }
        eat(&mut h, self.rca_mode.name().as_bytes());
        h
    }
}

/// The assembled transcription model. Parameters live in the caller's
/// [`ParamStore`]; encoder parameters carry [`ParamGroup::Encoder`] and
/// everything downstream [`ParamGroup::Head`], so the two can train at
/// different rates.
#[derive(Debug, Clone)]
pub struct Model {
    pub audio: AudioEncoder,
    pub video: VideoEncoder,
    pub imu: ImuEncoder,
    pub aligner: Aligner,
    pub fusion: RcaFusion,
    pub mlp: MlpEncoder,
    pub ctc: CtcHead,
    pub s2s: S2sDecoder,
    pub vocab: Vocabulary,
    pub config: ModelConfig,
}

/// Saved intermediates of one [`Model::encode`] pass.
#[derive(Debug, Clone)]
pub struct ModelCache {
    pub audio: Option<AudioEncoderCache>,
    pub video: Option<VideoEncoderCache>,
    pub imu: Option<ImuEncoderCache>,
    pub aligner: AlignerCache,
    pub fusion: RcaFusionCache,
    pub mlp: MlpEncoderCache,
}

impl ModelCache {
    /// Fusion attention maps in fixed source order (audio, video, inertial).
    pub fn fusion_attention(&self) -> [AttentionMaps; 3] {
        self.fusion.maps()
    }
}

/// Branch losses of one utterance plus what backward needs.
#[derive(Debug, Clone)]
pub struct LossTrace {
    pub parts: LossParts,
    ctc_cache: CtcHeadCache,
    dlogp_ctc: Tensor,
    s2s_trace: S2sTrace,
}

/// One decoded utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcription {
    pub tokens: Vec<u16>,
    pub text: String,
    /// Combined decode score (log domain; exact meaning depends on mode).
    pub score: f64,
}

impl Model {
    pub fn new(store: &mut ParamStore, config: &ModelConfig, rng: &mut SeededRng) -> Result<Self> {
        config.validate()?;
        let audio_cfg = AudioEncoderConfig {
            d_model: config.d_model,
            heads: config.heads,
            ffn_hidden: config.ffn_hidden,
            n_blocks: config.blocks,
            sample_rate: config.audio_rate,
        };
        let video_cfg = VideoEncoderConfig {
            d_in: config.video_dim,
            d_model: config.d_model,
            heads: config.heads,
            ffn_hidden: config.ffn_hidden,
            n_blocks: config.blocks,
            frame_rate: config.video_rate,
        };
        let imu_cfg = ImuEncoderConfig {
            conv1_channels: config.imu_conv1,
            conv2_channels: config.imu_conv2,
            sample_rate: config.imu_rate,
            ..ImuEncoderConfig::default()
        };
        let vocab = if config.boundary_as_blank {
            Vocabulary::boundary_as_blank()
        } else {
            Vocabulary::new()
        };
        let audio = AudioEncoder::new(store, "audio", &audio_cfg, rng)?;
        let video = VideoEncoder::new(store, "video", &video_cfg, rng)?;
        let imu = ImuEncoder::new(store, "imu", &imu_cfg, rng)?;
        let aligner = Aligner::new(store, "align", config.d_model, rng)?;
        let fusion = RcaFusion::new(
            store,
            "fusion",
            config.d_model,
            config.heads,
            config.ffn_hidden,
            rng,
        )?;
        let mlp = MlpEncoder::new(store, "encoder", config.d_model, ParamGroup::Head, rng)?;
        let ctc = CtcHead::new(
            store,
            "ctc",
            config.d_model,
            vocab.ctc_dim(),
            ParamGroup::Head,
            rng,
        )?;
        let s2s = S2sDecoder::new(
            store,
            "s2s",
            S2sConfig {
                d_enc: config.d_model,
                n_targets: vocab.n_target_tokens(),
                hidden: config.d_model,
                embed_dim: config.s2s_embed,
                att_dim: config.s2s_att_dim,
                att_filters: config.att_filters,
                att_kernel: config.att_kernel,
            },
            ParamGroup::Head,
            rng,
        )?;
        Ok(Model { audio, video, imu, aligner, fusion, mlp, ctc, s2s, vocab, config: config.clone() })
    }

    /// Runs the enabled encoders (zero features stand in for the disabled
    /// ones), aligns, fuses, and applies the shared MLP encoder. Returns
    /// the `T×D` encodings. `rng` drives inertial dropout when `training`.
    pub fn encode(
        &self,
        store: &ParamStore,
        audio: &AudioWave,
        video: &VideoFrames,
        imu: &ImuStream,
        modalities: ModalitySet,
        training: bool,
        rng: &mut SeededRng,
    ) -> Result<(Tensor, ModelCache)> {
        modalities.validate()?;
        let (f_a, a_cache) = if modalities.audio {
            let (f, c) = self.audio.forward(store, audio)?;
            (f, Some(c))
        } else {
            let t = AudioEncoder::frames_for(audio.samples.len())?;
            let zero = Tensor::zeros([t, self.config.d_model]);
            (
                FeatureSequence::new(zero, self.audio.frame_period_ms(), Modality::Audio)?,
                None,
            )
        };
        let (f_v, v_cache) = if modalities.video {
            let (f, c) = self.video.forward(store, video)?;
            (f, Some(c))
        } else {
            let zero = Tensor::zeros([video.frames.rows(), self.config.d_model]);
            (
                FeatureSequence::new(zero, self.video.frame_period_ms(), Modality::Video)?,
                None,
            )
        };
        let (f_i, i_cache) = if modalities.imu {
            let (f, c) = self.imu.forward(store, imu, training, rng)?;
            (f, Some(c))
        } else {
            let t = self.imu.frames_for(imu.channels.rows());
            let zero = Tensor::zeros([t, IMU_FEATURE_DIM]);
            (
                FeatureSequence::new(zero, self.imu.frame_period_ms(), Modality::Imu)?,
                None,
            )
        };
        let (triple, al_cache) = self.aligner.forward(store, &f_a, &f_v, &f_i)?;
        let (fused, fu_cache) = self.fusion.forward(store, &triple, self.config.rca_mode)?;
        let (enc, mlp_cache) = self.mlp.forward(store, &fused.frames)?;
        Ok((
            enc,
            ModelCache {
                audio: a_cache,
                video: v_cache,
                imu: i_cache,
                aligner: al_cache,
                fusion: fu_cache,
                mlp: mlp_cache,
            },
        ))
    }

    /// Joint loss of one utterance against `target` token ids.
    pub fn loss(&self, store: &ParamStore, enc: &Tensor, target: &[u16]) -> Result<LossTrace> {
        self.vocab.check_target(target)?;
        let (logp, ctc_cache) = self.ctc.forward(store, enc)?;
        let (l_ctc, dlogp_ctc) = ctc_loss(&logp, target, self.vocab.blank_id())?;
        let (l_s2s, s2s_trace) = self.s2s.loss(store, enc, target)?;
        let parts = joint_loss(l_ctc, l_s2s, self.config.alpha)?;
        Ok(LossTrace { parts, ctc_cache, dlogp_ctc, s2s_trace })
    }

    /// Backpropagates one utterance's joint loss through every enabled
    /// branch, accumulating parameter gradients in `store`.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &ModelCache,
        trace: &LossTrace,
        enc: &Tensor,
    ) -> Result<()> {
        let alpha = trace.parts.alpha;
        let denc_ctc =
            self.ctc.backward(store, &trace.ctc_cache, &trace.dlogp_ctc.scale(alpha))?;
        let denc_s2s = self.s2s.backward(store, enc, &trace.s2s_trace, 1.0 - alpha)?;
        let denc = denc_ctc.add(&denc_s2s)?;
        let dfused = self.mlp.backward(store, &cache.mlp, &denc)?;
        let (df_a, df_v, df_i) = self.fusion.backward(store, &cache.fusion, &dfused)?;
        let (da, dv, di) = self.aligner.backward(store, &cache.aligner, &df_a, &df_v, &df_i)?;
        if let Some(c) = &cache.audio {
            self.audio.backward(store, c, &da)?;
        }
        if let Some(c) = &cache.video {
            self.video.backward(store, c, &dv)?;
        }
        if let Some(c) = &cache.imu {
            self.imu.backward(store, c, &di)?;
        }
        Ok(())
    }

    /// Decodes encodings into a transcript under the configured mode.
    pub fn decode(
        &self,
        store: &ParamStore,
        enc: &Tensor,
        cfg: &DecodeConfig,
        lm: Option<&NgramLm>,
    ) -> Result<Transcription> {
        let blank = self.vocab.blank_id();
        let (logp, _) = self.ctc.forward(store, enc)?;
        let (tokens, score) = if cfg.mode == DecodeMode::CtcGreedy {
            let tokens = greedy_ctc(&logp, blank)?;
            let score = ctc_log_prob(&logp, &tokens, blank)?;
            (tokens, score)
        } else {
            let out = joint_beam_search(store, &self.s2s, enc, &logp, blank, lm, cfg)?;
            (out.tokens, out.score)
        };
        let text = String::from(self.vocab.decode(&tokens)?.trim());
        Ok(Transcription { tokens, text, score })
    }
}

/// Standalone voicing detector: the inertial encoder plus a per-frame
/// classification head, trained separately from the transcription model.
#[derive(Debug, Clone)]
pub struct VadModel {
    pub imu: ImuEncoder,
    pub head: crate::encoder::VadHead,
}

/// Saved intermediates of one [`VadModel::forward`] pass.
#[derive(Debug, Clone)]
pub struct VadModelCache {
    pub encoder: ImuEncoderCache,
    /// Encoder features, `T×120`.
    pub feats: Tensor,
}

impl VadModel {
    pub fn new(
        store: &mut ParamStore,
        imu_cfg: &ImuEncoderConfig,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        Ok(VadModel {
            imu: ImuEncoder::new(store, "imu", imu_cfg, rng)?,
            head: crate::encoder::VadHead::new(store, "vad", rng)?,
        })
    }

    /// Per-frame voicing logits for one clip.
    pub fn forward(
        &self,
        store: &ParamStore,
        clip: &ImuStream,
        training: bool,
        rng: &mut SeededRng,
    ) -> Result<(Vec<f64>, VadModelCache)> {
        let (seq, encoder) = self.imu.forward(store, clip, training, rng)?;
        let logits = self.head.logits(store, &seq.frames)?;
        Ok((logits, VadModelCache { encoder, feats: seq.frames }))
    }

    /// Accumulates gradients from per-frame logit gradients.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &VadModelCache,
        dlogits: &[f64],
    ) -> Result<()> {
        let dfeats = self.head.backward(store, &cache.feats, dlogits)?;
        self.imu.backward(store, &cache.encoder, &dfeats)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, SplitCounts, SynthSpec};
    use crate::encoder::bce_with_logits;

    pub(crate) fn tiny_config() -> ModelConfig {
        ModelConfig {
            d_model: 8,
            heads: 2,
            blocks: 1,
            ffn_hidden: 16,
            video_dim: 4,
            imu_conv1: 6,
            imu_conv2: 10,
            s2s_embed: 5,
            s2s_att_dim: 6,
            att_filters: 3,
            att_kernel: 3,
            ..ModelConfig::default()
        }
    }

    pub(crate) fn tiny_spec() -> SynthSpec {
        SynthSpec {
            lexicon: vec!["ad".into(), "bee".into(), "cab".into(), "fed".into()],
            words_per_utt: (1, 2),
            frames_per_char: (3, 5),
            video_dim: 4,
            seed: 21,
            ..SynthSpec::default()
        }
    }

    fn build() -> (ParamStore, Model, Vec<crate::data::MultimodalSample>) {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(77, 0);
        let model = Model::new(&mut store, &tiny_config(), &mut rng).unwrap();
        let data =
            synth_generate(&tiny_spec(), SplitCounts { train: 2, valid: 0, test: 0 }).unwrap();
        (store, model, data)
    }

    #[test]
    fn encodings_follow_the_audio_frame_grid() {
        let (store, model, data) = build();
        let mut rng = SeededRng::new(1, 1);
        let s = &data[0];
        let (enc, _) = model
            .encode(&store, &s.audio, &s.video, &s.imu, ModalitySet::ALL, false, &mut rng)
            .unwrap();
        assert_eq!(enc.rows(), s.audio.samples.len() / 32);
        assert_eq!(enc.cols(), 8);

        let trace = model.loss(&store, &enc, &model.vocab.encode(&s.transcript).unwrap()).unwrap();
        assert!(trace.parts.l_ctc.is_finite() && trace.parts.l_ctc >= 0.0);
        assert!(trace.parts.l_s2s.is_finite() && trace.parts.l_s2s >= 0.0);
        assert_eq!(
            trace.parts.l_joint,
            (1.0 - trace.parts.alpha) * trace.parts.l_s2s + trace.parts.alpha * trace.parts.l_ctc
        );
    }

    #[test]
    fn disabling_modalities_changes_values_but_never_shapes() {
        let (store, model, data) = build();
        let s = &data[0];
        let subsets = [
            ModalitySet::ALL,
            ModalitySet::AUDIO_ONLY,
            ModalitySet { audio: false, video: true, imu: false },
            ModalitySet { audio: false, video: false, imu: true },
            ModalitySet { audio: true, video: false, imu: true },
        ];
        let mut encs = Vec::new();
        for m in subsets {
            let mut rng = SeededRng::new(2, 2);
            let (enc, _) =
                model.encode(&store, &s.audio, &s.video, &s.imu, m, false, &mut rng).unwrap();
            encs.push(enc);
        }
        for e in &encs[1..] {
            assert_eq!(e.shape(), encs[0].shape());
            assert_ne!(e, &encs[0]);
        }
        let mut rng = SeededRng::new(2, 2);
        let none = ModalitySet { audio: false, video: false, imu: false };
        assert!(model
            .encode(&store, &s.audio, &s.video, &s.imu, none, false, &mut rng)
            .is_err());
    }

    #[test]
    fn every_parameter_gradient_matches_finite_differences() {
        let (store, model, data) = build();
        let s = &data[1];
        let target = model.vocab.encode(&s.transcript).unwrap();
        let loss_of = |probe: &ParamStore| {
            let mut rng = SeededRng::new(3, 3);
            let (enc, _) = model
                .encode(probe, &s.audio, &s.video, &s.imu, ModalitySet::ALL, false, &mut rng)
                .unwrap();
            model.loss(probe, &enc, &target).unwrap().parts.l_joint
        };
        let mut rng = SeededRng::new(3, 3);
        let (enc, cache) = model
            .encode(&store, &s.audio, &s.video, &s.imu, ModalitySet::ALL, false, &mut rng)
            .unwrap();
        let trace = model.loss(&store, &enc, &target).unwrap();
        let mut g_store = store.clone();
        model.backward(&mut g_store, &cache, &trace, &enc).unwrap();

        // Spot-check the first element of every parameter tensor against a
        // central difference; this exercises the full routing (branch sums,
        // loss scaling) without the cost of a dense check.
        let h = 1e-5;
        for id in store.ids() {
            let analytic = g_store.grad(id).data()[0];
            let mut probe = store.clone();
            let base = probe.value(id).data()[0];
            probe.value_mut(id).data_mut()[0] = base + h;
            let up = loss_of(&probe);
            probe.value_mut(id).data_mut()[0] = base - h;
            let down = loss_of(&probe);
            let numeric = (up - down) / (2.0 * h);
            // Near-zero gradients sit below the cancellation noise of a
            // central difference on a loss of this magnitude; accept close
            // absolute agreement there, relative agreement everywhere else.
            let denom = analytic.abs().max(numeric.abs()).max(1e-7);
            let rel = ((analytic - numeric) / denom).abs();
            assert!(
                rel < 1e-4 || (analytic - numeric).abs() < 1e-8,
                "param {id:?}: analytic {analytic:.3e} vs numeric {numeric:.3e}"
            );
        }
    }

    #[test]
    fn decode_modes_all_produce_transcripts() {
        let (store, model, data) = build();
        let s = &data[0];
        let mut rng = SeededRng::new(4, 4);
        let (enc, _) = model
            .encode(&store, &s.audio, &s.video, &s.imu, ModalitySet::ALL, false, &mut rng)
            .unwrap();
        let corpus: Vec<Vec<u16>> =
            data.iter().map(|x| model.vocab.encode(&x.transcript).unwrap()).collect();
        let lm = NgramLm::train(&corpus, 2, 0.5, model.vocab.n_target_tokens()).unwrap();
        for (mode, lm_opt) in [
            (DecodeMode::CtcGreedy, None),
            (DecodeMode::CtcBeam, None),
            (DecodeMode::S2sBeam, None),
            (DecodeMode::Joint, Some(&lm)),
        ] {
            let gamma = if lm_opt.is_some() { 0.3 } else { 0.0 };
            let cfg = DecodeConfig {
                mode,
                gamma,
                beam_size: 3,
                max_len: 12,
                ..DecodeConfig::default()
            };
            let out = model.decode(&store, &enc, &cfg, lm_opt).unwrap();
            let again = model.decode(&store, &enc, &cfg, lm_opt).unwrap();
            assert_eq!(out, again, "{mode:?} must be deterministic");
            assert!(out.score.is_finite() || out.tokens.is_empty());
            assert!(model.vocab.encode(&out.text).is_ok());
        }
    }

    #[test]
    fn config_digest_tracks_architecture_changes() {
        let a = tiny_config();
        assert_eq!(a.digest(), tiny_config().digest());
        assert_ne!(a.digest(), ModelConfig { d_model: 16, ..tiny_config() }.digest());
        assert_ne!(a.digest(), ModelConfig { rca_mode: RcaMode::NoCa, ..tiny_config() }.digest());
        assert_ne!(a.digest(), ModelConfig { alpha: 0.31, ..tiny_config() }.digest());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ModelConfig { heads: 3, ..tiny_config() }.validate().is_err());
        assert!(ModelConfig { alpha: 1.5, ..tiny_config() }.validate().is_err());
        assert!(ModelConfig { video_rate: 50, ..tiny_config() }.validate().is_err());
        assert!(ModelConfig { imu_rate: 50, ..tiny_config() }.validate().is_err());
        assert!(ModalitySet::parse("audio+imu").unwrap().label() == "ai");
        assert!(ModalitySet::parse("avi").unwrap() == ModalitySet::ALL);
        assert!(ModalitySet::parse("").is_err());
        assert!(ModalitySet::parse("radar").is_err());
    }

    #[test]
    fn vad_model_scores_clips_and_learns_from_gradients() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(9, 9);
        let cfg = ImuEncoderConfig {
            conv1_channels: 6,
            conv2_channels: 10,
            ..ImuEncoderConfig::default()
        };
        let vad = VadModel::new(&mut store, &cfg, &mut rng).unwrap();
        let mut channels = Tensor::zeros([100, 6]);
        for (i, v) in channels.data_mut().iter_mut().enumerate() {
            *v = libm::sin(i as f64 * 0.1);
        }
        let clip = ImuStream { channels, sample_rate: 100 };
        let labels: Vec<f64> = (0..50).map(|i| f64::from(i % 2 == 0)).collect();

        let (logits, cache) = vad.forward(&store, &clip, false, &mut rng).unwrap();
        assert_eq!(logits.len(), 50);
        let (loss0, dlogits) = bce_with_logits(&logits, &labels).unwrap();
        assert!(loss0.is_finite());
        vad.backward(&mut store, &cache, &dlogits).unwrap();

        // One plain gradient step must reduce the loss on the same clip.
        let ids = store.ids();
        for id in ids {
            let g = store.grad(id).clone();
            let v = store.value_mut(id);
            for (x, gx) in v.data_mut().iter_mut().zip(g.data()) {
                *x -= 0.5 * gx;
            }
        }
        let (logits1, _) = vad.forward(&store, &clip, false, &mut rng).unwrap();
        let (loss1, _) = bce_with_logits(&logits1, &labels).unwrap();
        assert!(loss1 < loss0, "{loss1} should fall below {loss0}");
    }
}
