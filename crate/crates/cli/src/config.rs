//! Run configuration: a TOML document where every field has a default and
//! unknown keys are hard errors, so a typo can never silently fall back.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use canta_core::decode::{DecodeConfig, DecodeMode};
use canta_core::fusion::RcaMode;
use canta_core::model::{ModalitySet, ModelConfig};
use canta_core::train::Augment;

use crate::CliError;

/// Words the default lexicon draws from when generating data.
pub const DEFAULT_LEXICON: &[&str] = &[
    "shine", "river", "golden", "night", "echo", "fire", "wander", "home", "silver", "dream",
    "falling", "light", "ocean", "stone", "morning", "wild",
];

fn default_lexicon() -> Vec<String> {
    DEFAULT_LEXICON.iter().map(|w| (*w).to_string()).collect()
}

/// One entry of `snr_list`: a level in dB, or the literal string `"clean"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SnrEntry {
    Db(f64),
    Tag(String),
}

/// Top-level run configuration.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed; every random stream in the run derives from it.
    pub seed: u64,
    /// Modalities carrying real features during training and (by default)
    /// evaluation: any non-empty combination of `a`, `v`, `i`, or the
    /// long form `audio+video+imu`.
    pub modalities: String,
    /// Interference levels (dB) for noise-robust training and the
    /// evaluation grid; the string `"clean"` is accepted and clean is
    /// always part of both regardless.
    pub snr_list: Vec<SnrEntry>,
    pub model: ModelSection,
    pub decode: DecodeSection,
    pub train: TrainSection,
    pub vad: VadSection,
    pub gen: GenSection,
    pub eval: EvalSection,
    pub paths: PathsSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub d_model: usize,
    pub heads: usize,
    pub blocks: usize,
    pub ffn_hidden: usize,
    pub video_dim: usize,
    pub audio_rate: u32,
    pub video_rate: u32,
    pub imu_rate: u32,
    pub imu_conv1: usize,
    pub imu_conv2: usize,
    pub s2s_embed: usize,
    pub s2s_att_dim: usize,
    pub att_filters: usize,
    pub att_kernel: usize,
    /// `full`, `no_ca` (cross-attention ablated), or `no_sa`
    /// (self-attention ablated).
    pub rca_mode: String,
    /// Weight of the alignment-free branch in the joint loss.
    pub alpha: f64,
    pub boundary_as_blank: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecodeSection {
    /// `ctc_greedy`, `ctc_beam`, `s2s_beam`, or `joint`.
    pub mode: String,
    pub beta: f64,
    pub gamma: f64,
    pub beam_size: usize,
    pub max_len: usize,
    pub length_normalize: bool,
    /// Character n-gram order of the shallow-fusion language model.
    pub lm_order: usize,
    /// Add-k smoothing constant of that language model.
    pub lm_k: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    /// Learning rate for encoder-group parameters.
    pub lr_encoder: f64,
    /// Learning rate for head-group parameters (fusion, CTC, decoder).
    pub lr_head: f64,
    /// Audio time-masking spans per utterance (0 disables).
    pub mask_spans: usize,
    /// Longest masked span, in waveform samples.
    pub mask_width: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VadSection {
    pub epochs: usize,
    pub lr: f64,
    /// Decision threshold on voicing probabilities.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenSection {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub lexicon: Vec<String>,
    pub words_per_utt: [usize; 2],
    pub frames_per_char: [usize; 2],
    pub noise_level: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    /// Modality subsets to score; empty means "just the configured
    /// `modalities`".
    pub modality_sets: Vec<String>,
    /// Split to score: `train`, `valid`, or `test`.
    pub split: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    /// Dataset directory (manifest + sample files).
    pub data_dir: PathBuf,
    /// Output directory for checkpoints, logs, and reports.
    pub out_dir: PathBuf,
    /// Checkpoint consumed by decode/eval; empty means
    /// `<out_dir>/model.ckpt`.
    pub checkpoint: PathBuf,
    /// Checkpoint to resume training from; empty disables resuming.
    pub resume: PathBuf,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        ModelSection {
            d_model: m.d_model,
            heads: m.heads,
            blocks: m.blocks,
            ffn_hidden: m.ffn_hidden,
            video_dim: m.video_dim,
            audio_rate: m.audio_rate,
            video_rate: m.video_rate,
            imu_rate: m.imu_rate,
            imu_conv1: m.imu_conv1,
            imu_conv2: m.imu_conv2,
            s2s_embed: m.s2s_embed,
            s2s_att_dim: m.s2s_att_dim,
            att_filters: m.att_filters,
            att_kernel: m.att_kernel,
            rca_mode: "full".to_string(),
            alpha: m.alpha,
            boundary_as_blank: m.boundary_as_blank,
        }
    }
}

impl Default for DecodeSection {
    fn default() -> Self {
        let d = DecodeConfig::default();
        DecodeSection {
            mode: "joint".to_string(),
            beta: d.beta,
            gamma: d.gamma,
            beam_size: d.beam_size,
            max_len: d.max_len,
            length_normalize: d.length_normalize,
            lm_order: 2,
            lm_k: 0.5,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            epochs: 20,
            lr_encoder: 1e-5,
            lr_head: 5e-4,
            mask_spans: 2,
            mask_width: 160,
        }
    }
}

impl Default for VadSection {
    fn default() -> Self {
        VadSection { epochs: 50, lr: 1e-3, threshold: 0.5 }
    }
}

impl Default for GenSection {
    fn default() -> Self {
        GenSection {
            train: 64,
            valid: 8,
            test: 8,
            lexicon: default_lexicon(),
            words_per_utt: [2, 4],
            frames_per_char: [4, 10],
            noise_level: 0.01,
        }
    }
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { modality_sets: Vec::new(), split: "test".to_string() }
    }
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection {
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            checkpoint: PathBuf::new(),
            resume: PathBuf::new(),
        }
    }
}

impl RunConfig {
    /// Parses and validates a TOML config file.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Parses and validates config text.
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::config(format!("config error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model_config()?;
        self.modality_set()?;
        self.decode_config()?;
        for set in &self.eval.modality_sets {
            ModalitySet::parse(set).map_err(CliError::from)?;
        }
        self.eval_split()?;
        for e in &self.snr_list {
            match e {
                SnrEntry::Db(db) if db.is_finite() => {}
                SnrEntry::Db(db) => {
                    return Err(CliError::config(format!("snr_list entry {db} is not finite")));
                }
                SnrEntry::Tag(t) if t == "clean" => {}
                SnrEntry::Tag(t) => {
                    return Err(CliError::config(format!(
                        "snr_list entries are dB numbers or \"clean\", got {t:?}"
                    )));
                }
            }
        }
        if !(self.decode.lm_k.is_finite() && self.decode.lm_k > 0.0) {
            return Err(CliError::config("decode.lm_k must be positive"));
        }
        if self.decode.lm_order == 0 {
            return Err(CliError::config("decode.lm_order must be at least 1"));
        }
        for (label, lr) in [
            ("train.lr_encoder", self.train.lr_encoder),
            ("train.lr_head", self.train.lr_head),
            ("vad.lr", self.vad.lr),
        ] {
            if !(lr.is_finite() && lr > 0.0) {
                return Err(CliError::config(format!("{label} must be positive, got {lr}")));
            }
        }
        if !(0.0..=1.0).contains(&self.vad.threshold) {
            return Err(CliError::config("vad.threshold must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Architecture section as the core model configuration.
    pub fn model_config(&self) -> Result<ModelConfig, CliError> {
        let rca_mode = match self.model.rca_mode.as_str() {
            "full" => RcaMode::Full,
            "no_ca" => RcaMode::NoCa,
            "no_sa" => RcaMode::NoSa,
            other => {
                return Err(CliError::config(format!(
                    "model.rca_mode must be full, no_ca, or no_sa, got {other:?}"
                )));
            }
        };
        let cfg = ModelConfig {
            d_model: self.model.d_model,
            heads: self.model.heads,
            blocks: self.model.blocks,
            ffn_hidden: self.model.ffn_hidden,
            video_dim: self.model.video_dim,
            audio_rate: self.model.audio_rate,
            video_rate: self.model.video_rate,
            imu_rate: self.model.imu_rate,
            imu_conv1: self.model.imu_conv1,
            imu_conv2: self.model.imu_conv2,
            s2s_embed: self.model.s2s_embed,
            s2s_att_dim: self.model.s2s_att_dim,
            att_filters: self.model.att_filters,
            att_kernel: self.model.att_kernel,
            rca_mode,
            alpha: self.model.alpha,
            boundary_as_blank: self.model.boundary_as_blank,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn modality_set(&self) -> Result<ModalitySet, CliError> {
        ModalitySet::parse(&self.modalities).map_err(CliError::from)
    }

    /// Modality subsets the eval grid scans, in config order.
    pub fn eval_modality_sets(&self) -> Result<Vec<ModalitySet>, CliError> {
        if self.eval.modality_sets.is_empty() {
            return Ok(vec![self.modality_set()?]);
        }
        self.eval
            .modality_sets
            .iter()
            .map(|s| ModalitySet::parse(s).map_err(CliError::from))
            .collect()
    }

    pub fn eval_split(&self) -> Result<canta_core::data::Split, CliError> {
        self.eval
            .split
            .parse()
            .map_err(|_| CliError::config(format!("eval.split {:?} is not a split", self.eval.split)))
    }

    pub fn decode_config(&self) -> Result<DecodeConfig, CliError> {
        let mode = match self.decode.mode.as_str() {
            "ctc_greedy" => DecodeMode::CtcGreedy,
            "ctc_beam" => DecodeMode::CtcBeam,
            "s2s_beam" => DecodeMode::S2sBeam,
            "joint" => DecodeMode::Joint,
            other => {
                return Err(CliError::config(format!(
                    "decode.mode must be ctc_greedy, ctc_beam, s2s_beam, or joint, got {other:?}"
                )));
            }
        };
        let cfg = DecodeConfig {
            beta: self.decode.beta,
            gamma: self.decode.gamma,
            beam_size: self.decode.beam_size,
            max_len: self.decode.max_len,
            mode,
            length_normalize: self.decode.length_normalize,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Numeric interference levels, in config order.
    pub fn snr_levels(&self) -> Vec<f64> {
        self.snr_list
            .iter()
            .filter_map(|e| match e {
                SnrEntry::Db(db) => Some(*db),
                SnrEntry::Tag(_) => None,
            })
            .collect()
    }

    /// Training-time augmentation drawn from this config.
    pub fn augment(&self) -> Augment {
        Augment {
            snr_list: self.snr_levels(),
            mask_spans: self.train.mask_spans,
            mask_width: self.train.mask_width,
        }
    }

    /// Dataset synthesis spec for `gen`.
    pub fn synth_spec(&self) -> canta_core::data::SynthSpec {
        canta_core::data::SynthSpec {
            lexicon: self.gen.lexicon.clone(),
            words_per_utt: (self.gen.words_per_utt[0], self.gen.words_per_utt[1]),
            frames_per_char: (self.gen.frames_per_char[0], self.gen.frames_per_char[1]),
            audio_rate: self.model.audio_rate,
            video_rate: self.model.video_rate,
            imu_rate: self.model.imu_rate,
            video_dim: self.model.video_dim,
            noise_level: self.gen.noise_level,
            seed: self.seed,
        }
    }

    /// The checkpoint decode/eval reads.
    pub fn checkpoint_path(&self) -> PathBuf {
        if self.paths.checkpoint.as_os_str().is_empty() {
            self.paths.out_dir.join("model.ckpt")
        } else {
            self.paths.checkpoint.clone()
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            modalities: "avi".to_string(),
            snr_list: vec![
                SnrEntry::Db(-10.0),
                SnrEntry::Db(-5.0),
                SnrEntry::Db(0.0),
                SnrEntry::Db(5.0),
                SnrEntry::Db(10.0),
            ],
            model: ModelSection::default(),
            decode: DecodeSection::default(),
            train: TrainSection::default(),
            vad: VadSection::default(),
            gen: GenSection::default(),
            eval: EvalSection::default(),
            paths: PathsSection::default(),
        }
    }
}
