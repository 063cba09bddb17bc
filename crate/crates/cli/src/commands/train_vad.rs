//! `train-vad`: trains the inertial voicing detector on 5-second clips
//! with per-frame binary cross-entropy, keeps the lowest-validation-loss
//! epoch, and reports test-split accuracy and F1.

use std::path::PathBuf;

use canta_core::data::{
    segment_clips, vad_labels_from_audio, MultimodalSample, Split, VadExample, VAD_CLIP_SECONDS,
    VAD_FRAME_MS, VAD_REL_THRESHOLD,
};
use canta_core::encoder::ImuEncoderConfig;
use canta_core::metrics::{vad_metrics, VadReport};
use canta_core::model::VadModel;
use canta_core::optim::{OptimConfig, OptimKind, OptimState};
use canta_core::param::ParamStore;
use canta_core::rng::SeededRng;
use canta_core::train::{train_vad_epoch, vad_loss, vad_probabilities};

use crate::config::RunConfig;
use crate::formats::{save_checkpoint, write_text};
use crate::formats::load_split;
use crate::{CliError, CliResult};

use super::{STREAM_VAD_INIT, STREAM_VAD_TRAIN};

/// What a detector training run produced.
#[derive(Debug, Clone)]
pub struct VadOutcome {
    /// Epoch (1-based) with the lowest validation loss.
    pub best_epoch: u32,
    pub best_val_loss: f64,
    /// Test-split frame metrics of that epoch's parameters.
    pub report: VadReport,
    pub checkpoint: PathBuf,
    pub log: Vec<String>,
}

/// Voicing labels from the clean audio, then non-overlapping clips.
fn clips_of(samples: &[MultimodalSample]) -> CliResult<Vec<VadExample>> {
    let mut clips = Vec::new();
    for s in samples {
        let labels = vad_labels_from_audio(&s.audio, VAD_REL_THRESHOLD, VAD_FRAME_MS)?;
        clips.extend(segment_clips(&s.imu, &labels, VAD_CLIP_SECONDS)?);
    }
    Ok(clips)
}

pub fn run(cfg: &RunConfig) -> CliResult<VadOutcome> {
    let train = clips_of(&load_split(&cfg.paths.data_dir, Split::Train)?)?;
    let valid = clips_of(&load_split(&cfg.paths.data_dir, Split::Valid)?)?;
    let test = clips_of(&load_split(&cfg.paths.data_dir, Split::Test)?)?;
    if train.is_empty() {
        return Err(CliError::data("train split yields no clips"));
    }
    if test.is_empty() {
        return Err(CliError::data("test split yields no clips to report on"));
    }

    let model_cfg = cfg.model_config()?;
    let imu_cfg = ImuEncoderConfig {
        conv1_channels: model_cfg.imu_conv1,
        conv2_channels: model_cfg.imu_conv2,
        sample_rate: model_cfg.imu_rate,
        ..ImuEncoderConfig::default()
    };
    let mut store = ParamStore::new();
    let mut init_rng = SeededRng::new(cfg.seed, STREAM_VAD_INIT);
    let vad = VadModel::new(&mut store, &imu_cfg, &mut init_rng)?;
    let mut opt = OptimState::new(&store);
    let opt_cfg = OptimConfig {
        kind: OptimKind::AdamW,
        weight_decay: 0.01,
        ..OptimConfig::default()
    };
    let base_rng = SeededRng::new(cfg.seed, STREAM_VAD_TRAIN);

    let mut best: Option<(u32, f64, ParamStore)> = None;
    let mut log = Vec::new();
    for epoch in 0..cfg.vad.epochs as u32 {
        let train_loss = train_vad_epoch(
            &mut store,
            &vad,
            &mut opt,
            &opt_cfg,
            cfg.vad.lr,
            &train,
            u64::from(epoch),
            &base_rng,
        )?;
        let val_loss = if valid.is_empty() {
            train_loss
        } else {
            vad_loss(&store, &vad, &valid)?
        };
        if !val_loss.is_finite() {
            return Err(CliError::data(format!(
                "detector training diverged at epoch {}",
                epoch + 1
            )));
        }
        let line = format!(
            "epoch={} train_loss={} val_loss={}",
            epoch + 1,
            train_loss,
            val_loss
        );
        println!("{line}");
        log.push(line);
        if best.as_ref().is_none_or(|(_, w, _)| val_loss < *w) {
            best = Some((epoch + 1, val_loss, store.clone()));
        }
    }
    let (best_epoch, best_val_loss, best_store) = best.ok_or_else(|| {
        CliError::config("vad.epochs is 0; nothing was trained")
    })?;

    std::fs::create_dir_all(&cfg.paths.out_dir)?;
    let checkpoint = cfg.paths.out_dir.join("vad.ckpt");
    save_checkpoint(&checkpoint, &best_store, None, model_cfg.digest(), best_epoch)?;

    let (labels, probs) = vad_probabilities(&best_store, &vad, &test)?;
    let report = vad_metrics(&labels, &probs, cfg.vad.threshold)?;
    let report_text = format!(
        "metric,value\naccuracy,{}\nf1,{}\nmacro_f1,{}\ntrue_positives,{}\nfalse_positives,{}\ntrue_negatives,{}\nfalse_negatives,{}\n",
        report.accuracy,
        report.f1,
        report.macro_f1,
        report.true_positives,
        report.false_positives,
        report.true_negatives,
        report.false_negatives
    );
    write_text(&cfg.paths.out_dir.join("vad_report.csv"), &report_text)?;
    write_text(
        &cfg.paths.out_dir.join("vad_log.txt"),
        &(log.join("\n") + "\n"),
    )?;
    Ok(VadOutcome { best_epoch, best_val_loss, report, checkpoint, log })
}
