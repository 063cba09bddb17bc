//! `train-alt`: end-to-end training of the transcription model on the
//! joint loss, with noise mixing and time masking, epoch-end validation
//! word error rate, and best-validation checkpointing.

use std::path::PathBuf;

use canta_core::data::Split;
use canta_core::metrics::ErrorUnit;
use canta_core::optim::{OptimConfig, OptimState};
use canta_core::rng::SeededRng;
use canta_core::train::{eval_wer, train_alt_epoch, LearningRates};

use crate::config::RunConfig;
use crate::formats::{load_checkpoint, load_split, save_checkpoint, write_text};
use crate::{CliError, CliResult};

use super::{build_model, language_model, STREAM_TRAIN};

/// What a training run produced.
#[derive(Debug, Clone)]
pub struct TrainAltOutcome {
    /// Epoch (1-based) whose parameters `model.ckpt` holds.
    pub best_epoch: u32,
    /// Its validation word error rate (NaN with an empty valid split).
    pub best_val_wer: f64,
    pub epochs_run: u32,
    /// Alignment-infeasible utterances skipped, summed over epochs.
    pub total_skipped: usize,
    /// Best-validation checkpoint path.
    pub checkpoint: PathBuf,
    /// One log line per epoch.
    pub log: Vec<String>,
}

pub fn run(cfg: &RunConfig) -> CliResult<TrainAltOutcome> {
    let modalities = cfg.modality_set()?;
    let decode_cfg = cfg.decode_config()?;
    let train_set = load_split(&cfg.paths.data_dir, Split::Train)?;
    let valid_set = load_split(&cfg.paths.data_dir, Split::Valid)?;
    if train_set.is_empty() {
        return Err(CliError::data(format!(
            "train split of {} is empty",
            cfg.paths.data_dir.display()
        )));
    }

    let (mut store, model, model_cfg) = build_model(cfg)?;
    let mut opt = OptimState::new(&store);
    let mut start_epoch = 0u32;
    if !cfg.paths.resume.as_os_str().is_empty() {
        let file = load_checkpoint(&cfg.paths.resume)?;
        if let Some(warning) = file.apply(&mut store, model_cfg.digest())? {
            eprintln!("{warning}");
        }
        if let Some(o) = file.optimizer(&store)? {
            opt = o;
        }
        start_epoch = file.epoch;
    }

    let lm = language_model(&model, cfg)?;
    let aug = cfg.augment();
    let lr = LearningRates { encoder: cfg.train.lr_encoder, head: cfg.train.lr_head };
    let opt_cfg = OptimConfig::default();
    let base_rng = SeededRng::new(cfg.seed, STREAM_TRAIN);
    let digest = model_cfg.digest();

    std::fs::create_dir_all(&cfg.paths.out_dir)?;
    let best_path = cfg.paths.out_dir.join("model.ckpt");
    let last_path = cfg.paths.out_dir.join("last.ckpt");

    let mut best: Option<(u32, f64)> = None;
    let mut log = Vec::new();
    let mut total_skipped = 0usize;
    let end_epoch = cfg.train.epochs as u32;
    for epoch in start_epoch..end_epoch {
        let stats = train_alt_epoch(
            &mut store,
            &model,
            &mut opt,
            &opt_cfg,
            lr,
            &train_set,
            modalities,
            &aug,
            u64::from(epoch),
            &base_rng,
        )?;
        if !(stats.mean_joint.is_finite()
            && stats.mean_ctc.is_finite()
            && stats.mean_s2s.is_finite())
        {
            return Err(CliError::data(format!(
                "training diverged at epoch {}: joint loss {}",
                epoch + 1,
                stats.mean_joint
            )));
        }
        total_skipped += stats.n_skipped;
        let val_wer = if valid_set.is_empty() {
            f64::NAN
        } else {
            eval_wer(
                &store,
                &model,
                &valid_set,
                modalities,
                None,
                &decode_cfg,
                lm.as_ref(),
                ErrorUnit::Word,
            )?
            .wer
        };
        let line = format!(
            "epoch={} joint={} ctc={} s2s={} trained={} skipped={} val_wer={}",
            epoch + 1,
            stats.mean_joint,
            stats.mean_ctc,
            stats.mean_s2s,
            stats.n_trained,
            stats.n_skipped,
            val_wer
        );
        println!("{line}");
        log.push(line);
        save_checkpoint(&last_path, &store, Some(&opt), digest, epoch + 1)?;
        let improved = match best {
            None => true,
            Some((_, w)) => valid_set.is_empty() || val_wer < w,
        };
        if improved {
            best = Some((epoch + 1, val_wer));
            save_checkpoint(&best_path, &store, Some(&opt), digest, epoch + 1)?;
        }
    }
    // A resume that starts past the configured horizon still leaves a
    // usable best checkpoint behind.
    if best.is_none() {
        save_checkpoint(&best_path, &store, Some(&opt), digest, start_epoch)?;
        best = Some((start_epoch, f64::NAN));
    }
    let (best_epoch, best_val_wer) = best.expect("set above");
    write_text(
        &cfg.paths.out_dir.join("train_log.txt"),
        &(log.join("\n") + "\n"),
    )?;
    Ok(TrainAltOutcome {
        best_epoch,
        best_val_wer,
        epochs_run: end_epoch.saturating_sub(start_epoch),
        total_skipped,
        checkpoint: best_path,
        log,
    })
}
