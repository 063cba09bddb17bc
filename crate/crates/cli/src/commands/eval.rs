//! `eval`: score a checkpoint over the (interference level × modality
//! subset) grid and emit the metrics CSV; optionally dump the fusion
//! attention maps of the first utterance.

use std::path::PathBuf;

use canta_core::metrics::ErrorUnit;
use canta_core::rng::SeededRng;
use canta_core::train::eval_wer;

use crate::config::RunConfig;
use crate::formats::{dump_attention, format_metrics_csv, load_split, write_text, MetricsRow};
use crate::{CliError, CliResult};

use super::{language_model, load_model};

/// Scores the configured split at clean plus every listed level, for every
/// modality subset, and writes `metrics.csv` (one average row per subset
/// after its level rows). With `dump_attention_maps`, also writes the
/// first utterance's nine fusion attention matrices under `attention/`.
/// Returns the CSV path.
pub fn run(cfg: &RunConfig, dump_attention_maps: bool) -> CliResult<PathBuf> {
    let decode_cfg = cfg.decode_config()?;
    let subsets = cfg.eval_modality_sets()?;
    let (store, model, _) = load_model(cfg)?;
    let lm = language_model(&model, cfg)?;
    let samples = load_split(&cfg.paths.data_dir, cfg.eval_split()?)?;
    if samples.is_empty() {
        return Err(CliError::data(format!(
            "split {:?} of {} is empty",
            cfg.eval.split,
            cfg.paths.data_dir.display()
        )));
    }

    // Clean first, then the configured levels in order.
    let levels: Vec<Option<f64>> = std::iter::once(None)
        .chain(cfg.snr_levels().into_iter().map(Some))
        .collect();

    let mut rows = Vec::new();
    for subset in &subsets {
        let mut subset_rows = Vec::new();
        for level in &levels {
            let wer = eval_wer(
                &store,
                &model,
                &samples,
                *subset,
                *level,
                &decode_cfg,
                lm.as_ref(),
                ErrorUnit::Word,
            )?;
            let cer = eval_wer(
                &store,
                &model,
                &samples,
                *subset,
                *level,
                &decode_cfg,
                lm.as_ref(),
                ErrorUnit::Char,
            )?;
            subset_rows.push(MetricsRow {
                snr: level.map_or_else(|| "clean".to_string(), MetricsRow::db_label),
                modalities: subset.label(),
                wer: wer.wer,
                cer: cer.wer,
                n_utts: samples.len(),
            });
        }
        let n = subset_rows.len() as f64;
        let avg = MetricsRow {
            snr: "average".to_string(),
            modalities: subset.label(),
            wer: subset_rows.iter().map(|r| r.wer).sum::<f64>() / n,
            cer: subset_rows.iter().map(|r| r.cer).sum::<f64>() / n,
            n_utts: samples.len(),
        };
        rows.extend(subset_rows);
        rows.push(avg);
    }

    std::fs::create_dir_all(&cfg.paths.out_dir)?;
    if dump_attention_maps {
        let first = &samples[0];
        let mut rng = SeededRng::new(0, 0);
        let (_, cache) = model.encode(
            &store,
            &first.audio,
            &first.video,
            &first.imu,
            cfg.modality_set()?,
            false,
            &mut rng,
        )?;
        dump_attention(&cfg.paths.out_dir.join("attention"), &cache.fusion_attention())?;
    }
    let path = cfg.paths.out_dir.join("metrics.csv");
    write_text(&path, &format_metrics_csv(&rows))?;
    Ok(path)
}
