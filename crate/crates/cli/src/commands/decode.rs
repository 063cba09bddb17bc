//! `decode`: transcribe a sample file or a dataset split with a trained
//! checkpoint, writing one `id<TAB>transcript` line per utterance.

use std::path::{Path, PathBuf};

use canta_core::train::transcribe_sample;

use crate::config::RunConfig;
use crate::formats::{load_sample, load_split, write_text};
use crate::CliResult;

use super::{is_degenerate, language_model, load_model};

/// Decodes `input` (a sample file, or a dataset directory whose
/// `eval.split` is used; defaults to the configured dataset) and writes
/// `transcripts.tsv` into the output directory. Returns the file path.
pub fn run(cfg: &RunConfig, input: Option<&Path>) -> CliResult<PathBuf> {
    let modalities = cfg.modality_set()?;
    let decode_cfg = cfg.decode_config()?;
    let (store, model, _) = load_model(cfg)?;
    let lm = language_model(&model, cfg)?;

    let mut samples = match input {
        Some(path) if path.is_file() => vec![load_sample(path)?],
        Some(dir) => load_split(dir, cfg.eval_split()?)?,
        None => load_split(&cfg.paths.data_dir, cfg.eval_split()?)?,
    };
    samples.sort_by(|a, b| a.id.cmp(&b.id));

    let mut out = String::new();
    for s in &samples {
        let text = if is_degenerate(&model, s) {
            String::new()
        } else {
            transcribe_sample(&store, &model, s, modalities, None, &decode_cfg, lm.as_ref())?
                .text
        };
        out.push_str(&format!("{}\t{}\n", s.id, text));
    }
    let path = cfg.paths.out_dir.join("transcripts.tsv");
    write_text(&path, &out)?;
    Ok(path)
}
