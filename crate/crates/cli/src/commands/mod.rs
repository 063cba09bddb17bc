//! The five subcommands. Each is an ordinary function over a validated
//! [`RunConfig`] so tests can drive the full pipeline in-process; the
//! binary in `main.rs` only parses arguments and maps errors to exit
//! codes.

mod decode;
mod eval;
mod gen;
mod train_alt;
mod train_vad;

pub use decode::run as cmd_decode;
pub use eval::run as cmd_eval;
pub use gen::run as cmd_gen;
pub use train_alt::{run as cmd_train_alt, TrainAltOutcome};
pub use train_vad::{run as cmd_train_vad, VadOutcome};

use canta_core::data::{MultimodalSample, Split};
use canta_core::decode::NgramLm;
use canta_core::encoder::AudioEncoder;
use canta_core::model::{Model, ModelConfig};
use canta_core::param::ParamStore;
use canta_core::rng::SeededRng;

use crate::config::RunConfig;
use crate::formats::{load_checkpoint, load_split};
use crate::CliResult;

/// Seed streams, one per independently-randomized concern.
const STREAM_INIT: u64 = 1;
const STREAM_TRAIN: u64 = 2;
const STREAM_VAD_INIT: u64 = 3;
const STREAM_VAD_TRAIN: u64 = 4;

/// Builds a freshly initialized model from the config's master seed.
fn build_model(cfg: &RunConfig) -> CliResult<(ParamStore, Model, ModelConfig)> {
    let model_cfg = cfg.model_config()?;
    let mut store = ParamStore::new();
    let mut rng = SeededRng::new(cfg.seed, STREAM_INIT);
    let model = Model::new(&mut store, &model_cfg, &mut rng)?;
    Ok((store, model, model_cfg))
}

/// Builds the model and loads the configured checkpoint into it; a digest
/// mismatch warns on stderr but proceeds.
fn load_model(cfg: &RunConfig) -> CliResult<(ParamStore, Model, ModelConfig)> {
    let (mut store, model, model_cfg) = build_model(cfg)?;
    let path = cfg.checkpoint_path();
    let file = load_checkpoint(&path)?;
    if let Some(warning) = file.apply(&mut store, model_cfg.digest())? {
        eprintln!("{warning}");
    }
    Ok((store, model, model_cfg))
}

/// Character language model for shallow fusion, trained on the train-split
/// transcripts; `None` when the configured fusion weight is zero.
fn language_model(model: &Model, cfg: &RunConfig) -> CliResult<Option<NgramLm>> {
    if cfg.decode.gamma == 0.0 {
        return Ok(None);
    }
    let train = load_split(&cfg.paths.data_dir, Split::Train)?;
    let corpus = train
        .iter()
        .map(|s| model.vocab.encode(&s.transcript))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(NgramLm::train(
        &corpus,
        cfg.decode.lm_order,
        cfg.decode.lm_k,
        model.vocab.n_target_tokens(),
    )?))
}

/// True when a sample cannot produce even one frame in some stream; such
/// inputs decode to the empty transcript instead of erroring.
fn is_degenerate(model: &Model, s: &MultimodalSample) -> bool {
    s.video.frames.rows() == 0
        || model.imu.frames_for(s.imu.channels.rows()) == 0
        || AudioEncoder::frames_for(s.audio.samples.len()).is_err()
}
