//! `gen`: synthesize a dataset and write it with its manifest.

use canta_core::data::{synth_generate, Split, SplitCounts};

use crate::config::RunConfig;
use crate::formats::save_dataset;
use crate::{CliError, CliResult};

/// Generates the configured dataset into `paths.data_dir`. Refuses to
/// touch an existing non-empty directory unless `force` is set. Returns a
/// one-line summary.
pub fn run(cfg: &RunConfig, force: bool) -> CliResult<String> {
    let dir = &cfg.paths.data_dir;
    if dir.exists() {
        let occupied = std::fs::read_dir(dir)?.next().is_some();
        if occupied && !force {
            return Err(CliError::config(format!(
                "{} already holds files; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    let spec = cfg.synth_spec();
    let counts =
        SplitCounts { train: cfg.gen.train, valid: cfg.gen.valid, test: cfg.gen.test };
    let samples = synth_generate(&spec, counts)?;
    save_dataset(dir, &samples)?;
    let count_of =
        |split: Split| samples.iter().filter(|s| s.split == split).count();
    Ok(format!(
        "wrote {} samples ({} train, {} valid, {} test) to {}",
        samples.len(),
        count_of(Split::Train),
        count_of(Split::Valid),
        count_of(Split::Test),
        dir.display()
    ))
}
