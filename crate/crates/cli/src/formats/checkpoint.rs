//! Checkpoints: the magic `MMCK1`, a length-prefixed metadata document
//! (tensor name/shape/offset table, architecture digest, epoch, optimizer
//! step), then one raw little-endian `f64` payload holding every parameter
//! value and, when saved, the optimizer's first and second moments.

use std::path::Path;

use serde::{Deserialize, Serialize};

use canta_core::optim::OptimState;
use canta_core::param::ParamStore;
use canta_core::tensor::Tensor;

use super::{push_f64s, push_metadata, take, take_f64s, take_metadata};
use crate::{CliError, CliResult};

const MAGIC: &[u8; 5] = b"MMCK1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointMeta {
    /// Architecture digest, 16 hex digits.
    digest: String,
    /// Completed training epochs.
    epoch: u32,
    /// Optimizer step count; meaningful only when `has_optimizer`.
    step: u32,
    has_optimizer: bool,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Element offset of this tensor's values in the payload.
    offset: usize,
}

/// A parsed checkpoint, not yet bound to any model.
#[derive(Debug)]
pub struct CheckpointFile {
    /// Architecture digest recorded at save time.
    pub digest: u64,
    /// Completed training epochs at save time.
    pub epoch: u32,
    step: u32,
    has_optimizer: bool,
    names: Vec<String>,
    shapes: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    payload: Vec<f64>,
}

/// Writes parameters (and optionally optimizer moments) to `path`.
pub fn save_checkpoint(
    path: &Path,
    store: &ParamStore,
    optim: Option<&OptimState>,
    digest: u64,
    epoch: u32,
) -> CliResult<()> {
    let mut tensors = Vec::with_capacity(store.len());
    let mut offset = 0usize;
    for p in store.iter() {
        tensors.push(TensorEntry {
            name: p.name.clone(),
            shape: p.value.shape().to_vec(),
            offset,
        });
        offset += p.value.len();
    }
    let meta = CheckpointMeta {
        digest: format!("{digest:016x}"),
        epoch,
        step: optim.map_or(0, |o| o.step_count() as u32),
        has_optimizer: optim.is_some(),
        tensors,
    };
    let doc = toml::to_string(&meta)
        .map_err(|e| CliError::data(format!("cannot serialize checkpoint metadata: {e}")))?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    push_metadata(&mut out, &doc)?;
    for p in store.iter() {
        push_f64s(&mut out, p.value.data());
    }
    if let Some(o) = optim {
        let (m, v) = o.moments();
        for t in m {
            push_f64s(&mut out, t.data());
        }
        for t in v {
            push_f64s(&mut out, t.data());
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Parses a checkpoint file.
pub fn load_checkpoint(path: &Path) -> CliResult<CheckpointFile> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::data(format!("cannot read checkpoint {}: {e}", path.display())))?;
    let mut rest = bytes.as_slice();
    let magic = take(&mut rest, MAGIC.len(), "magic")?;
    if magic != MAGIC {
        return Err(CliError::data(format!(
            "bad magic in {}: expected {MAGIC:?}, found {magic:?}",
            path.display()
        )));
    }
    let doc = take_metadata(&mut rest)?;
    let meta: CheckpointMeta = toml::from_str(&doc).map_err(|e| {
        CliError::data(format!("bad checkpoint metadata in {}: {e}", path.display()))
    })?;
    let digest = u64::from_str_radix(&meta.digest, 16)
        .map_err(|_| CliError::data(format!("digest {:?} is not 16 hex digits", meta.digest)))?;
    let n_params: usize = meta.tensors.iter().map(|t| t.shape.iter().product::<usize>()).sum();
    let total = if meta.has_optimizer { n_params * 3 } else { n_params };
    let payload = take_f64s(&mut rest, total, "parameter payload")?;
    if !rest.is_empty() {
        return Err(CliError::data(format!(
            "{} has {} trailing bytes after the declared payload",
            path.display(),
            rest.len()
        )));
    }
    let mut names = Vec::with_capacity(meta.tensors.len());
    let mut shapes = Vec::with_capacity(meta.tensors.len());
    let mut offsets = Vec::with_capacity(meta.tensors.len());
    let mut expected = 0usize;
    for t in meta.tensors {
        if t.offset != expected {
            return Err(CliError::data(format!(
                "tensor {} declares offset {} but the payload is at {}",
                t.name, t.offset, expected
            )));
        }
        expected += t.shape.iter().product::<usize>();
        names.push(t.name);
        shapes.push(t.shape);
        offsets.push(t.offset);
    }
    Ok(CheckpointFile {
        digest,
        epoch: meta.epoch,
        step: meta.step,
        has_optimizer: meta.has_optimizer,
        names,
        shapes,
        offsets,
        payload,
    })
}

impl CheckpointFile {
    fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Copies saved values into a freshly constructed model's store. Every
    /// parameter must be present with its exact shape; mismatches are
    /// reported together, naming each offending tensor. Returns a warning
    /// line when the architecture digest differs from `expected_digest`.
    pub fn apply(
        &self,
        store: &mut ParamStore,
        expected_digest: u64,
    ) -> CliResult<Option<String>> {
        let mut problems: Vec<String> = Vec::new();
        for p in store.iter_mut() {
            match self.index_of(&p.name) {
                None => problems.push(format!("{} missing from checkpoint", p.name)),
                Some(i) => {
                    if self.shapes[i] != p.value.shape() {
                        problems.push(format!(
                            "{} has shape {:?} in the checkpoint but {:?} in the model",
                            p.name,
                            self.shapes[i],
                            p.value.shape()
                        ));
                        continue;
                    }
                    let start = self.offsets[i];
                    let len = p.value.len();
                    p.value
                        .data_mut()
                        .copy_from_slice(&self.payload[start..start + len]);
                }
            }
        }
        let loaded: std::collections::BTreeSet<&str> =
            store.iter().map(|p| p.name.as_str()).collect();
        for name in &self.names {
            if !loaded.contains(name.as_str()) {
                problems.push(format!("{name} exists in the checkpoint but not the model"));
            }
        }
        if !problems.is_empty() {
            return Err(CliError::shape(format!(
                "checkpoint incompatible with model: {}",
                problems.join("; ")
            )));
        }
        if self.digest != expected_digest {
            return Ok(Some(format!(
                "warning: checkpoint architecture digest {:016x} differs from the configured {:016x}; shapes matched, proceeding",
                self.digest, expected_digest
            )));
        }
        Ok(None)
    }

    /// Rebuilds the optimizer state for `store`, when the file carries one.
    /// Moments are matched to parameters by name, so registration order
    /// need not agree.
    pub fn optimizer(&self, store: &ParamStore) -> CliResult<Option<OptimState>> {
        if !self.has_optimizer {
            return Ok(None);
        }
        let n_params: usize = self.shapes.iter().map(|s| s.iter().product::<usize>()).sum();
        let mut m = Vec::with_capacity(store.len());
        let mut v = Vec::with_capacity(store.len());
        for p in store.iter() {
            let i = self.index_of(&p.name).ok_or_else(|| {
                CliError::shape(format!("{} missing from checkpoint optimizer state", p.name))
            })?;
            let len: usize = self.shapes[i].iter().product();
            let at = |base: usize| {
                Tensor::new(self.shapes[i].clone(), self.payload[base..base + len].to_vec())
                    .map_err(CliError::from)
            };
            m.push(at(n_params + self.offsets[i])?);
            v.push(at(2 * n_params + self.offsets[i])?);
        }
        Ok(Some(
            OptimState::from_parts(m, v, u64::from(self.step)).map_err(CliError::from)?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use canta_core::model::{Model, ModelConfig};
    use canta_core::param::ParamGroup;
    use canta_core::rng::SeededRng;

    fn tiny() -> ModelConfig {
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

    #[test]
    fn round_trip_is_bit_identical_including_optimizer() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny();
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(1, 0);
        let _model = Model::new(&mut store, &cfg, &mut rng).unwrap();
        let mut opt = OptimState::new(&store);
        // Give the moments non-trivial values.
        for p in store.iter_mut() {
            for g in p.grad.data_mut() {
                *g = 0.25;
            }
        }
        canta_core::optim::optimizer_step(
            &mut store,
            &mut opt,
            &canta_core::optim::OptimConfig::default(),
            1e-3,
        )
        .unwrap();

        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &store, Some(&opt), cfg.digest(), 7).unwrap();
        let file = load_checkpoint(&path).unwrap();
        assert_eq!(file.epoch, 7);
        assert_eq!(file.digest, cfg.digest());

        let mut store2 = ParamStore::new();
        let mut rng2 = SeededRng::new(99, 9);
        let _model2 = Model::new(&mut store2, &cfg, &mut rng2).unwrap();
        let warning = file.apply(&mut store2, cfg.digest()).unwrap();
        assert!(warning.is_none());
        for (a, b) in store.iter().zip(store2.iter()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.value.data(), b.value.data());
        }
        let opt2 = file.optimizer(&store2).unwrap().unwrap();
        assert_eq!(opt2.step_count(), opt.step_count());
        let (m1, v1) = opt.moments();
        let (m2, v2) = opt2.moments();
        for (a, b) in m1.iter().zip(m2).chain(v1.iter().zip(v2)) {
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn digest_mismatch_warns_but_loads() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny();
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(2, 0);
        let _ = Model::new(&mut store, &cfg, &mut rng).unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&path, &store, None, cfg.digest(), 0).unwrap();
        let file = load_checkpoint(&path).unwrap();
        let warning = file.apply(&mut store, cfg.digest() ^ 1).unwrap();
        assert!(warning.unwrap().contains("digest"));
        assert!(file.optimizer(&store).unwrap().is_none());
    }

    #[test]
    fn wrong_shapes_name_the_offending_tensors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny();
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(3, 0);
        let _ = Model::new(&mut store, &cfg, &mut rng).unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&path, &store, None, cfg.digest(), 0).unwrap();
        let file = load_checkpoint(&path).unwrap();

        let bigger = ModelConfig { d_model: 16, ffn_hidden: 32, ..tiny() };
        let mut store2 = ParamStore::new();
        let mut rng2 = SeededRng::new(3, 1);
        let _ = Model::new(&mut store2, &bigger, &mut rng2).unwrap();
        let err = file.apply(&mut store2, bigger.digest()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        let msg = err.to_string();
        assert!(msg.contains("shape"), "{msg}");
        assert!(msg.contains("ctc"), "{msg}");
    }

    #[test]
    fn tampered_magic_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = ParamStore::new();
        store
            .add("w", Tensor::zeros([2, 2]), ParamGroup::Head)
            .unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&path, &store, None, 5, 0).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'Z';
        std::fs::write(&path, &bytes).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("magic"));
    }
}
