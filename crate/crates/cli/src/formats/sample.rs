//! Sample files and dataset manifests.
//!
//! A sample file is the magic `MMS1`, a length-prefixed UTF-8 metadata
//! document (key-value: id, transcript, rates, extents, split), then the
//! raw little-endian `f64` blocks in declared order: audio, video
//! (row-major), imu (row-major), and the optional noise track.
//!
//! The manifest is one key-value line per sample:
//! `id=<id> path=<relative> split=<split> duration_ms=<ms>`, ordered by id.

use std::path::Path;

use serde::{Deserialize, Serialize};

use canta_core::data::{MultimodalSample, Split};
use canta_core::encoder::{AudioWave, ImuStream, VideoFrames, IMU_RAW_CHANNELS};
use canta_core::tensor::Tensor;

use super::{push_f64s, push_metadata, take, take_f64s, take_metadata};
use crate::{CliError, CliResult};

const MAGIC: &[u8; 4] = b"MMS1";

/// Manifest file name inside a dataset directory.
pub const MANIFEST_NAME: &str = "manifest.txt";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleMeta {
    id: String,
    transcript: String,
    split: String,
    audio_rate: u32,
    video_rate: u32,
    imu_rate: u32,
    audio_len: usize,
    video_rows: usize,
    video_dim: usize,
    imu_rows: usize,
    noise_len: usize,
}

/// Serializes one sample to its file bytes.
fn sample_bytes(sample: &MultimodalSample) -> CliResult<Vec<u8>> {
    let meta = SampleMeta {
        id: sample.id.clone(),
        transcript: sample.transcript.clone(),
        split: sample.split.name().to_string(),
        audio_rate: sample.audio.sample_rate,
        video_rate: sample.video.frame_rate,
        imu_rate: sample.imu.sample_rate,
        audio_len: sample.audio.samples.len(),
        video_rows: sample.video.frames.rows(),
        video_dim: sample.video.frames.cols(),
        imu_rows: sample.imu.channels.rows(),
        noise_len: sample.noise.as_ref().map_or(0, |n| n.samples.len()),
    };
    let doc = toml::to_string(&meta)
        .map_err(|e| CliError::data(format!("cannot serialize sample metadata: {e}")))?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    push_metadata(&mut out, &doc)?;
    push_f64s(&mut out, &sample.audio.samples);
    push_f64s(&mut out, sample.video.frames.data());
    push_f64s(&mut out, sample.imu.channels.data());
    if let Some(noise) = &sample.noise {
        push_f64s(&mut out, &noise.samples);
    }
    Ok(out)
}

/// Writes one sample file.
pub fn save_sample(path: &Path, sample: &MultimodalSample) -> CliResult<()> {
    std::fs::write(path, sample_bytes(sample)?)?;
    Ok(())
}

/// Reads one sample file back, checking the synchronization contract.
pub fn load_sample(path: &Path) -> CliResult<MultimodalSample> {
    let bytes = std::fs::read(path)?;
    let mut rest = bytes.as_slice();
    let magic = take(&mut rest, 4, "magic")?;
    if magic != MAGIC {
        return Err(CliError::data(format!(
            "bad magic in {}: expected {MAGIC:?}, found {magic:?}",
            path.display()
        )));
    }
    let doc = take_metadata(&mut rest)?;
    let meta: SampleMeta = toml::from_str(&doc)
        .map_err(|e| CliError::data(format!("bad sample metadata in {}: {e}", path.display())))?;
    let split: Split = meta
        .split
        .parse()
        .map_err(|_| CliError::data(format!("unknown split {:?}", meta.split)))?;
    let audio = take_f64s(&mut rest, meta.audio_len, "audio block")?;
    let video = take_f64s(&mut rest, meta.video_rows * meta.video_dim, "video block")?;
    let imu = take_f64s(&mut rest, meta.imu_rows * IMU_RAW_CHANNELS, "imu block")?;
    let noise = if meta.noise_len > 0 {
        Some(AudioWave::new(
            take_f64s(&mut rest, meta.noise_len, "noise block")?,
            meta.audio_rate,
        )?)
    } else {
        None
    };
    if !rest.is_empty() {
        return Err(CliError::data(format!(
            "{} has {} trailing bytes after the declared blocks",
            path.display(),
            rest.len()
        )));
    }
    let sample = MultimodalSample {
        id: meta.id,
        audio: AudioWave::new(audio, meta.audio_rate)?,
        video: VideoFrames::new(
            Tensor::new(vec![meta.video_rows, meta.video_dim], video)?,
            meta.video_rate,
        )?,
        imu: ImuStream::new(
            Tensor::new(vec![meta.imu_rows, IMU_RAW_CHANNELS], imu)?,
            meta.imu_rate,
        )?,
        transcript: meta.transcript,
        noise,
        split,
    };
    sample.validate()?;
    Ok(sample)
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub path: String,
    pub split: Split,
    pub duration_ms: f64,
}

fn manifest_line(e: &ManifestEntry) -> String {
    format!(
        "id={} path={} split={} duration_ms={}\n",
        e.id,
        e.path,
        e.split.name(),
        e.duration_ms
    )
}

fn parse_manifest_line(line: &str, lineno: usize) -> CliResult<ManifestEntry> {
    let mut id = None;
    let mut path = None;
    let mut split = None;
    let mut duration = None;
    for token in line.split_whitespace() {
        let (key, value) = token.split_once('=').ok_or_else(|| {
            CliError::data(format!("manifest line {lineno}: token {token:?} is not key=value"))
        })?;
        match key {
            "id" => id = Some(value.to_string()),
            "path" => path = Some(value.to_string()),
            "split" => {
                split = Some(value.parse::<Split>().map_err(|_| {
                    CliError::data(format!("manifest line {lineno}: unknown split {value:?}"))
                })?);
            }
            "duration_ms" => {
                duration = Some(value.parse::<f64>().map_err(|_| {
                    CliError::data(format!(
                        "manifest line {lineno}: duration_ms {value:?} is not a number"
                    ))
                })?);
            }
            other => {
                return Err(CliError::data(format!(
                    "manifest line {lineno}: unknown key {other:?}"
                )));
            }
        }
    }
    match (id, path, split, duration) {
        (Some(id), Some(path), Some(split), Some(duration_ms)) => {
            Ok(ManifestEntry { id, path, split, duration_ms })
        }
        _ => Err(CliError::data(format!(
            "manifest line {lineno}: needs id, path, split, and duration_ms"
        ))),
    }
}

/// Writes every sample plus the manifest into `dir` (created if absent).
/// Sample files are named `<id>.mms`; the manifest is ordered by id.
pub fn save_dataset(dir: &Path, samples: &[MultimodalSample]) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    let mut entries: Vec<ManifestEntry> = Vec::with_capacity(samples.len());
    for s in samples {
        let file = format!("{}.mms", s.id);
        save_sample(&dir.join(&file), s)?;
        entries.push(ManifestEntry {
            id: s.id.clone(),
            path: file,
            split: s.split,
            duration_ms: s.duration_ms(),
        });
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    let mut manifest = String::new();
    for e in &entries {
        manifest.push_str(&manifest_line(e));
    }
    std::fs::write(dir.join(MANIFEST_NAME), manifest)?;
    Ok(())
}

/// Reads a dataset directory's manifest.
pub fn load_manifest(dir: &Path) -> CliResult<Vec<ManifestEntry>> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(|e| {
        CliError::data(format!("cannot read manifest {}: {e}", path.display()))
    })?;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        entries.push(parse_manifest_line(line, i + 1)?);
    }
    Ok(entries)
}

/// Loads every sample listed in the manifest, in manifest (id) order.
pub fn load_dataset(dir: &Path) -> CliResult<Vec<MultimodalSample>> {
    load_manifest(dir)?
        .iter()
        .map(|e| {
            let s = load_sample(&dir.join(&e.path))?;
            if s.id != e.id || s.split != e.split {
                return Err(CliError::data(format!(
                    "manifest entry {} disagrees with sample file {} ({}, {})",
                    e.id,
                    e.path,
                    s.id,
                    s.split.name()
                )));
            }
            Ok(s)
        })
        .collect()
}

/// Loads only one split, in manifest order.
pub fn load_split(dir: &Path, split: Split) -> CliResult<Vec<MultimodalSample>> {
    let mut out = Vec::new();
    for e in load_manifest(dir)? {
        if e.split == split {
            out.push(load_sample(&dir.join(&e.path))?);
        }
    }
    Ok(out)
}
