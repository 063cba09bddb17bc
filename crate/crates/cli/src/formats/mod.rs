//! On-disk formats: sample files and manifests, checkpoints, attention
//! dumps, and the metrics/transcript reports. Everything is little-endian
//! and plain UTF-8 with `\n` line endings, so files move across platforms
//! bit-identically.

mod attention;
mod checkpoint;
mod reports;
mod sample;

pub use attention::{dump_attention, parse_attention_csv};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointFile};
pub use reports::{format_metrics_csv, write_text, MetricsRow};
pub use sample::{
    load_dataset, load_manifest, load_sample, load_split, save_dataset, save_sample,
    ManifestEntry, MANIFEST_NAME,
};

use crate::{CliError, CliResult};

/// Reads `n` bytes or reports which field was truncated.
fn take<'a>(bytes: &mut &'a [u8], n: usize, field: &str) -> CliResult<&'a [u8]> {
    if bytes.len() < n {
        return Err(CliError::data(format!(
            "truncated file: {field} needs {n} bytes, {} left",
            bytes.len()
        )));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

fn take_u32(bytes: &mut &[u8], field: &str) -> CliResult<u32> {
    let b = take(bytes, 4, field)?;
    Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

fn take_f64s(bytes: &mut &[u8], n: usize, field: &str) -> CliResult<Vec<f64>> {
    let b = take(bytes, n * 8, field)?;
    Ok(b.chunks_exact(8)
        .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
        .collect())
}

fn push_f64s(out: &mut Vec<u8>, values: &[f64]) {
    out.reserve(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Writes a length-prefixed UTF-8 metadata document.
fn push_metadata(out: &mut Vec<u8>, doc: &str) -> CliResult<()> {
    let len = u32::try_from(doc.len())
        .map_err(|_| CliError::data("metadata document exceeds 4 GiB"))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(doc.as_bytes());
    Ok(())
}

/// Reads a length-prefixed UTF-8 metadata document.
fn take_metadata(bytes: &mut &[u8]) -> CliResult<String> {
    let len = take_u32(bytes, "metadata length")? as usize;
    let doc = take(bytes, len, "metadata document")?;
    String::from_utf8(doc.to_vec())
        .map_err(|_| CliError::data("metadata document is not valid UTF-8"))
}
