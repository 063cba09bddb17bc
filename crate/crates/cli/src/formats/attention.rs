//! Attention-map dumps: one CSV per matrix, nine matrices for a full
//! three-source fusion pass (each source's self map plus its two cross
//! maps). Values carry 17 significant digits so a parse recovers them
//! within 1e-15; the header row lists key-frame indices.

use std::path::{Path, PathBuf};

use canta_core::fusion::AttentionMaps;
use canta_core::tensor::Tensor;

use crate::{CliError, CliResult};

/// Sources in fixed fusion order.
const SOURCES: [&str; 3] = ["audio", "video", "imu"];
const KINDS: [&str; 3] = ["self", "cross1", "cross2"];

fn matrix_csv(m: &Tensor) -> String {
    let mut out = String::new();
    for k in 0..m.cols() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&k.to_string());
    }
    out.push('\n');
    for r in 0..m.rows() {
        for k in 0..m.cols() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.16e}", m.at(r, k)));
        }
        out.push('\n');
    }
    out
}

/// Writes every populated map of a three-source fusion pass into `dir`
/// (created if absent) as `<source>_<kind>.csv`. Returns the paths
/// written, in fixed source-major order.
pub fn dump_attention(dir: &Path, maps: &[AttentionMaps; 3]) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (source, m) in SOURCES.iter().zip(maps) {
        let kinds = [m.self_attn.as_ref(), m.cross1.as_ref(), m.cross2.as_ref()];
        for (kind, tensor) in KINDS.iter().zip(kinds) {
            if let Some(t) = tensor {
                let path = dir.join(format!("{source}_{kind}.csv"));
                std::fs::write(&path, matrix_csv(t))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

/// Parses a dumped matrix back (header row skipped).
pub fn parse_attention_csv(path: &Path) -> CliResult<Tensor> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        let row = row.map_err(|e| {
            CliError::data(format!("{} line {}: {e}", path.display(), i + 1))
        })?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(CliError::data(format!(
                    "{} line {}: ragged row ({} vs {} columns)",
                    path.display(),
                    i + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::data(format!("{} holds no matrix rows", path.display())));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(Tensor::new(vec![r, c], rows.into_iter().flatten().collect())?)
}
