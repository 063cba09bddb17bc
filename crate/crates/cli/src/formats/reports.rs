//! Evaluation reports: the metrics CSV (one row per interference level
//! and modality subset, mirroring the evaluation grid) and small text
//! artifacts. Numbers are printed in shortest round-trip form.

use std::path::Path;

use crate::CliResult;

/// One metrics row. `snr` is a level label: a dB value's shortest
/// round-trip form, `clean`, or `average`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub snr: String,
    pub modalities: String,
    pub wer: f64,
    pub cer: f64,
    pub n_utts: usize,
}

impl MetricsRow {
    /// Label for a numeric level.
    pub fn db_label(db: f64) -> String {
        format!("{db}")
    }
}

/// Renders the metrics CSV: a fixed header then one line per row.
pub fn format_metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from("snr_db,modalities,wer,cer,n_utts\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.snr, r.modalities, r.wer, r.cer, r.n_utts
        ));
    }
    out
}

/// Writes a UTF-8 text artifact, creating parent directories as needed.
pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}
