//! Transcription error rates and voicing-detection classification metrics.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Default probability threshold for turning voicing scores into labels.
pub const DEFAULT_VAD_THRESHOLD: f64 = 0.5;

/// One step of an edit alignment between a reference and a hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    /// Tokens agree; consumes one of each.
    Match,
    /// Hypothesis token replaces the reference token.
    Substitute,
    /// Reference token missing from the hypothesis.
    Delete,
    /// Extra hypothesis token.
    Insert,
}

/// Minimal-cost alignment between two token sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditAlignment {
    pub matches: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    /// Alignment steps in reading order.
    pub ops: Vec<EditOp>,
}

impl EditAlignment {
    /// Total edit distance under unit costs.
    pub fn distance(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Tokenization unit for error rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorUnit {
    Word,
    Char,
}

/// Word or character error rate with its confusion breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct WerReport {
    /// Percent, `100·(S+D+I)/N`; may exceed 100.
    pub wer: f64,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    /// Reference length in tokens.
    pub n_ref: usize,
    /// Alignment steps; empty for corpus-level aggregates.
    pub ops: Vec<EditOp>,
}

/// Frame-level voicing classification report (all rates in percent).
#[derive(Debug, Clone, PartialEq)]
pub struct VadReport {
    pub accuracy: f64,
    /// Positive-class F1.
    pub f1: f64,
    /// Mean of per-class F1, an absent class scoring 0.
    pub macro_f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

/// Aligns `hypothesis` to `reference` under unit edit costs. Ties are broken
/// toward match, then substitution, then deletion, then insertion, so the
/// returned op sequence is deterministic.
pub fn edit_align<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> EditAlignment {
    let n = reference.len();
    let m = hypothesis.len();
    // dp[i][j] = distance between reference[..i] and hypothesis[..j].
    let mut dp = Vec::with_capacity(n + 1);
    let mut first = Vec::with_capacity(m + 1);
    for j in 0..=m {
        first.push(j);
    }
    dp.push(first);
    for i in 1..=n {
        let mut row = Vec::with_capacity(m + 1);
        row.push(i);
        for j in 1..=m {
            let diag = dp[i - 1][j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            let up = dp[i - 1][j] + 1;
            let left = row[j - 1] + 1;
            row.push(diag.min(up).min(left));
        }
        dp.push(row);
    }
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let cost = dp[i][j];
        if i > 0 && j > 0 && reference[i - 1] == hypothesis[j - 1] && dp[i - 1][j - 1] == cost {
            ops.push(EditOp::Match);
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && dp[i - 1][j - 1] + 1 == cost {
            ops.push(EditOp::Substitute);
            i -= 1;
            j -= 1;
        } else if i > 0 && dp[i - 1][j] + 1 == cost {
            ops.push(EditOp::Delete);
            i -= 1;
        } else {
            ops.push(EditOp::Insert);
            j -= 1;
        }
    }
    ops.reverse();
    let mut out = EditAlignment {
        matches: 0,
        substitutions: 0,
        deletions: 0,
        insertions: 0,
        ops,
    };
    for op in &out.ops {
        match op {
            EditOp::Match => out.matches += 1,
            EditOp::Substitute => out.substitutions += 1,
            EditOp::Delete => out.deletions += 1,
            EditOp::Insert => out.insertions += 1,
        }
    }
    out
}

/// Folds case, drops characters outside the transcription alphabet, and
/// collapses whitespace runs to single spaces.
pub fn normalize_text(text: &str) -> String {
    let mut kept = String::with_capacity(text.len());
    for c in text.chars() {
        let c = if c.is_ascii_uppercase() { c.to_ascii_lowercase() } else { c };
        if c.is_whitespace() {
            kept.push(' ');
        } else if c.is_ascii_lowercase() || matches!(c, '\'' | '-' | '#' | '@') {
            kept.push(c);
        }
    }
    let words: Vec<&str> = kept.split_whitespace().collect();
    words.join(" ")
}

fn tokenize(normalized: &str, unit: ErrorUnit) -> Vec<String> {
    match unit {
        ErrorUnit::Word => normalized.split_whitespace().map(String::from).collect(),
        // Word boundaries count as characters of their own.
        ErrorUnit::Char => normalized.chars().map(String::from).collect(),
    }
}

/// Word or character error rate of `hypothesis` against `reference`, after
/// [`normalize_text`] on both sides.
pub fn wer(reference: &str, hypothesis: &str, unit: ErrorUnit) -> Result<WerReport> {
    let ref_tokens = tokenize(&normalize_text(reference), unit);
    let hyp_tokens = tokenize(&normalize_text(hypothesis), unit);
    if ref_tokens.is_empty() {
        return Err(Error::Degenerate(
            "reference is empty after normalization; error rate undefined".into(),
        ));
    }
    let align = edit_align(&ref_tokens, &hyp_tokens);
    Ok(WerReport {
        wer: 100.0 * align.distance() as f64 / ref_tokens.len() as f64,
        substitutions: align.substitutions,
        deletions: align.deletions,
        insertions: align.insertions,
        n_ref: ref_tokens.len(),
        ops: align.ops,
    })
}

/// Corpus-level error rate: sums confusion counts over utterance pairs
/// (in the order given) before forming the percentage.
pub fn corpus_wer<'a, I>(pairs: I, unit: ErrorUnit) -> Result<WerReport>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut total = WerReport {
        wer: 0.0,
        substitutions: 0,
        deletions: 0,
        insertions: 0,
        n_ref: 0,
        ops: Vec::new(),
    };
    for (reference, hypothesis) in pairs {
        let one = wer(reference, hypothesis, unit)?;
        total.substitutions += one.substitutions;
        total.deletions += one.deletions;
        total.insertions += one.insertions;
        total.n_ref += one.n_ref;
    }
    if total.n_ref == 0 {
        return Err(Error::Degenerate("no reference tokens; error rate undefined".into()));
    }
    total.wer = 100.0 * (total.substitutions + total.deletions + total.insertions) as f64
        / total.n_ref as f64;
    Ok(total)
}

fn f1_percent(tp: usize, fp: usize, fne: usize) -> f64 {
    let denom = 2 * tp + fp + fne;
    if denom == 0 {
        0.0
    } else {
        100.0 * 2.0 * tp as f64 / denom as f64
    }
}

/// Frame classification metrics for voicing probabilities against binary
/// labels; a frame is predicted voiced when its probability exceeds
/// `threshold`.
pub fn vad_metrics(labels: &[u8], probs: &[f64], threshold: f64) -> Result<VadReport> {
    if labels.len() != probs.len() {
        return Err(Error::shape(format!(
            "{} labels vs {} probabilities",
            labels.len(),
            probs.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Degenerate("no frames to score".into()));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::config(format!("labels must be binary, found {bad}")));
    }
    let (mut tp, mut fp, mut tn, mut fne) = (0usize, 0usize, 0usize, 0usize);
    for (&label, &prob) in labels.iter().zip(probs) {
        let pred = prob > threshold;
        match (label == 1, pred) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fne += 1,
        }
    }
    let total = labels.len() as f64;
    let f1_pos = f1_percent(tp, fp, fne);
    // The negative class's F1 swaps the roles of the confusion cells.
    let f1_neg = f1_percent(tn, fne, fp);
    Ok(VadReport {
        accuracy: 100.0 * (tp + tn) as f64 / total,
        f1: f1_pos,
        macro_f1: 0.5 * (f1_pos + f1_neg),
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fne,
    })
}
