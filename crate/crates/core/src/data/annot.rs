//! Annotated transcript grammar for pronunciation errors.
//!
//! Singers deviate from the written lyric; the annotation records both what
//! was sung and what was intended, word by word:
//!
//! * `/word/` — mispronounced but recognizable: the word stands in both
//!   sequences, flagged.
//! * `sung [intended]` — substitution: the singer's word, with the lyric's
//!   word in square brackets right after it.
//! * `{word}` — insertion: sung but absent from the lyric.
//! * `(word)` — deletion: in the lyric but never sung.
//!
//! Unmarked words belong to both sequences. Markers cannot nest; malformed
//! input is rejected with the offending word position.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Kind of pronunciation error a marker records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Mispronunciation,
    Substitution,
    Insertion,
    Deletion,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Mispronunciation => "mispronunciation",
            ErrorKind::Substitution => "substitution",
            ErrorKind::Insertion => "insertion",
            ErrorKind::Deletion => "deletion",
        }
    }
}

/// One recorded deviation, with the words on each side where they exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorRecord {
    pub kind: ErrorKind,
    /// What was sung (absent for deletions).
    pub sung: Option<String>,
    /// What the lyric says (absent for insertions).
    pub intended: Option<String>,
    /// Zero-based index of the item in the annotated word stream.
    pub position: usize,
}

/// One word-level item of the annotated stream, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnotItem {
    Plain(String),
    Mispronounced(String),
    Substitution { sung: String, intended: String },
    Insertion(String),
    Deletion(String),
}

/// A parsed annotation: the item stream plus the derived views.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedTranscript {
    /// Normalized annotated text (single spaces between items).
    pub raw: String,
    pub items: Vec<AnnotItem>,
    /// The words actually sung.
    pub sung: Vec<String>,
    /// The words the lyric intends.
    pub intended: Vec<String>,
    pub errors: Vec<ErrorRecord>,
}

fn marker_free(word: &str, position: usize) -> Result<()> {
    if word.is_empty() {
        return Err(Error::Parse(format!("empty word inside a marker at word {position}")));
    }
    if word.contains(['/', '[', ']', '{', '}', '(', ')']) {
        return Err(Error::Parse(format!(
            "nested or unbalanced marker in {word:?} at word {position}"
        )));
    }
    Ok(())
}

/// Strips `open …​ close` from a token known to start with `open`.
fn unwrap_marker(token: &str, open: char, close: char, position: usize) -> Result<String> {
    let inner = token.strip_prefix(open).expect("caller checked the prefix");
    let inner = inner.strip_suffix(close).ok_or_else(|| {
        Error::Parse(format!("{token:?} at word {position} never closes {open:?}"))
    })?;
    marker_free(inner, position)?;
    Ok(inner.to_string())
}

/// Parses an annotated transcript into its item stream and derived
/// sung/intended sequences.
pub fn parse_annotation(text: &str) -> Result<AnnotatedTranscript> {
    let mut items = Vec::new();
    for (position, token) in text.split_whitespace().enumerate() {
        if token.starts_with('/') {
            let word = unwrap_marker(token, '/', '/', position)?;
            items.push(AnnotItem::Mispronounced(word));
        } else if token.starts_with('{') {
            let word = unwrap_marker(token, '{', '}', position)?;
            items.push(AnnotItem::Insertion(word));
        } else if token.starts_with('(') {
            let word = unwrap_marker(token, '(', ')', position)?;
            items.push(AnnotItem::Deletion(word));
        } else if token.starts_with('[') {
            let intended = unwrap_marker(token, '[', ']', position)?;
            // The bracket names what the previous sung word substitutes.
            match items.pop() {
                Some(AnnotItem::Plain(sung)) => {
                    items.push(AnnotItem::Substitution { sung, intended });
                }
                _ => {
                    return Err(Error::Parse(format!(
                        "[{intended}] at word {position} does not follow a plain sung word"
                    )));
                }
            }
        } else {
            marker_free(token, position)?;
            items.push(AnnotItem::Plain(token.to_string()));
        }
    }
    Ok(from_items(items))
}

/// Builds the derived views of an item stream.
pub fn from_items(items: Vec<AnnotItem>) -> AnnotatedTranscript {
    let mut sung = Vec::new();
    let mut intended = Vec::new();
    let mut errors = Vec::new();
    for (position, item) in items.iter().enumerate() {
        match item {
            AnnotItem::Plain(w) => {
                sung.push(w.clone());
                intended.push(w.clone());
            }
            AnnotItem::Mispronounced(w) => {
                sung.push(w.clone());
                intended.push(w.clone());
                errors.push(ErrorRecord {
                    kind: ErrorKind::Mispronunciation,
                    sung: Some(w.clone()),
                    intended: Some(w.clone()),
                    position,
                });
            }
            AnnotItem::Substitution { sung: s, intended: i } => {
                sung.push(s.clone());
                intended.push(i.clone());
                errors.push(ErrorRecord {
                    kind: ErrorKind::Substitution,
                    sung: Some(s.clone()),
                    intended: Some(i.clone()),
                    position,
                });
            }
            AnnotItem::Insertion(w) => {
                sung.push(w.clone());
                errors.push(ErrorRecord {
                    kind: ErrorKind::Insertion,
                    sung: Some(w.clone()),
                    intended: None,
                    position,
                });
            }
            AnnotItem::Deletion(w) => {
                intended.push(w.clone());
                errors.push(ErrorRecord {
                    kind: ErrorKind::Deletion,
                    sung: None,
                    intended: Some(w.clone()),
                    position,
                });
            }
        }
    }
    let raw = render_items(&items);
    AnnotatedTranscript { raw, items, sung, intended, errors }
}

fn render_items(items: &[AnnotItem]) -> String {
    let mut out = String::new();
    for item in items {
        if !out.is_empty() {
            out.push(' ');
        }
        match item {
            AnnotItem::Plain(w) => out.push_str(w),
            AnnotItem::Mispronounced(w) => {
                out.push('/');
                out.push_str(w);
                out.push('/');
            }
            AnnotItem::Substitution { sung, intended } => {
                out.push_str(sung);
                out.push_str(" [");
                out.push_str(intended);
                out.push(']');
            }
            AnnotItem::Insertion(w) => {
                out.push('{');
                out.push_str(w);
                out.push('}');
            }
            AnnotItem::Deletion(w) => {
                out.push('(');
                out.push_str(w);
                out.push(')');
            }
        }
    }
    out
}

/// Pretty-prints an annotation; `parse_annotation` inverts it exactly.
pub fn render_annotation(a: &AnnotatedTranscript) -> String {
    render_items(&a.items)
}
