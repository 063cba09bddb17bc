//! Character vocabulary with blank / word-boundary / BOS / EOS bookkeeping.
//!
//! The transcription alphabet has 30 character targets — the 26 lowercase
//! letters, apostrophe, hyphen, and two reserved symbols (`#`, `@`) kept for
//! lexicon extensions — plus a word-boundary token standing in for spaces,
//! 31 tokens in all.
//!
//! Two blank conventions are supported:
//!
//! * **Default**: a dedicated CTC blank is appended after the 31 tokens
//!   (id 31), then BOS (32) and EOS (33). Spaces are ordinary targets.
//! * **Boundary-as-blank** (`boundary_as_blank()`): the word-boundary token
//!   itself serves as the CTC blank, so the table stays at 31 tokens with
//!   BOS/EOS appended after. Spaces cannot be transcribed in this mode —
//!   the collapse step deletes them — so encoded targets drop them. This
//!   mode exists to reproduce the literal reading of the collapse rule
//!   ("remove repeated tokens and word boundary tokens") for comparison.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Character targets in id order (ids 0..=29); boundary takes id 30.
const CHARS: [char; 30] = [
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r',
    's', 't', 'u', 'v', 'w', 'x', 'y', 'z', '\'', '-', '#', '@',
];

/// Number of character targets (excluding the word boundary).
pub const N_CHAR_TARGETS: usize = 30;

/// Token count including the word boundary.
pub const N_TOKENS: usize = 31;

/// Token inventory and special-id layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    boundary_as_blank: bool,
}

impl Vocabulary {
    /// Default layout: dedicated blank appended beyond the 31 tokens.
    pub fn new() -> Self {
        Vocabulary { boundary_as_blank: false }
    }

    /// Alternate layout where the word-boundary token doubles as the blank.
    pub fn boundary_as_blank() -> Self {
        Vocabulary { boundary_as_blank: true }
    }

    /// True when the word boundary doubles as the CTC blank.
    pub fn is_boundary_blank(&self) -> bool {
        self.boundary_as_blank
    }

    /// Word-boundary token id (always 30).
    pub fn boundary_id(&self) -> usize {
        N_TOKENS - 1
    }

    /// CTC blank id.
    pub fn blank_id(&self) -> usize {
        if self.boundary_as_blank {
            self.boundary_id()
        } else {
            N_TOKENS
        }
    }

    /// Beginning-of-sequence id (S2S input only).
    pub fn bos_id(&self) -> usize {
        if self.boundary_as_blank {
            N_TOKENS
        } else {
            N_TOKENS + 1
        }
    }

    /// End-of-sequence id (S2S output only).
    pub fn eos_id(&self) -> usize {
        self.bos_id() + 1
    }

    /// Total id-table size (tokens + specials).
    pub fn size(&self) -> usize {
        self.eos_id() + 1
    }

    /// Width of the CTC output distribution (tokens + blank; the blank is
    /// shared with the boundary in boundary-as-blank mode).
    pub fn ctc_dim(&self) -> usize {
        if self.boundary_as_blank {
            N_TOKENS
        } else {
            N_TOKENS + 1
        }
    }

    /// Token ids that may appear in a target transcript, dense from 0.
    pub fn n_target_tokens(&self) -> usize {
        if self.boundary_as_blank {
            N_CHAR_TARGETS
        } else {
            N_TOKENS
        }
    }

    /// Character for a token id (boundary renders as a space).
    pub fn token_char(&self, id: usize) -> Result<char> {
        if id < N_CHAR_TARGETS {
            Ok(CHARS[id])
        } else if id == self.boundary_id() {
            Ok(' ')
        } else {
            Err(Error::Vocab(format!("id {id} is not a text token")))
        }
    }

    /// Token id for a character (space maps to the boundary).
    pub fn char_token(&self, c: char) -> Result<u16> {
        if c == ' ' {
            return Ok(self.boundary_id() as u16);
        }
        CHARS
            .iter()
            .position(|&t| t == c)
            .map(|i| i as u16)
            .ok_or_else(|| Error::Vocab(format!("character {c:?} is not in the vocabulary")))
    }

    /// Encodes text into target token ids.
    ///
    /// Uppercase folds to lowercase; whitespace runs become one boundary
    /// token (dropped entirely in boundary-as-blank mode, where the
    /// boundary is the blank and cannot be a target); leading/trailing
    /// whitespace is ignored; any other unknown character is an error.
    pub fn encode(&self, text: &str) -> Result<Vec<u16>> {
        let mut ids = Vec::new();
        let mut pending_boundary = false;
        for c in text.chars() {
            if c.is_whitespace() {
                pending_boundary = !ids.is_empty();
                continue;
            }
            let folded = if c.is_ascii_uppercase() { c.to_ascii_lowercase() } else { c };
            let id = self.char_token(folded)?;
            if pending_boundary && !self.boundary_as_blank {
                ids.push(self.boundary_id() as u16);
            }
            pending_boundary = false;
            ids.push(id);
        }
        Ok(ids)
    }

    /// Decodes target token ids back to text.
    pub fn decode(&self, ids: &[u16]) -> Result<String> {
        let mut s = String::with_capacity(ids.len());
        for &id in ids {
            s.push(self.token_char(id as usize)?);
        }
        Ok(s)
    }

    /// Validates that a sequence contains only target-token ids.
    pub fn check_target(&self, ids: &[u16]) -> Result<()> {
        for &id in ids {
            if (id as usize) >= self.n_target_tokens() {
                return Err(Error::Vocab(format!(
                    "id {id} is not a valid target token (limit {})",
                    self.n_target_tokens()
                )));
            }
        }
        Ok(())
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::new()
    }
}
