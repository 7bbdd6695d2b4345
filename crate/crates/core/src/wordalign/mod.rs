//! Word alignment and bilingual dictionary induction.
//!
//! IBM Model 1 is trained in both directions on the cleaned seed corpus. The
//! Viterbi alignments of the two directions are merged by set union, and the
//! dictionary keeps word pairs whose harmonic mean of the two translation
//! probabilities exceeds a threshold.

mod align;
mod dictionary;
mod ibm1;

use std::collections::HashMap;

pub use align::{symmetrize_union, viterbi_align, Alignment};
pub use dictionary::{build_dictionary, Dictionary, DEFAULT_THRESHOLD, NULL_WEIGHT};
pub use ibm1::{corpus_log_likelihood, train_ibm1, train_ibm1_with_report, TranslationTable, DEFAULT_ITERATIONS};

/// The token prepended to the conditioning side of every sentence.
pub const NULL_TOKEN: &str = "<NULL>";

/// Which side of a [`SeedPair`](crate::ingest::SeedPair) is conditioned on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Direction {
    /// `t(target_word | source_word)`
    SourceToTarget,
    /// `t(source_word | target_word)`
    TargetToSource,
}

impl Direction {
    pub fn reversed(self) -> Self {
        match self {
            Direction::SourceToTarget => Direction::TargetToSource,
            Direction::TargetToSource => Direction::SourceToTarget,
        }
    }

    /// (conditioning side, predicted side) of a pair in this direction.
    pub(crate) fn sides(self, pair: &crate::ingest::SeedPair) -> (&[String], &[String]) {
        match self {
            Direction::SourceToTarget => (&pair.src, &pair.tgt),
            Direction::TargetToSource => (&pair.tgt, &pair.src),
        }
    }
}

/// Interned words in first-seen order.
#[derive(Clone, Debug, Default)]
pub struct Vocab {
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocab {
    pub fn intern(&mut self, w: &str) -> u32 {
        if let Some(&id) = self.ids.get(w) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(w.to_string());
        self.ids.insert(w.to_string(), id);
        id
    }

    pub fn id(&self, w: &str) -> Option<u32> {
        self.ids.get(w).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}
