//! Rank-order character trigram language identification (out-of-place
//! distance between frequency-ranked trigram profiles).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::DEFAULT_MIN_PARAGRAPH_CHARS;

pub const DEFAULT_PROFILE_SIZE: usize = 300;

/// Trigram counts of `text`. Non-letters act as word separators and every
/// word is padded with one space on each side.
fn trigram_counts(text: &str, counts: &mut HashMap<String, u64>) {
    let lowered = text.to_lowercase();
    for word in lowered.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty()) {
        let padded: Vec<char> = std::iter::once(' ')
            .chain(word.chars())
            .chain(std::iter::once(' '))
            .collect();
        for w in padded.windows(3) {
            *counts.entry(w.iter().collect()).or_insert(0) += 1;
        }
    }
}

/// The `size` most frequent trigrams, most frequent first (ties broken
/// lexicographically).
fn ranked(counts: HashMap<String, u64>, size: usize) -> Vec<String> {
    let mut v: Vec<(String, u64)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(size);
    v.into_iter().map(|(g, _)| g).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigramProfile {
    pub lang: String,
    /// Trigrams ordered by descending frequency.
    pub trigrams: Vec<String>,
    #[serde(skip)]
    ranks: HashMap<String, usize>,
}

impl TrigramProfile {
    pub fn train<'a>(lang: impl Into<String>, texts: impl IntoIterator<Item = &'a str>, size: usize) -> Self {
        let mut counts = HashMap::new();
        for t in texts {
            trigram_counts(t, &mut counts);
        }
        Self::from_ranked(lang, ranked(counts, size))
    }

    pub fn from_ranked(lang: impl Into<String>, trigrams: Vec<String>) -> Self {
        let ranks = trigrams.iter().enumerate().map(|(i, g)| (g.clone(), i)).collect();
        Self {
            lang: lang.into(),
            trigrams,
            ranks,
        }
    }

    /// Out-of-place distance from a ranked document profile; trigrams missing
    /// from this profile cost the profile size.
    fn distance(&self, doc: &[String]) -> usize {
        let max = self.trigrams.len();
        doc.iter()
            .enumerate()
            .map(|(i, g)| self.ranks.get(g).map_or(max, |&r| r.abs_diff(i)))
            .sum()
    }

    fn rebuild_ranks(&mut self) {
        self.ranks = self.trigrams.iter().enumerate().map(|(i, g)| (g.clone(), i)).collect();
    }
}

/// Picks the closest profile, or `None` for texts shorter than `min_chars`
/// characters or without any letter.
pub fn detect_language<'a>(text: &str, profiles: &'a [TrigramProfile], min_chars: usize) -> Option<&'a str> {
    if text.chars().count() < min_chars || profiles.is_empty() {
        return None;
    }
    let size = profiles.iter().map(|p| p.trigrams.len()).max().unwrap_or(0);
    let mut counts = HashMap::new();
    trigram_counts(text, &mut counts);
    if counts.is_empty() {
        return None;
    }
    let doc = ranked(counts, size);
    profiles
        .iter()
        .min_by_key(|p| p.distance(&doc))
        .map(|p| p.lang.as_str())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanguageDetector {
    pub profiles: Vec<TrigramProfile>,
    pub min_chars: usize,
}

impl LanguageDetector {
    pub fn new(profiles: Vec<TrigramProfile>) -> Self {
        Self {
            profiles,
            min_chars: DEFAULT_MIN_PARAGRAPH_CHARS,
        }
    }

    pub fn detect(&self, text: &str) -> Option<&str> {
        detect_language(text, &self.profiles, self.min_chars)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profiles serialize")
    }

    pub fn from_json(s: &str) -> crate::Result<Self> {
        let mut d: Self = serde_json::from_str(s).map_err(|e| crate::Error::format("language profiles", e.to_string()))?;
        d.profiles.iter_mut().for_each(TrigramProfile::rebuild_ranks);
        Ok(d)
    }
}
