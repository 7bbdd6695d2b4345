use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::{TranslationTable, NULL_TOKEN};
use crate::ingest::io::{read_to_string, write_file};
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.1;
/// Weight substituted for word pairs missing from the dictionary.
pub const NULL_WEIGHT: f64 = 1e-9;

/// Weighted bilingual lexicon keyed by source word, then target word.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dictionary {
    entries: HashMap<String, BTreeMap<String, f64>>,
    pub threshold: f64,
    pub null_weight: f64,
}

impl Dictionary {
    pub fn new(threshold: f64) -> Self {
        Self {
            entries: HashMap::new(),
            threshold,
            null_weight: NULL_WEIGHT,
        }
    }

    /// Inserts an entry; weights at or below the threshold are ignored.
    pub fn insert(&mut self, src: &str, tgt: &str, weight: f64) {
        if weight > self.threshold {
            self.entries
                .entry(src.to_string())
                .or_default()
                .insert(tgt.to_string(), weight);
        }
    }

    pub fn get(&self, src: &str, tgt: &str) -> Option<f64> {
        self.entries.get(src).and_then(|r| r.get(tgt)).copied()
    }

    /// Entry weight, or the null weight for missing pairs.
    pub fn weight(&self, src: &str, tgt: &str) -> f64 {
        self.get(src, tgt).unwrap_or(self.null_weight)
    }

    /// All translations of `src`, ordered by target word.
    pub fn row(&self, src: &str) -> Option<&BTreeMap<String, f64>> {
        self.entries.get(src)
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by source word, then descending weight, then target.
    pub fn sorted_entries(&self) -> Vec<(&str, &str, f64)> {
        let mut v: Vec<(&str, &str, f64)> = self
            .entries
            .iter()
            .flat_map(|(s, row)| row.iter().map(move |(t, &w)| (s.as_str(), t.as_str(), w)))
            .collect();
        v.sort_by(|a, b| a.0.cmp(b.0).then(b.2.total_cmp(&a.2)).then(a.1.cmp(b.1)));
        v
    }

    /// The same entries with source and target swapped.
    pub fn transposed(&self) -> Self {
        let mut d = Dictionary {
            entries: HashMap::new(),
            threshold: self.threshold,
            null_weight: self.null_weight,
        };
        for (s, t, w) in self.sorted_entries() {
            d.insert(t, s, w);
        }
        d
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (s, t, w) in self.sorted_entries() {
            out.push_str(&format!("{s}\t{t}\t{w}\n"));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_tsv().as_bytes())
    }

    /// Loads a `source \t target \t weight` file; every weight must lie in
    /// `(threshold, 1]`.
    pub fn load(path: &Path, threshold: f64) -> Result<Self> {
        Self::from_tsv(&read_to_string(path)?, &path.display().to_string(), threshold)
    }

    pub fn from_tsv(text: &str, origin: &str, threshold: f64) -> Result<Self> {
        let mut d = Dictionary::new(threshold);
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| Error::parse(origin, i + 1, m);
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(err("expected `source<TAB>target<TAB>weight`"));
            }
            let w: f64 = f[2].parse().map_err(|_| err("weight is not a number"))?;
            if !(w > 0.0 && w <= 1.0) {
                return Err(err("weight outside (0, 1]"));
            }
            if w <= threshold {
                return Err(err("weight not above the dictionary threshold"));
            }
            d.insert(f[0], f[1], w);
        }
        Ok(d)
    }
}

/// Harmonic mean of the two directional translation probabilities for every
/// word pair seen in both tables; pairs at or below `threshold` are dropped.
///
/// Entries are keyed by `fwd`'s conditioning word, so passing the tables in
/// the other order yields the transposed dictionary.
pub fn build_dictionary(fwd: &TranslationTable, rev: &TranslationTable, threshold: f64) -> Dictionary {
    let mut d = Dictionary::new(threshold);
    for (x, y, p) in fwd.entries() {
        if x == NULL_TOKEN || p <= 0.0 {
            continue;
        }
        let q = rev.prob(y, x);
        if q <= 0.0 {
            continue;
        }
        d.insert(x, y, 2.0 * p * q / (p + q));
    }
    d
}
