//! Rescoring of retrieved candidates by length ratio and lexical
//! translation weights.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::ingest::io::{read_to_string, write_file};
use crate::ingest::SeedPair;
use crate::text_length;
use crate::wordalign::Dictionary;
use crate::{Error, Result};

pub const SIGMA_FLOOR: f64 = 1e-6;

/// Gaussian model of the target/source length ratio in characters.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LengthModel {
    pub mu: f64,
    pub sigma: f64,
}

impl LengthModel {
    pub fn fit(pairs: &[SeedPair]) -> Result<Self> {
        let ratios: Vec<f64> = pairs
            .iter()
            .filter_map(|p| {
                let s = text_length(&p.src);
                (s > 0).then(|| text_length(&p.tgt) as f64 / s as f64)
            })
            .collect();
        if ratios.is_empty() {
            return Err(Error::invalid("no pair with a non-empty source to fit the length model"));
        }
        let n = ratios.len() as f64;
        let mu = ratios.iter().sum::<f64>() / n;
        let sigma = if ratios.len() == 1 {
            log::warn!("length model fitted on a single pair; sigma set to {SIGMA_FLOOR}");
            SIGMA_FLOOR
        } else {
            (ratios.iter().map(|r| (r - mu).powi(2)).sum::<f64>() / (n - 1.0))
                .sqrt()
                .max(SIGMA_FLOOR)
        };
        Ok(Self { mu, sigma })
    }

    pub fn log_length_similarity(&self, d_len: usize, c_len: usize) -> f64 {
        if d_len == 0 {
            return f64::NEG_INFINITY;
        }
        self.log_ratio_similarity(c_len as f64 / d_len as f64)
    }

    fn log_ratio_similarity(&self, r: f64) -> f64 {
        -(r - self.mu).powi(2) / (2.0 * self.sigma * self.sigma)
    }

    /// `exp(-(len(c)/len(d) - mu)^2 / (2 sigma^2))`, and 0 for an empty `d`.
    pub fn length_similarity(&self, d_len: usize, c_len: usize) -> f64 {
        self.log_length_similarity(d_len, c_len).exp()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("plain struct serializes");
        write_file(path, json.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::format("length model", e.to_string()))?;
        if !(m.sigma > 0.0 && m.mu.is_finite()) {
            return Err(Error::format("length model", "sigma must be positive and mu finite"));
        }
        Ok(m)
    }
}

/// `ln ∏_i Σ_j w(d_i, c_j) / m`, with the dictionary's null weight standing
/// in for missing entries. Empty documents give `-inf`.
pub fn log_weight_similarity<S: AsRef<str>>(d: &[S], c: &[S], dict: &Dictionary) -> f64 {
    if d.is_empty() || c.is_empty() {
        return f64::NEG_INFINITY;
    }
    let m = c.len() as f64;
    let mut c_counts: HashMap<&str, usize> = HashMap::new();
    for t in c {
        *c_counts.entry(t.as_ref()).or_default() += 1;
    }
    let mut d_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in d {
        *d_counts.entry(t.as_ref()).or_default() += 1;
    }
    let mut log = 0.0;
    for (w, count) in d_counts {
        let mut covered = 0usize;
        let mut sum = 0.0;
        if let Some(row) = dict.row(w) {
            for (t, weight) in row {
                if let Some(&k) = c_counts.get(t.as_str()) {
                    sum += weight * k as f64;
                    covered += k;
                }
            }
        }
        sum += dict.null_weight * (c.len() - covered) as f64;
        log += count as f64 * (sum / m).ln();
    }
    log
}

pub fn weight_similarity<S: AsRef<str>>(d: &[S], c: &[S], dict: &Dictionary) -> f64 {
    log_weight_similarity(d, c, dict).exp()
}

/// Natural log of `length_similarity(d, c) * weight_similarity(d, c)`.
pub fn log_score<S: AsRef<str>>(d: &[S], c: &[S], length: &LengthModel, dict: &Dictionary) -> f64 {
    length.log_length_similarity(text_length(d), text_length(c)) + log_weight_similarity(d, c, dict)
}

pub fn score<S: AsRef<str>>(d: &[S], c: &[S], length: &LengthModel, dict: &Dictionary) -> f64 {
    log_score(d, c, length, dict).exp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub target_doc_id: String,
    /// Angular distance reported by the index.
    pub distance: f64,
    /// Log score once rescored.
    pub score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateList {
    pub source_doc_id: String,
    pub candidates: Vec<Candidate>,
}

impl CandidateList {
    pub fn top(&self) -> Option<&Candidate> {
        self.candidates.first()
    }
}

/// Scores every candidate with `log_score` and sorts by descending score;
/// equal scores keep their retrieval order.
pub fn rescore_candidates(prelim: &CandidateList, mut log_score: impl FnMut(&str) -> f64) -> CandidateList {
    let mut candidates: Vec<Candidate> = prelim
        .candidates
        .iter()
        .map(|c| Candidate {
            score: Some(log_score(&c.target_doc_id)),
            ..c.clone()
        })
        .collect();
    candidates.sort_by(|a, b| {
        let (a, b) = (a.score.unwrap_or(f64::NEG_INFINITY), b.score.unwrap_or(f64::NEG_INFINITY));
        b.total_cmp(&a)
    });
    CandidateList {
        source_doc_id: prelim.source_doc_id.clone(),
        candidates,
    }
}
