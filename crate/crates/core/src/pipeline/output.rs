//! TSV formats of alignment results and gold pairings. Fields are escaped
//! like every other TSV in the crate; floats are written round-trip exact.

use std::fmt::Write as _;
use std::path::Path;

use super::{BinOutput, RefinedRecord};
use crate::ingest::io::{escape, read_to_string, unescape, write_file};
use crate::ingest::Bin;
use crate::{Error, Result};

/// A source document and its gold partner.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GoldPair {
    pub bin_id: String,
    pub source_doc_id: String,
    pub target_doc_id: String,
}

impl GoldPair {
    /// Gold pairs of bins built from seed pairs (shared document ids).
    pub fn from_bins(bins: &[Bin]) -> Vec<GoldPair> {
        bins.iter()
            .flat_map(|b| {
                b.gold_pairs().into_iter().map(|(s, t)| GoldPair {
                    bin_id: b.id.clone(),
                    source_doc_id: s,
                    target_doc_id: t,
                })
            })
            .collect()
    }
}

/// The first-ranked candidate of a source document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopCandidate {
    pub bin_id: String,
    pub source_doc_id: String,
    pub target_doc_id: String,
}

/// Rank-1 candidates of every source document, in bin order.
pub fn top_candidates(outputs: &[BinOutput], scored: bool) -> Vec<TopCandidate> {
    outputs
        .iter()
        .flat_map(|o| {
            let lists = if scored { &o.scored } else { &o.preliminary };
            lists.iter().filter_map(move |l| {
                l.top().map(|c| TopCandidate {
                    bin_id: o.bin_id.clone(),
                    source_doc_id: l.source_doc_id.clone(),
                    target_doc_id: c.target_doc_id.clone(),
                })
            })
        })
        .collect()
}

fn row(out: &mut String, fields: &[&str]) {
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push('\t');
        }
        out.push_str(&escape(f));
    }
    out.push('\n');
}

fn rows(path: &Path, width: usize, expected: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(unescape).collect();
        if fields.len() != width {
            return Err(Error::parse(path.display().to_string(), i + 1, format!("expected `{expected}`")));
        }
        out.push((i + 1, fields));
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(path: &Path, line: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(path.display().to_string(), line, format!("`{s}` is not a number")))
}

/// `bin_id, source_doc_id, target_doc_id, score, confidence`
pub fn refined_to_tsv(records: &[RefinedRecord]) -> String {
    let mut out = String::new();
    for r in records {
        row(
            &mut out,
            &[
                &r.bin_id,
                &r.source_doc_id,
                &r.target_doc_id,
                &r.score.to_string(),
                &r.confidence.to_string(),
            ],
        );
    }
    out
}

pub fn write_refined(path: &Path, records: &[RefinedRecord]) -> Result<()> {
    write_file(path, refined_to_tsv(records).as_bytes())
}

/// Reads refined alignments; the texts are left empty.
pub fn read_refined(path: &Path) -> Result<Vec<RefinedRecord>> {
    rows(path, 5, "bin_id<TAB>source_doc_id<TAB>target_doc_id<TAB>score<TAB>confidence")?
        .into_iter()
        .map(|(line, mut f)| {
            let confidence = number(path, line, &f[4])?;
            let score = number(path, line, &f[3])?;
            f.truncate(3);
            let target_doc_id = f.pop().unwrap_or_default();
            let source_doc_id = f.pop().unwrap_or_default();
            let bin_id = f.pop().unwrap_or_default();
            Ok(RefinedRecord {
                bin_id,
                source_doc_id,
                target_doc_id,
                score,
                confidence,
                source_text: String::new(),
                target_text: String::new(),
            })
        })
        .collect()
}

/// `bin_id, source_text, target_text, confidence`
pub fn write_corpus(path: &Path, records: &[RefinedRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        row(&mut out, &[&r.bin_id, &r.source_text, &r.target_text, &r.confidence.to_string()]);
    }
    write_file(path, out.as_bytes())
}

fn ranked(outputs: &[BinOutput], scored: bool) -> String {
    let mut out = String::new();
    for o in outputs {
        let lists = if scored { &o.scored } else { &o.preliminary };
        for l in lists {
            for (rank, c) in l.candidates.iter().enumerate() {
                let value = if scored {
                    c.score.unwrap_or(f64::NEG_INFINITY)
                } else {
                    c.distance
                };
                row(
                    &mut out,
                    &[&o.bin_id, &l.source_doc_id, &(rank + 1).to_string(), &c.target_doc_id, &value.to_string()],
                );
            }
        }
    }
    out
}

/// `bin_id, source_doc_id, rank, target_doc_id, distance`, ranks from 1.
pub fn write_preliminary(path: &Path, outputs: &[BinOutput]) -> Result<()> {
    write_file(path, ranked(outputs, false).as_bytes())
}

/// `bin_id, source_doc_id, rank, target_doc_id, log_score`, ranks from 1.
pub fn write_scored(path: &Path, outputs: &[BinOutput]) -> Result<()> {
    write_file(path, ranked(outputs, true).as_bytes())
}

/// Rank-1 rows of a file written by [`write_preliminary`] or [`write_scored`].
pub fn read_ranked_tops(path: &Path) -> Result<Vec<TopCandidate>> {
    let mut tops = Vec::new();
    for (line, f) in rows(path, 5, "bin_id<TAB>source_doc_id<TAB>rank<TAB>target_doc_id<TAB>value")? {
        let rank: usize = number(path, line, &f[2])?;
        if rank == 1 {
            tops.push(TopCandidate {
                bin_id: f[0].clone(),
                source_doc_id: f[1].clone(),
                target_doc_id: f[3].clone(),
            });
        }
    }
    Ok(tops)
}

/// `bin_id, source_doc_id, target_doc_id`
pub fn write_gold(path: &Path, gold: &[GoldPair]) -> Result<()> {
    let mut out = String::new();
    for g in gold {
        let _ = writeln!(out, "{}\t{}\t{}", escape(&g.bin_id), escape(&g.source_doc_id), escape(&g.target_doc_id));
    }
    write_file(path, out.as_bytes())
}

pub fn read_gold(path: &Path) -> Result<Vec<GoldPair>> {
    Ok(rows(path, 3, "bin_id<TAB>source_doc_id<TAB>target_doc_id")?
        .into_iter()
        .map(|(_, f)| GoldPair {
            bin_id: f[0].clone(),
            source_doc_id: f[1].clone(),
            target_doc_id: f[2].clone(),
        })
        .collect())
}
