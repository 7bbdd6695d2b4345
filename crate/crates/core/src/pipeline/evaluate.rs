use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{GoldPair, RefinedRecord, Timings, TopCandidate};
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BinEval {
    pub bin_id: String,
    pub gold_pairs: usize,
    pub accepted: usize,
    pub correct: usize,
    pub recall: f64,
    pub precision: f64,
    pub exact_match_preliminary: Option<f64>,
    pub exact_match_scored: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub gold_pairs: usize,
    pub accepted: usize,
    pub correct: usize,
    /// Share of gold pairs that were accepted.
    pub recall: f64,
    /// Share of accepted pairs that are gold; 0 when nothing was accepted.
    pub precision: f64,
    /// Share of gold source documents whose top candidate is the partner.
    pub exact_match_preliminary: Option<f64>,
    pub exact_match_scored: Option<f64>,
    pub per_bin: Vec<BinEval>,
    pub timings: Timings,
}

pub(crate) fn exact_match_at_1<T>(tops: &[T], gold_count: usize, is_gold: impl Fn(&T) -> bool) -> f64 {
    ratio(tops.iter().filter(|t| is_gold(t)).count(), gold_count)
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

type Key<'a> = (&'a str, &'a str, &'a str);

#[derive(Default)]
struct Counts {
    gold: usize,
    accepted: usize,
    correct: usize,
    prelim_hits: usize,
    scored_hits: usize,
}

pub fn evaluate(
    refined: &[RefinedRecord],
    gold: &[GoldPair],
    preliminary: Option<&[TopCandidate]>,
    scored: Option<&[TopCandidate]>,
) -> Result<EvalReport> {
    if gold.is_empty() {
        return Err(Error::invalid("evaluation needs a non-empty gold pairing"));
    }
    let gold_set: HashSet<Key> = gold
        .iter()
        .map(|g| (g.bin_id.as_str(), g.source_doc_id.as_str(), g.target_doc_id.as_str()))
        .collect();
    let mut bins: BTreeMap<&str, Counts> = BTreeMap::new();
    for g in gold {
        bins.entry(&g.bin_id).or_default().gold += 1;
    }
    for r in refined {
        let c = bins.entry(&r.bin_id).or_default();
        c.accepted += 1;
        if gold_set.contains(&(r.bin_id.as_str(), r.source_doc_id.as_str(), r.target_doc_id.as_str())) {
            c.correct += 1;
        }
    }
    for (tops, scored_stage) in [(preliminary, false), (scored, true)] {
        for t in tops.unwrap_or_default() {
            if gold_set.contains(&(t.bin_id.as_str(), t.source_doc_id.as_str(), t.target_doc_id.as_str())) {
                let c = bins.entry(&t.bin_id).or_default();
                if scored_stage {
                    c.scored_hits += 1;
                } else {
                    c.prelim_hits += 1;
                }
            }
        }
    }
    let per_bin: Vec<BinEval> = bins
        .iter()
        .map(|(id, c)| BinEval {
            bin_id: id.to_string(),
            gold_pairs: c.gold,
            accepted: c.accepted,
            correct: c.correct,
            recall: ratio(c.correct, c.gold),
            precision: ratio(c.correct, c.accepted),
            exact_match_preliminary: preliminary.map(|_| ratio(c.prelim_hits, c.gold)),
            exact_match_scored: scored.map(|_| ratio(c.scored_hits, c.gold)),
        })
        .collect();
    let total = |f: fn(&Counts) -> usize| bins.values().map(f).sum::<usize>();
    let (accepted, correct) = (total(|c| c.accepted), total(|c| c.correct));
    Ok(EvalReport {
        gold_pairs: gold_set.len(),
        accepted,
        correct,
        recall: ratio(correct, gold_set.len()),
        precision: ratio(correct, accepted),
        exact_match_preliminary: preliminary.map(|_| ratio(total(|c| c.prelim_hits), gold_set.len())),
        exact_match_scored: scored.map(|_| ratio(total(|c| c.scored_hits), gold_set.len())),
        per_bin,
        timings: Timings::default(),
    })
}
