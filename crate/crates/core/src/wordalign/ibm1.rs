use std::collections::HashSet;

use rayon::prelude::*;

use super::{Direction, Vocab, NULL_TOKEN};
use crate::ingest::SeedPair;
use crate::{Error, Result};

pub const DEFAULT_ITERATIONS: usize = 5;

/// Sentence pairs per E-step work unit. Fixed, so results never depend on
/// the number of worker threads.
const CHUNK: usize = 512;
/// Work units evaluated concurrently before their counts are merged.
const CHUNKS_PER_ROUND: usize = 16;

/// Sparse lexical translation probabilities `t(predicted | conditioning)`.
///
/// Only pairs that co-occur in some sentence pair are stored; all other
/// probabilities are zero.
#[derive(Clone, Debug)]
pub struct TranslationTable {
    direction: Direction,
    cond: Vocab,
    pred: Vocab,
    /// Row `e` occupies `offsets[e]..offsets[e + 1]` of `preds`/`probs`,
    /// sorted by predicted word id.
    offsets: Vec<usize>,
    preds: Vec<u32>,
    probs: Vec<f64>,
}

impl TranslationTable {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Conditioning vocabulary size, including the NULL token.
    pub fn cond_vocab_size(&self) -> usize {
        self.cond.len()
    }

    pub fn pred_vocab_size(&self) -> usize {
        self.pred.len()
    }

    fn row(&self, e: u32) -> std::ops::Range<usize> {
        self.offsets[e as usize]..self.offsets[e as usize + 1]
    }

    fn slot(&self, e: u32, f: u32) -> Option<usize> {
        let r = self.row(e);
        self.preds[r.clone()].binary_search(&f).ok().map(|i| r.start + i)
    }

    fn prob_ids(&self, e: u32, f: Option<u32>) -> f64 {
        f.and_then(|f| self.slot(e, f)).map_or(0.0, |s| self.probs[s])
    }

    /// `t(pred | cond)`; `cond` may be [`NULL_TOKEN`].
    pub fn prob(&self, cond: &str, pred: &str) -> f64 {
        match (self.cond.id(cond), self.pred.id(pred)) {
            (Some(e), Some(f)) => self.prob_ids(e, Some(f)),
            _ => 0.0,
        }
    }

    /// Sum of the row of `cond` (1 after training, for every known word).
    pub fn row_sum(&self, cond: &str) -> f64 {
        self.cond
            .id(cond)
            .map_or(0.0, |e| self.probs[self.row(e)].iter().sum())
    }

    /// All stored `(cond, pred, probability)` triples, NULL rows included.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, f64)> + '_ {
        (0..self.cond.len() as u32).flat_map(move |e| {
            self.row(e)
                .map(move |s| (self.cond.word(e), self.pred.word(self.preds[s]), self.probs[s]))
        })
    }

    /// Conditioning ids (NULL first) and predicted ids of a pair; unknown
    /// predicted words map to `None`.
    fn encode(&self, pair: &SeedPair) -> (Vec<u32>, Vec<Option<u32>>) {
        let (c, p) = self.direction.sides(pair);
        let cond = std::iter::once(0)
            .chain(c.iter().map(|w| self.cond.id(w).unwrap_or(u32::MAX)))
            .collect();
        (cond, p.iter().map(|w| self.pred.id(w)).collect())
    }

    /// Index of the best conditioning position (0 = NULL) for every
    /// predicted position. Ties among words go to the smallest position and
    /// NULL only wins when strictly more probable than every word.
    pub(crate) fn best_links(&self, pair: &SeedPair) -> Vec<usize> {
        let (cond, pred) = self.encode(pair);
        pred.iter()
            .map(|&f| {
                let prob = |e: u32| if e == u32::MAX { 0.0 } else { self.prob_ids(e, f) };
                let mut best = 0;
                let mut best_p = 0.0;
                for (i, &e) in cond.iter().enumerate().skip(1) {
                    let p = prob(e);
                    if p > best_p {
                        best = i;
                        best_p = p;
                    }
                }
                if prob(cond[0]) > best_p {
                    best = 0;
                }
                best
            })
            .collect()
    }
}

/// Model 1 log-likelihood of the corpus, `sum_j ln(sum_i t(f_j|e_i) / (l+1))`
/// over all predicted tokens (the constant length term is omitted).
pub fn corpus_log_likelihood(table: &TranslationTable, pairs: &[SeedPair]) -> f64 {
    pairs
        .iter()
        .map(|pair| {
            let (cond, pred) = table.encode(pair);
            let l1 = cond.len() as f64;
            pred.iter()
                .map(|&f| {
                    let z: f64 = cond
                        .iter()
                        .map(|&e| if e == u32::MAX { 0.0 } else { table.prob_ids(e, f) })
                        .sum();
                    (z / l1).ln()
                })
                .sum::<f64>()
        })
        .sum()
}

pub fn train_ibm1(pairs: &[SeedPair], iterations: usize, direction: Direction) -> Result<TranslationTable> {
    train_ibm1_with_report(pairs, iterations, direction).map(|(t, _)| t)
}

/// Trains Model 1 by EM from a uniform start. Also returns the corpus
/// log-likelihood before every iteration and after the last one.
pub fn train_ibm1_with_report(
    pairs: &[SeedPair],
    iterations: usize,
    direction: Direction,
) -> Result<(TranslationTable, Vec<f64>)> {
    if pairs.is_empty() {
        return Err(Error::invalid("cannot train IBM Model 1 on an empty corpus"));
    }
    if iterations < 1 {
        return Err(Error::invalid("IBM Model 1 needs at least one iteration"));
    }

    let mut cond = Vocab::default();
    let mut pred = Vocab::default();
    cond.intern(NULL_TOKEN);
    let encoded: Vec<(Vec<u32>, Vec<u32>)> = pairs
        .iter()
        .map(|p| {
            let (c, f) = direction.sides(p);
            let c = std::iter::once(0).chain(c.iter().map(|w| cond.intern(w))).collect();
            let f = f.iter().map(|w| pred.intern(w)).collect();
            (c, f)
        })
        .collect();

    let mut co: HashSet<(u32, u32)> = HashSet::new();
    for (c, f) in &encoded {
        for &e in c {
            for &w in f {
                co.insert((e, w));
            }
        }
    }
    let mut co: Vec<(u32, u32)> = co.into_iter().collect();
    co.sort_unstable();
    let mut offsets = vec![0usize; cond.len() + 1];
    for &(e, _) in &co {
        offsets[e as usize + 1] += 1;
    }
    for i in 1..offsets.len() {
        offsets[i] += offsets[i - 1];
    }
    let preds: Vec<u32> = co.iter().map(|&(_, f)| f).collect();
    let uniform = 1.0 / pred.len() as f64;
    let mut table = TranslationTable {
        direction,
        cond,
        pred,
        offsets,
        preds,
        probs: vec![uniform; co.len()],
    };

    // slot of every (conditioning position, predicted position) cell
    let slots: Vec<Vec<u32>> = encoded
        .iter()
        .map(|(c, f)| {
            let mut s = Vec::with_capacity(c.len() * f.len());
            for &e in c {
                for &w in f {
                    s.push(table.slot(e, w).expect("co-occurring pair has a slot") as u32);
                }
            }
            s
        })
        .collect();

    let mut log_likelihoods = Vec::with_capacity(iterations + 1);
    let mut counts = vec![0.0f64; table.probs.len()];
    for _ in 0..iterations {
        counts.iter_mut().for_each(|c| *c = 0.0);
        let mut ll = 0.0;
        let chunks: Vec<&[(Vec<u32>, Vec<u32>)]> = encoded.chunks(CHUNK).collect();
        let slot_chunks: Vec<&[Vec<u32>]> = slots.chunks(CHUNK).collect();
        for round in (0..chunks.len()).step_by(CHUNKS_PER_ROUND) {
            let end = (round + CHUNKS_PER_ROUND).min(chunks.len());
            let partials: Vec<(Vec<(u32, f64)>, f64)> = (round..end)
                .into_par_iter()
                .map(|k| expectation(chunks[k], slot_chunks[k], &table.probs))
                .collect();
            for (contrib, part_ll) in partials {
                for (s, v) in contrib {
                    counts[s as usize] += v;
                }
                ll += part_ll;
            }
        }
        log_likelihoods.push(ll);

        for e in 0..table.cond.len() {
            let r = table.offsets[e]..table.offsets[e + 1];
            let total: f64 = counts[r.clone()].iter().sum();
            for s in r {
                table.probs[s] = if total > 0.0 { counts[s] / total } else { 0.0 };
            }
        }
    }
    log_likelihoods.push(corpus_log_likelihood(&table, pairs));
    Ok((table, log_likelihoods))
}

/// Posterior link counts of one chunk, in the order a sequential pass would
/// add them, plus the chunk's log-likelihood.
fn expectation(pairs: &[(Vec<u32>, Vec<u32>)], slots: &[Vec<u32>], probs: &[f64]) -> (Vec<(u32, f64)>, f64) {
    let mut contrib = Vec::new();
    let mut ll = 0.0;
    for ((c, f), s) in pairs.iter().zip(slots) {
        let m = f.len();
        let l1 = c.len() as f64;
        for j in 0..m {
            let z: f64 = (0..c.len()).map(|i| probs[s[i * m + j] as usize]).sum();
            ll += (z / l1).ln();
            for i in 0..c.len() {
                let slot = s[i * m + j];
                contrib.push((slot, probs[slot as usize] / z));
            }
        }
    }
    (contrib, ll)
}
