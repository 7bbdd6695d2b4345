use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{align, evaluate, top_candidates, AlignOutput, Artifacts, EvalReport, GoldPair, RunConfig, TrainReport};
use crate::ingest::{clean_seed, make_bins, Bin, SeedPair};
use crate::{Error, Result};

const SHUFFLE_SALT: u64 = 0x7e;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RealignOptions {
    /// Shuffle the pairs (seeded by the run seed) before splitting.
    pub shuffle: bool,
    /// Use at most this many head pairs for training.
    pub head_limit: Option<usize>,
    /// Realign at most this many tail pairs.
    pub tail_limit: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealignReport {
    pub head_pairs: usize,
    pub tail_pairs: usize,
    pub tail_clean_pairs: usize,
    pub train: TrainReport,
    pub eval: EvalReport,
}

/// Everything a realignment run produces.
#[derive(Clone, Debug)]
pub struct RealignRun {
    pub artifacts: Artifacts,
    pub output: AlignOutput,
    pub gold: Vec<GoldPair>,
    pub report: RealignReport,
}

/// Splits `pairs` in half: the first `len / 2` form the head, the rest the tail.
pub fn split_head_tail<T>(pairs: &[T]) -> (&[T], &[T]) {
    pairs.split_at(pairs.len() / 2)
}

/// Trains on the head of a sentence-aligned corpus and realigns its tail.
///
/// The tail keeps every pair with a letter on both sides, whatever its
/// length, and is binned like the training data. Its original pairing is
/// only used to evaluate the result.
pub fn realign_experiment(raw_pairs: &[(String, String)], config: &RunConfig, opts: &RealignOptions) -> Result<RealignRun> {
    let mut pairs = raw_pairs.to_vec();
    if opts.shuffle {
        pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_SALT));
    }
    let (head, tail) = split_head_tail(&pairs);
    let head = &head[..opts.head_limit.map_or(head.len(), |n| n.min(head.len()))];
    let tail = &tail[..opts.tail_limit.map_or(tail.len(), |n| n.min(tail.len()))];
    log::info!("realignment: {} head pairs, {} tail pairs", head.len(), tail.len());

    let (artifacts, train_report) = super::train_all(head, config)?;

    let tail_pairs: Vec<SeedPair> = tail.iter().map(|(s, t)| SeedPair::from_raw(s, t)).collect();
    let tail_clean = clean_seed(tail_pairs, usize::MAX, true);
    if tail_clean.is_empty() {
        return Err(Error::invalid("no tail pair survives cleaning").in_stage("clean"));
    }
    let bins: Vec<Bin> = make_bins(&tail_clean, config.bin_size, &config.langs())?;
    let gold = GoldPair::from_bins(&bins);
    let output = align(&bins, &artifacts, config)?;
    let mut eval = evaluate(
        &output.refined,
        &gold,
        Some(&top_candidates(&output.bins, false)),
        Some(&top_candidates(&output.bins, true)),
    )?;
    eval.timings = output.timings.clone();
    let report = RealignReport {
        head_pairs: head.len(),
        tail_pairs: tail.len(),
        tail_clean_pairs: tail_clean.len(),
        train: train_report,
        eval,
    };
    Ok(RealignRun {
        artifacts,
        output,
        gold,
        report,
    })
}
