//! Parallel/non-parallel decision for the top candidate of each source
//! document: four features fed to a small feed-forward network.

mod mlp;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scoring::LengthModel;
use crate::text_length;
use crate::wordalign::Dictionary;
use crate::{Error, Result};

pub use mlp::{train, Activation, Layer, LayerGradient, Mlp, TrainConfig, TrainReport, MODEL_VERSION};

pub const DEFAULT_SAMPLE_FRACTION: f64 = 0.2;
pub const REALIGN_THRESHOLD: f64 = 0.5;
pub const WEB_THRESHOLD: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureVector {
    pub length_similarity: f64,
    pub length_confidence: f64,
    pub weight_similarity_2: f64,
    pub weight_confidence_2: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; 4] {
        [
            self.length_similarity,
            self.length_confidence,
            self.weight_similarity_2,
            self.weight_confidence_2,
        ]
    }
}

/// `1 - exp(-0.01 * length)`: how much a length ratio over `length`
/// characters can be trusted.
pub fn length_confidence(length: usize) -> f64 {
    1.0 - (-0.01 * length as f64).exp()
}

/// Dictionary weight, or 1 for identical words without an entry, else 0.
pub fn weight_2(a: &str, b: &str, dict: &Dictionary) -> f64 {
    match dict.get(a, b) {
        Some(w) => w,
        None if a == b => 1.0,
        None => 0.0,
    }
}

/// `max_j weight_2(w, c_j)` over the distinct words of `c`.
fn best_relation(w: &str, c: &HashSet<&str>, dict: &Dictionary) -> f64 {
    let mut best = 0.0f64;
    if let Some(row) = dict.row(w) {
        for (t, &weight) in row {
            if c.contains(t.as_str()) {
                best = best.max(weight);
            }
        }
    }
    if c.contains(w) && dict.get(w, w).is_none() {
        best = 1.0;
    }
    best
}

/// Character-weighted sums `(Σ len·max, Σ len·[max > 0], Σ len)` over the
/// tokens of `d`.
fn relation_sums<S: AsRef<str>>(d: &[S], c: &[S], dict: &Dictionary) -> (f64, f64, f64) {
    let c: HashSet<&str> = c.iter().map(AsRef::as_ref).collect();
    let (mut strength, mut covered, mut total) = (0.0, 0.0, 0.0);
    for w in d {
        let w = w.as_ref();
        let len = w.chars().count() as f64;
        let best = best_relation(w, &c, dict);
        strength += len * best;
        if best > 0.0 {
            covered += len;
        }
        total += len;
    }
    (strength, covered, total)
}

/// Length-weighted mean of the strongest relation of every covered token of
/// `d`; 0 when no token is covered.
pub fn weight_similarity_2<S: AsRef<str>>(d: &[S], c: &[S], dict: &Dictionary) -> f64 {
    let (strength, covered, _) = relation_sums(d, c, dict);
    if covered == 0.0 {
        0.0
    } else {
        strength / covered
    }
}

/// Share of the characters of `d` in tokens that have some relation in `c`.
pub fn weight_confidence_2<S: AsRef<str>>(d: &[S], c: &[S], dict: &Dictionary) -> f64 {
    let (_, covered, total) = relation_sums(d, c, dict);
    if total == 0.0 {
        0.0
    } else {
        covered / total
    }
}

pub fn features<S: AsRef<str>>(d: &[S], c: &[S], length: &LengthModel, dict: &Dictionary) -> FeatureVector {
    let (dl, cl) = (text_length(d), text_length(c));
    let (strength, covered, total) = relation_sums(d, c, dict);
    FeatureVector {
        length_similarity: length.length_similarity(dl, cl),
        length_confidence: length_confidence(dl),
        weight_similarity_2: if covered == 0.0 { 0.0 } else { strength / covered },
        weight_confidence_2: if total == 0.0 { 0.0 } else { covered / total },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Label {
    NonParallel,
    Parallel,
}

impl Label {
    /// One-hot target: non-parallel first, parallel second.
    pub fn target(self) -> [f64; 2] {
        match self {
            Label::NonParallel => [1.0, 0.0],
            Label::Parallel => [0.0, 1.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledExample {
    pub features: FeatureVector,
    pub label: Label,
}

/// Samples `round(fraction * n)` of the `(features, is_gold)` observations
/// and downsamples the majority class to the size of the minority class.
pub fn build_dataset(
    observations: &[(FeatureVector, bool)],
    sample_fraction: f64,
    seed: u64,
) -> Result<Vec<LabeledExample>> {
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(Error::invalid(format!("sample fraction {sample_fraction} outside (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..observations.len()).collect();
    order.shuffle(&mut rng);
    let take = ((sample_fraction * observations.len() as f64).round() as usize).min(observations.len());
    order.truncate(take);
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = order.into_iter().partition(|&i| observations[i].1);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::invalid(format!(
            "training set needs both classes, got {} parallel and {} non-parallel examples",
            pos.len(),
            neg.len()
        )));
    }
    let n = pos.len().min(neg.len());
    pos.truncate(n);
    neg.truncate(n);
    let mut chosen: Vec<usize> = pos.into_iter().chain(neg).collect();
    chosen.sort_unstable();
    Ok(chosen
        .into_iter()
        .map(|i| LabeledExample {
            features: observations[i].0,
            label: if observations[i].1 {
                Label::Parallel
            } else {
                Label::NonParallel
            },
        })
        .collect())
}

/// Confidence that the pair is parallel.
pub fn classify(model: &Mlp, features: &FeatureVector) -> Result<f64> {
    let x = features.to_array();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite feature in {x:?}")));
    }
    Ok(model.predict(&x)[1])
}

pub fn accept(confidence: f64, threshold: f64) -> bool {
    confidence > threshold
}
