//! Parallel paragraph mining from binned bilingual document collections.
//!
//! The crate implements the full train-and-apply pipeline:
//!
//! 1. [`ingest`]: tokenization, seed-corpus cleaning, binning, HTML paragraph
//!    extraction, and character-trigram language identification.
//! 2. [`wordalign`]: IBM Model 1 in both directions, union-symmetrized word
//!    alignment and a harmonic-mean bilingual dictionary.
//! 3. [`embeddings`]: bilingual skip-gram with negative sampling, trained on
//!    the word-aligned seed corpus.
//! 4. [`vectorize`]: tf-idf weighted document vectors.
//! 5. [`annindex`]: a random-projection forest for approximate nearest
//!    neighbors under angular distance.
//! 6. [`scoring`]: length and dictionary based rescoring of candidate lists.
//! 7. [`classifier`]: four similarity features and a 4-16-2 feed-forward
//!    network deciding whether a candidate pair is parallel.
//! 8. [`pipeline`]: training, alignment, evaluation, and the realignment
//!    experiment driver used by the `bimine` binary.
//!
//! [`synth`] generates deterministic synthetic bilingual corpora for tests and
//! demos.

pub mod annindex;
pub mod classifier;
pub mod embeddings;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod scoring;
pub mod synth;
pub mod vectorize;
pub mod wordalign;

pub use error::{Error, Result};

/// Number of characters of `tokens` joined by single spaces.
///
/// This is the document "length" used by the length model and the
/// classifier features.
pub fn text_length<S: AsRef<str>>(tokens: &[S]) -> usize {
    if tokens.is_empty() {
        return 0;
    }
    tokens.iter().map(|t| t.as_ref().chars().count()).sum::<usize>() + tokens.len() - 1
}
