use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;

use super::{IdfScope, RunConfig, Timings};
use crate::annindex::AnnIndex;
use crate::classifier::{accept, classify, features, FeatureVector, Mlp};
use crate::embeddings::{normalize_for_embeddings, EmbeddingTable};
use crate::ingest::{Bin, Document, LanguagePair};
use crate::scoring::{log_score, rescore_candidates, Candidate, CandidateList, LengthModel};
use crate::vectorize::{doc_vector, TfIdfModel};
use crate::wordalign::Dictionary;
use crate::{Error, Result};

/// Models shared by every bin of a run.
pub(crate) struct Models<'a> {
    pub langs: LanguagePair,
    pub dictionary: &'a Dictionary,
    pub embeddings: &'a EmbeddingTable,
    pub length_model: &'a LengthModel,
    pub classifier: Option<&'a Mlp>,
}

/// The top scored candidate of one source document.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub source_doc_id: String,
    pub target_doc_id: String,
    pub score: f64,
    pub features: FeatureVector,
    pub confidence: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinOutput {
    pub bin_id: String,
    pub preliminary: Vec<CandidateList>,
    pub scored: Vec<CandidateList>,
    pub decisions: Vec<Decision>,
    pub timings: Timings,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinedRecord {
    pub bin_id: String,
    pub source_doc_id: String,
    pub target_doc_id: String,
    /// Natural log of the rescoring score.
    pub score: f64,
    pub confidence: f64,
    pub source_text: String,
    pub target_text: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AlignOutput {
    pub refined: Vec<RefinedRecord>,
    pub bins: Vec<BinOutput>,
    pub timings: Timings,
}

fn normalized(docs: &[Document]) -> Vec<Vec<String>> {
    docs.iter().map(|d| normalize_for_embeddings(d.tokens())).collect()
}

fn fit_idf(docs: Vec<Vec<String>>) -> Option<TfIdfModel> {
    (!docs.is_empty()).then(|| TfIdfModel::fit(&docs).expect("non-empty collection"))
}

/// Idf tables per language, pooled over `bins`.
pub(crate) fn global_idf(bins: &[Bin]) -> (Option<TfIdfModel>, Option<TfIdfModel>) {
    let src = bins.iter().flat_map(|b| normalized(&b.source_docs)).collect();
    let tgt = bins.iter().flat_map(|b| normalized(&b.target_docs)).collect();
    (fit_idf(src), fit_idf(tgt))
}

/// Retrieval, rescoring and (with a classifier) classification of one bin.
pub(crate) fn process_bin(
    bin: &Bin,
    models: &Models,
    idf: (Option<&TfIdfModel>, Option<&TfIdfModel>),
    config: &RunConfig,
) -> Result<BinOutput> {
    let mut timings = Timings::default();
    let mut out = BinOutput {
        bin_id: bin.id.clone(),
        preliminary: Vec::new(),
        scored: Vec::new(),
        decisions: Vec::new(),
        timings: Timings::default(),
    };
    if bin.source_docs.is_empty() {
        return Ok(out);
    }
    if bin.target_docs.is_empty() {
        log::warn!("bin {}: no {} documents, skipped", bin.id, models.langs.target);
        return Ok(out);
    }
    let (src_norm, tgt_norm) = (normalized(&bin.source_docs), normalized(&bin.target_docs));
    let (local_src, local_tgt);
    let (src_idf, tgt_idf) = match (config.idf_scope, idf) {
        (IdfScope::Global, (Some(s), Some(t))) => (s, t),
        _ => {
            local_src = TfIdfModel::fit(&src_norm)?;
            local_tgt = TfIdfModel::fit(&tgt_norm)?;
            (&local_src, &local_tgt)
        }
    };
    let vectors = |docs: &[Document], norm: &[Vec<String>], lang: &str, idf: &TfIdfModel| {
        docs.iter()
            .zip(norm)
            .map(|(d, n)| doc_vector(&d.id, n, lang, models.embeddings, idf, config.weighting))
            .collect::<Vec<_>>()
    };
    let (src_vecs, tgt_vecs) = timings.time("doc_vectors", || {
        (
            vectors(&bin.source_docs, &src_norm, &models.langs.source, src_idf),
            vectors(&bin.target_docs, &tgt_norm, &models.langs.target, tgt_idf),
        )
    });
    if tgt_vecs.iter().all(|v| v.is_zero()) {
        log::warn!("bin {}: every {} document vector is zero, skipped", bin.id, models.langs.target);
        return Ok(out);
    }
    let index = timings.time("ann_build", || AnnIndex::build(&tgt_vecs, &config.build_params()))?;
    if index.dim() != models.embeddings.dim() {
        return Err(Error::invalid(format!(
            "bin {}: index dimension {} differs from embedding dimension {}",
            bin.id,
            index.dim(),
            models.embeddings.dim()
        )));
    }
    let targets: HashMap<&str, &Document> = bin.target_docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let search = config.search_params();

    let start = Instant::now();
    for v in &src_vecs {
        if v.is_zero() {
            log::debug!("bin {}: source {} has a zero vector, no candidates", bin.id, v.doc_id);
            continue;
        }
        let hits = index.query(&v.vector, &search)?;
        out.preliminary.push(CandidateList {
            source_doc_id: v.doc_id.clone(),
            candidates: hits
                .iter()
                .map(|h| Candidate {
                    target_doc_id: index.id(h.item).to_string(),
                    distance: h.distance,
                    score: None,
                })
                .collect(),
        });
    }
    timings.add("ann_query", start.elapsed().as_secs_f64());

    let sources: HashMap<&str, &Document> = bin.source_docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let start = Instant::now();
    for prelim in &out.preliminary {
        let d = sources[prelim.source_doc_id.as_str()].tokens();
        let scored = rescore_candidates(prelim, |t| {
            log_score(d, targets[t].tokens(), models.length_model, models.dictionary)
        });
        out.scored.push(scored);
    }
    timings.add("rescore", start.elapsed().as_secs_f64());

    let start = Instant::now();
    for scored in &out.scored {
        let Some(top) = scored.top() else { continue };
        let d = sources[scored.source_doc_id.as_str()].tokens();
        let c = targets[top.target_doc_id.as_str()].tokens();
        let f = features(d, c, models.length_model, models.dictionary);
        let confidence = models.classifier.map(|m| classify(m, &f)).transpose()?;
        out.decisions.push(Decision {
            source_doc_id: scored.source_doc_id.clone(),
            target_doc_id: top.target_doc_id.clone(),
            score: top.score.unwrap_or(f64::NEG_INFINITY),
            features: f,
            confidence,
        });
    }
    timings.add("classify", start.elapsed().as_secs_f64());
    out.timings = timings;
    Ok(out)
}

/// Runs every bin (in parallel over the worker pool) and returns results
/// ordered as `bins`.
pub(crate) fn process_bins(bins: &[Bin], models: &Models, config: &RunConfig) -> Result<(Vec<BinOutput>, Timings)> {
    let mut timings = Timings::default();
    let (src_idf, tgt_idf) = match config.idf_scope {
        IdfScope::Global => timings.time("idf", || global_idf(bins)),
        IdfScope::Bin => (None, None),
    };
    let start = Instant::now();
    let outputs: Vec<BinOutput> = config.with_workers(|| {
        bins.par_iter()
            .map(|b| process_bin(b, models, (src_idf.as_ref(), tgt_idf.as_ref()), config))
            .collect::<Result<Vec<_>>>()
    })??;
    for o in &outputs {
        timings.merge(&o.timings);
    }
    timings.add("bins_wall", start.elapsed().as_secs_f64());
    Ok((outputs, timings))
}

/// Aligns binned documents with trained models and keeps the pairs whose
/// confidence exceeds `config.threshold`.
pub fn align(bins: &[Bin], artifacts: &super::Artifacts, config: &RunConfig) -> Result<AlignOutput> {
    if config.dim != artifacts.embeddings.dim() {
        return Err(Error::invalid(format!(
            "configured dimension {} differs from the embeddings' {}",
            config.dim,
            artifacts.embeddings.dim()
        )));
    }
    let models = Models {
        langs: artifacts.langs(),
        dictionary: &artifacts.dictionary,
        embeddings: &artifacts.embeddings,
        length_model: &artifacts.length_model,
        classifier: Some(&artifacts.classifier),
    };
    let (outputs, timings) = process_bins(bins, &models, config)?;
    let mut refined = Vec::new();
    for (bin, out) in bins.iter().zip(&outputs) {
        let src: HashMap<&str, &Document> = bin.source_docs.iter().map(|d| (d.id.as_str(), d)).collect();
        let tgt: HashMap<&str, &Document> = bin.target_docs.iter().map(|d| (d.id.as_str(), d)).collect();
        for d in &out.decisions {
            let confidence = d.confidence.expect("classifier present");
            if accept(confidence, config.threshold) {
                refined.push(RefinedRecord {
                    bin_id: bin.id.clone(),
                    source_doc_id: d.source_doc_id.clone(),
                    target_doc_id: d.target_doc_id.clone(),
                    score: d.score,
                    confidence,
                    source_text: src[d.source_doc_id.as_str()].raw_text.clone(),
                    target_text: tgt[d.target_doc_id.as_str()].raw_text.clone(),
                });
            }
        }
    }
    Ok(AlignOutput {
        refined,
        bins: outputs,
        timings,
    })
}
