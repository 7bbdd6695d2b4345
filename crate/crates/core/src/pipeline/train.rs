use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate::exact_match_at_1;
use super::output::{top_candidates, TopCandidate};
use super::run::{global_idf, process_bins, Models};
use super::{Artifacts, RunConfig, Timings};
use crate::classifier::{build_dataset, train, Label};
use crate::embeddings::{normalize_for_embeddings, train_biskip};
use crate::ingest::io::write_file;
use crate::ingest::{clean_seed, make_bins, LanguageDetector, SeedPair, TrigramProfile, DEFAULT_PROFILE_SIZE};
use crate::scoring::LengthModel;
use crate::wordalign::{build_dictionary, symmetrize_union, train_ibm1, viterbi_align, Alignment, Direction};
use crate::{Error, Result};

pub const TRAIN_REPORT_FILE: &str = "train_report.json";

/// Counts and timings of a training run. Kept apart from the manifest
/// because timings differ between otherwise identical runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed_pairs: usize,
    pub clean_pairs: usize,
    pub dictionary_entries: usize,
    pub vocabulary: usize,
    pub bins: usize,
    pub exact_match_preliminary: f64,
    pub exact_match_scored: f64,
    pub dataset_parallel: usize,
    pub dataset_non_parallel: usize,
    pub epoch_loss: Vec<f64>,
    pub timings: Timings,
}

/// Trains every model from raw `(source, target)` sentence pairs: word
/// alignment and dictionary, bilingual embeddings and length model on the
/// cleaned seed corpus, then the classifier on artificial bins built from
/// the same pairs.
pub fn train_all(raw_pairs: &[(String, String)], config: &RunConfig) -> Result<(Artifacts, TrainReport)> {
    config.validate()?;
    config.with_workers(|| train_inner(raw_pairs, config))?
}

fn train_inner(raw_pairs: &[(String, String)], config: &RunConfig) -> Result<(Artifacts, TrainReport)> {
    let mut t = Timings::default();
    let langs = config.langs();
    let pairs: Vec<SeedPair> = t.time("preprocess", || {
        raw_pairs.par_iter().map(|(s, g)| SeedPair::from_raw(s, g)).collect()
    });
    let clean = clean_seed(pairs, config.max_tokens, true);
    if clean.is_empty() {
        return Err(Error::invalid("no seed pair survives cleaning").in_stage("clean"));
    }
    log::info!("seed corpus: {} pairs, {} after cleaning", raw_pairs.len(), clean.len());

    let (fwd, rev) = t.time("ibm1", || -> Result<_> {
        Ok((
            train_ibm1(&clean, config.ibm1_iterations, Direction::SourceToTarget)?,
            train_ibm1(&clean, config.ibm1_iterations, Direction::TargetToSource)?,
        ))
    })
    .map_err(|e| e.in_stage("ibm1"))?;
    let alignments: Vec<Alignment> = t.time("word_alignment", || {
        clean
            .par_iter()
            .map(|p| symmetrize_union(&viterbi_align(p, &fwd), &viterbi_align(p, &rev)))
            .collect()
    });
    let dictionary = t.time("dictionary", || build_dictionary(&fwd, &rev, config.dictionary_threshold));
    drop((fwd, rev));
    log::info!("dictionary: {} entries", dictionary.len());

    let normalized: Vec<SeedPair> = clean
        .par_iter()
        .map(|p| SeedPair::new(normalize_for_embeddings(&p.src), normalize_for_embeddings(&p.tgt)))
        .collect();
    let embeddings = t
        .time("skipgram", || train_biskip(&normalized, &alignments, &langs, &config.skipgram()))
        .map_err(|e| e.in_stage("skipgram"))?;
    drop(normalized);
    log::info!("embeddings: {} words", embeddings.len());

    let length_model = LengthModel::fit(&clean).map_err(|e| e.in_stage("length_model"))?;
    let language_detector = t.time("language_profiles", || {
        let mut d = LanguageDetector::new(vec![
            TrigramProfile::train(langs.source.clone(), raw_pairs.iter().map(|p| p.0.as_str()), DEFAULT_PROFILE_SIZE),
            TrigramProfile::train(langs.target.clone(), raw_pairs.iter().map(|p| p.1.as_str()), DEFAULT_PROFILE_SIZE),
        ]);
        d.min_chars = config.min_paragraph_chars;
        d
    });

    let bins = make_bins(&clean, config.bin_size, &langs).map_err(|e| e.in_stage("bins"))?;
    let models = Models {
        langs: langs.clone(),
        dictionary: &dictionary,
        embeddings: &embeddings,
        length_model: &length_model,
        classifier: None,
    };
    let (outputs, bin_timings) = process_bins(&bins, &models, config).map_err(|e| e.in_stage("retrieval"))?;
    t.merge(&bin_timings);
    let observations: Vec<_> = outputs
        .iter()
        .flat_map(|o| o.decisions.iter().map(|d| (d.features, d.source_doc_id == d.target_doc_id)))
        .collect();
    let gold_sources: usize = bins.iter().map(|b| b.gold_pairs().len()).sum();
    let same_id = |t: &TopCandidate| t.source_doc_id == t.target_doc_id;
    let exact_match_preliminary = exact_match_at_1(&top_candidates(&outputs, false), gold_sources, same_id);
    let exact_match_scored = exact_match_at_1(&top_candidates(&outputs, true), gold_sources, same_id);
    log::info!(
        "training bins: exact match@1 {:.4} preliminary, {:.4} scored",
        exact_match_preliminary,
        exact_match_scored
    );

    let dataset = build_dataset(&observations, config.sample_fraction, config.dataset_seed())
        .map_err(|e| e.in_stage("dataset"))?;
    let dataset_parallel = dataset.iter().filter(|e| e.label == Label::Parallel).count();
    let (classifier, mlp_report) = t
        .time("classifier", || train(&dataset, &config.mlp()))
        .map_err(|e| e.in_stage("classifier"))?;

    let (src_idf, tgt_idf) = global_idf(&bins);
    let training_idf = match (src_idf, tgt_idf) {
        (Some(s), Some(g)) => (s, g),
        _ => return Err(Error::invalid("training bins are empty").in_stage("idf")),
    };
    let report = TrainReport {
        seed_pairs: raw_pairs.len(),
        clean_pairs: clean.len(),
        dictionary_entries: dictionary.len(),
        vocabulary: embeddings.len(),
        bins: bins.len(),
        exact_match_preliminary,
        exact_match_scored,
        dataset_parallel,
        dataset_non_parallel: dataset.len() - dataset_parallel,
        epoch_loss: mlp_report.epoch_loss,
        timings: t,
    };
    let artifacts = Artifacts {
        config: config.clone(),
        dictionary,
        embeddings,
        length_model,
        classifier,
        language_detector,
        training_idf,
    };
    Ok((artifacts, report))
}

/// [`train_all`] followed by writing the artifacts and the report to `dir`.
pub fn train_to_dir(raw_pairs: &[(String, String)], config: &RunConfig, dir: &Path) -> Result<(Artifacts, TrainReport)> {
    let (artifacts, report) = train_all(raw_pairs, config)?;
    artifacts.save(dir).map_err(|e| e.in_stage("save"))?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&dir.join(TRAIN_REPORT_FILE), json.as_bytes())?;
    Ok((artifacts, report))
}
