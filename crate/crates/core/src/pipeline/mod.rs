//! Training, alignment and evaluation drivers behind the `bimine` binary.

mod artifacts;
mod evaluate;
mod extract;
mod output;
mod realign;
mod run;
mod train;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::annindex::{BuildParams, SearchParams};
use crate::classifier::TrainConfig;
use crate::embeddings::BiSkipConfig;
use crate::ingest::io::read_to_string;
use crate::ingest::LanguagePair;
use crate::vectorize::Weighting;
use crate::{Error, Result};

pub use artifacts::{Artifacts, Manifest, Preprocessing, MANIFEST_FILE};
pub use evaluate::{evaluate, BinEval, EvalReport};
pub use extract::{extract_dataset, ExtractStats};
pub use output::{
    read_gold, read_ranked_tops, read_refined, write_corpus, write_gold, write_preliminary, write_refined,
    write_scored, top_candidates, GoldPair, TopCandidate,
};
pub use realign::{realign_experiment, split_head_tail, RealignOptions, RealignReport, RealignRun};
pub use run::{align, AlignOutput, BinOutput, Decision, RefinedRecord};
pub use train::{train_all, train_to_dir, TrainReport, TRAIN_REPORT_FILE};

/// Whether idf statistics are pooled over all bins of a run or kept per bin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdfScope {
    #[default]
    Global,
    Bin,
}

/// Every tunable of a run. Serialized as a flat TOML table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub source_lang: String,
    pub target_lang: String,
    /// 0 uses every available core.
    pub workers: usize,

    pub max_tokens: usize,
    pub ibm1_iterations: usize,
    pub dictionary_threshold: f64,

    pub dim: usize,
    pub skipgram_iterations: usize,
    pub window: usize,
    pub negatives: usize,
    pub skipgram_learning_rate: f64,
    pub min_count: usize,

    pub bin_size: usize,
    pub idf_scope: IdfScope,
    pub weighting: Weighting,

    pub n_trees: usize,
    pub leaf_capacity: usize,
    pub search_nodes: usize,
    pub k: usize,

    pub sample_fraction: f64,
    pub hidden: usize,
    pub epochs: usize,
    pub mlp_learning_rate: f64,
    pub threshold: f64,

    pub min_paragraph_chars: usize,
    pub ratio_low: f64,
    pub ratio_high: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sg = BiSkipConfig::default();
        let mlp = TrainConfig::default();
        Self {
            seed: 1,
            source_lang: "cs".into(),
            target_lang: "en".into(),
            workers: 0,
            max_tokens: crate::ingest::DEFAULT_MAX_TOKENS,
            ibm1_iterations: crate::wordalign::DEFAULT_ITERATIONS,
            dictionary_threshold: crate::wordalign::DEFAULT_THRESHOLD,
            dim: sg.dim,
            skipgram_iterations: sg.iterations,
            window: sg.window,
            negatives: sg.negatives,
            skipgram_learning_rate: sg.learning_rate,
            min_count: sg.min_count,
            bin_size: crate::ingest::DEFAULT_BIN_SIZE,
            idf_scope: IdfScope::Global,
            weighting: Weighting::TfIdf,
            n_trees: crate::annindex::DEFAULT_TREES,
            leaf_capacity: crate::annindex::DEFAULT_LEAF_CAPACITY,
            search_nodes: crate::annindex::DEFAULT_SEARCH_NODES,
            k: crate::annindex::DEFAULT_K,
            sample_fraction: crate::classifier::DEFAULT_SAMPLE_FRACTION,
            hidden: mlp.hidden,
            epochs: mlp.epochs,
            mlp_learning_rate: mlp.learning_rate,
            threshold: crate::classifier::REALIGN_THRESHOLD,
            min_paragraph_chars: crate::ingest::DEFAULT_MIN_PARAGRAPH_CHARS,
            ratio_low: crate::ingest::DEFAULT_RATIO_LOW,
            ratio_high: crate::ingest::DEFAULT_RATIO_HIGH,
        }
    }
}

// Stage seeds are derived from the run seed so stages stay independent.
const SKIPGRAM_SALT: u64 = 0x51;
const ANN_SALT: u64 = 0xa2;
const DATASET_SALT: u64 = 0xd5;
const MLP_SALT: u64 = 0x3c;

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::format("config", e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read_to_string(path)?).map_err(|e| match e {
            Error::Format { message, .. } => Error::parse(path.display().to_string(), 0, message),
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    /// Applies `key=value` overrides; values are read as TOML scalars and
    /// fall back to plain strings.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut table = toml::Table::try_from(self).expect("flat config serializes");
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("override `{o}` is not key=value")))?;
            let (k, v) = (k.trim(), v.trim());
            if !table.contains_key(k) {
                return Err(Error::invalid(format!("unknown setting `{k}`")));
            }
            let value = format!("x = {v}")
                .parse::<toml::Table>()
                .ok()
                .and_then(|mut t| t.remove("x"))
                .unwrap_or_else(|| toml::Value::String(v.to_string()));
            table.insert(k.to_string(), value);
        }
        let c: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::invalid(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(Error::invalid(what.to_string())) };
        check(!self.source_lang.is_empty() && !self.target_lang.is_empty(), "language codes must be non-empty")?;
        check(self.source_lang != self.target_lang, "source and target languages must differ")?;
        check(self.max_tokens >= 1, "max_tokens must be at least 1")?;
        check(self.ibm1_iterations >= 1, "ibm1_iterations must be at least 1")?;
        check((0.0..1.0).contains(&self.dictionary_threshold), "dictionary_threshold must lie in [0, 1)")?;
        check(self.dim >= 1, "dim must be at least 1")?;
        check(self.skipgram_iterations >= 1, "skipgram_iterations must be at least 1")?;
        check(self.window >= 1, "window must be at least 1")?;
        check(self.skipgram_learning_rate > 0.0, "skipgram_learning_rate must be positive")?;
        check(self.bin_size >= 1, "bin_size must be at least 1")?;
        check(self.n_trees >= 1, "n_trees must be at least 1")?;
        check(self.leaf_capacity >= 1, "leaf_capacity must be at least 1")?;
        check(self.k >= 1, "k must be at least 1")?;
        check(self.search_nodes >= self.n_trees, "search_nodes must be at least n_trees")?;
        check(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0, "sample_fraction must lie in (0, 1]")?;
        check(self.hidden >= 1, "hidden must be at least 1")?;
        check(self.epochs >= 1, "epochs must be at least 1")?;
        check(self.mlp_learning_rate > 0.0, "mlp_learning_rate must be positive")?;
        check((0.0..=1.0).contains(&self.threshold), "threshold must lie in [0, 1]")?;
        check(self.ratio_low < self.ratio_high, "ratio_low must be below ratio_high")?;
        Ok(())
    }

    pub fn langs(&self) -> LanguagePair {
        LanguagePair::new(self.source_lang.clone(), self.target_lang.clone())
    }

    /// The same run with source and target roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            source_lang: self.target_lang.clone(),
            target_lang: self.source_lang.clone(),
            ..self.clone()
        }
    }

    pub fn skipgram(&self) -> BiSkipConfig {
        BiSkipConfig {
            dim: self.dim,
            iterations: self.skipgram_iterations,
            window: self.window,
            negatives: self.negatives,
            learning_rate: self.skipgram_learning_rate,
            min_count: self.min_count,
            seed: self.seed ^ SKIPGRAM_SALT,
        }
    }

    pub fn build_params(&self) -> BuildParams {
        BuildParams {
            n_trees: self.n_trees,
            leaf_capacity: self.leaf_capacity,
            seed: self.seed ^ ANN_SALT,
        }
    }

    pub fn search_params(&self) -> SearchParams {
        SearchParams {
            k: self.k,
            search_nodes: self.search_nodes,
        }
    }

    pub fn mlp(&self) -> TrainConfig {
        TrainConfig {
            hidden: self.hidden,
            epochs: self.epochs,
            learning_rate: self.mlp_learning_rate,
            seed: self.seed ^ MLP_SALT,
        }
    }

    pub fn dataset_seed(&self) -> u64 {
        self.seed ^ DATASET_SALT
    }

    /// Runs `f` on a pool of `workers` threads (all cores for 0).
    pub fn with_workers<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// Wall-clock seconds spent per stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings(pub BTreeMap<String, f64>);

impl Timings {
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.add(stage, start.elapsed().as_secs_f64());
        out
    }

    pub fn add(&mut self, stage: &str, secs: f64) {
        *self.0.entry(stage.to_string()).or_default() += secs;
    }

    pub fn merge(&mut self, other: &Timings) {
        for (k, v) in &other.0 {
            self.add(k, *v);
        }
    }
}
