use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunConfig;
use crate::classifier::Mlp;
use crate::embeddings::EmbeddingTable;
use crate::ingest::io::{read_to_string, write_file};
use crate::ingest::{LanguageDetector, LanguagePair};
use crate::scoring::LengthModel;
use crate::vectorize::TfIdfModel;
use crate::wordalign::Dictionary;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
const FORMAT_VERSION: u32 = 1;

const DICTIONARY_FILE: &str = "dictionary.tsv";
const EMBEDDINGS_FILE: &str = "embeddings.txt";
const LENGTH_FILE: &str = "length_model.json";
const CLASSIFIER_FILE: &str = "classifier.json";
const LANGID_FILE: &str = "langid.json";
const SOURCE_IDF_FILE: &str = "idf.source.tsv";
const TARGET_IDF_FILE: &str = "idf.target.tsv";

/// Text processing applied before any model sees a token. Recorded in the
/// manifest so artifacts are never applied to differently prepared input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub lowercase: bool,
    pub tokenizer: String,
    pub embedding_normalization: String,
}

impl Preprocessing {
    pub fn current() -> Self {
        Self {
            lowercase: true,
            tokenizer: "unicode-word-punct/1".into(),
            embedding_normalization: "digit-runs-unk/1".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub languages: LanguagePair,
    pub preprocessing: Preprocessing,
    pub config: RunConfig,
    /// SHA-256 of every artifact file.
    pub files: BTreeMap<String, String>,
}

/// Everything `align` needs, as produced by training.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifacts {
    pub config: RunConfig,
    pub dictionary: Dictionary,
    pub embeddings: EmbeddingTable,
    pub length_model: LengthModel,
    pub classifier: Mlp,
    pub language_detector: LanguageDetector,
    /// Idf tables of the training bins, kept for inspection.
    pub training_idf: (TfIdfModel, TfIdfModel),
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Artifacts {
    pub fn langs(&self) -> LanguagePair {
        self.config.langs()
    }

    fn files(&self) -> Vec<(&'static str, Vec<u8>)> {
        vec![
            (DICTIONARY_FILE, self.dictionary.to_tsv().into_bytes()),
            (EMBEDDINGS_FILE, self.embeddings.to_text().into_bytes()),
            (
                LENGTH_FILE,
                serde_json::to_string_pretty(&self.length_model)
                    .expect("plain struct serializes")
                    .into_bytes(),
            ),
            (CLASSIFIER_FILE, self.classifier.to_json().into_bytes()),
            (LANGID_FILE, self.language_detector.to_json().into_bytes()),
            (SOURCE_IDF_FILE, self.training_idf.0.to_tsv().into_bytes()),
            (TARGET_IDF_FILE, self.training_idf.1.to_tsv().into_bytes()),
        ]
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            format_version: FORMAT_VERSION,
            languages: self.langs(),
            preprocessing: Preprocessing::current(),
            config: self.config.clone(),
            files: self.files().iter().map(|(n, b)| (n.to_string(), sha256(b))).collect(),
        }
    }

    /// Writes all files into a fresh sibling directory and renames it into
    /// place, so a failed write never leaves a half-populated `dir`. An
    /// existing `dir` is replaced only if it holds a previous manifest.
    pub fn save(&self, dir: &Path) -> Result<Manifest> {
        if dir.exists() && !dir.join(MANIFEST_FILE).exists() && dir.read_dir().map_or(true, |mut d| d.next().is_some()) {
            return Err(Error::invalid(format!(
                "{} exists and is not an artifact directory",
                dir.display()
            )));
        }
        let staging = staging_dir(dir);
        let result = (|| {
            let manifest = self.manifest();
            for (name, bytes) in self.files() {
                write_file(&staging.join(name), &bytes)?;
            }
            let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            write_file(&staging.join(MANIFEST_FILE), json.as_bytes())?;
            if dir.exists() {
                std::fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::rename(&staging, dir).map_err(|e| Error::io(dir, e))?;
            Ok(manifest)
        })();
        if result.is_err() {
            let _ = std::fs::remove_dir_all(&staging);
        }
        result
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let manifest: Manifest = serde_json::from_str(&read_to_string(&manifest_path)?)
            .map_err(|e| Error::format("manifest", e.to_string()))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::format(
                "manifest",
                format!("format version {} is not supported", manifest.format_version),
            ));
        }
        if manifest.preprocessing != Preprocessing::current() {
            return Err(Error::format(
                "manifest",
                format!(
                    "artifacts were trained with preprocessing {:?}, this build uses {:?}",
                    manifest.preprocessing,
                    Preprocessing::current()
                ),
            ));
        }
        let read = |name: &str| -> Result<String> {
            let path = dir.join(name);
            let text = read_to_string(&path)?;
            match manifest.files.get(name) {
                Some(h) if *h == sha256(text.as_bytes()) => Ok(text),
                Some(_) => Err(Error::format("artifact", format!("{} does not match its manifest hash", path.display()))),
                None => Err(Error::format("manifest", format!("no entry for {name}"))),
            }
        };
        let config = manifest.config.clone();
        let dictionary = Dictionary::from_tsv(&read(DICTIONARY_FILE)?, DICTIONARY_FILE, config.dictionary_threshold)?;
        let embeddings = EmbeddingTable::from_text(&read(EMBEDDINGS_FILE)?, EMBEDDINGS_FILE)?;
        let length_model = LengthModel::from_json(&read(LENGTH_FILE)?)?;
        let classifier = Mlp::from_json(&read(CLASSIFIER_FILE)?)?;
        let language_detector = LanguageDetector::from_json(&read(LANGID_FILE)?)?;
        let training_idf = (
            TfIdfModel::from_tsv(&read(SOURCE_IDF_FILE)?, SOURCE_IDF_FILE)?,
            TfIdfModel::from_tsv(&read(TARGET_IDF_FILE)?, TARGET_IDF_FILE)?,
        );
        if embeddings.dim() != config.dim {
            return Err(Error::format(
                "artifact",
                format!("embeddings have dimension {}, config says {}", embeddings.dim(), config.dim),
            ));
        }
        Ok(Self {
            config,
            dictionary,
            embeddings,
            length_model,
            classifier,
            language_detector,
            training_idf,
        })
    }
}

fn staging_dir(dir: &Path) -> PathBuf {
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "artifacts".into());
    dir.with_file_name(format!(".{name}.staging-{}", std::process::id()))
}
