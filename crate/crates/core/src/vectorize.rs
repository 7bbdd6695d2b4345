//! Document vectors: tf-idf weighted sums of bilingual word vectors.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::embeddings::EmbeddingTable;
use crate::ingest::io::{read_to_string, write_file};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    #[default]
    TfIdf,
    /// Term frequency only; the vector is the mean of the token vectors.
    Plain,
}

/// Document frequencies of one language collection.
#[derive(Clone, Debug, PartialEq)]
pub struct TfIdfModel {
    doc_count: usize,
    df: HashMap<String, usize>,
}

impl TfIdfModel {
    pub fn fit<S: AsRef<str>>(docs: &[Vec<S>]) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::invalid("cannot fit idf on an empty collection"));
        }
        let mut df: HashMap<String, usize> = HashMap::new();
        for d in docs {
            let mut uniq: Vec<&str> = d.iter().map(AsRef::as_ref).collect();
            uniq.sort_unstable();
            uniq.dedup();
            for t in uniq {
                *df.entry(t.to_string()).or_default() += 1;
            }
        }
        Ok(Self {
            doc_count: docs.len(),
            df,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn df(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }

    /// Smoothed idf `ln((1 + N) / (1 + df)) + 1`; always positive.
    pub fn idf(&self, term: &str) -> f64 {
        ((1.0 + self.doc_count as f64) / (1.0 + self.df(term) as f64)).ln() + 1.0
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("#docs\t{}\n", self.doc_count);
        let sorted: BTreeMap<_, _> = self.df.iter().collect();
        for (t, c) in sorted {
            out.push_str(&format!("{t}\t{c}\n"));
        }
        out
    }

    pub fn from_tsv(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let doc_count = match lines.next().and_then(|(_, l)| l.strip_prefix("#docs\t")) {
            Some(n) => n
                .parse()
                .map_err(|_| Error::parse(origin, 1, "document count is not an integer"))?,
            None => return Err(Error::parse(origin, 1, "missing `#docs` header")),
        };
        let mut df = HashMap::new();
        for (i, line) in lines {
            let (t, c) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected `term<TAB>df`"))?;
            let c: usize = c
                .parse()
                .map_err(|_| Error::parse(origin, i + 1, "df is not an integer"))?;
            df.insert(t.to_string(), c);
        }
        Ok(Self { doc_count, df })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_tsv().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_tsv(&read_to_string(path)?, &path.display().to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DocVector {
    pub doc_id: String,
    pub vector: Vec<f64>,
    /// Share of the document's tokens that had an embedding.
    pub known_token_mass: f64,
}

impl DocVector {
    pub fn is_zero(&self) -> bool {
        self.vector.iter().all(|&x| x == 0.0)
    }
}

/// Weighted sum of the vectors of the unique terms of `tokens`, looked up as
/// `lang:term`. Terms are accumulated in lexicographic order so the result
/// does not depend on hash iteration order. Terms without a vector count as
/// zero vectors.
pub fn doc_vector<S: AsRef<str>>(
    doc_id: &str,
    tokens: &[S],
    lang: &str,
    table: &EmbeddingTable,
    idf: &TfIdfModel,
    weighting: Weighting,
) -> DocVector {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_ref()).or_default() += 1;
    }
    let mut vector = vec![0.0; table.dim()];
    let mut known = 0;
    let len = tokens.len() as f64;
    for (term, c) in counts {
        let Some(v) = table.get_in(lang, term) else { continue };
        known += c;
        let tf = c as f64 / len;
        let w = match weighting {
            Weighting::TfIdf => tf * idf.idf(term),
            Weighting::Plain => tf,
        };
        for (x, y) in vector.iter_mut().zip(v) {
            *x += w * y;
        }
    }
    DocVector {
        doc_id: doc_id.to_string(),
        vector,
        known_token_mass: if tokens.is_empty() { 0.0 } else { known as f64 / len },
    }
}

/// `doc_id \t v1 \t .. \t vdim` lines.
pub fn vectors_to_tsv(vectors: &[DocVector]) -> String {
    let mut out = String::new();
    for v in vectors {
        out.push_str(&v.doc_id);
        for x in &v.vector {
            out.push('\t');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}
