//! Bilingual word vectors in one shared space.
//!
//! Words of both languages live in a single [`EmbeddingTable`]; keys are
//! namespaced with the language code (`cs:dům`, `en:house`).

mod biskip;
mod normalize;

use std::collections::HashMap;
use std::path::Path;

use crate::ingest::io::{read_to_string, write_file};
use crate::{Error, Result};

pub use biskip::{
    sgns_gradient, sgns_loss, train_biskip, train_biskip_with_stats, BiSkipConfig, SgnsGradient, TrainStats,
};
pub use normalize::{normalize_for_embeddings, NUMBER_TOKEN, UNKNOWN_TOKEN};

pub const DEFAULT_DIM: usize = 40;

/// Table key of `word` in language `lang`.
pub fn key(lang: &str, word: &str) -> String {
    format!("{lang}:{word}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            words: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Adds or replaces the vector of a (namespaced) word.
    pub fn insert(&mut self, word: &str, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::invalid(format!(
                "vector of `{word}` has {} components, table dimension is {}",
                vector.len(),
                self.dim
            )));
        }
        match self.index.get(word) {
            Some(&i) => self.data[i * self.dim..(i + 1) * self.dim].copy_from_slice(vector),
            None => {
                self.index.insert(word.to_string(), self.words.len());
                self.words.push(word.to_string());
                self.data.extend_from_slice(vector);
            }
        }
        Ok(())
    }

    /// Vector of a namespaced word; `None` is a miss and callers substitute
    /// a zero vector.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn get_in(&self, lang: &str, word: &str) -> Option<&[f64]> {
        self.get(&key(lang, word))
    }

    /// Cosine similarity of two stored words.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        Some(cosine(self.get(a)?, self.get(b)?))
    }

    /// Word2vec text format: a `count dim` header, then `word v1 .. vdim`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.words.len(), self.dim);
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            for v in &self.data[i * self.dim..(i + 1) * self.dim] {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(origin, 1, "missing `count dim` header"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let parse_usize = |s: &str| s.parse::<usize>().ok();
        let (count, dim) = match h.as_slice() {
            [c, d] => match (parse_usize(c), parse_usize(d)) {
                (Some(c), Some(d)) if d > 0 => (c, d),
                _ => return Err(Error::parse(origin, 1, "header must be two positive integers `count dim`")),
            },
            _ => return Err(Error::parse(origin, 1, "header must be `count dim`")),
        };
        let mut table = EmbeddingTable::new(dim);
        let mut last = 1;
        for (i, line) in lines {
            last = i + 1;
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-empty line");
            let values: Vec<f64> = fields
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(origin, i + 1, format!("non-numeric component in row of `{word}`")))?;
            if values.len() != dim {
                return Err(Error::parse(
                    origin,
                    i + 1,
                    format!("row of `{word}` has {} components, expected {dim}", values.len()),
                ));
            }
            if table.index.contains_key(word) {
                return Err(Error::parse(origin, i + 1, format!("duplicate word `{word}`")));
            }
            table.insert(word, &values)?;
        }
        if table.len() != count {
            return Err(Error::parse(
                origin,
                last,
                format!("header announces {count} rows, found {}", table.len()),
            ));
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&read_to_string(path)?, &path.display().to_string())
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn load_example() {
        let t = EmbeddingTable::from_text("2 2\na:x 1 0\nb:y 0 1", "mem").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("a:x"), Some(&[1.0, 0.0][..]));
        assert_eq!(t.get_in("b", "y"), Some(&[0.0, 1.0][..]));
        assert_eq!(t.get("c:z"), None);
        assert_eq!(t.to_text(), "2 2\na:x 1 0\nb:y 0 1\n");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let line_of = |text: &str| match EmbeddingTable::from_text(text, "mem") {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("{other:?}"),
        };
        assert_eq!(line_of("2 2\na:x 1 0\nb:y 0 1 5"), 3);
        assert_eq!(line_of("two 2\n"), 1);
        assert_eq!(line_of("1 2\na:x 1 q"), 2);
        assert_eq!(line_of("3 2\na:x 1 0\nb:y 0 1"), 3);
        assert_eq!(line_of("2 2\na:x 1 0\na:x 0 1"), 3);
        assert_eq!(line_of(""), 1);
    }

    #[test]
    fn insert_checks_dimension() {
        let mut t = EmbeddingTable::new(3);
        assert!(t.insert("a", &[1.0]).is_err());
        t.insert("a", &[1.0, 2.0, 3.0]).unwrap();
        t.insert("a", &[0.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("a").unwrap()[0], 0.0);
    }

    proptest! {
        #[test]
        fn save_load_round_trip(rows in prop::collection::btree_map("[a-z]{1,6}", prop::collection::vec(-10.0f64..10.0, 3), 0..10)) {
            let mut t = EmbeddingTable::new(3);
            for (w, v) in &rows {
                t.insert(&key("en", w), v).unwrap();
            }
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("v.txt");
            t.save(&p).unwrap();
            let back = EmbeddingTable::load(&p).unwrap();
            prop_assert_eq!(back.words(), t.words());
            for w in t.words() {
                for (a, b) in back.get(w).unwrap().iter().zip(t.get(w).unwrap()) {
                    prop_assert!((a - b).abs() <= 1e-6);
                }
            }
        }
    }
}
