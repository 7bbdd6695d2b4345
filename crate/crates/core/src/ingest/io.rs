//! Plain-text and TSV formats for seed corpora, document collections and
//! HTML pages.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{Bin, Document, LanguagePair};
use crate::{Error, Result};

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))
}

/// Reads a sentence-aligned corpus stored as two files, line `i` of one
/// aligned with line `i` of the other.
pub fn read_seed_files(src: &Path, tgt: &Path) -> Result<Vec<(String, String)>> {
    let s = read_lines(src)?;
    let t = read_lines(tgt)?;
    if s.len() != t.len() {
        return Err(Error::invalid(format!(
            "{} has {} lines but {} has {}",
            src.display(),
            s.len(),
            tgt.display(),
            t.len()
        )));
    }
    Ok(s.into_iter().zip(t).collect())
}

/// Reads a sentence-aligned corpus stored as `src \t tgt` lines.
pub fn read_seed_tsv(path: &Path) -> Result<Vec<(String, String)>> {
    read_lines(path)?
        .into_iter()
        .enumerate()
        .map(|(i, line)| match line.split_once('\t') {
            Some((s, t)) => Ok((unescape(s), unescape(t))),
            None => Err(Error::parse(path.display().to_string(), i + 1, "expected `source<TAB>target`")),
        })
        .collect()
}

pub fn write_seed_tsv(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    let mut out = String::new();
    for (s, t) in pairs {
        out.push_str(&escape(s));
        out.push('\t');
        out.push_str(&escape(t));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Escapes backslash, tab, newline and carriage return for a TSV field.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

/// One row of a document collection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DocRecord {
    pub bin_id: String,
    pub lang: String,
    pub doc_id: String,
    pub text: String,
}

/// Reads a `bin_id \t lang \t doc_id \t text` document collection.
pub fn read_dataset(path: &Path) -> Result<Vec<DocRecord>> {
    let mut records = Vec::new();
    for (i, line) in read_lines(path)?.into_iter().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(4, '\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path.display().to_string(),
                i + 1,
                "expected `bin_id<TAB>lang<TAB>doc_id<TAB>text`",
            ));
        }
        records.push(DocRecord {
            bin_id: unescape(fields[0]),
            lang: unescape(fields[1]),
            doc_id: unescape(fields[2]),
            text: unescape(fields[3]),
        });
    }
    Ok(records)
}

pub fn write_dataset(path: &Path, records: &[DocRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        for (i, f) in [&r.bin_id, &r.lang, &r.doc_id, &r.text].into_iter().enumerate() {
            if i > 0 {
                out.push('\t');
            }
            out.push_str(&escape(f));
        }
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

/// Groups records into preprocessed bins ordered by bin id. Records in
/// languages other than the pair are dropped and counted.
pub fn records_to_bins(records: &[DocRecord], langs: &LanguagePair) -> Result<(Vec<Bin>, usize)> {
    let mut bins: BTreeMap<String, Bin> = BTreeMap::new();
    let mut seen = std::collections::HashSet::new();
    let mut dropped = 0;
    for r in records {
        let is_source = r.lang == langs.source;
        if !is_source && r.lang != langs.target {
            dropped += 1;
            continue;
        }
        if !seen.insert((r.bin_id.clone(), r.lang.clone(), r.doc_id.clone())) {
            return Err(Error::invalid(format!(
                "duplicate document id {} in bin {} ({})",
                r.doc_id, r.bin_id, r.lang
            )));
        }
        let mut doc = Document::new(r.doc_id.clone(), r.bin_id.clone(), r.lang.clone(), r.text.clone());
        doc.preprocess();
        let bin = bins.entry(r.bin_id.clone()).or_insert_with(|| Bin::new(r.bin_id.clone()));
        if is_source {
            bin.source_docs.push(doc);
        } else {
            bin.target_docs.push(doc);
        }
    }
    Ok((bins.into_values().collect(), dropped))
}

/// An HTML page belonging to a web domain.
#[derive(Clone, Debug)]
pub struct Page {
    pub domain: String,
    pub name: String,
    pub html: String,
}

/// Reads `<dir>/<domain>/<page>.html`, sorted by domain and page name.
pub fn read_html_dir(dir: &Path) -> Result<Vec<Page>> {
    let mut pages = Vec::new();
    let mut domains: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    domains.sort();
    for d in domains {
        let domain = d.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let mut files: Vec<_> = fs::read_dir(&d)
            .map_err(|e| Error::io(&d, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "html" || x == "htm"))
            .collect();
        files.sort();
        for f in files {
            let bytes = fs::read(&f).map_err(|e| Error::io(&f, e))?;
            pages.push(Page {
                domain: domain.clone(),
                name: f.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
                html: String::from_utf8_lossy(&bytes).into_owned(),
            });
        }
    }
    Ok(pages)
}

/// Reads `domain \t url \t html` rows (html escaped like any TSV field).
pub fn read_html_tsv(path: &Path) -> Result<Vec<Page>> {
    read_lines(path)?
        .into_iter()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.splitn(3, '\t').collect();
            if f.len() != 3 {
                return Err(Error::parse(path.display().to_string(), i + 1, "expected `domain<TAB>url<TAB>html`"));
            }
            Ok(Page {
                domain: unescape(f[0]),
                name: unescape(f[1]),
                html: unescape(f[2]),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn escape_round_trip(s in any::<String>()) {
            let e = escape(&s);
            prop_assert!(!e.contains('\t') && !e.contains('\n'));
            prop_assert_eq!(unescape(&e), s);
        }
    }

    #[test]
    fn dataset_round_trip_and_binning() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.tsv");
        let records = vec![
            DocRecord { bin_id: "b.cz".into(), lang: "en".into(), doc_id: "1".into(), text: "Hello\tthere.\nBye".into() },
            DocRecord { bin_id: "a.cz".into(), lang: "cs".into(), doc_id: "1".into(), text: "Ahoj.".into() },
            DocRecord { bin_id: "a.cz".into(), lang: "de".into(), doc_id: "2".into(), text: "Hallo.".into() },
        ];
        write_dataset(&path, &records).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back, records);
        let (bins, dropped) = records_to_bins(&back, &LanguagePair::default()).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(bins.iter().map(|b| b.id.as_str()).collect::<Vec<_>>(), vec!["a.cz", "b.cz"]);
        assert_eq!(bins[1].target_docs[0].tokens(), &["hello", "there", ".", "bye"]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let r = DocRecord { bin_id: "b".into(), lang: "en".into(), doc_id: "1".into(), text: "x".into() };
        assert!(records_to_bins(&[r.clone(), r], &LanguagePair::default()).is_err());
    }

    #[test]
    fn seed_files_must_align() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        fs::write(&a, "x\ny\n").unwrap();
        fs::write(&b, "x\n").unwrap();
        assert!(read_seed_files(&a, &b).is_err());
        fs::write(&b, "u\nv\n").unwrap();
        assert_eq!(read_seed_files(&a, &b).unwrap().len(), 2);
        let missing = read_seed_files(&dir.path().join("nope"), &b).unwrap_err();
        assert!(missing.to_string().contains("nope"));
    }

    #[test]
    fn malformed_dataset_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.tsv");
        fs::write(&path, "b\ten\t1\ttext\nbroken line\n").unwrap();
        match read_dataset(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
