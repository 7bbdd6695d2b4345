use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ingest::io::{DocRecord, Page};
use crate::ingest::{extract_paragraphs, filter_domains, Bin, Document, LanguageDetector, LanguagePair};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractStats {
    pub pages: usize,
    pub paragraphs: usize,
    /// Paragraphs too short to be language-tagged.
    pub short: usize,
    /// Paragraphs detected as neither language of the pair.
    pub other_language: usize,
    pub domains: usize,
    pub domains_kept: usize,
}

/// Turns HTML pages into a binned document collection, one bin per domain.
///
/// Every `<p>` paragraph of at least `detector.min_chars` characters is
/// language-tagged; domains whose source/target paragraph ratio falls
/// outside `(ratio_low, ratio_high)` are dropped. Document ids are
/// `<page>#<n>` with `n` counting paragraphs of the page from 0.
pub fn extract_dataset(
    pages: &[Page],
    detector: &LanguageDetector,
    langs: &LanguagePair,
    ratio_low: f64,
    ratio_high: f64,
) -> (Vec<DocRecord>, ExtractStats) {
    let mut stats = ExtractStats {
        pages: pages.len(),
        ..Default::default()
    };
    let mut records = Vec::new();
    let mut bins: BTreeMap<&str, Bin> = BTreeMap::new();
    for page in pages {
        bins.entry(&page.domain).or_insert_with(|| Bin::new(page.domain.clone()));
        for (n, text) in extract_paragraphs(&page.html).into_iter().enumerate() {
            stats.paragraphs += 1;
            if text.chars().count() < detector.min_chars {
                stats.short += 1;
                continue;
            }
            let lang = match detector.detect(&text) {
                Some(l) if l == langs.source || l == langs.target => l.to_string(),
                _ => {
                    stats.other_language += 1;
                    continue;
                }
            };
            let doc_id = format!("{}#{n}", page.name);
            let bin = bins.get_mut(page.domain.as_str()).expect("inserted above");
            let doc = Document::new(doc_id.clone(), page.domain.clone(), lang.clone(), String::new());
            if lang == langs.source {
                bin.source_docs.push(doc);
            } else {
                bin.target_docs.push(doc);
            }
            records.push(DocRecord {
                bin_id: page.domain.clone(),
                lang,
                doc_id,
                text,
            });
        }
    }
    stats.domains = bins.len();
    let kept: BTreeSet<String> = filter_domains(bins.into_values().collect(), ratio_low, ratio_high)
        .into_iter()
        .map(|b| b.id)
        .collect();
    stats.domains_kept = kept.len();
    records.retain(|r| kept.contains(&r.bin_id));
    records.sort_by(|a, b| a.bin_id.cmp(&b.bin_id));
    (records, stats)
}
