//! Deterministic synthetic bilingual corpora.
//!
//! Two artificial languages are generated from disjoint syllable inventories
//! (one with Czech-like, one with English-like orthography). A sentence is a
//! sequence of concepts drawn from a topic mixture plus function words; its
//! translation maps every concept through a known lexicon with synonyms,
//! multi-word translations, target-only articles, dropped function words and
//! local reordering. Numbers are copied verbatim.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, WeightedIndex};

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub pairs: usize,
    pub concepts: usize,
    pub function_words: usize,
    pub topics: usize,
    pub topic_size: usize,
    /// Chance that a content word is drawn from the sentence topic rather
    /// than the whole vocabulary.
    pub topic_weight: f64,
    /// Inclusive range of content words per sentence.
    pub min_content: usize,
    pub max_content: usize,
    /// Share of sentences with only one to three content words.
    pub short_fraction: f64,
    /// Chance that a concept is left out of the translation or rendered as
    /// an unrelated word.
    pub loose_translation: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            pairs: 40_000,
            concepts: 3_000,
            function_words: 24,
            topics: 8,
            topic_size: 150,
            topic_weight: 0.9,
            min_content: 4,
            max_content: 14,
            short_fraction: 0.3,
            loose_translation: 0.15,
            seed: 20_170_417,
        }
    }
}

const SRC_ONSETS: &[&str] = &[
    "b", "č", "d", "h", "ch", "j", "k", "l", "m", "n", "p", "r", "ř", "s", "š", "t", "v", "z", "ž", "st",
    "pr", "kr", "tř", "zn", "sv",
];
const SRC_VOWELS: &[&str] = &["a", "á", "e", "é", "ě", "i", "í", "o", "u", "ů", "y", "ý"];
const SRC_CODAS: &[&str] = &["", "", "", "", "n", "k", "l", "m", "s", "t", "ch", "j", "ť"];
const TGT_ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "l", "m", "n", "p", "r", "s", "t", "w", "th", "sh", "wh", "st", "br",
    "gr", "pl", "qu", "fr",
];
const TGT_VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ee", "oo", "ea", "ou", "ai", "y"];
const TGT_CODAS: &[&str] = &["", "", "", "ng", "nd", "ck", "ll", "t", "s", "r", "rk", "x", "gh"];

struct Orthography {
    onsets: &'static [&'static str],
    vowels: &'static [&'static str],
    codas: &'static [&'static str],
}

const SRC: Orthography = Orthography {
    onsets: SRC_ONSETS,
    vowels: SRC_VOWELS,
    codas: SRC_CODAS,
};
const TGT: Orthography = Orthography {
    onsets: TGT_ONSETS,
    vowels: TGT_VOWELS,
    codas: TGT_CODAS,
};

impl Orthography {
    fn word(&self, rng: &mut ChaCha8Rng, syllables: usize, taken: &mut HashSet<String>) -> String {
        loop {
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(self.onsets.choose(rng).unwrap());
                w.push_str(self.vowels.choose(rng).unwrap());
            }
            w.push_str(self.codas.choose(rng).unwrap());
            if taken.insert(w.clone()) {
                return w;
            }
        }
    }
}

/// The known translation lexicon of a synthetic language pair.
#[derive(Clone, Debug)]
pub struct Lexicon {
    pub source_words: Vec<String>,
    /// Alternative translations per concept with their probabilities; an
    /// alternative may span several target words.
    pub translations: Vec<Vec<(Vec<String>, f64)>>,
    pub source_function: Vec<String>,
    /// Target counterpart of each source function word, if any.
    pub target_function: Vec<Option<String>>,
    /// Target-only words inserted before content words.
    pub articles: Vec<String>,
}

/// One unit of a generated sentence.
#[derive(Clone, Debug)]
enum Unit {
    Concept(usize),
    Function(usize),
    Number(String),
    Comma,
}

#[derive(Clone, Debug)]
pub struct SynthLanguage {
    pub config: SynthConfig,
    pub lexicon: Lexicon,
    topics: Vec<Vec<usize>>,
    concept_dist: WeightedIndex<f64>,
    function_dist: WeightedIndex<f64>,
}

impl SynthLanguage {
    pub fn new(config: SynthConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut src_taken = HashSet::new();
        let mut tgt_taken = HashSet::new();

        let source_function: Vec<String> =
            (0..config.function_words).map(|_| SRC.word(&mut rng, 1, &mut src_taken)).collect();
        let target_function: Vec<Option<String>> = (0..config.function_words)
            .map(|i| (i % 5 != 4).then(|| TGT.word(&mut rng, 1, &mut tgt_taken)))
            .collect();
        let articles = vec![
            TGT.word(&mut rng, 1, &mut tgt_taken),
            TGT.word(&mut rng, 1, &mut tgt_taken),
        ];

        let syllables = |rank: usize, rng: &mut ChaCha8Rng| -> usize {
            let base = if rank < 100 { 1 } else if rank < 800 { 2 } else { 3 };
            (base + usize::from(rng.gen_bool(0.3))).min(4)
        };
        let mut source_words = Vec::with_capacity(config.concepts);
        let mut translations = Vec::with_capacity(config.concepts);
        for rank in 0..config.concepts {
            let n = syllables(rank, &mut rng);
            source_words.push(SRC.word(&mut rng, n, &mut src_taken));
            let alternatives = if rng.gen_bool(0.15) { 2 } else { 1 };
            let mut alts = Vec::new();
            for a in 0..alternatives {
                let words = if rng.gen_bool(0.1) { 2 } else { 1 };
                let phrase = (0..words)
                    .map(|_| {
                        let n = syllables(rank, &mut rng);
                        TGT.word(&mut rng, n, &mut tgt_taken)
                    })
                    .collect();
                let p = match (alternatives, a) {
                    (1, _) => 1.0,
                    (_, 0) => 0.7,
                    _ => 0.3,
                };
                alts.push((phrase, p));
            }
            translations.push(alts);
        }

        let mut all: Vec<usize> = (0..config.concepts).collect();
        let topics = (0..config.topics)
            .map(|_| {
                all.shuffle(&mut rng);
                let mut t = all[..config.topic_size.min(config.concepts)].to_vec();
                t.sort_unstable();
                t
            })
            .collect();

        let concept_dist = WeightedIndex::new((0..config.concepts).map(|r| 1.0 / (r as f64 + 2.0).powf(0.9))).unwrap();
        let function_dist =
            WeightedIndex::new((0..config.function_words).map(|r| 1.0 / (r as f64 + 1.0))).unwrap();

        Self {
            config,
            lexicon: Lexicon {
                source_words,
                translations,
                source_function,
                target_function,
                articles,
            },
            topics,
            concept_dist,
            function_dist,
        }
    }

    fn units(&self, rng: &mut ChaCha8Rng) -> Vec<Unit> {
        let topic = &self.topics[rng.gen_range(0..self.topics.len())];
        let n = if rng.gen_bool(self.config.short_fraction) {
            rng.gen_range(1..=3)
        } else {
            rng.gen_range(self.config.min_content..=self.config.max_content)
        };
        let mut units = Vec::new();
        for _ in 0..n {
            let c = if rng.gen_bool(self.config.topic_weight) {
                topic[rng.gen_range(0..topic.len())]
            } else {
                self.concept_dist.sample(rng)
            };
            units.push(Unit::Concept(c));
            if rng.gen_bool(0.35) {
                units.push(Unit::Function(self.function_dist.sample(rng)));
            }
            if rng.gen_bool(0.04) {
                units.push(Unit::Comma);
            }
        }
        if rng.gen_bool(0.15) {
            let digits = rng.gen_range(1..=4);
            let num: String = (0..digits).map(|_| char::from(b'0' + rng.gen_range(0..10u8))).collect();
            let at = rng.gen_range(0..=units.len());
            units.insert(at, Unit::Number(num));
        }
        units
    }

    fn render_source(&self, units: &[Unit]) -> String {
        let words: Vec<&str> = units
            .iter()
            .map(|u| match u {
                Unit::Concept(c) => self.lexicon.source_words[*c].as_str(),
                Unit::Function(f) => self.lexicon.source_function[*f].as_str(),
                Unit::Number(n) => n.as_str(),
                Unit::Comma => ",",
            })
            .collect();
        finish(&words)
    }

    fn render_target(&self, units: &[Unit], rng: &mut ChaCha8Rng) -> String {
        let mut groups: Vec<Vec<String>> = Vec::new();
        for u in units {
            let group = match u {
                Unit::Concept(c) => {
                    let mut c = *c;
                    if rng.gen_bool(self.config.loose_translation) {
                        if rng.gen_bool(0.5) {
                            continue;
                        }
                        c = self.concept_dist.sample(rng);
                    }
                    let alts = &self.lexicon.translations[c];
                    let pick = if alts.len() > 1 && rng.gen_bool(alts[1].1) { 1 } else { 0 };
                    let mut g = Vec::new();
                    if rng.gen_bool(0.25) {
                        g.push(self.lexicon.articles[rng.gen_range(0..2)].clone());
                    }
                    g.extend(alts[pick].0.iter().cloned());
                    g
                }
                Unit::Function(f) => match &self.lexicon.target_function[*f] {
                    Some(w) => vec![w.clone()],
                    None => continue,
                },
                Unit::Number(n) => vec![n.clone()],
                Unit::Comma => vec![",".to_string()],
            };
            groups.push(group);
        }
        let mut i = 0;
        while i + 1 < groups.len() {
            if rng.gen_bool(0.1) {
                groups.swap(i, i + 1);
                i += 2;
            } else {
                i += 1;
            }
        }
        let words: Vec<String> = groups.into_iter().flatten().collect();
        let refs: Vec<&str> = words.iter().map(String::as_str).collect();
        finish(&refs)
    }

    /// A source sentence and its translation.
    pub fn sentence_pair(&self, rng: &mut ChaCha8Rng) -> (String, String) {
        let units = self.units(rng);
        let src = self.render_source(&units);
        let tgt = self.render_target(&units, rng);
        (src, tgt)
    }

    pub fn source_sentence(&self, rng: &mut ChaCha8Rng) -> String {
        let units = self.units(rng);
        self.render_source(&units)
    }

    pub fn target_sentence(&self, rng: &mut ChaCha8Rng) -> String {
        let units = self.units(rng);
        self.render_target(&units, rng)
    }

    /// A parallel paragraph of `sentences` sentence pairs.
    pub fn paragraph_pair(&self, rng: &mut ChaCha8Rng, sentences: usize) -> (String, String) {
        let (s, t): (Vec<String>, Vec<String>) = (0..sentences).map(|_| self.sentence_pair(rng)).unzip();
        (s.join(" "), t.join(" "))
    }

    pub fn source_paragraph(&self, rng: &mut ChaCha8Rng, sentences: usize) -> String {
        (0..sentences).map(|_| self.source_sentence(rng)).collect::<Vec<_>>().join(" ")
    }

    pub fn target_paragraph(&self, rng: &mut ChaCha8Rng, sentences: usize) -> String {
        (0..sentences).map(|_| self.target_sentence(rng)).collect::<Vec<_>>().join(" ")
    }
}

fn finish(words: &[&str]) -> String {
    let mut s = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 && *w != "," {
            s.push(' ');
        }
        if i == 0 {
            let mut cs = w.chars();
            if let Some(first) = cs.next() {
                s.extend(first.to_uppercase());
                s.push_str(cs.as_str());
            }
        } else {
            s.push_str(w);
        }
    }
    s.push('.');
    s
}

/// A generated parallel corpus of raw (untokenized) sentence pairs.
#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub language: SynthLanguage,
    pub pairs: Vec<(String, String)>,
}

impl SynthCorpus {
    pub fn generate(config: &SynthConfig) -> Self {
        let language = SynthLanguage::new(config.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_c0de);
        let pairs = (0..config.pairs).map(|_| language.sentence_pair(&mut rng)).collect();
        Self { language, pairs }
    }
}
