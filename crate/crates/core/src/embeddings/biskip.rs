use std::collections::HashMap;

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::WeightedAliasIndex;

use super::{key, EmbeddingTable, DEFAULT_DIM};
use crate::ingest::{LanguagePair, SeedPair};
use crate::wordalign::Alignment;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct BiSkipConfig {
    pub dim: usize,
    pub iterations: usize,
    pub window: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    /// Words seen fewer times than this get no vector.
    pub min_count: usize,
    pub seed: u64,
}

impl Default for BiSkipConfig {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            iterations: 10,
            window: 5,
            negatives: 5,
            learning_rate: 0.025,
            min_count: 5,
            seed: 1,
        }
    }
}

/// Number of (center, context) updates every word received as a center.
#[derive(Clone, Debug, Default)]
pub struct TrainStats {
    pub monolingual: HashMap<String, u64>,
    pub crosslingual: HashMap<String, u64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative-sampling loss of one center vector `v` against a positive output
/// vector and a set of negative output vectors:
/// `-ln σ(u⁺·v) - Σ ln σ(-u⁻·v)`.
pub fn sgns_loss(v: &[f64], positive: &[f64], negatives: &[&[f64]]) -> f64 {
    let mut loss = -sigmoid(dot(positive, v)).ln();
    for u in negatives {
        loss -= sigmoid(-dot(u, v)).ln();
    }
    loss
}

#[derive(Clone, Debug, PartialEq)]
pub struct SgnsGradient {
    pub center: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Analytic gradient of [`sgns_loss`].
pub fn sgns_gradient(v: &[f64], positive: &[f64], negatives: &[&[f64]]) -> SgnsGradient {
    let gp = sigmoid(dot(positive, v)) - 1.0;
    let mut center: Vec<f64> = positive.iter().map(|u| gp * u).collect();
    let mut neg = Vec::with_capacity(negatives.len());
    for u in negatives {
        let g = sigmoid(dot(u, v));
        for (c, x) in center.iter_mut().zip(u.iter()) {
            *c += g * x;
        }
        neg.push(v.iter().map(|x| g * x).collect());
    }
    SgnsGradient {
        center,
        positive: v.iter().map(|x| gp * x).collect(),
        negatives: neg,
    }
}

struct Model {
    dim: usize,
    input: Vec<f64>,
    output: Vec<f64>,
    scratch: Vec<f64>,
}

impl Model {
    /// One gradient step on the pair (center, context) plus sampled negatives.
    fn step(&mut self, center: usize, context: usize, negatives: &[usize], lr: f64) {
        let d = self.dim;
        self.scratch.iter_mut().for_each(|x| *x = 0.0);
        let v = center * d..(center + 1) * d;
        for (k, &target) in std::iter::once(&context).chain(negatives).enumerate() {
            if k > 0 && target == context {
                continue;
            }
            let label = if k == 0 { 1.0 } else { 0.0 };
            let u = target * d..(target + 1) * d;
            let f = dot(&self.input[v.clone()], &self.output[u.clone()]);
            let g = (label - sigmoid(f)) * lr;
            for i in 0..d {
                self.scratch[i] += g * self.output[u.start + i];
                self.output[u.start + i] += g * self.input[v.start + i];
            }
        }
        for i in 0..d {
            self.input[v.start + i] += self.scratch[i];
        }
    }
}

struct Side {
    ids: Vec<Vec<Option<usize>>>,
    sampler: Option<WeightedAliasIndex<f64>>,
    vocab: Vec<usize>,
}

fn build_side(
    sentences: impl Iterator<Item = Vec<String>>,
    lang: &str,
    min_count: usize,
    words: &mut Vec<String>,
    index: &mut HashMap<String, usize>,
) -> Result<Side> {
    let sentences: Vec<Vec<String>> = sentences.collect();
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for s in &sentences {
        for w in s {
            *freq.entry(w.as_str()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = freq.into_iter().filter(|&(_, c)| c as usize >= min_count).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut vocab = Vec::with_capacity(kept.len());
    for (w, _) in &kept {
        let id = words.len();
        let k = key(lang, w);
        index.insert(k.clone(), id);
        words.push(k);
        vocab.push(id);
    }
    let sampler = if vocab.is_empty() {
        None
    } else {
        let weights = kept.iter().map(|&(_, c)| (c as f64).powf(0.75)).collect();
        Some(WeightedAliasIndex::new(weights).map_err(|e| Error::invalid(format!("unigram table: {e}")))?)
    };
    let ids = sentences
        .iter()
        .map(|s| s.iter().map(|w| index.get(&key(lang, w)).copied()).collect())
        .collect();
    Ok(Side { ids, sampler, vocab })
}

pub fn train_biskip(
    pairs: &[SeedPair],
    alignments: &[Alignment],
    langs: &LanguagePair,
    config: &BiSkipConfig,
) -> Result<EmbeddingTable> {
    train_biskip_with_stats(pairs, alignments, langs, config).map(|(t, _)| t)
}

/// Bilingual skip-gram with negative sampling. Every token predicts its
/// monolingual neighbours and, through each alignment link, the neighbours of
/// the linked token in the other sentence. An empty `alignments` slice trains
/// two monolingual models in a shared table.
pub fn train_biskip_with_stats(
    pairs: &[SeedPair],
    alignments: &[Alignment],
    langs: &LanguagePair,
    config: &BiSkipConfig,
) -> Result<(EmbeddingTable, TrainStats)> {
    if config.dim == 0 {
        return Err(Error::invalid("embedding dimension must be at least 1"));
    }
    if config.iterations == 0 {
        return Err(Error::invalid("skip-gram needs at least one iteration"));
    }
    if config.window == 0 {
        return Err(Error::invalid("context window must be at least 1"));
    }
    if !alignments.is_empty() && alignments.len() != pairs.len() {
        return Err(Error::invalid(format!(
            "{} alignments for {} sentence pairs",
            alignments.len(),
            pairs.len()
        )));
    }
    let mut words = Vec::new();
    let mut index = HashMap::new();
    let min_count = config.min_count.max(1);
    let src = build_side(pairs.iter().map(|p| p.src.clone()), &langs.source, min_count, &mut words, &mut index)?;
    let tgt = build_side(pairs.iter().map(|p| p.tgt.clone()), &langs.target, min_count, &mut words, &mut index)?;
    let n = words.len();
    let d = config.dim;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let half = 0.5 / d as f64;
    let mut model = Model {
        dim: d,
        input: (0..n * d).map(|_| rng.gen_range(-half..half)).collect(),
        output: vec![0.0; n * d],
        scratch: vec![0.0; d],
    };
    let mut mono = vec![0u64; n];
    let mut cross = vec![0u64; n];

    let tokens_per_epoch: usize = src.ids.iter().chain(&tgt.ids).map(|s| s.iter().flatten().count()).sum();
    let total = (tokens_per_epoch * config.iterations).max(1) as f64;
    let min_lr = config.learning_rate * 1e-4;
    let mut seen = 0usize;
    let mut negs = Vec::with_capacity(config.negatives);

    for _ in 0..config.iterations {
        for p in 0..pairs.len() {
            let reverse: HashMap<usize, Vec<usize>> = match alignments.get(p) {
                Some(a) => {
                    let mut m: HashMap<usize, Vec<usize>> = HashMap::new();
                    for &(i, j) in &a.links {
                        m.entry(j).or_default().push(i);
                    }
                    m
                }
                None => HashMap::new(),
            };
            for (own, other, forward) in [(&src, &tgt, true), (&tgt, &src, false)] {
                let sent = &own.ids[p];
                let other_sent = &other.ids[p];
                for (i, center) in sent.iter().enumerate() {
                    let Some(center) = *center else { continue };
                    let lr = (config.learning_rate * (1.0 - seen as f64 / total)).max(min_lr);
                    seen += 1;
                    let w = config.window - rng.gen_range(0..config.window);
                    let lo = i.saturating_sub(w);
                    let hi = (i + w).min(sent.len() - 1);
                    for (c, ctx) in sent.iter().enumerate().take(hi + 1).skip(lo) {
                        let Some(ctx) = ctx.filter(|_| c != i) else { continue };
                        sample(&mut negs, own, config.negatives, &mut rng);
                        model.step(center, ctx, &negs, lr);
                        mono[center] += 1;
                    }
                    let links: Vec<usize> = match (alignments.get(p), forward) {
                        (Some(a), true) => a.targets_of(i).collect(),
                        (Some(_), false) => reverse.get(&i).cloned().unwrap_or_default(),
                        (None, _) => Vec::new(),
                    };
                    for j in links {
                        if j >= other_sent.len() {
                            continue;
                        }
                        let lo = j.saturating_sub(w);
                        let hi = (j + w).min(other_sent.len() - 1);
                        for ctx in &other_sent[lo..=hi] {
                            let Some(ctx) = *ctx else { continue };
                            sample(&mut negs, other, config.negatives, &mut rng);
                            model.step(center, ctx, &negs, lr);
                            cross[center] += 1;
                        }
                    }
                }
            }
        }
    }

    let mut table = EmbeddingTable::new(d);
    for (id, w) in words.iter().enumerate() {
        table.insert(w, &model.input[id * d..(id + 1) * d])?;
    }
    let stats = TrainStats {
        monolingual: words.iter().cloned().zip(mono).collect(),
        crosslingual: words.iter().cloned().zip(cross).collect(),
    };
    log::debug!("skip-gram: {n} words, {tokens_per_epoch} tokens per epoch");
    Ok((table, stats))
}

fn sample(out: &mut Vec<usize>, side: &Side, k: usize, rng: &mut ChaCha8Rng) {
    out.clear();
    if let Some(s) = &side.sampler {
        out.extend((0..k).map(|_| side.vocab[s.sample(rng)]));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::cosine;
    use crate::synth::{SynthConfig, SynthCorpus};
    use crate::wordalign::{symmetrize_union, train_ibm1, viterbi_align, Direction};

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut r = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let (v, p, n1, n2) = (r(6), r(6), r(6), r(6));
        let negs = [n1.as_slice(), n2.as_slice()];
        let g = sgns_gradient(&v, &p, &negs);
        let h = 1e-5;
        let check = |analytic: f64, f: &dyn Fn(f64) -> f64| {
            let numeric = (f(h) - f(-h)) / (2.0 * h);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            assert!(rel <= 1e-4, "analytic {analytic} numeric {numeric}");
        };
        for i in 0..6 {
            let shifted = |x: &[f64], e: f64| {
                let mut y = x.to_vec();
                y[i] += e;
                y
            };
            check(g.center[i], &|e| sgns_loss(&shifted(&v, e), &p, &negs));
            check(g.positive[i], &|e| sgns_loss(&v, &shifted(&p, e), &negs));
            check(g.negatives[0][i], &|e| sgns_loss(&v, &p, &[&shifted(&n1, e), &n2]));
            check(g.negatives[1][i], &|e| sgns_loss(&v, &p, &[&n1, &shifted(&n2, e)]));
        }
    }

    #[test]
    fn training_step_descends_the_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 5;
        let mut m = Model {
            dim: d,
            input: (0..3 * d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            output: (0..3 * d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            scratch: vec![0.0; d],
        };
        let (v, u0, u2) = (m.input[0..d].to_vec(), m.output[d..2 * d].to_vec(), m.output[2 * d..].to_vec());
        let g = sgns_gradient(&v, &u0, &[&u2]);
        let lr = 0.1;
        m.step(0, 1, &[2], lr);
        for i in 0..d {
            assert!((m.input[i] - (v[i] - lr * g.center[i])).abs() < 1e-12);
            assert!((m.output[d + i] - (u0[i] - lr * g.positive[i])).abs() < 1e-12);
            assert!((m.output[2 * d + i] - (u2[i] - lr * g.negatives[0][i])).abs() < 1e-12);
        }
    }

    fn small_config() -> BiSkipConfig {
        BiSkipConfig {
            dim: 8,
            iterations: 2,
            min_count: 1,
            ..Default::default()
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let pairs = vec![SeedPair::new(toks("a"), toks("b"))];
        let langs = LanguagePair::default();
        for cfg in [
            BiSkipConfig { dim: 0, ..small_config() },
            BiSkipConfig { iterations: 0, ..small_config() },
        ] {
            assert!(matches!(train_biskip(&pairs, &[], &langs, &cfg), Err(Error::InvalidArgument(_))));
        }
        let two = vec![Alignment::default(); 2];
        assert!(train_biskip(&pairs, &two, &langs, &small_config()).is_err());
    }

    #[test]
    fn deterministic_and_namespaced() {
        let pairs = vec![
            SeedPair::new(toks("a b c"), toks("a y z")),
            SeedPair::new(toks("b c"), toks("y z")),
        ];
        let al = vec![Alignment::new([(0, 0), (1, 1)]), Alignment::new([(0, 0)])];
        let langs = LanguagePair::default();
        let t1 = train_biskip(&pairs, &al, &langs, &small_config()).unwrap();
        let t2 = train_biskip(&pairs, &al, &langs, &small_config()).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(t1.len(), 6);
        assert_ne!(t1.get("cs:a"), t1.get("en:a"));
        assert!(t1.get("a").is_none());
    }

    #[test]
    fn unaligned_token_gets_only_monolingual_updates() {
        let pairs = vec![SeedPair::new(toks("a b c"), toks("x y z"))];
        let al = vec![Alignment::new([(0, 0), (1, 1)])];
        let (_, stats) = train_biskip_with_stats(&pairs, &al, &LanguagePair::default(), &small_config()).unwrap();
        assert_eq!(stats.crosslingual["cs:c"], 0);
        assert_eq!(stats.crosslingual["en:z"], 0);
        assert!(stats.monolingual["cs:c"] > 0);
        assert!(stats.crosslingual["cs:a"] > 0);
        assert!(stats.crosslingual["en:y"] > 0);
        let (_, none) = train_biskip_with_stats(&pairs, &[], &LanguagePair::default(), &small_config()).unwrap();
        assert!(none.crosslingual.values().all(|&c| c == 0));
    }

    #[test]
    fn translations_end_up_close() {
        let cfg = SynthConfig {
            pairs: 6000,
            concepts: 300,
            topics: 10,
            topic_size: 40,
            ..SynthConfig::default()
        };
        let corpus = SynthCorpus::generate(&cfg);
        let pairs: Vec<SeedPair> = corpus.pairs.iter().map(|(s, t)| SeedPair::from_raw(s, t)).collect();
        let fwd = train_ibm1(&pairs, 5, Direction::SourceToTarget).unwrap();
        let rev = train_ibm1(&pairs, 5, Direction::TargetToSource).unwrap();
        let al: Vec<Alignment> = pairs
            .iter()
            .map(|p| symmetrize_union(&viterbi_align(p, &fwd), &viterbi_align(p, &rev)))
            .collect();
        let table = train_biskip(&pairs, &al, &LanguagePair::default(), &BiSkipConfig::default()).unwrap();

        let lex = &corpus.language.lexicon;
        let (mut hits, mut total) = (0, 0);
        for c in 0..50 {
            let src = &lex.source_words[c];
            let Some(v) = table.get_in("cs", src) else { continue };
            let (words, _) = &lex.translations[c][0];
            if words.len() != 1 {
                continue;
            }
            total += 1;
            let gold = key("en", &words[0]);
            let best = table
                .words()
                .iter()
                .filter(|w| w.starts_with("en:"))
                .max_by(|a, b| cosine(v, table.get(a).unwrap()).total_cmp(&cosine(v, table.get(b).unwrap())))
                .unwrap();
            hits += usize::from(*best == gold);
        }
        assert!(total >= 20);
        assert!(hits as f64 >= 0.5 * total as f64, "{hits}/{total}");
    }
}
