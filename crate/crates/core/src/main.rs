use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bimine::ingest::io::{read_dataset, read_html_dir, read_html_tsv, read_seed_files, read_seed_tsv, records_to_bins, write_dataset, write_file, write_seed_tsv};
use bimine::ingest::{LanguageDetector, TrigramProfile, DEFAULT_PROFILE_SIZE};
use bimine::pipeline::{
    align, evaluate, extract_dataset, read_gold, read_ranked_tops, read_refined, realign_experiment, train_to_dir,
    write_corpus, write_gold, write_preliminary, write_refined, write_scored, Artifacts, RealignOptions, RunConfig,
};
use bimine::synth::{SynthConfig, SynthCorpus};
use bimine::{Error, Result};

#[derive(Parser)]
#[command(name = "bimine", version, about = "Mine parallel paragraph pairs from binned bilingual documents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every model from a sentence-aligned seed corpus.
    Train {
        #[command(flatten)]
        seed: SeedArgs,
        /// Artifact directory to create.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Align a binned document collection with trained artifacts.
    Align {
        /// Document collection TSV (bin_id, lang, doc_id, text).
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        artifacts: PathBuf,
        /// Refined alignments TSV.
        #[arg(long)]
        out: PathBuf,
        /// Also write the extracted corpus (bin_id, source_text, target_text, confidence).
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        preliminary: Option<PathBuf>,
        #[arg(long)]
        scored: Option<PathBuf>,
        /// Per-stage timings as JSON.
        #[arg(long)]
        timings: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Compare refined alignments with a gold pairing.
    Evaluate {
        #[arg(long)]
        refined: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        preliminary: Option<PathBuf>,
        #[arg(long)]
        scored: Option<PathBuf>,
        /// JSON report (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train on the head half of a seed corpus and realign its tail.
    RealignExperiment {
        #[command(flatten)]
        seed: SeedArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        shuffle: bool,
        #[arg(long)]
        head_limit: Option<usize>,
        #[arg(long)]
        tail_limit: Option<usize>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Turn HTML pages into a binned document collection, one bin per domain.
    ExtractParagraphs {
        /// Directory of <domain>/<page>.html files.
        #[arg(long, conflicts_with = "html_tsv", required_unless_present = "html_tsv")]
        html_dir: Option<PathBuf>,
        /// TSV of (domain, url, html).
        #[arg(long)]
        html_tsv: Option<PathBuf>,
        /// Artifact directory providing the language profiles.
        #[arg(long, conflicts_with = "corpus")]
        artifacts: Option<PathBuf>,
        /// Seed corpus TSV to build language profiles from instead.
        #[arg(long, required_unless_present = "artifacts")]
        corpus: Option<PathBuf>,
        /// Document collection TSV to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Write a synthetic sentence-aligned corpus as TSV.
    GenerateCorpus {
        #[arg(long, default_value_t = 20_000)]
        pairs: usize,
        #[arg(long, default_value_t = SynthConfig::default().seed)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SeedArgs {
    /// Seed corpus as `source<TAB>target` lines.
    #[arg(long, conflicts_with_all = ["source_file", "target_file"], required_unless_present = "source_file")]
    corpus: Option<PathBuf>,
    /// Source side, one sentence per line.
    #[arg(long, requires = "target_file")]
    source_file: Option<PathBuf>,
    #[arg(long, requires = "source_file")]
    target_file: Option<PathBuf>,
}

impl SeedArgs {
    fn read(&self) -> Result<Vec<(String, String)>> {
        match (&self.corpus, &self.source_file, &self.target_file) {
            (Some(c), _, _) => read_seed_tsv(c),
            (None, Some(s), Some(t)) => read_seed_files(s, t),
            _ => Err(Error::InvalidArgument("no seed corpus given".into())),
        }
    }
}

#[derive(Args, Default)]
struct Settings {
    /// TOML config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` override of any config setting (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Exchange the source and target roles.
    #[arg(long)]
    swap: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    max_tokens: Option<usize>,
    #[arg(long)]
    bin_size: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    /// Skip-gram iterations.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    n_trees: Option<usize>,
    #[arg(long)]
    search_nodes: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// `global` or `bin`.
    #[arg(long)]
    idf_scope: Option<String>,
    #[arg(long)]
    ratio_low: Option<f64>,
    #[arg(long)]
    ratio_high: Option<f64>,
    #[arg(long)]
    min_paragraph_chars: Option<usize>,
}

impl Settings {
    /// `base` (or the config file, when given) with every override applied.
    fn resolve(&self, base: RunConfig) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => base,
        };
        let mut overrides = self.set.clone();
        let mut flag = |key: &str, v: Option<String>| {
            if let Some(v) = v {
                overrides.push(format!("{key}={v}"));
            }
        };
        flag("seed", self.seed.map(|v| v.to_string()));
        flag("workers", self.workers.map(|v| v.to_string()));
        flag("threshold", self.threshold.map(|v| format!("{v:?}")));
        flag("max_tokens", self.max_tokens.map(|v| v.to_string()));
        flag("bin_size", self.bin_size.map(|v| v.to_string()));
        flag("dim", self.dim.map(|v| v.to_string()));
        flag("skipgram_iterations", self.iterations.map(|v| v.to_string()));
        flag("window", self.window.map(|v| v.to_string()));
        flag("negatives", self.negatives.map(|v| v.to_string()));
        flag("n_trees", self.n_trees.map(|v| v.to_string()));
        flag("search_nodes", self.search_nodes.map(|v| v.to_string()));
        flag("k", self.k.map(|v| v.to_string()));
        flag("idf_scope", self.idf_scope.clone());
        flag("ratio_low", self.ratio_low.map(|v| format!("{v:?}")));
        flag("ratio_high", self.ratio_high.map(|v| format!("{v:?}")));
        flag("min_paragraph_chars", self.min_paragraph_chars.map(|v| v.to_string()));
        config = config.with_overrides(&overrides)?;
        if self.swap {
            config = config.swapped();
        }
        Ok(config)
    }
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    match path {
        Some(p) => write_file(p, json.as_bytes()),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn swap_pairs(pairs: Vec<(String, String)>, swap: bool) -> Vec<(String, String)> {
    if swap {
        pairs.into_iter().map(|(s, t)| (t, s)).collect()
    } else {
        pairs
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { seed, out, settings } => {
            let config = settings.resolve(RunConfig::default())?;
            let pairs = swap_pairs(seed.read()?, settings.swap);
            let (_, report) = train_to_dir(&pairs, &config, &out)?;
            log::info!("artifacts written to {}", out.display());
            write_json(None, &report)
        }
        Command::Align {
            dataset,
            artifacts,
            out,
            corpus,
            preliminary,
            scored,
            timings,
            settings,
        } => {
            let models = Artifacts::load(&artifacts)?;
            // roles come from the artifacts; --swap needs artifacts trained with --swap
            let config = Settings { swap: false, ..settings }.resolve(models.config.clone())?;
            if config.langs() != models.langs() {
                return Err(Error::InvalidArgument(format!(
                    "artifacts align {} to {}, config asks for {} to {}",
                    models.langs().source,
                    models.langs().target,
                    config.source_lang,
                    config.target_lang
                )));
            }
            let records = read_dataset(&dataset)?;
            let (bins, dropped) = records_to_bins(&records, &config.langs())?;
            if dropped > 0 {
                log::warn!("{dropped} documents in other languages ignored");
            }
            let result = align(&bins, &models, &config)?;
            write_refined(&out, &result.refined)?;
            if let Some(p) = corpus {
                write_corpus(&p, &result.refined)?;
            }
            if let Some(p) = preliminary {
                write_preliminary(&p, &result.bins)?;
            }
            if let Some(p) = scored {
                write_scored(&p, &result.bins)?;
            }
            if let Some(p) = timings {
                write_json(Some(&p), &result.timings)?;
            }
            log::info!("{} pairs accepted", result.refined.len());
            Ok(())
        }
        Command::Evaluate {
            refined,
            gold,
            preliminary,
            scored,
            out,
        } => {
            let refined = read_refined(&refined)?;
            let gold = read_gold(&gold)?;
            let preliminary = preliminary.map(|p| read_ranked_tops(&p)).transpose()?;
            let scored = scored.map(|p| read_ranked_tops(&p)).transpose()?;
            let report = evaluate(&refined, &gold, preliminary.as_deref(), scored.as_deref())?;
            write_json(out.as_deref(), &report)
        }
        Command::RealignExperiment {
            seed,
            out,
            shuffle,
            head_limit,
            tail_limit,
            settings,
        } => {
            let config = settings.resolve(RunConfig::default())?;
            let pairs = swap_pairs(seed.read()?, settings.swap);
            let opts = RealignOptions {
                shuffle,
                head_limit,
                tail_limit,
            };
            let run = realign_experiment(&pairs, &config, &opts)?;
            run.artifacts.save(&out.join("artifacts"))?;
            write_refined(&out.join("refined.tsv"), &run.output.refined)?;
            write_corpus(&out.join("corpus.tsv"), &run.output.refined)?;
            write_preliminary(&out.join("preliminary.tsv"), &run.output.bins)?;
            write_scored(&out.join("scored.tsv"), &run.output.bins)?;
            write_gold(&out.join("gold.tsv"), &run.gold)?;
            write_json(Some(&out.join("report.json")), &run.report)?;
            write_json(None, &run.report.eval)
        }
        Command::ExtractParagraphs {
            html_dir,
            html_tsv,
            artifacts,
            corpus,
            out,
            settings,
        } => {
            let pages = match (&html_dir, &html_tsv) {
                (Some(d), _) => read_html_dir(d)?,
                (None, Some(t)) => read_html_tsv(t)?,
                _ => return Err(Error::InvalidArgument("no HTML input given".into())),
            };
            let (config, mut detector) = match (&artifacts, &corpus) {
                (Some(a), _) => {
                    let models = Artifacts::load(a)?;
                    let config = Settings { swap: false, ..settings }.resolve(models.config.clone())?;
                    (config, models.language_detector)
                }
                (None, Some(c)) => {
                    let config = settings.resolve(RunConfig::default())?;
                    let pairs = swap_pairs(read_seed_tsv(c)?, settings.swap);
                    let detector = LanguageDetector::new(vec![
                        TrigramProfile::train(config.source_lang.clone(), pairs.iter().map(|p| p.0.as_str()), DEFAULT_PROFILE_SIZE),
                        TrigramProfile::train(config.target_lang.clone(), pairs.iter().map(|p| p.1.as_str()), DEFAULT_PROFILE_SIZE),
                    ]);
                    (config, detector)
                }
                _ => return Err(Error::InvalidArgument("language profiles need --artifacts or --corpus".into())),
            };
            detector.min_chars = config.min_paragraph_chars;
            let (records, stats) = extract_dataset(&pages, &detector, &config.langs(), config.ratio_low, config.ratio_high);
            write_dataset(&out, &records)?;
            write_json(None, &stats)
        }
        Command::GenerateCorpus { pairs, seed, out } => {
            let corpus = SynthCorpus::generate(&SynthConfig {
                pairs,
                seed,
                ..SynthConfig::default()
            });
            write_seed_tsv(&out, &corpus.pairs)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
