use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use author_sarcasm::corpus::{
    author_stats, corpus_stats, generate_synthetic, load_jsonl, sarc, split_holdout, write_jsonl, CommentRecord,
    SyntheticSpec,
};
use author_sarcasm::harness::{
    multi_run, qualitative_rows, write_tsv, Checkpoint, ReferenceTable, StoredVectors, REFERENCE_TOLERANCE,
};
use author_sarcasm::model::{predict, ModelConfig, Variant};
use author_sarcasm::textprep::{encode_comment, load_vectors, tokenize, WordVectorTable};
use author_sarcasm::trainer::{encode_records, evaluate, random_search, train, HyperRange, TrainConfig};

#[derive(Parser)]
#[command(name = "sarcasm", version, about = "Author-aware sarcasm classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Propensity,
    Interaction,
}

/// Word vectors: a pretrained text file, or random vectors over the data vocabulary.
#[derive(clap::Args)]
struct VectorArgs {
    /// Pretrained vectors in `<count> <dim>` header text format.
    #[arg(long)]
    vectors: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Convert raw SARC files to JSONL, or summarize an existing JSONL file.
    Prepare {
        #[arg(long, conflicts_with = "input", requires = "index")]
        comments: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
        /// Treat each index line as a sarcastic/non-sarcastic pair.
        #[arg(long)]
        paired: bool,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output JSONL (conversion only).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output JSON with corpus and per-author statistics.
        #[arg(long)]
        stats: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a synthetic corpus with known author structure.
    Synth {
        #[arg(long, value_enum, default_value = "propensity")]
        kind: SynthKind,
        #[arg(long, default_value_t = 200)]
        authors: usize,
        #[arg(long, default_value_t = 40)]
        comments: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train one model and write a checkpoint.
    Train {
        #[arg(long)]
        variant: Variant,
        /// JSON with optional `model` and `train` sections.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        vectors: VectorArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Write per-epoch losses as JSON.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on labeled data.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Random hyperparameter search.
    Search {
        #[arg(long)]
        variant: Variant,
        #[arg(long)]
        ranges: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        budget: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        vectors: VectorArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Multi-seed training with a bootstrap interval on test macro-F1.
    Report {
        #[arg(long)]
        variant: Variant,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        vectors: VectorArgs,
        /// Compare against a published dataset entry, e.g. `politics_balanced`.
        #[arg(long)]
        reference: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Per-comment probabilities of three checkpoints as TSV.
    Qualitative {
        /// Checkpoints in no-author, prior, embedding order.
        #[arg(long, num_args = 3, required = true)]
        ckpts: Vec<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Score a single comment.
    Predict {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        text: String,
        #[arg(long)]
        author: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    model: Option<ModelConfig>,
    train: Option<TrainConfig>,
}

fn read_config(path: Option<&Path>, variant: Variant) -> anyhow::Result<(ModelConfig, TrainConfig)> {
    let file: ConfigFile = match path {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => ConfigFile::default(),
    };
    let model = ModelConfig {
        variant,
        ..file.model.unwrap_or_default()
    };
    Ok((model, file.train.unwrap_or_default()))
}

fn read_records(path: &Path) -> anyhow::Result<Vec<CommentRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    load_jsonl(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn vocabulary(records: &[&[CommentRecord]]) -> anyhow::Result<Vec<String>> {
    let mut vocab = BTreeSet::new();
    for set in records {
        for r in set.iter() {
            vocab.extend(tokenize(&r.text)?);
        }
    }
    Ok(vocab.into_iter().collect())
}

/// Loads pretrained vectors, or draws random ones over the data vocabulary
/// with the configured dimension.
fn resolve_vectors(
    args: &VectorArgs,
    model: &mut ModelConfig,
    data: &[&[CommentRecord]],
    seed: u64,
) -> anyhow::Result<(WordVectorTable, StoredVectors)> {
    match &args.vectors {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let table =
                load_vectors(BufReader::new(file), seed).with_context(|| format!("reading {}", path.display()))?;
            model.embedding_dim = table.dim();
            let stored = StoredVectors::by_path(&table, path.canonicalize()?);
            Ok((table, stored))
        }
        None => {
            let table = WordVectorTable::random(&vocabulary(data)?, model.embedding_dim, 1.0, seed)?;
            let stored = StoredVectors::inline(&table);
            Ok((table, stored))
        }
    }
}

fn load_checkpoint(path: &Path) -> anyhow::Result<Checkpoint> {
    Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Prepare {
            comments,
            index,
            paired,
            input,
            out,
            stats,
            seed: _,
        } => {
            let records = match (comments, index, input) {
                (Some(c), Some(i), None) => {
                    let raw = sarc::read_comments(BufReader::new(File::open(&c)?))
                        .with_context(|| format!("reading {}", c.display()))?;
                    let recs = sarc::convert_index(BufReader::new(File::open(&i)?), &raw, paired)
                        .with_context(|| format!("reading {}", i.display()))?;
                    if let Some(out) = &out {
                        let mut w = create(out)?;
                        write_jsonl(&recs, &mut w)?;
                        w.flush()?;
                    }
                    recs
                }
                (None, None, Some(p)) => read_records(&p)?,
                _ => bail!("give either --comments with --index, or --input"),
            };
            let summary = serde_json::json!({
                "corpus": corpus_stats(&records)?,
                "authors": author_stats(&records).with_source("all"),
            });
            fs::write(&stats, serde_json::to_string_pretty(&summary)?)?;
            print_json(&summary["corpus"])
        }
        Command::Synth {
            kind,
            authors,
            comments,
            out,
            seed,
        } => {
            let spec = match kind {
                SynthKind::Propensity => SyntheticSpec::propensity(authors, comments, seed),
                SynthKind::Interaction => SyntheticSpec::interaction(authors, comments, seed),
            };
            let records = generate_synthetic(&spec)?;
            let mut w = create(&out)?;
            write_jsonl(&records, &mut w)?;
            w.flush()?;
            println!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }
        Command::Train {
            variant,
            config,
            data,
            out,
            vectors,
            seed,
            history,
        } => {
            let (mut model, mut train_cfg) = read_config(config.as_deref(), variant)?;
            if let Some(s) = seed {
                train_cfg.seed = s;
            }
            let records = read_records(&data)?;
            let (vecs, stored) = resolve_vectors(&vectors, &mut model, &[&records], train_cfg.seed)?;
            let (train_set, holdout) = split_holdout(&records, train_cfg.holdout_fraction, train_cfg.seed)?;
            let stats = author_stats(&train_set).with_source("train");
            let outcome = train(&model, &train_cfg, &train_set, &holdout, &stats, &vecs)?;
            if let Some(h) = history {
                fs::write(&h, outcome.history.to_json()?)?;
            }
            let ckpt = Checkpoint::new(outcome.params, train_cfg, Some(stats), stored);
            ckpt.save(&out)?;
            println!(
                "trained {variant} for {} epochs (best {:?}), checkpoint {}",
                outcome.history.stopped_epoch,
                outcome.history.best_epoch,
                out.display()
            );
            Ok(())
        }
        Command::Eval { ckpt, data, seed: _ } => {
            let ckpt = load_checkpoint(&ckpt)?;
            let records = read_records(&data)?;
            let vecs = ckpt.vectors.restore()?;
            let eval = evaluate(&ckpt.params, &ckpt.stats(), &encode_records(&records, &vecs)?)?;
            print_json(&serde_json::json!({
                "variant": ckpt.variant(),
                "macro_f1": eval.macro_f1(),
                "accuracy": eval.accuracy(),
                "mean_loss": eval.mean_loss,
                "confusion": eval.confusion,
            }))
        }
        Command::Search {
            variant,
            ranges,
            budget,
            config,
            data,
            vectors,
            out,
            seed,
        } => {
            let (mut model, train_cfg) = read_config(config.as_deref(), variant)?;
            let ranges: HyperRange = match ranges {
                Some(p) => serde_json::from_str(&fs::read_to_string(&p)?)
                    .with_context(|| format!("parsing {}", p.display()))?,
                None => HyperRange::default(),
            };
            let records = read_records(&data)?;
            let (vecs, _) = resolve_vectors(&vectors, &mut model, &[&records], seed)?;
            let results = random_search(&ranges, budget, &model, &train_cfg, &records, &vecs, seed)?;
            let text = serde_json::to_string_pretty(&results)?;
            match out {
                Some(p) => fs::write(p, text)?,
                None => println!("{text}"),
            }
            Ok(())
        }
        Command::Report {
            variant,
            runs,
            config,
            data,
            test,
            vectors,
            reference,
            seed,
        } => {
            let (mut model, train_cfg) = read_config(config.as_deref(), variant)?;
            let train_recs = read_records(&data)?;
            let test_recs = read_records(&test)?;
            let (vecs, _) = resolve_vectors(&vectors, &mut model, &[&train_recs, &test_recs], seed)?;
            let report = multi_run(&model, &train_cfg, &train_recs, &test_recs, &vecs, runs, seed)?;
            for r in &report.runs {
                println!("seed {:>4}  macro-F1 {:.2}", r.seed, 100.0 * r.macro_f1);
            }
            println!(
                "{variant}: mean {:.2} [{:.2}, {:.2}] over {runs} runs",
                100.0 * report.ci.mean,
                100.0 * report.ci.lower,
                100.0 * report.ci.upper
            );
            if let Some(name) = reference {
                let table = ReferenceTable::builtin();
                let Some(r) = table.score(&name, variant) else {
                    bail!("no reference entry `{name}` for {variant}");
                };
                let ok = (100.0 * report.ci.mean - r.mean).abs() <= REFERENCE_TOLERANCE;
                println!(
                    "reference {name}: {:.1} [{:.1}, {:.1}], within {REFERENCE_TOLERANCE}: {}",
                    r.mean,
                    r.ci.0,
                    r.ci.1,
                    if ok { "yes" } else { "no" }
                );
            }
            Ok(())
        }
        Command::Qualitative {
            ckpts,
            data,
            out,
            seed: _,
        } => {
            let loaded = ckpts
                .iter()
                .map(|p| load_checkpoint(p))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let records = read_records(&data)?;
            let rows = qualitative_rows([&loaded[0], &loaded[1], &loaded[2]], &records)?;
            match out {
                Some(p) => {
                    let mut w = create(&p)?;
                    write_tsv(&rows, &mut w)?;
                    w.flush()?;
                }
                None => write_tsv(&rows, io::stdout().lock())?,
            }
            Ok(())
        }
        Command::Predict {
            ckpt,
            text,
            author,
            seed: _,
        } => {
            let ckpt = load_checkpoint(&ckpt)?;
            let vecs = ckpt.vectors.restore()?;
            let feature = ckpt.params.author_feature(&author, &ckpt.stats());
            let p = ckpt.params.predict_proba(&encode_comment(&text, &vecs)?, &feature)?;
            println!("{p:.6}\t{}", predict(p, 0.5));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
