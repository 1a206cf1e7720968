//! Command-line front end. Every subcommand reads and writes the same JSON
//! and JSONL formats as the library.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{rfe, train, Dataset, LearnerConfig, PairModel};
use crate::clustering::{
    agglomerative, ClusterConfig, Clustering, Criterion, DistanceMatrix, KMeansConfig, Linkage,
};
use crate::corpus::{corpus_stats, load_corpus, split_corpus, Corpus, SplitSpec};
use crate::embeddings::VectorStore;
use crate::features::io::{write_binary, FeatureTable};
use crate::features::tfidf::TfIdfModel;
use crate::features::{FeatureExtractor, FeatureFamily};
use crate::harness::baselines::{lemma_baseline, lemma_variant, tune_delta, DeltaVariant};
use crate::harness::experiment::{
    prepare_inputs, run_cross_dataset, run_in_dataset, tune_pipeline, CrossDatasetConfig,
    ExperimentConfig,
};
use crate::harness::{
    cluster_mentions, document_groups, mask_corpus, mask_store, submatrix, HarnessError,
    MaskComponent, MaskSpec, PreclusterMode,
};
use crate::metrics::conll::{read_conll, read_conll_keyed};
use crate::metrics::{cross_document_score, within_document_score, MetricReport};
use crate::sampler::{sample_pairs, NegativePolicy, PairSet, SamplerConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("{0}")]
    Usage(String),
}

fn lift<T, E: Into<HarnessError>>(r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Harness(e.into()))
}

#[derive(Debug, Parser)]
#[command(
    name = "cdcr",
    version,
    about = "Cross-document event coreference experiments"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed overriding configuration seeds.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving JSON and TSV reports.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Document preclustering mode: none, gold or kmeans.
    #[arg(long, global = true)]
    pub precluster: Option<PreclusterMode>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus statistics and link counts per type.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Writes train/dev/test corpora for a split specification.
    Split {
        #[arg(long)]
        corpus: PathBuf,
        /// JSON split specification.
        #[arg(long)]
        spec: PathBuf,
    },
    /// Samples labeled training pairs.
    Sample {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 8.0)]
        c: f64,
        #[arg(long, default_value_t = 8)]
        k: usize,
        /// Negative policy: capped or monotone.
        #[arg(long, default_value = "capped", value_parser = parse_policy)]
        policy: NegativePolicy,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extracts pair features for a pair file.
    Featurize {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        pairs: PathBuf,
        /// Corpus whose documents provide tf-idf statistics (default: `corpus`).
        #[arg(long)]
        tfidf_corpus: Option<PathBuf>,
        /// Comma-separated feature families (default: all).
        #[arg(long, value_delimiter = ',', value_parser = parse_family)]
        families: Vec<FeatureFamily>,
        #[arg(long)]
        out: PathBuf,
        /// Optional compact binary copy of the feature matrix.
        #[arg(long)]
        binary: Option<PathBuf>,
    },
    /// Recursive feature elimination on a dev feature table.
    SelectFeatures {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        /// Learner configuration JSON (default: gradient-boosted trees).
        #[arg(long)]
        learner: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Feature selection and hyperparameter search for an experiment config.
    Tune {
        #[arg(long)]
        config: PathBuf,
    },
    /// Trains a pair classifier on a feature table.
    Train {
        #[arg(long)]
        features: PathBuf,
        /// JSON list of feature names to keep.
        #[arg(long)]
        select: Option<PathBuf>,
        #[arg(long)]
        learner: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Coreference probabilities for all action-mention pairs of a corpus.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        tfidf_corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Agglomerative clustering of predicted pair probabilities.
    Cluster {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, default_value = "average", value_parser = parse_linkage)]
        linkage: Linkage,
        /// Distance threshold, or cluster count with `--maxclust`.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        maxclust: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scores a response clustering (JSON or CoNLL) against a corpus.
    Score {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        response: PathBuf,
        /// Score within-document links only.
        #[arg(long)]
        within_document: bool,
    },
    /// Lemma baselines.
    Baseline {
        #[command(subcommand)]
        kind: BaselineKind,
    },
    /// Replaces event component tokens with random dummies.
    Mask {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Comma-separated components: action, participants, time, location, publish-date.
        #[arg(long, value_delimiter = ',', required = true)]
        components: Vec<MaskComponent>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out_embeddings: Option<PathBuf>,
    },
    /// Complete experiments.
    Experiment {
        #[command(subcommand)]
        kind: ExperimentKind,
    },
}

#[derive(Debug, Args)]
pub struct DeltaArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Fixed threshold; otherwise tuned on `--tune-on`.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Training corpus for the threshold grid search.
    #[arg(long)]
    pub tune_on: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum BaselineKind {
    Lemma {
        #[arg(long)]
        corpus: PathBuf,
    },
    LemmaDelta(DeltaArgs),
    LemmaTime(DeltaArgs),
}

#[derive(Debug, Subcommand)]
pub enum ExperimentKind {
    InDataset {
        #[arg(long)]
        config: PathBuf,
    },
    CrossDataset {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_policy(s: &str) -> Result<NegativePolicy, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown policy `{s}`"))
}

fn parse_family(s: &str) -> Result<FeatureFamily, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown feature family `{s}`"))
}

fn parse_linkage(s: &str) -> Result<Linkage, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown linkage `{s}`"))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::File {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
    }
    fs::write(path, contents).map_err(|e| CliError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn corpus(path: &Path) -> Result<Corpus, CliError> {
    lift(load_corpus(path))
}

fn store(path: Option<&PathBuf>) -> Result<VectorStore, CliError> {
    match path {
        Some(p) => lift(VectorStore::load(p)),
        None => Ok(VectorStore::new()),
    }
}

/// Prints a TSV table and, with `--out-dir`, writes `<name>.json` and
/// `<name>.tsv`.
fn emit(global: &GlobalArgs, name: &str, json: &str, tsv: &str) -> Result<(), CliError> {
    print!("{tsv}");
    if let Some(dir) = &global.out_dir {
        write(&dir.join(format!("{name}.json")), json)?;
        write(&dir.join(format!("{name}.tsv")), tsv)?;
    }
    Ok(())
}

fn emit_clustering(
    global: &GlobalArgs,
    gold: &Corpus,
    response: &Clustering,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if let Some(out) = out {
        write(out, response.to_json())?;
    }
    if let Some(dir) = &global.out_dir {
        write(&dir.join("response.json"), response.to_json())?;
    }
    let report = lift(cross_document_score(gold, response.clusters()))?;
    emit(global, "scores", &report.to_json(), &report.to_tsv())
}

fn learner(path: Option<&PathBuf>) -> Result<LearnerConfig, CliError> {
    path.map_or_else(|| Ok(LearnerConfig::default()), |p| json(p))
}

fn dataset(path: &Path) -> Result<Dataset, CliError> {
    let table = lift(FeatureTable::from_jsonl(&read(path)?))?;
    lift(Dataset::from_table(table))
}

#[derive(Serialize, Deserialize)]
struct Prediction {
    a: String,
    b: String,
    p: f64,
}

fn experiment_config(path: &Path, global: &GlobalArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = lift(ExperimentConfig::from_json(&read(path)?))?;
    override_config(&mut config, global);
    lift(config.validate())?;
    Ok(config)
}

fn override_config(config: &mut ExperimentConfig, global: &GlobalArgs) {
    if let Some(s) = global.seed {
        config.seeds = vec![s];
    }
    if let Some(p) = global.precluster {
        config.precluster = p;
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    match cli.command {
        Command::Stats { corpus: path } => {
            let report = corpus_stats(&corpus(&path)?);
            emit(g, "stats", &pretty(&report), &report.to_tsv())
        }
        Command::Split { corpus: path, spec } => {
            let spec: SplitSpec = json(&spec)?;
            let splits = lift(split_corpus(&corpus(&path)?, &spec))?;
            let dir = g.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            for (name, part) in [
                ("train", &splits.train),
                ("dev", &splits.dev),
                ("test", &splits.test),
            ] {
                write(&dir.join(format!("{name}.json")), part.to_json())?;
                println!("{name}\t{}", part.documents.len());
            }
            Ok(())
        }
        Command::Sample {
            corpus: path,
            c,
            k,
            policy,
            out,
        } => {
            let corpus = corpus(&path)?;
            let config = SamplerConfig {
                policy,
                ..SamplerConfig::new(c, k, g.seed.unwrap_or(0))
            };
            let pairs = lift(sample_pairs(&corpus, &config))?;
            write(&out, pairs.to_jsonl(&corpus))?;
            println!(
                "pairs\t{}\npositives\t{}",
                pairs.pairs.len(),
                pairs.positives().count()
            );
            Ok(())
        }
        Command::Featurize {
            corpus: path,
            embeddings,
            pairs,
            tfidf_corpus,
            families,
            out,
            binary,
        } => {
            let corpus = corpus(&path)?;
            let store = store(embeddings.as_ref())?;
            let pairs = lift(PairSet::from_jsonl(&read(&pairs)?, &corpus))?;
            let tfidf = match &tfidf_corpus {
                Some(p) => TfIdfModel::fit(&self::corpus(p)?.documents),
                None => TfIdfModel::fit(&corpus.documents),
            };
            let families = if families.is_empty() {
                FeatureFamily::ALL.to_vec()
            } else {
                families
            };
            let x = FeatureExtractor::new(&corpus, &tfidf, &store, &families);
            let matrix = x.extract_labeled(&pairs.pairs);
            if let Some(b) = &binary {
                write(b, write_binary(&matrix))?;
            }
            let table = FeatureTable {
                keys: pairs
                    .pairs
                    .iter()
                    .map(|p| (corpus.mention_key(p.a), corpus.mention_key(p.b)))
                    .collect(),
                link_types: pairs.pairs.iter().map(|p| Some(p.link_type)).collect(),
                labels: pairs.pairs.iter().map(|p| Some(p.label)).collect(),
                matrix,
            };
            write(&out, table.to_jsonl())?;
            println!("rows\t{}\nfeatures\t{}", table.keys.len(), x.schema().len());
            Ok(())
        }
        Command::SelectFeatures {
            train,
            dev,
            learner: l,
            out,
        } => {
            let result = lift(rfe(
                &dataset(&train)?,
                &dataset(&dev)?,
                &learner(l.as_ref())?,
                g.seed.unwrap_or(0),
            ))?;
            write(&out, pretty(&result.selected))?;
            println!("subset_size\tdev_f1");
            for (names, f1) in &result.history {
                println!("{}\t{f1:.4}", names.len());
            }
            Ok(())
        }
        Command::Tune { config } => {
            let config = experiment_config(&config, g)?;
            let (c, s) = lift(config.load_inputs())?;
            let (c, s) = lift(prepare_inputs(&c, &s, config.mask.as_ref()))?;
            let splits = lift(split_corpus(&c, &config.split))?;
            let summary = lift(tune_pipeline(&config, &splits.train, &splits.dev, &s, None))?;
            let text = pretty(&summary);
            println!("{text}");
            if let Some(dir) = &g.out_dir {
                write(&dir.join("tuning.json"), &text)?;
            }
            Ok(())
        }
        Command::Train {
            features,
            select,
            learner: l,
            out,
        } => {
            let mut data = dataset(&features)?;
            if let Some(sel) = &select {
                let names: Vec<String> = json(sel)?;
                data = lift(data.select(&names))?;
            }
            let model = lift(train(
                &learner(l.as_ref())?,
                &data.matrix,
                &data.labels,
                g.seed.unwrap_or(0),
            ))?;
            lift(model.save(&out))?;
            println!("rows\t{}\nfeatures\t{}", data.len(), model.features.len());
            Ok(())
        }
        Command::Predict {
            model,
            corpus: path,
            embeddings,
            tfidf_corpus,
            out,
        } => {
            let model = lift(PairModel::load(&model))?;
            let corpus = corpus(&path)?;
            let store = store(embeddings.as_ref())?;
            let tfidf = match &tfidf_corpus {
                Some(p) => TfIdfModel::fit(&self::corpus(p)?.documents),
                None => TfIdfModel::fit(&corpus.documents),
            };
            let x = FeatureExtractor::new(&corpus, &tfidf, &store, &FeatureFamily::ALL);
            let actions = corpus.actions();
            let pairs: Vec<_> = (0..actions.len())
                .flat_map(|i| (i + 1..actions.len()).map(move |j| (i, j)))
                .map(|(i, j)| (actions[i], actions[j]))
                .collect();
            let matrix = x.extract_pairs(&pairs);
            let probs = lift(model.predict_matrix(&matrix))?;
            let mut text = String::new();
            for ((a, b), p) in pairs.iter().zip(probs) {
                let rec = Prediction {
                    a: corpus.mention_key(*a),
                    b: corpus.mention_key(*b),
                    p,
                };
                text.push_str(&serde_json::to_string(&rec).expect("serializable"));
                text.push('\n');
            }
            write(&out, text)?;
            println!("pairs\t{}", pairs.len());
            Ok(())
        }
        Command::Cluster {
            corpus: path,
            predictions,
            linkage,
            threshold,
            maxclust,
            out,
        } => {
            let corpus = corpus(&path)?;
            let actions = corpus.actions();
            let ids: Vec<String> = actions.iter().map(|&r| corpus.mention_key(r)).collect();
            let index: std::collections::HashMap<&str, usize> = ids
                .iter()
                .enumerate()
                .map(|(i, k)| (k.as_str(), i))
                .collect();
            let n = ids.len();
            let mut dist = vec![vec![1.0; n]; n];
            for (i, line) in read(&predictions)?
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
            {
                let rec: Prediction = serde_json::from_str(line).map_err(|e| CliError::File {
                    path: predictions.display().to_string(),
                    message: format!("line {}: {e}", i + 1),
                })?;
                let (Some(&a), Some(&b)) = (index.get(rec.a.as_str()), index.get(rec.b.as_str()))
                else {
                    return Err(CliError::Usage(format!(
                        "prediction for unknown mentions {} / {}",
                        rec.a, rec.b
                    )));
                };
                dist[a][b] = 1.0 - rec.p;
                dist[b][a] = 1.0 - rec.p;
            }
            let full = DistanceMatrix::from_fn(ids, |i, j| dist[i][j]);
            let config = ClusterConfig {
                linkage,
                criterion: if maxclust {
                    Criterion::MaxClust
                } else {
                    Criterion::Distance
                },
                threshold,
            };
            let mode = g.precluster.unwrap_or_default();
            let groups = lift(document_groups(
                &corpus,
                mode,
                g.seed.unwrap_or(0),
                &KMeansConfig::default(),
            ))?;
            let response = if mode == PreclusterMode::None {
                let labels = lift(agglomerative(&full, &config))?;
                Clustering::from_labels(full.ids(), &labels)
            } else {
                lift(cluster_mentions(
                    &corpus,
                    &groups,
                    |m| Ok(submatrix(&full, &corpus, m)),
                    &config,
                ))?
            };
            emit_clustering(g, &corpus, &response, Some(&out))
        }
        Command::Score {
            corpus: path,
            response,
            within_document,
        } => {
            let corpus = corpus(&path)?;
            let text = read(&response)?;
            let clusters = if text.trim_start().starts_with('{') {
                lift(Clustering::from_json(&text))?.into_clusters()
            } else {
                match read_conll_keyed(&text) {
                    Ok(c) => c,
                    Err(_) => lift(read_conll(&text))?,
                }
            };
            let report: MetricReport = if within_document {
                lift(within_document_score(&corpus, &clusters))?
            } else {
                lift(cross_document_score(&corpus, &clusters))?
            };
            emit(g, "scores", &report.to_json(), &report.to_tsv())
        }
        Command::Baseline { kind } => {
            let (path, variant, args) = match kind {
                BaselineKind::Lemma { corpus: path } => {
                    let corpus = corpus(&path)?;
                    let response = lift(lemma_baseline(&corpus))?;
                    return emit_clustering(g, &corpus, &response, None);
                }
                BaselineKind::LemmaDelta(a) => (a.corpus.clone(), DeltaVariant::Tfidf, a),
                BaselineKind::LemmaTime(a) => (a.corpus.clone(), DeltaVariant::Time, a),
            };
            let corpus = corpus(&path)?;
            let delta = match (args.delta, &args.tune_on) {
                (Some(d), _) => d,
                (None, Some(train)) => lift(tune_delta(&self::corpus(train)?, variant))?,
                (None, None) => return Err(CliError::Usage("give --delta or --tune-on".into())),
            };
            println!("delta\t{delta}");
            let response = lift(lemma_variant(&corpus, variant, delta))?;
            emit_clustering(g, &corpus, &response, None)
        }
        Command::Mask {
            corpus: path,
            embeddings,
            components,
            out,
            out_embeddings,
        } => {
            let corpus = corpus(&path)?;
            let spec = MaskSpec::new(components, g.seed.unwrap_or(0));
            let masked = lift(mask_corpus(&corpus, &spec))?;
            write(&out, masked.to_json())?;
            if let (Some(e), Some(o)) = (&embeddings, &out_embeddings) {
                write(o, mask_store(&store(Some(e))?, &corpus, &spec).to_jsonl())?;
            }
            Ok(())
        }
        Command::Experiment { kind } => match kind {
            ExperimentKind::InDataset { config } => {
                let config = experiment_config(&config, g)?;
                let (c, s) = lift(config.load_inputs())?;
                let report = lift(run_in_dataset(&config, &c, &s))?;
                emit(g, "report", &report.to_json(), &report.to_tsv())?;
                if let Some(dir) = &g.out_dir {
                    write(&dir.join("link_types.tsv"), report.link_types.to_tsv())?;
                    if let Some(imp) = &report.importance {
                        write(&dir.join("importance.tsv"), imp.to_tsv())?;
                    }
                }
                Ok(())
            }
            ExperimentKind::CrossDataset { config } => {
                let mut config: CrossDatasetConfig = json(&config)?;
                let mut inputs = Vec::new();
                for c in &mut config.corpora {
                    override_config(c, g);
                    inputs.push(lift(c.load_inputs())?);
                }
                let report = lift(run_cross_dataset(&config, &inputs))?;
                emit(g, "cross_dataset", &report.to_json(), &report.to_tsv())
            }
        },
    }
}

/// Entry point of the `cdcr` binary.
pub fn main() -> std::process::ExitCode {
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}
