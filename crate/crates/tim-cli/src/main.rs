//! `tim`: batch pipelines for indexing, mixture fitting, search, item
//! ranking and evaluation. Every subcommand reads inputs, writes outputs
//! atomically (temp file + rename), and is reproducible from its flags plus
//! a seed; log lines go to stderr, stdout carries only data.

mod config;

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use tim_core::adhoc::{
    search, BaselineConfig, BaselineModel, QueryRepresentation, RankedList, RankingModel, Scorer,
};
use tim_core::cf::{
    build_relevant_pairs, fit_all_models, load_ratings, rank_items_for_user, CfFitConfig,
    CfModels, DEFAULT_RATING_MAX, DEFAULT_RELEVANCE_THRESHOLD,
};
use tim_core::corpus::{
    build_index_from_results, ingest_corpus, read_trec_topics, CorpusFormat, InvertedIndex,
    Tokenizer,
};
use tim_core::eval::{evaluate_run, read_qrels, read_run, write_run, Metric, DEFAULT_EVAL_DEPTH};
use tim_core::mixture::{
    fit_all_terms, read_model_file, write_model_file, FitMethod, GibbsConfig, TwoPoissonParams,
    DEFAULT_EM_MAX_ITER, DEFAULT_EM_TOL,
};

use config::Config;

#[derive(Parser)]
#[command(
    name = "tim",
    version,
    about = "Relevance matching engine: index, fit, search, rank, evaluate"
)]
struct Cli {
    /// Key=value file supplying defaults for tuning flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an inverted index from a corpus file.
    Index(IndexArgs),
    /// Fit per-term mixtures over an index.
    Fit(FitArgs),
    /// Rank documents for queries and write a TREC run file.
    Search(SearchArgs),
    /// Collaborative filtering over a ratings file.
    #[command(subcommand)]
    Cf(CfCommand),
    /// Score a run file against relevance judgments.
    Eval(EvalArgs),
}

#[derive(Args)]
struct IndexArgs {
    /// Corpus file to ingest.
    #[arg(long)]
    corpus: PathBuf,
    /// Corpus format: jsonl or trec-sgml.
    #[arg(long)]
    format: Option<String>,
    /// Index file to write.
    #[arg(long)]
    out: PathBuf,
    /// Apply plural stemming while tokenizing.
    #[arg(long)]
    stem: bool,
    /// Stopword list (one word per line) to drop while tokenizing.
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Index file produced by `tim index`.
    #[arg(long)]
    index: PathBuf,
    /// Estimation method: em or gibbs.
    #[arg(long)]
    method: Option<String>,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// Restrict fitting to the terms listed in this file (one per line).
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[command(flatten)]
    estimation: EstimationArgs,
}

#[derive(Args, Clone)]
struct EstimationArgs {
    /// EM convergence tolerance on the relative log-likelihood change.
    #[arg(long)]
    tol: Option<f64>,
    /// EM iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Gibbs burn-in sweeps.
    #[arg(long)]
    burn_in: Option<usize>,
    /// Gibbs post-burn-in samples.
    #[arg(long)]
    samples: Option<usize>,
    /// Base seed; required for any stochastic step.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SearchArgs {
    /// Index file produced by `tim index`.
    #[arg(long)]
    index: PathBuf,
    /// Scorer: tim-em, tim-gibbs, idf, bm25, lm-jm or dirichlet.
    #[arg(long)]
    model: Option<String>,
    /// Fitted model file (required for tim-em / tim-gibbs).
    #[arg(long)]
    model_file: Option<PathBuf>,
    /// TREC topic file; queries come from title fields.
    #[arg(long)]
    topics: Option<PathBuf>,
    /// Single query string (alternative to --topics).
    #[arg(long)]
    query: Option<String>,
    /// Query id used with --query.
    #[arg(long)]
    qid: Option<String>,
    /// Result depth per query.
    #[arg(long)]
    k: Option<usize>,
    /// BM25 saturation.
    #[arg(long)]
    k1: Option<f64>,
    /// BM25 length normalization.
    #[arg(long)]
    b: Option<f64>,
    /// Jelinek-Mercer collection weight.
    #[arg(long)]
    lambda: Option<f64>,
    /// Dirichlet prior strength.
    #[arg(long)]
    mu: Option<f64>,
    /// Run file to write; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run tag; defaults to the model name.
    #[arg(long)]
    tag: Option<String>,
    /// Tokenize queries with plural stemming (match the index).
    #[arg(long)]
    stem: bool,
    /// Stopword list applied to queries (match the index).
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CfCommand {
    /// Fit user and item mixtures from a ratings file.
    Fit(CfFitArgs),
    /// Rank unrated items for users.
    Rank(CfRankArgs),
    /// Score a recommendation run file against judgments.
    Eval(EvalArgs),
}

#[derive(Args)]
struct CfCommonArgs {
    /// Ratings file: tab-separated `user item rating [timestamp]`.
    #[arg(long)]
    ratings: PathBuf,
    /// Rating scale upper bound.
    #[arg(long)]
    r_max: Option<u32>,
    /// Relevance threshold: ratings at or above it are relevant.
    #[arg(long)]
    threshold: Option<u32>,
    /// Estimation method: em or gibbs.
    #[arg(long)]
    fit: Option<String>,
    #[command(flatten)]
    estimation: EstimationArgs,
}

#[derive(Args)]
struct CfFitArgs {
    #[command(flatten)]
    common: CfCommonArgs,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CfRankArgs {
    #[command(flatten)]
    common: CfCommonArgs,
    /// Model file from `tim cf fit`; fits on the fly when omitted.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Items to return per user.
    #[arg(long)]
    k: Option<usize>,
    /// Rank for this user only; all users when omitted.
    #[arg(long)]
    user: Option<String>,
    /// Run file to write; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run tag.
    #[arg(long)]
    tag: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// Run file to score.
    #[arg(long)]
    run: PathBuf,
    /// Relevance judgments: `qid 0 docid grade`.
    #[arg(long)]
    qrels: PathBuf,
    /// Comma-separated metrics: map, mrr, p@K, ndcg@K.
    #[arg(long)]
    metrics: Option<String>,
    /// Rank cutoff applied before scoring.
    #[arg(long)]
    depth: Option<usize>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    if let Ok(raw) = std::env::var("TIM_THREADS") {
        let threads: usize = raw
            .parse()
            .map_err(|_| anyhow!("TIM_THREADS = {raw:?} is not a positive integer"))?;
        if threads == 0 {
            bail!("TIM_THREADS must be >= 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("building the thread pool")?;
    }

    let cli = Cli::parse();
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Index(args) => cmd_index(args, &cfg),
        Command::Fit(args) => cmd_fit(args, &cfg),
        Command::Search(args) => cmd_search(args, &cfg),
        Command::Cf(CfCommand::Fit(args)) => cmd_cf_fit(args, &cfg),
        Command::Cf(CfCommand::Rank(args)) => cmd_cf_rank(args, &cfg),
        Command::Cf(CfCommand::Eval(args)) | Command::Eval(args) => cmd_eval(args, &cfg),
    }
}

fn write_atomic<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut writer = BufWriter::new(
        File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?,
    );
    write(&mut writer)?;
    writer.flush()?;
    drop(writer);
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} into place", tmp.display()))?;
    Ok(())
}

fn tokenizer_from(stem: bool, stopwords: Option<&Path>) -> Result<Tokenizer> {
    let mut tokenizer = Tokenizer::new().with_stemming(stem);
    if let Some(path) = stopwords {
        let reader = BufReader::new(
            File::open(path).with_context(|| format!("opening stopwords {}", path.display()))?,
        );
        let mut words = HashSet::new();
        for line in reader.lines() {
            let word = line?.trim().to_lowercase();
            if !word.is_empty() {
                words.insert(word);
            }
        }
        tokenizer = tokenizer.with_stopwords(words);
    }
    Ok(tokenizer)
}

fn fit_method(kind: &str, estimation: &EstimationArgs, cfg: &Config) -> Result<FitMethod> {
    match kind {
        "em" => Ok(FitMethod::Em {
            tol: cfg.resolve(estimation.tol, "tol", DEFAULT_EM_TOL)?,
            max_iter: cfg.resolve(estimation.max_iter, "max-iter", DEFAULT_EM_MAX_ITER)?,
        }),
        "gibbs" => {
            let defaults = GibbsConfig::default();
            let seed = cfg
                .resolve_opt(estimation.seed, "seed")?
                .ok_or_else(|| anyhow!("--seed is required for gibbs fitting"))?;
            Ok(FitMethod::Gibbs(GibbsConfig {
                burn_in: cfg.resolve(estimation.burn_in, "burn-in", defaults.burn_in)?,
                samples: cfg.resolve(estimation.samples, "samples", defaults.samples)?,
                seed,
                ..defaults
            }))
        }
        other => bail!("unknown estimation method {other:?} (expected em or gibbs)"),
    }
}

fn cmd_index(args: IndexArgs, cfg: &Config) -> Result<()> {
    let format: CorpusFormat = cfg
        .resolve_opt(args.format, "format")?
        .ok_or_else(|| anyhow!("--format is required (jsonl or trec-sgml)"))?
        .parse()?;
    let tokenizer = tokenizer_from(args.stem, args.stopwords.as_deref())?;
    let docs = ingest_corpus(&args.corpus, format, &tokenizer)?;
    let index = build_index_from_results(docs)?;
    log::info!(
        "indexed {} documents, {} terms, {} tokens",
        index.doc_count(),
        index.vocabulary_size(),
        index.total_tokens()
    );
    write_atomic(&args.out, |w| {
        index.write_to(w)?;
        Ok(())
    })
}

fn cmd_fit(args: FitArgs, cfg: &Config) -> Result<()> {
    let index = InvertedIndex::load(&args.index)?;
    let method = fit_method(
        &cfg.resolve(args.method, "method", "em".to_string())?,
        &args.estimation,
        cfg,
    )?;
    let vocabulary = match &args.vocab {
        None => None,
        Some(path) => {
            let reader = BufReader::new(File::open(path)?);
            let mut terms = HashSet::new();
            for line in reader.lines() {
                let term = line?.trim().to_string();
                if !term.is_empty() {
                    terms.insert(term);
                }
            }
            Some(terms)
        }
    };
    let records = fit_all_terms(&index, &method, vocabulary.as_ref())?;
    log::info!("fitted {} terms with {}", records.len(), method.name());
    write_atomic(&args.out, |w| {
        write_model_file(w, &records)?;
        Ok(())
    })
}

fn load_params(path: &Path, expected_method: &str) -> Result<HashMap<String, TwoPoissonParams>> {
    let records = read_model_file(BufReader::new(File::open(path)?))?;
    let mut params = HashMap::with_capacity(records.len());
    for record in records {
        if record.method != expected_method {
            bail!(
                "model file {} was fitted with {:?}, but the selected model expects {:?}",
                path.display(),
                record.method,
                expected_method
            );
        }
        params.insert(record.property, record.params);
    }
    Ok(params)
}

fn cmd_search(args: SearchArgs, cfg: &Config) -> Result<()> {
    let index = InvertedIndex::load(&args.index)?;
    let model: RankingModel = cfg
        .resolve_opt(args.model, "model")?
        .ok_or_else(|| anyhow!("--model is required"))?
        .parse()?;
    let k = cfg.resolve(args.k, "k", 1000usize)?;
    let tag = cfg.resolve(args.tag, "tag", model.name().to_string())?;

    let tokenizer = tokenizer_from(args.stem, args.stopwords.as_deref())?;
    let queries: Vec<QueryRepresentation> = match (&args.topics, &args.query) {
        (Some(topics), None) => read_trec_topics(topics)?
            .into_iter()
            .map(|t| QueryRepresentation::from_text(t.number, &t.title, &tokenizer))
            .collect(),
        (None, Some(text)) => {
            let qid = args.qid.clone().unwrap_or_else(|| "q1".to_string());
            vec![QueryRepresentation::from_text(qid, text, &tokenizer)]
        }
        _ => bail!("exactly one of --topics or --query is required"),
    };

    let params = match model.expected_fit() {
        Some(expected) => {
            let path = args
                .model_file
                .as_ref()
                .ok_or_else(|| anyhow!("--model-file is required for {}", model.name()))?;
            Some(load_params(path, expected)?)
        }
        None => None,
    };
    let baseline = BaselineConfig {
        k1: cfg.resolve(args.k1, "k1", BaselineConfig::default().k1)?,
        b: cfg.resolve(args.b, "b", BaselineConfig::default().b)?,
        lambda: cfg.resolve(args.lambda, "lambda", BaselineConfig::default().lambda)?,
        mu: cfg.resolve(args.mu, "mu", BaselineConfig::default().mu)?,
    };
    let scorer = match model {
        RankingModel::TimEm | RankingModel::TimGibbs => Scorer::Tim(params.as_ref().unwrap()),
        RankingModel::Idf => Scorer::Idf,
        RankingModel::Bm25 => Scorer::Baseline(BaselineModel::Bm25, baseline),
        RankingModel::LmJm => Scorer::Baseline(BaselineModel::LmJm, baseline),
        RankingModel::Dirichlet => Scorer::Baseline(BaselineModel::Dirichlet, baseline),
    };

    let lists: Vec<RankedList> = queries
        .par_iter()
        .map(|q| search(&index, &scorer, q, k))
        .collect::<tim_core::Result<_>>()?;
    log::info!("ran {} queries at depth {k} with {}", lists.len(), model.name());

    match &args.out {
        Some(path) => write_atomic(path, |w| {
            write_run(w, &lists, &tag)?;
            Ok(())
        }),
        None => {
            let stdout = std::io::stdout();
            write_run(&mut stdout.lock(), &lists, &tag)?;
            Ok(())
        }
    }
}

fn cf_fit_config(common: &CfCommonArgs, cfg: &Config) -> Result<(u32, CfFitConfig)> {
    let r_max = cfg.resolve(common.r_max, "r-max", DEFAULT_RATING_MAX)?;
    let threshold = cfg.resolve(common.threshold, "threshold", DEFAULT_RELEVANCE_THRESHOLD)?;
    let method = fit_method(
        &cfg.resolve(common.fit.clone(), "fit", "em".to_string())?,
        &common.estimation,
        cfg,
    )?;
    Ok((r_max, CfFitConfig { threshold, method }))
}

fn cmd_cf_fit(args: CfFitArgs, cfg: &Config) -> Result<()> {
    let (r_max, fit_config) = cf_fit_config(&args.common, cfg)?;
    let load = load_ratings(&args.common.ratings, r_max)?;
    if load.duplicate_overwrites > 0 {
        log::warn!("{} duplicate ratings overwritten", load.duplicate_overwrites);
    }
    let models = fit_all_models(&load.matrix, &fit_config)?;
    let records = models.to_records(&load.matrix);
    log::info!(
        "fitted {} users and {} items with {}",
        load.matrix.n_users(),
        load.matrix.n_items(),
        fit_config.method.name()
    );
    write_atomic(&args.out, |w| {
        write_model_file(w, &records)?;
        Ok(())
    })
}

fn cmd_cf_rank(args: CfRankArgs, cfg: &Config) -> Result<()> {
    let (r_max, fit_config) = cf_fit_config(&args.common, cfg)?;
    let k = cfg.resolve(args.k, "k", 10usize)?;
    let tag = cfg.resolve(args.tag, "tag", format!("tim-cf-{}", fit_config.method.name()))?;

    let load = load_ratings(&args.common.ratings, r_max)?;
    if load.duplicate_overwrites > 0 {
        log::warn!("{} duplicate ratings overwritten", load.duplicate_overwrites);
    }
    let matrix = load.matrix;
    let rel = build_relevant_pairs(&matrix, fit_config.threshold)?;
    let models = match &args.model {
        Some(path) => {
            let records = read_model_file(BufReader::new(File::open(path)?))?;
            CfModels::from_records(&matrix, &records)?
        }
        None => fit_all_models(&matrix, &fit_config)?,
    };

    let users: Vec<String> = match &args.user {
        Some(user) => vec![user.clone()],
        None => {
            let mut ids: Vec<String> =
                (0..matrix.n_users() as u32).map(|u| matrix.user_id(u).to_string()).collect();
            ids.sort();
            ids
        }
    };
    let lists: Vec<RankedList> = users
        .par_iter()
        .map(|user| rank_items_for_user(&matrix, &rel, &models, user, None, k))
        .collect::<tim_core::Result<_>>()?;
    log::info!("ranked top-{k} items for {} users", lists.len());

    match &args.out {
        Some(path) => write_atomic(path, |w| {
            write_run(w, &lists, &tag)?;
            Ok(())
        }),
        None => {
            let stdout = std::io::stdout();
            write_run(&mut stdout.lock(), &lists, &tag)?;
            Ok(())
        }
    }
}

fn cmd_eval(args: EvalArgs, cfg: &Config) -> Result<()> {
    let metrics_raw = cfg.resolve(args.metrics, "metrics", "map,mrr".to_string())?;
    let metrics: Vec<Metric> = metrics_raw
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<tim_core::Result<_>>()?;
    let depth = cfg.resolve(args.depth, "depth", DEFAULT_EVAL_DEPTH)?;

    let runs = read_run(&args.run)?;
    let qrels = read_qrels(&args.qrels)?;
    let report = evaluate_run(&runs, &qrels, &metrics, depth);

    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    for (qid, values) in &report.per_query {
        for (metric, value) in values {
            writeln!(w, "{metric}\t{qid}\t{value:.4}")?;
        }
    }
    for (metric, value) in &report.means {
        writeln!(w, "{metric}\tall\t{value:.4}")?;
    }
    Ok(())
}
