//! Command-line workbench over the `spud` retrieval library: one binary,
//! one subcommand per pipeline stage.
//!
//! Every invocation echoes its fully-resolved configuration to stderr so a
//! run can be reproduced from its log alone, and identical invocations on
//! identical inputs produce byte-identical outputs regardless of thread
//! count. Exit codes: 0 success, 1 usage error, 2 data or format error,
//! 3 numerical divergence.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use spud::diagnostics::{
    background_ratio_table, check_lnc2, idf_curve_to_csv, idf_family_curve, length_bin_analysis,
    random_lnc2_trials, DiagnosticsError, LengthKind, DEFAULT_BINS,
};
use spud::estimation::{
    derive_mu_prime, estimate_mc, EstimationError, DEFAULT_INIT, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use spud::evaluation::{
    default_mu_grid, default_pi_grid, evaluate_run, load_qrels, load_run, load_topics,
    paired_ttest, parse_grid, run_topics, save_run, sweep, EvalError, MetricKind, RunEntry,
    RunFile, SweepPoint, RECALL_K,
};
use spud::feedback::{
    expansion_model, rerank_with_model, smooth_query, FeedbackConfig, FeedbackError,
    FeedbackVariant,
};
use spud::index::{build_index, load_index, read_corpus_jsonl, save_index, IndexError};
use spud::ranking::{prepare_query, retrieve, RankingError, RankingModel};
use spud::textprep::TokenPipelineConfig;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Errors grouped by the exit code they map to.
enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<RankingError> for CliError {
    fn from(e: RankingError) -> Self {
        match e {
            // A query prepared under the wrong pipeline is an input problem;
            // everything else is a bad model/parameter choice on the line.
            RankingError::PipelineMismatch { .. } => CliError::Data(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Ranking(inner) => inner.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        match e {
            EstimationError::Diverged { .. } | EstimationError::DigammaDomain(_) => {
                CliError::Numerical(e.to_string())
            }
            EstimationError::OmegaDomain(_)
            | EstimationError::McDomain(_)
            | EstimationError::InitDomain(_) => CliError::Usage(e.to_string()),
            EstimationError::NoDocuments | EstimationError::EmptyDocument { .. } => {
                CliError::Data(e.to_string())
            }
        }
    }
}

impl From<FeedbackError> for CliError {
    fn from(e: FeedbackError) -> Self {
        match e {
            FeedbackError::VariantParameter { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<DiagnosticsError> for CliError {
    fn from(e: DiagnosticsError) -> Self {
        match e {
            DiagnosticsError::BinCount(_)
            | DiagnosticsError::DeltaDomain(_)
            | DiagnosticsError::DfRange { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "spud",
    version,
    about = "Query-likelihood retrieval workbench: indexing, ranking, evaluation, feedback, diagnostics"
)]
struct Cli {
    /// Cap internal parallelism at this many worker threads.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index directory from a JSON-lines corpus.
    Index(IndexArgs),
    /// Score one query against an index and print the top documents.
    Search(SearchArgs),
    /// Batch-retrieve a topics file into a TREC run file.
    Run(RunArgs),
    /// Score a run file against relevance judgments.
    Eval(EvalArgs),
    /// Evaluate one model across a grid of smoothing parameters.
    Sweep(SweepArgs),
    /// Paired two-sided t-test between two run files on one metric.
    Sigtest(SigtestArgs),
    /// Estimate the background mass m_c and the smoothing parameters it implies.
    EstimateMc(EstimateMcArgs),
    /// Pseudo-relevance feedback: expand each topic, smooth, and rerank.
    Expand(ExpandArgs),
    /// Model diagnostics over an index, a run, or both.
    #[command(subcommand)]
    Diagnose(DiagnoseCommand),
}

#[derive(Subcommand)]
enum DiagnoseCommand {
    /// Score invariance under k-fold self-concatenation, on random trials.
    Lnc2(Lnc2Args),
    /// Retrieval and relevance probability by document-length bin.
    LengthBins(LengthBinsArgs),
    /// Document-frequency vs collection-frequency background ratio table.
    BgRatio(BgRatioArgs),
    /// Document-frequency weighting curve implied by the urn model.
    IdfCurve(IdfCurveArgs),
}

#[derive(Args)]
struct IndexArgs {
    /// JSON-lines corpus: one {"id", "text"} object per line.
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Directory to write the index into (created if absent).
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Stopword file (one word per line, # comments). Overrides the
    /// SPUD_STOPWORDS environment variable, which overrides the bundled list.
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
    /// Skip stemming.
    #[arg(long)]
    no_stem: bool,
}

#[derive(Args)]
struct SearchArgs {
    /// Index directory written by `spud index`.
    #[arg(long, value_name = "DIR")]
    index: PathBuf,
    /// Scoring model: mql_jm, mql_dir, lm2, lm3, spud_jm, or spud_dir.
    #[arg(long)]
    model: String,
    /// Smoothing parameter; required by every model except spud_jm.
    #[arg(long)]
    param: Option<f64>,
    /// Query text, run through the index's own token pipeline.
    #[arg(long)]
    query: String,
    /// Number of results.
    #[arg(short, default_value_t = 10)]
    k: usize,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "DIR")]
    index: PathBuf,
    /// Scoring model: mql_jm, mql_dir, lm2, lm3, spud_jm, or spud_dir.
    #[arg(long)]
    model: String,
    /// Smoothing parameter; required by every model except spud_jm.
    #[arg(long)]
    param: Option<f64>,
    /// Topics file: JSON-lines {"id", "text"}.
    #[arg(long, value_name = "FILE")]
    topics: PathBuf,
    /// Run file to write (top 1000 per topic).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Run tag recorded in the last run-file column.
    #[arg(long)]
    tag: String,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    run: PathBuf,
    #[arg(long, value_name = "FILE")]
    qrels: PathBuf,
    /// Print one metrics row per topic before the aggregates.
    #[arg(long)]
    per_query: bool,
    /// Emit the full report as JSON (full float precision) instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_name = "DIR")]
    index: PathBuf,
    /// Model whose parameter is swept (spud_jm has none and cannot be swept).
    #[arg(long)]
    model: String,
    /// Grid as start:end:step; defaults to the customary grid for the model.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, value_name = "FILE")]
    topics: PathBuf,
    #[arg(long, value_name = "FILE")]
    qrels: PathBuf,
}

#[derive(Args)]
struct SigtestArgs {
    #[arg(long, value_name = "FILE")]
    run_a: PathBuf,
    #[arg(long, value_name = "FILE")]
    run_b: PathBuf,
    #[arg(long, value_name = "FILE")]
    qrels: PathBuf,
    /// map, ndcg20, or recall1000.
    #[arg(long)]
    metric: String,
    /// Emit the result as JSON (full float precision) instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EstimateMcArgs {
    #[arg(long, value_name = "DIR")]
    index: PathBuf,
    /// Starting point of the fixed-point iteration.
    #[arg(long, default_value_t = DEFAULT_INIT)]
    init: f64,
    /// Relative-change convergence threshold.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args)]
struct ExpandArgs {
    #[arg(long, value_name = "DIR")]
    index: PathBuf,
    /// First-pass scorer: mql_dir or spud_dir.
    #[arg(long)]
    model: String,
    /// Smoothing parameter of the first-pass scorer.
    #[arg(long)]
    param: f64,
    /// Topics file: JSON-lines {"id", "text"}.
    #[arg(long, value_name = "FILE")]
    topics: PathBuf,
    /// Expansion weighting: rm3 or purm.
    #[arg(long)]
    variant: String,
    /// Feedback depth: how many top documents feed the expansion model.
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Expansion vocabulary size.
    #[arg(long, default_value_t = 50)]
    terms: usize,
    /// Weight on the original query in the smoothed query model.
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Run file to write (top 1000 per topic).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Run tag; defaults to the variant name.
    #[arg(long)]
    tag: Option<String>,
}

#[derive(Args)]
struct Lnc2Args {
    #[arg(long, value_name = "DIR")]
    index: PathBuf,
    /// Scoring model: mql_jm, mql_dir, lm2, lm3, spud_jm, or spud_dir.
    #[arg(long)]
    model: String,
    /// Smoothing parameter; required by every model except spud_jm.
    #[arg(long)]
    param: Option<f64>,
    /// Number of randomized (query, document, k) trials.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// RNG seed; mandatory because the trials are randomized.
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct LengthBinsArgs {
    #[arg(long, value_name = "FILE")]
    run: PathBuf,
    #[arg(long, value_name = "FILE")]
    qrels: PathBuf,
    /// Index directory supplying document lengths.
    #[arg(long, value_name = "DIR")]
    index: PathBuf,
    /// Number of equal-count length bins.
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// Length measure: tokens or types.
    #[arg(long, default_value = "tokens")]
    by: String,
    /// CSV output path.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct BgRatioArgs {
    #[arg(long, value_name = "DIR")]
    index: PathBuf,
    /// Rows to keep at each end of the ratio ordering.
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Comma-separated terms (post-pipeline forms) to restrict the table to.
    #[arg(long)]
    terms: Option<String>,
}

#[derive(Args)]
struct IdfCurveArgs {
    #[arg(long, value_name = "DIR")]
    index: PathBuf,
    /// Within-document factor in the family weight ln(1 + delta*n/df).
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// CSV output path.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let informational = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if informational { ExitCode::SUCCESS } else { ExitCode::from(EXIT_USAGE) };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        // In-process tests may initialize the pool more than once; the cap
        // still holds because the first build wins within one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            if matches!(err, CliError::Usage(_)) {
                eprintln!("run `spud --help` for usage");
            }
            ExitCode::from(err.code())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let threads = cli.threads.map_or_else(|| "all".to_string(), |n| n.to_string());
    match &cli.command {
        Command::Index(args) => cmd_index(args, &threads),
        Command::Search(args) => cmd_search(args, &threads),
        Command::Run(args) => cmd_run(args, &threads),
        Command::Eval(args) => cmd_eval(args, &threads),
        Command::Sweep(args) => cmd_sweep(args, &threads),
        Command::Sigtest(args) => cmd_sigtest(args, &threads),
        Command::EstimateMc(args) => cmd_estimate_mc(args, &threads),
        Command::Expand(args) => cmd_expand(args, &threads),
        Command::Diagnose(DiagnoseCommand::Lnc2(args)) => cmd_lnc2(args, &threads),
        Command::Diagnose(DiagnoseCommand::LengthBins(args)) => cmd_length_bins(args, &threads),
        Command::Diagnose(DiagnoseCommand::BgRatio(args)) => cmd_bg_ratio(args, &threads),
        Command::Diagnose(DiagnoseCommand::IdfCurve(args)) => cmd_idf_curve(args, &threads),
    }
}

/// One reproducibility line on stderr with every resolved setting.
fn echo_config(subcommand: &str, threads: &str, pairs: &[(&str, String)]) {
    let mut line = format!("config: subcommand={} threads={}", subcommand, threads);
    for (key, value) in pairs {
        line.push_str(&format!(" {}={}", key, value));
    }
    eprintln!("{}", line);
}

fn shown(path: &Path) -> String {
    path.display().to_string()
}

fn param_label(model: &RankingModel) -> String {
    model.param().map_or_else(|| "none".to_string(), |v| v.to_string())
}

/// Stopword resolution: --stopwords flag, then SPUD_STOPWORDS, then the
/// bundled list. Returns the source label for the config echo.
fn resolve_pipeline(flag: Option<&Path>) -> Result<(String, TokenPipelineConfig), CliError> {
    if let Some(path) = flag {
        let text = fs::read_to_string(path)?;
        return Ok((format!("file:{}", path.display()), TokenPipelineConfig::with_stopword_text(&text)));
    }
    if let Some(raw) = std::env::var_os("SPUD_STOPWORDS") {
        let path = PathBuf::from(raw);
        let text = fs::read_to_string(&path)?;
        return Ok((format!("env:{}", path.display()), TokenPipelineConfig::with_stopword_text(&text)));
    }
    Ok(("builtin".to_string(), TokenPipelineConfig::default()))
}

fn cmd_index(args: &IndexArgs, threads: &str) -> Result<(), CliError> {
    let (stopword_source, mut cfg) = resolve_pipeline(args.stopwords.as_deref())?;
    cfg.stem = !args.no_stem;
    echo_config(
        "index",
        threads,
        &[
            ("corpus", shown(&args.corpus)),
            ("out", shown(&args.out)),
            ("stopwords", stopword_source),
            ("lowercase", cfg.lowercase.to_string()),
            ("stem", cfg.stem.to_string()),
        ],
    );
    eprintln!("reading corpus {}", args.corpus.display());
    let idx = build_index(read_corpus_jsonl(&args.corpus)?, &cfg)?;
    eprintln!("writing index {}", args.out.display());
    save_index(&idx, &args.out)?;
    let s = idx.stats();
    println!(
        "indexed {} documents, {} terms, {} tokens",
        s.n, s.vocab_size, s.total_tokens
    );
    Ok(())
}

fn cmd_search(args: &SearchArgs, threads: &str) -> Result<(), CliError> {
    let model = RankingModel::from_name(&args.model, args.param)?;
    echo_config(
        "search",
        threads,
        &[
            ("index", shown(&args.index)),
            ("model", model.name().to_string()),
            ("param", param_label(&model)),
            ("query", format!("{:?}", args.query)),
            ("k", args.k.to_string()),
        ],
    );
    let idx = load_index(&args.index)?;
    let q = prepare_query(&args.query, &idx, idx.pipeline())?;
    for (i, hit) in retrieve(&q, &idx, &model, args.k).iter().enumerate() {
        println!("{} {} {:.6}", i + 1, hit.doc_id, hit.score);
    }
    Ok(())
}

fn cmd_run(args: &RunArgs, threads: &str) -> Result<(), CliError> {
    let model = RankingModel::from_name(&args.model, args.param)?;
    echo_config(
        "run",
        threads,
        &[
            ("index", shown(&args.index)),
            ("model", model.name().to_string()),
            ("param", param_label(&model)),
            ("topics", shown(&args.topics)),
            ("out", shown(&args.out)),
            ("tag", args.tag.clone()),
            ("k", RECALL_K.to_string()),
        ],
    );
    let idx = load_index(&args.index)?;
    let topics = load_topics(&args.topics)?;
    eprintln!("scoring {} topics", topics.len());
    let run = run_topics(&idx, &model, &topics, idx.pipeline(), RECALL_K, &args.tag)?;
    save_run(&args.out, &run)?;
    println!("wrote {} topics to {}", run.topics.len(), args.out.display());
    Ok(())
}

fn cmd_eval(args: &EvalArgs, threads: &str) -> Result<(), CliError> {
    echo_config(
        "eval",
        threads,
        &[
            ("run", shown(&args.run)),
            ("qrels", shown(&args.qrels)),
            ("per_query", args.per_query.to_string()),
            ("json", args.json.to_string()),
        ],
    );
    let run = load_run(&args.run)?;
    let qrels = load_qrels(&args.qrels)?;
    let report = evaluate_run(&run, &qrels);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        return Ok(());
    }
    if args.per_query {
        for t in &report.per_topic {
            println!(
                "{} map {:.6} ndcg20 {:.6} recall1000 {:.6}",
                t.topic_id, t.ap, t.ndcg20, t.recall1000
            );
        }
    }
    println!("evaluated {}", report.evaluated);
    if !report.skipped_no_relevant.is_empty() {
        println!("skipped_no_relevant {}", report.skipped_no_relevant.join(","));
    }
    if !report.skipped_unjudged.is_empty() {
        println!("skipped_unjudged {}", report.skipped_unjudged.join(","));
    }
    println!("map {:.6}", report.map);
    println!("ndcg20 {:.6}", report.mean_ndcg20);
    println!("recall1000 {:.6}", report.mean_recall1000);
    Ok(())
}

fn cmd_sweep(args: &SweepArgs, threads: &str) -> Result<(), CliError> {
    let grid = match &args.grid {
        Some(text) => parse_grid(text)?,
        None => match args.model.to_ascii_lowercase().as_str() {
            "mql_jm" => default_pi_grid(),
            _ => default_mu_grid(),
        },
    };
    let model = RankingModel::from_name(&args.model, Some(grid[0]))?;
    echo_config(
        "sweep",
        threads,
        &[
            ("index", shown(&args.index)),
            ("model", model.name().to_string()),
            ("grid", grid.iter().map(f64::to_string).collect::<Vec<_>>().join(",")),
            ("topics", shown(&args.topics)),
            ("qrels", shown(&args.qrels)),
        ],
    );
    let idx = load_index(&args.index)?;
    let topics = load_topics(&args.topics)?;
    let qrels = load_qrels(&args.qrels)?;
    eprintln!("sweeping {} grid points", grid.len());
    // Points are independent, so they parallelize; collecting preserves
    // grid order, keeping the output byte-identical at any thread count.
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .map(|&param| {
            sweep(&idx, &model, &[param], &topics, &qrels, idx.pipeline(), "sweep")
                .pop()
                .expect("one grid point in, one point out")
        })
        .collect();
    println!("param map ndcg20 recall1000 evaluated");
    for point in points {
        match point.outcome {
            Ok(report) => println!(
                "{} {:.6} {:.6} {:.6} {}",
                point.param, report.map, report.mean_ndcg20, report.mean_recall1000, report.evaluated
            ),
            Err(e) => println!("{} error: {}", point.param, e),
        }
    }
    Ok(())
}

fn cmd_sigtest(args: &SigtestArgs, threads: &str) -> Result<(), CliError> {
    let metric = MetricKind::from_name(&args.metric).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown metric: {} (expected map, ndcg20, or recall1000)",
            args.metric
        ))
    })?;
    echo_config(
        "sigtest",
        threads,
        &[
            ("run_a", shown(&args.run_a)),
            ("run_b", shown(&args.run_b)),
            ("qrels", shown(&args.qrels)),
            ("metric", metric.name().to_string()),
            ("json", args.json.to_string()),
        ],
    );
    let qrels = load_qrels(&args.qrels)?;
    let report_a = evaluate_run(&load_run(&args.run_a)?, &qrels);
    let report_b = evaluate_run(&load_run(&args.run_b)?, &qrels);
    let result = paired_ttest(&metric.vector(&report_a), &metric.vector(&report_b))?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&result).expect("result serializes"));
        return Ok(());
    }
    println!("metric {}", metric.name());
    println!("n_pairs {}", result.n_pairs);
    println!("mean_diff {:.6}", result.mean_diff);
    println!("t {:.6}", result.t_statistic);
    println!("p {:.6}", result.p_value);
    println!("degenerate {}", result.degenerate);
    Ok(())
}

fn cmd_estimate_mc(args: &EstimateMcArgs, threads: &str) -> Result<(), CliError> {
    echo_config(
        "estimate-mc",
        threads,
        &[
            ("index", shown(&args.index)),
            ("init", args.init.to_string()),
            ("tol", args.tol.to_string()),
            ("max_iter", DEFAULT_MAX_ITER.to_string()),
        ],
    );
    let idx = load_index(&args.index)?;
    let est = estimate_mc(&idx, args.init, args.tol, DEFAULT_MAX_ITER)?;
    if !est.converged {
        return Err(CliError::Numerical(format!(
            "fixed point did not converge within {} iterations (last residual {:e})",
            est.iterations, est.residual
        )));
    }
    println!("m_c {:.6}", est.m_c);
    println!("iterations {}", est.iterations);
    println!("residual {:.6e}", est.residual);
    if est.uninformative {
        println!("uninformative true (every document holds a single distinct term)");
    }
    println!("omega mu_prime");
    for omega in [0.5, 0.7, 0.8, 0.9] {
        println!("{} {:.6}", omega, derive_mu_prime(omega, est.m_c)?);
    }
    Ok(())
}

fn cmd_expand(args: &ExpandArgs, threads: &str) -> Result<(), CliError> {
    if !matches!(args.model.to_ascii_lowercase().as_str(), "mql_dir" | "spud_dir") {
        return Err(CliError::Usage(format!(
            "expand takes a first-pass model of mql_dir or spud_dir, got {}",
            args.model
        )));
    }
    let model = RankingModel::from_name(&args.model, Some(args.param))?;
    let variant = FeedbackVariant::from_name(&args.variant).ok_or_else(|| {
        CliError::Usage(format!("unknown variant: {} (expected rm3 or purm)", args.variant))
    })?;
    if !(0.0..=1.0).contains(&args.tau) {
        return Err(CliError::Usage(format!(
            "tau={} out of range: requires 0 <= tau <= 1",
            args.tau
        )));
    }
    let tag = args.tag.clone().unwrap_or_else(|| variant.name().to_string());
    echo_config(
        "expand",
        threads,
        &[
            ("index", shown(&args.index)),
            ("model", model.name().to_string()),
            ("param", param_label(&model)),
            ("topics", shown(&args.topics)),
            ("variant", variant.name().to_string()),
            ("k", args.k.to_string()),
            ("terms", args.terms.to_string()),
            ("tau", args.tau.to_string()),
            ("out", shown(&args.out)),
            ("tag", tag.clone()),
        ],
    );
    let idx = load_index(&args.index)?;
    let topics = load_topics(&args.topics)?;
    let cfg = FeedbackConfig {
        k_docs: args.k,
        n_terms: args.terms,
        tau: args.tau,
        expansion_mu: 0.0,
        variant,
    };
    eprintln!("expanding {} topics", topics.len());
    let mut run = RunFile { tag, topics: BTreeMap::new() };
    for topic in &topics {
        let q = prepare_query(&topic.text, &idx, idx.pipeline())?;
        if q.is_empty() {
            continue;
        }
        let first_pass = retrieve(&q, &idx, &model, RECALL_K);
        if first_pass.is_empty() {
            continue;
        }
        let qe = expansion_model(&q, &idx, &first_pass, &cfg, &model)?;
        let smoothed = smooth_query(&q, &qe, args.tau);
        let reranked = rerank_with_model(&smoothed, &idx, &model, RECALL_K);
        if reranked.is_empty() {
            continue;
        }
        run.topics.insert(
            topic.id.clone(),
            reranked
                .into_iter()
                .map(|hit| RunEntry { doc_id: hit.doc_id, score: hit.score })
                .collect(),
        );
    }
    save_run(&args.out, &run)?;
    println!("wrote {} topics to {}", run.topics.len(), args.out.display());
    Ok(())
}

fn cmd_lnc2(args: &Lnc2Args, threads: &str) -> Result<(), CliError> {
    let model = RankingModel::from_name(&args.model, args.param)?;
    echo_config(
        "diagnose-lnc2",
        threads,
        &[
            ("index", shown(&args.index)),
            ("model", model.name().to_string()),
            ("param", param_label(&model)),
            ("trials", args.trials.to_string()),
            ("seed", args.seed.to_string()),
        ],
    );
    let idx = load_index(&args.index)?;
    let trials = random_lnc2_trials(&idx, args.trials, args.seed);
    let report = check_lnc2(&idx, &model, &trials)?;
    println!("model {}", report.model);
    println!("trials {}", report.observations.len());
    println!("max_abs_delta {:.6e}", report.max_abs_delta);
    println!("satisfied {}", report.satisfied);
    if let Some(i) = report.witness {
        let w = &report.observations[i];
        println!("witness doc {} k {} delta {:.6e}", w.doc_id, w.k, w.delta());
    }
    Ok(())
}

fn cmd_length_bins(args: &LengthBinsArgs, threads: &str) -> Result<(), CliError> {
    let kind = LengthKind::from_name(&args.by).ok_or_else(|| {
        CliError::Usage(format!("unknown length measure: {} (expected tokens or types)", args.by))
    })?;
    echo_config(
        "diagnose-length-bins",
        threads,
        &[
            ("run", shown(&args.run)),
            ("qrels", shown(&args.qrels)),
            ("index", shown(&args.index)),
            ("bins", args.bins.to_string()),
            ("by", kind.name().to_string()),
            ("out", shown(&args.out)),
        ],
    );
    let run = load_run(&args.run)?;
    let qrels = load_qrels(&args.qrels)?;
    let idx = load_index(&args.index)?;
    let curve = length_bin_analysis(&run, &qrels, &idx, args.bins, kind)?;
    fs::write(&args.out, curve.to_csv())?;
    println!("wrote {} bins to {}", curve.bins.len(), args.out.display());
    Ok(())
}

fn cmd_bg_ratio(args: &BgRatioArgs, threads: &str) -> Result<(), CliError> {
    echo_config(
        "diagnose-bg-ratio",
        threads,
        &[
            ("index", shown(&args.index)),
            ("top", args.top.to_string()),
            ("terms", args.terms.clone().unwrap_or_else(|| "all".to_string())),
        ],
    );
    let idx = load_index(&args.index)?;
    let listed: Option<Vec<String>> = args.terms.as_ref().map(|raw| {
        raw.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::to_string).collect()
    });
    let table = background_ratio_table(&idx, listed.as_deref(), args.top)?;
    print!("{}", table.to_csv());
    Ok(())
}

fn cmd_idf_curve(args: &IdfCurveArgs, threads: &str) -> Result<(), CliError> {
    echo_config(
        "diagnose-idf-curve",
        threads,
        &[
            ("index", shown(&args.index)),
            ("delta", args.delta.to_string()),
            ("out", shown(&args.out)),
        ],
    );
    let idx = load_index(&args.index)?;
    let df_range = decade_ladder(idx.stats().n);
    let points = idf_family_curve(&idx, args.delta, &df_range)?;
    fs::write(&args.out, idf_curve_to_csv(&points))?;
    println!("wrote {} points to {}", points.len(), args.out.display());
    Ok(())
}

/// 1, 2, 5, 10, 20, 50, ... capped at n, always ending at n itself.
fn decade_ladder(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut decade = 1u64;
    'ladder: loop {
        for mult in [1u64, 2, 5] {
            let value = decade.saturating_mul(mult);
            if value >= n {
                break 'ladder;
            }
            out.push(value);
        }
        match decade.checked_mul(10) {
            Some(next) => decade = next,
            None => break,
        }
    }
    out.push(n);
    out
}
