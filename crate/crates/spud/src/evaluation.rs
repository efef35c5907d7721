//! TREC-style evaluation: run and qrels interchange formats, rank metrics
//! (AP, NDCG@20, Recall@1000), paired significance testing, and parameter
//! sweeps that retain per-topic metrics.

pub mod metrics;
pub mod sweep;
pub mod trec;
pub mod ttest;

pub use metrics::{
    average_precision, evaluate_run, ndcg_at_k, recall_at_k, MetricKind, MetricsReport,
    TopicMetrics, AP_CUTOFF, NDCG_K, RECALL_K,
};
pub use sweep::{default_mu_grid, default_pi_grid, parse_grid, run_topics, sweep, SweepPoint};
pub use trec::{
    load_qrels, load_run, load_topics, parse_qrels, parse_run, parse_topics, save_run,
    write_run, Qrels, RunEntry, RunFile, Topic,
};
pub use ttest::{paired_ttest, SigTestResult};

use thiserror::Error;

use crate::ranking::RankingError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("run file line {line}: {message}")]
    RunFormat { line: usize, message: String },
    #[error("qrels line {line}: {message}")]
    QrelsFormat { line: usize, message: String },
    #[error("topics line {line}: {message}")]
    TopicsFormat { line: usize, message: String },
    #[error("paired test requires identical topic sets")]
    TopicMismatch,
    #[error("paired test requires at least 2 pairs, got {n}")]
    TooFewPairs { n: usize },
    #[error("bad grid spec: {message}")]
    GridFormat { message: String },
    #[error(transparent)]
    Ranking(#[from] RankingError),
}
