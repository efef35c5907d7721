//! Rank-quality metrics and whole-run evaluation.
//!
//! Conventions: unjudged documents count as non-relevant; average precision
//! is evaluated to depth 1000 with the relevant total R including never
//! retrieved documents; NDCG uses raw grades with a log2(rank+1) discount
//! and an ideal ranking of all judged grades sorted descending; topics with
//! no relevant documents are skipped and reported rather than scored.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::trec::{Qrels, RunFile};

pub const AP_CUTOFF: usize = 1000;
pub const NDCG_K: usize = 20;
pub const RECALL_K: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicMetrics {
    pub topic_id: String,
    pub ap: f64,
    pub ndcg20: f64,
    pub recall1000: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MetricsReport {
    /// Evaluated topics in ascending topic order.
    pub per_topic: Vec<TopicMetrics>,
    pub map: f64,
    pub mean_ndcg20: f64,
    pub mean_recall1000: f64,
    pub evaluated: usize,
    /// Topics present in the run whose qrels hold no relevant document.
    pub skipped_no_relevant: Vec<String>,
    /// Topics present in the run but absent from the qrels entirely.
    pub skipped_unjudged: Vec<String>,
}

/// Which aggregate a significance test should compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Map,
    Ndcg20,
    Recall1000,
}

impl MetricKind {
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "map" => Some(MetricKind::Map),
            "ndcg20" => Some(MetricKind::Ndcg20),
            "recall1000" => Some(MetricKind::Recall1000),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Map => "map",
            MetricKind::Ndcg20 => "ndcg20",
            MetricKind::Recall1000 => "recall1000",
        }
    }

    pub fn of(&self, t: &TopicMetrics) -> f64 {
        match self {
            MetricKind::Map => t.ap,
            MetricKind::Ndcg20 => t.ndcg20,
            MetricKind::Recall1000 => t.recall1000,
        }
    }

    /// Per-topic values of this metric keyed by topic, as a paired-test input.
    pub fn vector(&self, report: &MetricsReport) -> BTreeMap<String, f64> {
        report
            .per_topic
            .iter()
            .map(|t| (t.topic_id.clone(), self.of(t)))
            .collect()
    }
}

/// Average precision at `cutoff`: mean over the topic's R relevant documents
/// of the precision at each relevant document's rank, zero for relevant
/// documents not retrieved within the cutoff. None when R = 0.
pub fn average_precision(
    ranking: &[&str],
    rel: &BTreeSet<String>,
    cutoff: usize,
) -> Option<f64> {
    let r_total = rel.len();
    if r_total == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut acc = 0.0f64;
    for (i, doc) in ranking.iter().take(cutoff).enumerate() {
        if rel.contains(*doc) {
            hits += 1;
            acc += hits as f64 / (i + 1) as f64;
        }
    }
    Some(acc / r_total as f64)
}

/// NDCG at `k` with gain = grade and discount log2(rank+1); the ideal
/// ranking sorts all judged grades descending. None when the topic has no
/// relevant document.
pub fn ndcg_at_k(ranking: &[&str], grades: &BTreeMap<String, i64>, k: usize) -> Option<f64> {
    let mut ideal_gains: Vec<i64> = grades.values().copied().filter(|&g| g >= 1).collect();
    if ideal_gains.is_empty() {
        return None;
    }
    ideal_gains.sort_unstable_by(|a, b| b.cmp(a));

    let discount = |i: usize| ((i + 2) as f64).log2();
    let mut dcg = 0.0;
    for (i, doc) in ranking.iter().take(k).enumerate() {
        let gain = grades.get(*doc).copied().unwrap_or(0);
        if gain >= 1 {
            dcg += gain as f64 / discount(i);
        }
    }
    let mut ideal = 0.0;
    for (i, gain) in ideal_gains.iter().take(k).enumerate() {
        ideal += *gain as f64 / discount(i);
    }
    Some(dcg / ideal)
}

/// Fraction of the topic's relevant documents found in the top k. None when
/// R = 0.
pub fn recall_at_k(ranking: &[&str], rel: &BTreeSet<String>, k: usize) -> Option<f64> {
    let r_total = rel.len();
    if r_total == 0 {
        return None;
    }
    let found = ranking.iter().take(k).filter(|doc| rel.contains(**doc)).count();
    Some(found as f64 / r_total as f64)
}

/// Scores every topic of the run against the qrels. Topics absent from the
/// qrels or lacking relevant documents are skipped and listed; aggregates
/// are arithmetic means over the evaluated topics (zero when none).
pub fn evaluate_run(run: &RunFile, qrels: &Qrels) -> MetricsReport {
    let mut report = MetricsReport::default();
    for (topic, entries) in &run.topics {
        let Some(grades) = qrels.judgments.get(topic) else {
            report.skipped_unjudged.push(topic.clone());
            continue;
        };
        let rel = qrels.relevant_set(topic);
        if rel.is_empty() {
            report.skipped_no_relevant.push(topic.clone());
            continue;
        }
        let ranking: Vec<&str> = entries.iter().map(|e| e.doc_id.as_str()).collect();
        let ap = average_precision(&ranking, &rel, AP_CUTOFF)
            .expect("relevant set verified non-empty");
        let ndcg20 =
            ndcg_at_k(&ranking, grades, NDCG_K).expect("relevant set verified non-empty");
        let recall1000 = recall_at_k(&ranking, &rel, RECALL_K)
            .expect("relevant set verified non-empty");
        report.per_topic.push(TopicMetrics { topic_id: topic.clone(), ap, ndcg20, recall1000 });
    }
    report.evaluated = report.per_topic.len();
    if report.evaluated > 0 {
        let n = report.evaluated as f64;
        report.map = report.per_topic.iter().map(|t| t.ap).sum::<f64>() / n;
        report.mean_ndcg20 = report.per_topic.iter().map(|t| t.ndcg20).sum::<f64>() / n;
        report.mean_recall1000 =
            report.per_topic.iter().map(|t| t.recall1000).sum::<f64>() / n;
    }
    report
}
