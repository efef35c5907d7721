//! Pseudo-relevance feedback: build an expansion query model from the top-k
//! documents of a first pass, interpolate it with the original query, and
//! re-rank with real-valued term weights.
//!
//! Two expansion variants exist, differing in which scorer supplies the
//! document weights and which smoothed document model supplies the term
//! probabilities: `rm3` draws both from the Dirichlet multinomial model
//! (`mql_dir` shape), `purm` from the smoothed Polya urn model (`spud_dir`
//! shape). At expansion_mu = 0 both term models collapse to the
//! maximum-likelihood distribution c(t,d)/|d| and the variants differ only
//! through the document weights.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::index::{DocOrdinal, InvertedIndex};
use crate::ranking::{self, Query, RankingModel, ScoredDoc};

#[derive(Debug, Error)]
pub enum FeedbackError {
    #[error("expansion requires a non-empty first-pass run")]
    EmptyRun,
    #[error("no scorable documents among the top-ranked entries")]
    NoScorableDocuments,
    #[error("run references document {doc_id} which the index does not contain")]
    UnknownDocument { doc_id: String },
    #[error("first-pass model {model} carries no parameter for the {variant} weight scorer")]
    VariantParameter { model: &'static str, variant: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackVariant {
    Rm3,
    Purm,
}

impl FeedbackVariant {
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "rm3" => Some(FeedbackVariant::Rm3),
            "purm" => Some(FeedbackVariant::Purm),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeedbackVariant::Rm3 => "rm3",
            FeedbackVariant::Purm => "purm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackConfig {
    pub k_docs: usize,
    pub n_terms: usize,
    pub tau: f64,
    /// Smoothing mass for the per-document term model during expansion;
    /// zero means plain maximum likelihood, the usual setting.
    pub expansion_mu: f64,
    pub variant: FeedbackVariant,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        FeedbackConfig {
            k_docs: 20,
            n_terms: 50,
            tau: 0.5,
            expansion_mu: 0.0,
            variant: FeedbackVariant::Rm3,
        }
    }
}

impl FeedbackConfig {
    pub fn for_variant(variant: FeedbackVariant) -> Self {
        FeedbackConfig { variant, ..FeedbackConfig::default() }
    }
}

/// A distribution over terms. Weights are non-negative and sum to 1 within
/// 1e-9; every operation here preserves that.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryModel {
    pub weights: BTreeMap<String, f64>,
}

impl QueryModel {
    pub fn total_weight(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Normalized document weights from log scores: shift by the maximum, then
/// exponentiate and divide by the sum. The shift makes the result invariant
/// under any constant offset of the scores, so the efficient and probability
/// score forms produce identical weights.
pub(crate) fn weights_from_log_scores(log_scores: &[f64]) -> Vec<f64> {
    let max = log_scores.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = log_scores.iter().map(|&s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Smoothed per-document term probability used during expansion. At mu = 0
/// both variants reduce to c(t,d)/|d| exactly.
fn expansion_term_prob(
    variant: FeedbackVariant,
    mu: f64,
    tf: f64,
    dl: f64,
    dvec: f64,
    cf_over_total: f64,
    df_over_sumvec: f64,
) -> f64 {
    if mu == 0.0 {
        return tf / dl;
    }
    match variant {
        FeedbackVariant::Rm3 => (tf + mu * cf_over_total) / (dl + mu),
        FeedbackVariant::Purm => {
            let vtf = (dvec * tf) / dl;
            (vtf + mu * df_over_sumvec) / (dvec + mu)
        }
    }
}

/// Estimates the expansion model p(t|q_e) = Σ over the top-k documents of
/// w(d)·p(t|doc model). The weights w(d) renormalize the documents' query
/// likelihoods under the variant's scorer (`rm3` → `mql_dir`, `purm` →
/// `spud_dir`) evaluated at the first-pass model's parameter. Candidate
/// terms are all terms occurring in the top-k documents; the n_terms most
/// probable survive (boundary ties keep the lexicographically smaller term)
/// and are renormalized.
///
/// When the run holds fewer than k_docs entries, all of them are used.
/// Entries naming unretrievable (empty) documents are skipped.
pub fn expansion_model(
    q: &Query,
    idx: &InvertedIndex,
    initial_run: &[ScoredDoc],
    cfg: &FeedbackConfig,
    first_pass: &RankingModel,
) -> Result<QueryModel, FeedbackError> {
    if initial_run.is_empty() {
        return Err(FeedbackError::EmptyRun);
    }
    let mut top: Vec<DocOrdinal> = Vec::new();
    for entry in initial_run.iter().take(cfg.k_docs) {
        let ord = idx
            .doc_ordinal(&entry.doc_id)
            .ok_or_else(|| FeedbackError::UnknownDocument { doc_id: entry.doc_id.clone() })?;
        if idx.retrievable(ord) {
            top.push(ord);
        }
    }
    if top.is_empty() {
        return Err(FeedbackError::NoScorableDocuments);
    }

    let param = first_pass.param().ok_or(FeedbackError::VariantParameter {
        model: first_pass.name(),
        variant: cfg.variant.name(),
    })?;
    let weight_scorer = match cfg.variant {
        FeedbackVariant::Rm3 => RankingModel::MqlDir { mu: param },
        FeedbackVariant::Purm => RankingModel::SpudDir { mu_prime: param },
    };
    let log_scores: Vec<f64> =
        top.iter().map(|&ord| ranking::score(q, ord, idx, &weight_scorer)).collect();
    let w = weights_from_log_scores(&log_scores);

    let stats = idx.stats();
    let total_tokens = stats.total_tokens as f64;
    let sum_vec = stats.sum_vector_lengths as f64;
    let doc_numbers: Vec<(f64, f64)> = top
        .iter()
        .map(|&ord| {
            let d = idx.doc(ord);
            (d.length_tokens as f64, d.length_types as f64)
        })
        .collect();

    let mut candidates: Vec<(String, f64)> = Vec::new();
    for pl in idx.terms() {
        let tfs: Vec<f64> = top.iter().map(|&ord| pl.tf(ord) as f64).collect();
        if tfs.iter().all(|&tf| tf == 0.0) {
            continue;
        }
        let cf_over_total = pl.cf as f64 / total_tokens;
        let df_over_sumvec = pl.df as f64 / sum_vec;
        let mut acc = 0.0;
        for (j, &tf) in tfs.iter().enumerate() {
            let (dl, dvec) = doc_numbers[j];
            acc += w[j]
                * expansion_term_prob(
                    cfg.variant,
                    cfg.expansion_mu,
                    tf,
                    dl,
                    dvec,
                    cf_over_total,
                    df_over_sumvec,
                );
        }
        candidates.push((pl.term.clone(), acc));
    }

    candidates
        .sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    candidates.truncate(cfg.n_terms);
    let total: f64 = candidates.iter().map(|&(_, p)| p).sum();
    let weights: BTreeMap<String, f64> =
        candidates.into_iter().map(|(t, p)| (t, p / total)).collect();
    Ok(QueryModel { weights })
}

/// Interpolates the original query's maximum-likelihood model with the
/// expansion model: p(t|q′) = tau·c(t,q)/|q| + (1−tau)·p(t|q_e). At tau = 1
/// the support is exactly the original query's terms; at tau = 0 it is the
/// expansion model's.
pub fn smooth_query(q: &Query, qe: &QueryModel, tau: f64) -> QueryModel {
    assert!((0.0..=1.0).contains(&tau), "tau must lie in [0, 1]");
    assert!(q.total_len > 0, "smoothing requires a non-empty query");
    let qlen = q.total_len as f64;
    let mut weights: BTreeMap<String, f64> = BTreeMap::new();
    if tau > 0.0 {
        for (term, count) in &q.terms {
            weights.insert(term.clone(), tau * (*count as f64 / qlen));
        }
    }
    if tau < 1.0 {
        for (term, p) in &qe.weights {
            if *p > 0.0 {
                *weights.entry(term.clone()).or_insert(0.0) += (1.0 - tau) * p;
            }
        }
    }
    QueryModel { weights }
}

/// Scores every document sharing a positive-weight term with the model as
/// Σ_t p(t|q′)·ln p(t|M_d) under the configured ranking model's smoothed
/// probability, and returns the top k with the usual tie-break (score
/// descending, then doc_id ascending). An empty model yields an empty list.
/// Model terms outside the index vocabulary are ignored.
pub fn rerank_with_model(
    qm: &QueryModel,
    idx: &InvertedIndex,
    model: &RankingModel,
    k: usize,
) -> Vec<ScoredDoc> {
    let active: Vec<(&str, f64, &crate::index::PostingsList)> = qm
        .weights
        .iter()
        .filter(|&(_, &p)| p > 0.0)
        .filter_map(|(t, &p)| idx.term_lookup(t).map(|pl| (t.as_str(), p, pl)))
        .collect();
    if active.is_empty() || k == 0 {
        return Vec::new();
    }

    let mut candidates: Vec<DocOrdinal> = Vec::new();
    for (_, _, pl) in &active {
        candidates.extend(pl.postings.iter().map(|&(ord, _)| ord));
    }
    candidates.sort_unstable();
    candidates.dedup();
    candidates.retain(|&ord| idx.retrievable(ord));

    let cn = ranking::coll_numbers(idx);
    let mut results: Vec<ScoredDoc> = candidates
        .into_iter()
        .map(|ord| {
            let dn = ranking::doc_numbers(idx, ord);
            let mut score = 0.0;
            for (_, p, pl) in &active {
                let tn = crate::ranking::TermNumbers {
                    tf: pl.tf(ord) as f64,
                    cf: pl.cf as f64,
                    df: pl.df as f64,
                };
                score += p * ranking::log_prob(model, dn, tn, cn);
            }
            ScoredDoc { doc_id: idx.doc(ord).doc_id.clone(), score }
        })
        .collect();
    results.sort_unstable_by(|a, b| {
        b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    results.truncate(k);
    results
}
