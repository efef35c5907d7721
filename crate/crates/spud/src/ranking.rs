//! The six query-likelihood ranking functions and top-k retrieval.
//!
//! Every model scores in log space (base e) and exists in two algebraically
//! linked shapes: a direct probability form, the sum over query terms of
//! c(t,q) times the log of the smoothed term probability, and an efficient
//! form whose summation runs only over terms the query and document share.
//! The two differ by a document-independent constant per query, so rankings
//! agree; [`score`] computes the efficient form and [`score_probability_form`]
//! the direct one.
//!
//! The models:
//!
//! - `mql_jm`: linear interpolation between the document's maximum-likelihood
//!   term distribution and the collection-frequency background, weight `pi`.
//! - `mql_dir`: Dirichlet smoothing with mass `mu` on the cf background.
//! - `lm2`: Dirichlet smoothing with mass `u` on the df background.
//! - `lm3`: smoothing proportional to the count of distinct terms, cf
//!   background.
//! - `spud_jm`: parameter-free interpolation with weight |d_vec|/|d| on the
//!   df background; reduces to a constant zero score on documents whose
//!   terms are all distinct (|d_vec| = |d|), which then rank purely by
//!   tie-break.
//! - `spud_dir`: Dirichlet-style smoothing of the Polya urn document model
//!   with mass `mu_prime` on the df background.
//!
//! Term-frequency normalization in `lm3` and `spud_dir` is computed as
//! (|d_vec| * c(t,d)) / |d| in that grouping, which makes the score exactly
//! invariant under self-concatenation of a document (the integer products
//! scale by the same factor and the quotient rounds identically) and makes
//! the all-distinct-terms collapse onto `mql_dir`-shaped scores exact rather
//! than approximate.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::index::{DocOrdinal, InvertedIndex};
use crate::textprep::{tokenize, TokenPipelineConfig};

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("unknown model {0:?} (expected mql_jm, mql_dir, lm2, lm3, spud_jm, or spud_dir)")]
    UnknownModel(String),
    #[error("model {model} requires parameter {param}")]
    MissingParameter { model: &'static str, param: &'static str },
    #[error("model spud_jm takes no parameter")]
    UnexpectedParameter,
    #[error("{param}={value} out of range for {model}: requires {requirement}")]
    ParameterOutOfRange {
        model: &'static str,
        param: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("query pipeline fingerprint {query} does not match index pipeline fingerprint {index}")]
    PipelineMismatch { query: String, index: String },
}

/// A ranking function with exactly the parameters it demands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankingModel {
    MqlJm { pi: f64 },
    MqlDir { mu: f64 },
    Lm2 { u: f64 },
    Lm3 { u: f64 },
    SpudJm,
    SpudDir { mu_prime: f64 },
}

impl RankingModel {
    /// Builds a model from its CLI name and optional parameter, enforcing
    /// that exactly the required parameter is supplied and in range.
    pub fn from_name(name: &str, param: Option<f64>) -> Result<Self, RankingError> {
        let lower = name.to_ascii_lowercase();
        match lower.as_str() {
            "mql_jm" => {
                let pi = param.ok_or(RankingError::MissingParameter {
                    model: "mql_jm",
                    param: "pi",
                })?;
                if !(pi > 0.0 && pi < 1.0) {
                    return Err(RankingError::ParameterOutOfRange {
                        model: "mql_jm",
                        param: "pi",
                        value: pi,
                        requirement: "0 < pi < 1",
                    });
                }
                Ok(RankingModel::MqlJm { pi })
            }
            "mql_dir" | "lm2" | "lm3" | "spud_dir" => {
                let names: (&'static str, &'static str) = match lower.as_str() {
                    "mql_dir" => ("mql_dir", "mu"),
                    "lm2" => ("lm2", "u"),
                    "lm3" => ("lm3", "u"),
                    _ => ("spud_dir", "mu_prime"),
                };
                let v = param.ok_or(RankingError::MissingParameter {
                    model: names.0,
                    param: names.1,
                })?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(RankingError::ParameterOutOfRange {
                        model: names.0,
                        param: names.1,
                        value: v,
                        requirement: "a positive finite value",
                    });
                }
                Ok(match lower.as_str() {
                    "mql_dir" => RankingModel::MqlDir { mu: v },
                    "lm2" => RankingModel::Lm2 { u: v },
                    "lm3" => RankingModel::Lm3 { u: v },
                    _ => RankingModel::SpudDir { mu_prime: v },
                })
            }
            "spud_jm" => match param {
                None => Ok(RankingModel::SpudJm),
                Some(_) => Err(RankingError::UnexpectedParameter),
            },
            _ => Err(RankingError::UnknownModel(name.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RankingModel::MqlJm { .. } => "mql_jm",
            RankingModel::MqlDir { .. } => "mql_dir",
            RankingModel::Lm2 { .. } => "lm2",
            RankingModel::Lm3 { .. } => "lm3",
            RankingModel::SpudJm => "spud_jm",
            RankingModel::SpudDir { .. } => "spud_dir",
        }
    }

    /// The model's smoothing parameter, if it has one.
    pub fn param(&self) -> Option<f64> {
        match *self {
            RankingModel::MqlJm { pi } => Some(pi),
            RankingModel::MqlDir { mu } => Some(mu),
            RankingModel::Lm2 { u } | RankingModel::Lm3 { u } => Some(u),
            RankingModel::SpudJm => None,
            RankingModel::SpudDir { mu_prime } => Some(mu_prime),
        }
    }

    /// Same model shape with a different parameter value; used by sweeps.
    pub fn with_param(&self, value: f64) -> Result<Self, RankingError> {
        match self {
            RankingModel::SpudJm => Err(RankingError::UnexpectedParameter),
            _ => RankingModel::from_name(self.name(), Some(value)),
        }
    }
}

/// A preprocessed query: in-vocabulary terms with their counts, sorted by
/// term, and |q|, the sum of counts after out-of-vocabulary terms were
/// dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub terms: Vec<(String, u64)>,
    pub total_len: u64,
}

impl Query {
    pub fn is_empty(&self) -> bool {
        self.total_len == 0
    }
}

/// One ranked result. Scores are finite, log-space, base e.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

/// Runs the raw query text through the index's own token pipeline and drops
/// tokens absent from the vocabulary. The supplied config must fingerprint
/// identically to the one the index was built with.
pub fn prepare_query(
    raw: &str,
    idx: &InvertedIndex,
    cfg: &TokenPipelineConfig,
) -> Result<Query, RankingError> {
    let fingerprint = cfg.fingerprint();
    if fingerprint != idx.pipeline_hash() {
        return Err(RankingError::PipelineMismatch {
            query: fingerprint,
            index: idx.pipeline_hash().to_string(),
        });
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for token in tokenize(raw, cfg) {
        if idx.term_lookup(&token).is_some() {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let total_len = counts.values().sum();
    Ok(Query { terms: counts.into_iter().collect(), total_len })
}

/// Raw per-document numbers a scorer needs, separated from the index so
/// hypothetical documents (e.g. self-concatenations with frozen collection
/// statistics) can be scored by the diagnostics.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DocNumbers {
    /// |d|, the token count.
    pub dl: f64,
    /// |d_vec|, the distinct-term count.
    pub dvec: f64,
}

/// Per-term statistics against one document.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TermNumbers {
    /// c(t,d).
    pub tf: f64,
    pub cf: f64,
    pub df: f64,
}

/// Collection-side constants.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CollNumbers {
    /// |c|, total tokens.
    pub total: f64,
    /// Sum over documents of |d_vec|, also the sum of df over terms.
    pub sum_vec: f64,
}

pub(crate) fn coll_numbers(idx: &InvertedIndex) -> CollNumbers {
    CollNumbers {
        total: idx.stats().total_tokens as f64,
        sum_vec: idx.stats().sum_vector_lengths as f64,
    }
}

pub(crate) fn doc_numbers(idx: &InvertedIndex, d: DocOrdinal) -> DocNumbers {
    let stats = idx.doc(d);
    DocNumbers { dl: stats.length_tokens as f64, dvec: stats.length_types as f64 }
}

/// Verbosity-normalized term frequency (|d_vec| * c(t,d)) / |d|, grouped so
/// the quotient is taken last. See the module doc for why the grouping
/// matters.
#[inline]
fn vtf(d: DocNumbers, tf: f64) -> f64 {
    (d.dvec * tf) / d.dl
}

/// Ratio inside the query-length term |q| * ln(ratio) of the efficient form.
pub(crate) fn length_term_ratio(model: &RankingModel, d: DocNumbers) -> f64 {
    match *model {
        // The interpolated form has no common-terms split; callers treat
        // the whole score through log_prob instead.
        RankingModel::MqlJm { .. } => 1.0,
        RankingModel::MqlDir { mu } => mu / (mu + d.dl),
        RankingModel::Lm2 { u } => u / (u + d.dl),
        RankingModel::Lm3 { u } => u / (u + d.dvec),
        RankingModel::SpudJm => d.dvec / d.dl,
        RankingModel::SpudDir { mu_prime } => mu_prime / (mu_prime + d.dvec),
    }
}

/// Argument of the per-shared-term logarithm in the efficient form.
pub(crate) fn summand_arg(model: &RankingModel, d: DocNumbers, t: TermNumbers, c: CollNumbers) -> f64 {
    match *model {
        RankingModel::MqlJm { .. } => 1.0,
        RankingModel::MqlDir { mu } => 1.0 + (c.total * t.tf) / (mu * t.cf),
        RankingModel::Lm2 { u } => 1.0 + (c.sum_vec * t.tf) / (u * t.df),
        RankingModel::Lm3 { u } => 1.0 + (c.total * vtf(d, t.tf)) / (u * t.cf),
        RankingModel::SpudJm => {
            let lambda = d.dvec / d.dl;
            1.0 + ((1.0 - lambda) * t.tf * c.sum_vec) / (d.dvec * t.df)
        }
        RankingModel::SpudDir { mu_prime } => {
            1.0 + (c.sum_vec * vtf(d, t.tf)) / (mu_prime * t.df)
        }
    }
}

/// Log of the full smoothed term probability ln p(t | M_d); the direct
/// probability form sums c(t,q) times this over all query terms. Finite for
/// every in-vocabulary term, present in the document or not.
pub(crate) fn log_prob(model: &RankingModel, d: DocNumbers, t: TermNumbers, c: CollNumbers) -> f64 {
    match *model {
        RankingModel::MqlJm { pi } => ((1.0 - pi) * (t.tf / d.dl) + pi * (t.cf / c.total)).ln(),
        RankingModel::MqlDir { mu } => ((t.tf + mu * (t.cf / c.total)) / (d.dl + mu)).ln(),
        RankingModel::Lm2 { u } => ((t.tf + u * (t.df / c.sum_vec)) / (d.dl + u)).ln(),
        RankingModel::Lm3 { u } => {
            ((vtf(d, t.tf) + u * (t.cf / c.total)) / (d.dvec + u)).ln()
        }
        RankingModel::SpudJm => {
            let lambda = d.dvec / d.dl;
            ((1.0 - lambda) * (t.tf / d.dl) + lambda * (t.df / c.sum_vec)).ln()
        }
        RankingModel::SpudDir { mu_prime } => {
            ((vtf(d, t.tf) + mu_prime * (t.df / c.sum_vec)) / (d.dvec + mu_prime)).ln()
        }
    }
}

fn term_numbers(idx: &InvertedIndex, term: &str, d: DocOrdinal) -> TermNumbers {
    let pl = idx.term_lookup(term).expect("query terms are in-vocabulary");
    TermNumbers { tf: pl.tf(d) as f64, cf: pl.cf as f64, df: pl.df as f64 }
}

/// Efficient-form scoring over explicit per-term numbers; the public
/// [`score`] reads them from the index, while diagnostics substitute
/// hypothetical documents (e.g. self-concatenations against frozen
/// collection statistics) through `term_numbers_of`. Both routes share this
/// one expression structure, so invariances that hold bit-for-bit in the
/// arithmetic hold bit-for-bit in the scores.
pub(crate) fn score_from_parts(
    q: &Query,
    model: &RankingModel,
    dn: DocNumbers,
    cn: CollNumbers,
    mut term_numbers_of: impl FnMut(&str) -> TermNumbers,
) -> f64 {
    if let RankingModel::MqlJm { .. } = model {
        let mut acc = 0.0;
        for (term, cq) in &q.terms {
            acc += *cq as f64 * log_prob(model, dn, term_numbers_of(term), cn);
        }
        return acc;
    }
    let mut acc = 0.0;
    for (term, cq) in &q.terms {
        let tn = term_numbers_of(term);
        if tn.tf > 0.0 {
            acc += *cq as f64 * summand_arg(model, dn, tn, cn).ln();
        }
    }
    q.total_len as f64 * length_term_ratio(model, dn).ln() + acc
}

/// Efficient-form score of `q` against document `d` under `model`.
/// The document must be retrievable (|d| > 0).
pub fn score(q: &Query, d: DocOrdinal, idx: &InvertedIndex, model: &RankingModel) -> f64 {
    debug_assert!(idx.retrievable(d), "scoring requires a non-empty document");
    score_from_parts(q, model, doc_numbers(idx, d), coll_numbers(idx), |term| {
        term_numbers(idx, term, d)
    })
}

/// Direct probability form: Σ over query terms of c(t,q) * ln p(t|M_d).
/// Differs from [`score`] by a document-independent constant per query.
pub fn score_probability_form(
    q: &Query,
    d: DocOrdinal,
    idx: &InvertedIndex,
    model: &RankingModel,
) -> f64 {
    debug_assert!(idx.retrievable(d), "scoring requires a non-empty document");
    let dn = doc_numbers(idx, d);
    let cn = coll_numbers(idx);
    let mut acc = 0.0;
    for (term, cq) in &q.terms {
        acc += *cq as f64 * log_prob(model, dn, term_numbers(idx, term, d), cn);
    }
    acc
}

pub fn score_mql_jm(q: &Query, d: DocOrdinal, idx: &InvertedIndex, pi: f64) -> f64 {
    score(q, d, idx, &RankingModel::MqlJm { pi })
}

pub fn score_mql_dir(q: &Query, d: DocOrdinal, idx: &InvertedIndex, mu: f64) -> f64 {
    score(q, d, idx, &RankingModel::MqlDir { mu })
}

pub fn score_lm2(q: &Query, d: DocOrdinal, idx: &InvertedIndex, u: f64) -> f64 {
    score(q, d, idx, &RankingModel::Lm2 { u })
}

pub fn score_lm3(q: &Query, d: DocOrdinal, idx: &InvertedIndex, u: f64) -> f64 {
    score(q, d, idx, &RankingModel::Lm3 { u })
}

pub fn score_spud_jm(q: &Query, d: DocOrdinal, idx: &InvertedIndex) -> f64 {
    score(q, d, idx, &RankingModel::SpudJm)
}

pub fn score_spud_dir(q: &Query, d: DocOrdinal, idx: &InvertedIndex, mu_prime: f64) -> f64 {
    score(q, d, idx, &RankingModel::SpudDir { mu_prime })
}

/// Top-k retrieval: candidates are the documents sharing at least one term
/// with the query, each scored with the full efficient form including the
/// query-length term. Sorted by score descending, ties by ascending doc_id.
/// An empty query yields an empty list.
pub fn retrieve(
    q: &Query,
    idx: &InvertedIndex,
    model: &RankingModel,
    k: usize,
) -> Vec<ScoredDoc> {
    if q.is_empty() || k == 0 {
        return Vec::new();
    }
    let mut candidates: Vec<DocOrdinal> = Vec::new();
    for (term, _) in &q.terms {
        if let Some(pl) = idx.term_lookup(term) {
            candidates.extend(pl.postings.iter().map(|&(ord, _)| ord));
        }
    }
    candidates.sort_unstable();
    candidates.dedup();
    candidates.retain(|&ord| idx.retrievable(ord));

    let mut results: Vec<ScoredDoc> = candidates
        .into_iter()
        .map(|ord| ScoredDoc {
            doc_id: idx.doc(ord).doc_id.clone(),
            score: score(q, ord, idx, model),
        })
        .collect();
    results.sort_unstable_by(|a, b| {
        b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    results.truncate(k);
    results
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{build_index, DocumentRecord, IndexError};
    use std::collections::BTreeSet;

    fn plain_cfg() -> TokenPipelineConfig {
        TokenPipelineConfig { lowercase: true, stopword_list: BTreeSet::new(), stem: false }
    }

    fn doc(id: &str, text: &str) -> Result<DocumentRecord, IndexError> {
        Ok(DocumentRecord { id: id.to_string(), text: text.to_string() })
    }

    fn toy() -> InvertedIndex {
        build_index(
            vec![
                doc("d1", "t1 t1 t1 t1 t1 t1 t1 t1 t2 t2"),
                doc("d2", "t2"),
                doc("d3", "t2 t2 t2"),
                doc("d4", "t2"),
            ],
            &plain_cfg(),
        )
        .unwrap()
    }

    fn query(idx: &InvertedIndex, raw: &str) -> Query {
        prepare_query(raw, idx, &plain_cfg()).unwrap()
    }

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn query_preparation_counts_and_drops_oov() {
        let idx = toy();
        let q = query(&idx, "t2 t2");
        assert_eq!(q.terms, vec![("t2".to_string(), 2)]);
        assert_eq!(q.total_len, 2);

        let q = query(&idx, "zzz qqq");
        assert!(q.is_empty());
        assert!(retrieve(&q, &idx, &RankingModel::SpudJm, 10).is_empty());

        let q = query(&idx, "t1 zzz t2");
        assert_eq!(q.terms, vec![("t1".to_string(), 1), ("t2".to_string(), 1)]);
        assert_eq!(q.total_len, 2);
    }

    #[test]
    fn pipeline_mismatch_is_rejected() {
        let idx = toy();
        let other = TokenPipelineConfig { stem: true, ..plain_cfg() };
        match prepare_query("t1", &idx, &other) {
            Err(RankingError::PipelineMismatch { .. }) => {}
            other => panic!("expected PipelineMismatch, got {:?}", other),
        }
    }

    #[test]
    fn model_construction_enforces_parameters() {
        assert!(matches!(
            RankingModel::from_name("spud_jm", Some(1.0)),
            Err(RankingError::UnexpectedParameter)
        ));
        assert!(matches!(
            RankingModel::from_name("mql_dir", None),
            Err(RankingError::MissingParameter { .. })
        ));
        assert!(matches!(
            RankingModel::from_name("mql_jm", Some(1.0)),
            Err(RankingError::ParameterOutOfRange { .. })
        ));
        assert!(matches!(
            RankingModel::from_name("lm2", Some(0.0)),
            Err(RankingError::ParameterOutOfRange { .. })
        ));
        assert!(matches!(
            RankingModel::from_name("bm25", Some(1.0)),
            Err(RankingError::UnknownModel(_))
        ));
        assert_eq!(
            RankingModel::from_name("SPUD_DIR", Some(10.0)).unwrap(),
            RankingModel::SpudDir { mu_prime: 10.0 }
        );
    }

    #[test]
    fn toy_scores_match_direct_substitution() {
        let idx = toy();
        let q1 = query(&idx, "t1");
        let q2 = query(&idx, "t2");
        let d1 = idx.doc_ordinal("d1").unwrap();
        let d2 = idx.doc_ordinal("d2").unwrap();
        let d3 = idx.doc_ordinal("d3").unwrap();

        // Interpolated model on a document missing the term.
        close(score_mql_jm(&q1, d2, &idx, 0.5), (0.5f64 * 8.0 / 15.0).ln());

        // Dirichlet, cf background.
        close(
            score_mql_dir(&q2, d3, &idx, 100.0),
            (100.0f64 / 103.0).ln() + (1.0f64 + (15.0 * 3.0) / (100.0 * 7.0)).ln(),
        );
        // Shared-term set empty: only the length term remains.
        close(score_mql_dir(&q1, d3, &idx, 100.0), (100.0f64 / 103.0).ln());

        // Dirichlet, df background.
        close(
            score_lm2(&q2, d1, &idx, 10.0),
            (10.0f64 / 20.0).ln() + (1.0f64 + (5.0 * 2.0) / (10.0 * 4.0)).ln(),
        );

        // Distinct-term smoothing, cf background.
        close(
            score_lm3(&q1, d1, &idx, 10.0),
            (10.0f64 / 12.0).ln() + (1.0f64 + (15.0 * 2.0 * 0.8) / (10.0 * 8.0)).ln(),
        );

        // Parameter-free Polya urn model.
        close(score_spud_jm(&q1, d1, &idx), 0.2f64.ln() + 17.0f64.ln());

        // Polya urn with Dirichlet-style smoothing.
        close(
            score_spud_dir(&q2, d2, &idx, 10.0),
            (10.0f64 / 11.0).ln() + (1.0f64 + 5.0 / 40.0).ln(),
        );
        close(score_spud_dir(&q1, d2, &idx, 10.0), (10.0f64 / 11.0).ln());
    }

    #[test]
    fn jm_score_ignores_pi_when_rates_match_background() {
        // Every document identical: c(t,d)/|d| equals cf_t/|c| for all t.
        let idx = build_index(
            vec![doc("a", "x x y y y"), doc("b", "x x y y y"), doc("c", "x x y y y")],
            &plain_cfg(),
        )
        .unwrap();
        let q = query(&idx, "x y");
        let d = idx.doc_ordinal("b").unwrap();
        let s1 = score_mql_jm(&q, d, &idx, 0.1);
        let s2 = score_mql_jm(&q, d, &idx, 0.5);
        let s3 = score_mql_jm(&q, d, &idx, 0.9);
        close(s1, s2);
        close(s2, s3);
    }

    #[test]
    fn spud_jm_scores_zero_on_all_distinct_documents() {
        let idx = build_index(
            vec![doc("a", "u v w"), doc("b", "v w x y"), doc("c", "x z")],
            &plain_cfg(),
        )
        .unwrap();
        for raw in ["v", "v w", "x y z", "u v w x y z"] {
            let q = query(&idx, raw);
            for (ord, _) in idx.docs() {
                assert_eq!(score_spud_jm(&q, ord, &idx), 0.0, "q={:?} d={}", raw, ord);
            }
        }
    }

    #[test]
    fn lm3_equals_mql_dir_exactly_when_all_terms_distinct() {
        let idx = build_index(
            vec![doc("a", "u v w"), doc("b", "v w x y"), doc("c", "x z"), doc("d", "q")],
            &plain_cfg(),
        )
        .unwrap();
        for raw in ["v", "w x", "u v w x y z q"] {
            let q = query(&idx, raw);
            for (ord, _) in idx.docs() {
                let lm3 = score_lm3(&q, ord, &idx, 7.5);
                let dir = score_mql_dir(&q, ord, &idx, 7.5);
                assert_eq!(lm3, dir, "q={:?} d={}", raw, ord);
            }
        }
    }

    #[test]
    fn lm2_equals_mql_dir_when_backgrounds_coincide() {
        // Identical documents with equal term counts: df/S = 1/n·|d_vec|·… and
        // cf/|c| both come to 1/2 for each term.
        let idx = build_index(
            vec![doc("a", "x y"), doc("b", "x y"), doc("c", "x y")],
            &plain_cfg(),
        )
        .unwrap();
        let q = query(&idx, "x y y");
        for (ord, _) in idx.docs() {
            close(score_lm2(&q, ord, &idx, 3.0), score_mql_dir(&q, ord, &idx, 3.0));
        }
    }

    /// Efficient form minus probability form must be the same constant for
    /// every document of the corpus (the dropped query-dependent term).
    fn assert_rank_equivalent(idx: &InvertedIndex, q: &Query, model: &RankingModel) {
        let mut constant: Option<f64> = None;
        for (ord, _) in idx.docs() {
            if !idx.retrievable(ord) {
                continue;
            }
            let gap = score(q, ord, idx, model) - score_probability_form(q, ord, idx, model);
            match constant {
                None => constant = Some(gap),
                Some(c) => assert!(
                    (gap - c).abs() <= 1e-9,
                    "query constant drifts: {} vs {} under {:?}",
                    gap,
                    c,
                    model
                ),
            }
        }
    }

    #[test]
    fn efficient_and_probability_forms_are_rank_equivalent_on_toy_corpus() {
        let idx = toy();
        for raw in ["t1", "t2", "t1 t2", "t1 t1 t2"] {
            let q = query(&idx, raw);
            for model in [
                RankingModel::MqlJm { pi: 0.3 },
                RankingModel::MqlDir { mu: 100.0 },
                RankingModel::Lm2 { u: 10.0 },
                RankingModel::Lm3 { u: 10.0 },
                RankingModel::SpudJm,
                RankingModel::SpudDir { mu_prime: 10.0 },
            ] {
                assert_rank_equivalent(&idx, &q, &model);
            }
        }
    }

    #[test]
    fn retrieval_matches_exhaustive_scoring() {
        let idx = toy();
        let q = query(&idx, "t2");
        let model = RankingModel::SpudDir { mu_prime: 10.0 };
        let got = retrieve(&q, &idx, &model, 10);

        let mut expected: Vec<ScoredDoc> = idx
            .docs()
            .filter(|&(ord, _)| idx.retrievable(ord))
            .map(|(ord, stats)| ScoredDoc {
                doc_id: stats.doc_id.clone(),
                score: score(&q, ord, &idx, &model),
            })
            .collect();
        expected.sort_unstable_by(|a, b| {
            b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id))
        });
        assert_eq!(got, expected);

        // d2 and d4 hold identical content; the tie must break by doc_id.
        let pos2 = got.iter().position(|s| s.doc_id == "d2").unwrap();
        let pos4 = got.iter().position(|s| s.doc_id == "d4").unwrap();
        assert_eq!(got[pos2].score, got[pos4].score);
        assert!(pos2 < pos4);
    }

    #[test]
    fn retrieval_excludes_documents_without_query_terms() {
        let idx = build_index(
            vec![doc("a", "x x"), doc("b", "y"), doc("c", "x z")],
            &plain_cfg(),
        )
        .unwrap();
        let q = query(&idx, "x");
        let ids: Vec<String> = retrieve(&q, &idx, &RankingModel::SpudJm, 10)
            .into_iter()
            .map(|s| s.doc_id)
            .collect();
        assert!(!ids.contains(&"b".to_string()));
        assert_eq!(ids.len(), 2);
    }

    #[test]
    fn k_larger_than_candidate_set_returns_all_candidates() {
        let idx = toy();
        let q = query(&idx, "t1");
        let got = retrieve(&q, &idx, &RankingModel::MqlDir { mu: 10.0 }, 1000);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].doc_id, "d1");
    }

    #[test]
    fn summand_grows_with_term_frequency() {
        let cn = CollNumbers { total: 1000.0, sum_vec: 400.0 };
        let dn = DocNumbers { dl: 50.0, dvec: 20.0 };
        for model in [
            RankingModel::MqlDir { mu: 300.0 },
            RankingModel::Lm2 { u: 300.0 },
            RankingModel::Lm3 { u: 300.0 },
            RankingModel::SpudJm,
            RankingModel::SpudDir { mu_prime: 300.0 },
        ] {
            let mut prev = f64::NEG_INFINITY;
            for tf in 1..=30 {
                let t = TermNumbers { tf: tf as f64, cf: 60.0, df: 25.0 };
                let arg = summand_arg(&model, dn, t, cn);
                assert!(arg > prev, "summand not increasing under {:?}", model);
                prev = arg;
            }
        }
    }

    #[test]
    fn scores_are_finite_for_all_retrievable_documents() {
        let idx = toy();
        for raw in ["t1", "t2", "t1 t2"] {
            let q = query(&idx, raw);
            for model in [
                RankingModel::MqlJm { pi: 0.5 },
                RankingModel::MqlDir { mu: 2000.0 },
                RankingModel::Lm2 { u: 500.0 },
                RankingModel::Lm3 { u: 500.0 },
                RankingModel::SpudJm,
                RankingModel::SpudDir { mu_prime: 1000.0 },
            ] {
                for (ord, _) in idx.docs() {
                    assert!(score(&q, ord, &idx, &model).is_finite());
                    assert!(score_probability_form(&q, ord, &idx, &model).is_finite());
                }
            }
        }
    }
}
